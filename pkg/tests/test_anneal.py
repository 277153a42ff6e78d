import numpy as np
import pytest

from stripes import make_params
from stripes.grid import Schedule, anneal, grid_energy, make_stripes, stripe_period
from stripes.grid.anneal import CHECK_EVERY


@pytest.fixture(scope="module")
def prm():
    return make_params(2, 4, 0.05)


@pytest.fixture(scope="module")
def run16(prm):
    return anneal(prm, 16, 0.5, 4.0, Schedule(1.0, 0.05, 60_000), seed=7, trace_every=CHECK_EVERY)


def test_bit_identical_with_fixed_seed(prm, run16):
    again = anneal(prm, 16, 0.5, 4.0, Schedule(1.0, 0.05, 60_000), seed=7, trace_every=CHECK_EVERY)
    np.testing.assert_array_equal(again.grid.occupancy, run16.grid.occupancy)
    assert again.trace == run16.trace and again.accepted == run16.accepted
    other = anneal(prm, 16, 0.5, 4.0, Schedule(1.0, 0.05, 60_000), seed=8, trace_every=CHECK_EVERY)
    assert other.trace != run16.trace


def test_volume_and_bookkeeping(prm, run16):
    assert run16.grid.n_occupied == 128
    assert run16.max_mismatch < 1e-8
    assert "mismatch_exceeded" not in run16.meta
    assert run16.energy == pytest.approx(grid_energy(prm, run16.grid), rel=1e-8, abs=1e-10)
    assert run16.trace[0][0] == 0 and run16.trace[-1][0] == 60_000
    assert 0 < run16.accepted < 60_000


def test_returns_best_checkpoint(run16):
    assert run16.energy <= min(row[1] for row in run16.trace) + 1e-12
    assert run16.energy < run16.trace[0][1]


def test_final_distances_match_grid(run16):
    from stripes.grid import box_distance

    d = [box_distance(run16.grid, i, run16.eta) for i in range(2)]
    np.testing.assert_allclose(run16.distances, d)


def test_cold_start_from_stripes_is_stable(prm):
    g = make_stripes(16, 0.5, 8, L=4.0)
    r = anneal(prm, 16, 0.5, 4.0, Schedule(1e-6, 1e-6, 20_000), seed=1, init=g)
    assert r.energy <= grid_energy(prm, g) + 1e-12


def test_three_dimensional_run(prm):
    p3 = make_params(3, 6, 0.1)
    r = anneal(p3, 8, 0.5, 2.0, Schedule(1.0, 0.1, 20_000), seed=3)
    assert r.grid.n_occupied == 256
    assert r.max_mismatch < 1e-8


def test_non_integral_count_rejected(prm):
    with pytest.raises(ValueError):
        anneal(prm, 16, 0.3, 4.0, Schedule(1.0, 0.1, 100), seed=1)


def test_schedule_validation_and_geometry():
    with pytest.raises(ValueError):
        Schedule(0.0, 0.1, 10)
    with pytest.raises(ValueError):
        Schedule(1.0, 0.1, 10, boundary_fraction=1.5)
    with pytest.raises(ValueError):
        Schedule(1.0, 0.1, 10, local_fraction=-0.1)
    t = Schedule(2.0, 0.02, 101).temperatures(0, 101)
    assert t[0] == 2.0 and t[-1] == pytest.approx(0.02)
    np.testing.assert_allclose(t[1:] / t[:-1], t[1] / t[0])


def test_uniform_only_and_boundary_only(prm):
    for bf in (0.0, 1.0):
        r = anneal(prm, 16, 0.5, 4.0, Schedule(0.5, 0.05, 20_000, boundary_fraction=bf), seed=2)
        assert r.grid.n_occupied == 128 and r.max_mismatch < 1e-8


def test_stripe_period_of_fixture():
    g = make_stripes(64, 0.3, 16, direction=1, L=8.0)
    assert stripe_period(g) == pytest.approx(16 * g.delta)
