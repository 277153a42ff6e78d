import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize

from stripes import make_params
from stripes.analytic import (
    AnomalyWarning,
    StripeConfig,
    a3_tail,
    abc_inequality_check,
    abc_series,
    convexity_scan,
    derivative_sign_changes,
    energy_partials,
    lambda_closed_form_tau0,
    lambda_value,
    optimal_period,
    perturbation_rates,
    series_C,
    series_C_partials,
    stripe_energy,
)

LN2 = math.log(2.0)


def direct_C(prm, alpha, s=0.0, n_terms=10**6):
    """Partial sums at N and 2N, Richardson-extrapolated (terms decay like k^-(r+1))."""
    k = np.arange(2 * n_terms, dtype=float)
    r = prm.q - 2
    t = (2 * k + 2 * alpha + s) ** -r + (2 * k + 2 - 2 * alpha + s) ** -r - 2 * (2 * k + 2 + s) ** -r
    s1, s2 = np.sum(t[:n_terms][::-1]), np.sum(t[::-1])
    w = 2.0**-r
    return 2 * prm.c1 * prm.c2 * float(s2 + (s2 - s1) * w / (1 - w))


def test_stripe_config_validation():
    with pytest.raises(ValueError):
        StripeConfig(0.0, 0.5)
    with pytest.raises(ValueError):
        StripeConfig(1.0, 1.0)


def test_series_C_half_closed_form(p24):
    assert series_C(p24, 0.5).value == pytest.approx(4 / 3 * LN2, abs=1e-12)


@pytest.mark.parametrize("d,p,alpha,s", [(2, 4, 0.3, 0.0), (2, 5, 0.2, 0.1), (3, 6, 0.45, 0.02), (2, 4.5, 0.7, 0.3)])
def test_series_C_direct_summation(d, p, alpha, s):
    prm = make_params(d, p, 0.0)
    res = series_C(prm, alpha, s)
    assert res.tail_bound <= 1e-13 * abs(res.value)
    assert res.value == pytest.approx(direct_C(prm, alpha, s), rel=1e-9)


@given(alpha=st.floats(0.01, 0.99), s=st.floats(0, 2), p=st.sampled_from([4.0, 4.5, 5.0]))
@settings(max_examples=50, deadline=None)
def test_series_C_symmetry(alpha, s, p):
    prm = make_params(2, p, 0.0)
    assert series_C(prm, alpha, s).value == pytest.approx(series_C(prm, 1 - alpha, s).value, rel=1e-12)


@given(alpha=st.floats(0.01, 0.99), p=st.sampled_from([4.0, 5.0, 6.0]))
@settings(max_examples=50, deadline=None)
def test_series_C_lower_bound(alpha, p):
    prm = make_params(2, p, 0.0)
    k0 = 2 * prm.c1 * prm.c2
    assert series_C(prm, alpha).value >= k0 * (2 * alpha) ** -(prm.q - 2) * (1 - 1e-12)


def test_series_partials_against_finite_differences():
    prm = make_params(2, 5, 0.0)
    ca, caa, cs = (x.value for x in series_C_partials(prm, 0.3, 0.05))
    dl = 1e-5
    C = lambda a, s: series_C(prm, a, s).value  # noqa: E731
    assert ca == pytest.approx((C(0.3 + dl, 0.05) - C(0.3 - dl, 0.05)) / (2 * dl), rel=1e-6)
    assert cs == pytest.approx((C(0.3, 0.05 + dl) - C(0.3, 0.05 - dl)) / (2 * dl), rel=1e-6)
    dl = 1e-4
    assert caa == pytest.approx((C(0.3 + dl, 0.05) - 2 * C(0.3, 0.05) + C(0.3 - dl, 0.05)) / dl**2, rel=1e-5)


def test_dC_dalpha_vanishes_at_half(p24):
    assert abs(series_C_partials(p24, 0.5)[0].value) < 1e-14


def test_dC_dalpha_growth_rate(p24):
    alphas = np.geomspace(1e-3, 0.5, 12)
    ratio = [abs(series_C_partials(p24, a)[0].value) * a ** (p24.q - 1) for a in alphas]
    # alpha^(q-1) |dC/dalpha| stays bounded as alpha -> 0
    assert max(ratio) < 2 * ratio[0]


def test_energy_partials_against_finite_differences():
    prm = make_params(2, 4, 0.02)
    h, a = 2.3, 0.35
    d = energy_partials(prm, h, a)
    F = lambda hh, aa: stripe_energy(prm, StripeConfig(hh, aa))  # noqa: E731
    e = 1e-5
    assert d["F"] == pytest.approx(F(h, a), rel=1e-14)
    assert d["F_h"] == pytest.approx((F(h + e, a) - F(h - e, a)) / (2 * e), rel=1e-6)
    assert d["F_a"] == pytest.approx((F(h, a + e) - F(h, a - e)) / (2 * e), rel=1e-6)
    e = 1e-4
    assert d["F_hh"] == pytest.approx((F(h + e, a) - 2 * F(h, a) + F(h - e, a)) / e**2, rel=1e-4)
    assert d["F_aa"] == pytest.approx((F(h, a + e) - 2 * F(h, a) + F(h, a - e)) / e**2, rel=1e-4)
    mixed = (F(h + e, a + e) - F(h + e, a - e) - F(h - e, a + e) + F(h - e, a - e)) / (4 * e * e)
    assert d["F_ah"] == pytest.approx(mixed, rel=1e-4)


def test_anchor_energy(p24):
    h = 8 / 3 * LN2
    assert stripe_energy(p24, StripeConfig(h, 0.5)) == pytest.approx(-3 / (16 * LN2), abs=1e-12)


def test_energy_decays_at_large_period():
    prm = make_params(2, 4, 0.01)
    vals = [abs(stripe_energy(prm, StripeConfig(h, 0.3))) for h in (1e2, 1e3, 1e4)]
    assert vals[0] > vals[1] > vals[2] and vals[2] < 2e-4


@given(h=st.floats(0.05, 50), alpha=st.floats(0.02, 0.98), tau=st.floats(0, 0.1))
@settings(max_examples=40, deadline=None)
def test_energy_symmetry(h, alpha, tau):
    prm = make_params(2, 4, tau)
    assert stripe_energy(prm, StripeConfig(h, alpha)) == pytest.approx(
        stripe_energy(prm, StripeConfig(h, 1 - alpha)), rel=1e-11, abs=1e-14
    )


def test_optimal_period_closed_form(p24):
    h, cert = optimal_period(p24, 0.5)
    assert h == pytest.approx(8 / 3 * LN2, abs=1e-12)
    assert cert < 1e-12


@pytest.mark.parametrize("tau,alpha", [(0.0, 0.3), (0.01, 0.3), (0.05, 0.5), (0.1, 0.15)])
def test_optimal_period_golden_section_oracle(tau, alpha):
    prm = make_params(2, 4, tau)
    h, cert = optimal_period(prm, alpha)
    f = lambda x: stripe_energy(prm, StripeConfig(x, alpha))  # noqa: E731
    res = optimize.minimize_scalar(f, bracket=(0.5 * h, h, 2 * h), method="golden", tol=1e-10)
    assert h == pytest.approx(res.x, rel=1e-6)
    assert f(h) <= res.fun + 1e-15
    assert cert < 1e-10


def test_optimal_period_ordering():
    prm = make_params(2, 4, 0.01)
    h = [optimal_period(prm, a)[0] for a in (0.05, 0.2, 0.5)]
    assert h[0] > h[1] > h[2]


@pytest.mark.parametrize("tau", [0.001, 0.01, 0.05, 0.1])
def test_single_sign_change(tau):
    for a in (0.05, 0.3, 0.5, 0.8):
        assert derivative_sign_changes(make_params(2, 4, tau), a)[2] == 1


def test_warnings_outside_validated_ranges():
    with pytest.warns(UserWarning, match="validated"):
        optimal_period(make_params(2, 4, 0.2), 0.5)
    with pytest.warns(UserWarning, match="extrapolation"):
        optimal_period(make_params(2, 4, 0.0), 0.005)
    with pytest.raises(ValueError):
        optimal_period(make_params(2, 4, 0.0), 1.0)


def test_anomaly_warning_is_user_warning():
    assert issubclass(AnomalyWarning, UserWarning)


def test_lambda_anchor_and_closed_form(p24):
    s = lambda_value(p24, 0.5)
    assert s.lam == pytest.approx(-3 / (16 * LN2), abs=1e-12)
    assert lambda_closed_form_tau0(p24, 0.3) == pytest.approx(lambda_value(p24, 0.3).lam, rel=1e-12)


@given(alpha=st.floats(0.05, 0.95), tau=st.sampled_from([0.0, 0.01, 0.05]))
@settings(max_examples=25, deadline=None)
def test_lambda_symmetry(alpha, tau):
    prm = make_params(2, 4, tau)
    a, b = lambda_value(prm, alpha), lambda_value(prm, 1 - alpha)
    assert a.lam == pytest.approx(b.lam, rel=1e-10)
    assert a.h_star == pytest.approx(b.h_star, rel=1e-8)
    assert a.lam < 0


def test_lambda_vanishes_as_alpha_to_zero():
    prm = make_params(2, 4, 0.01)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        vals = [abs(lambda_value(prm, a).lam) for a in (0.1, 0.02, 0.005)]
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] < 0.1 * vals[0]


@pytest.mark.parametrize("tau", [0.0, 0.02])
def test_lambda_is_global_minimum_over_h(tau):
    prm = make_params(2, 4, tau)
    rng = np.random.default_rng(0)
    for alpha in (0.2, 0.5):
        lam = lambda_value(prm, alpha).lam
        hs = rng.uniform(0.1 / alpha, 100 / alpha, 200)
        assert all(stripe_energy(prm, StripeConfig(h, alpha)) >= lam - 1e-13 for h in hs)


def test_lambda_derivatives_against_differences():
    prm = make_params(2, 4, 0.01)
    e = 1e-5
    s = lambda_value(prm, 0.3)
    lp, lm = lambda_value(prm, 0.3 + e).lam, lambda_value(prm, 0.3 - e).lam
    assert s.d_alpha == pytest.approx((lp - lm) / (2 * e), abs=1e-5)
    e = 1e-3
    lp, lm = lambda_value(prm, 0.3 + e).lam, lambda_value(prm, 0.3 - e).lam
    assert s.d2_alpha == pytest.approx((lp - 2 * s.lam + lm) / e**2, rel=1e-4)


def test_convexity_scan_report():
    rep = convexity_scan(make_params(2, 4, 0.01), np.arange(1, 20) * 0.05)
    assert not rep.events
    assert rep.c_tilde > 0
    assert all(r[1] > 0 for r in rep.rows)
    assert rep.c2_fit >= max(abs(lambda_value(make_params(2, 4, 0.01), a).d_alpha) for a in (0.05, 0.95)) - 1e-12


# -- the A1 A2 - A3^2 determinant --------------------------------------------------

def direct_abc(q, alpha, n=10**6):
    k = np.arange(n, dtype=float)
    a, b, c = 2 * k + 2 * alpha, 2 * k + 2 - 2 * alpha, 2 * k + 2
    A1 = np.sum(a ** -q + b ** -q)
    A2 = np.sum(a ** -(q - 2) + b ** -(q - 2) - 2 * c ** -(q - 2))
    A3 = np.sum(a ** -(q - 1) - b ** -(q - 1))
    return A1, A2, A3


@pytest.mark.parametrize("alpha", [0.1, 0.25, 0.5])
def test_abc_direct_summation(p24, alpha):
    A1, A2, A3, margin = abc_inequality_check(p24, alpha)
    ref = direct_abc(p24.q, alpha)
    assert A1 == pytest.approx(ref[0], rel=1e-10)
    assert A2 == pytest.approx(ref[1], rel=1e-5)  # slowly convergent reference
    assert A3 == pytest.approx(ref[2], rel=1e-9, abs=1e-12)
    assert margin > 0 and A1 * A2 > A3**2


def test_abc_a3_structure(p24):
    a3 = abc_series(p24, 0.5)[2].value
    # leading term (2 alpha)^-(q-1) = 1 at alpha = 1/2 plus a negative tail summing to -1
    assert abs(a3) < 1e-12
    for alpha in (0.05, 0.2, 0.5):
        assert a3_tail(p24, alpha) <= 1.0 + 1e-13 <= (2 * alpha) ** -(p24.q - 1) + 1e-13


def test_abc_domain(p24):
    with pytest.raises(ValueError):
        abc_inequality_check(p24, 0.6)


def test_perturbation_rate_halving():
    rep = perturbation_rates(lambda t: make_params(2, 4, t), [4e-4, 2e-4, 1e-4], [0.3], n_h=24)
    ratios = rep.dev[0, :-1, 0] / rep.dev[0, 1:, 0]
    np.testing.assert_allclose(ratios, 2.0, rtol=0.1)
    assert rep.dev[0, -1, 0] < rep.dev[0, 0, 0]
