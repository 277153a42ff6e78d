"""Distance to stripes inside cubes, region classification, Lipschitz probe.

Inside a cube the best stripe set in direction i only depends on the
column-mass profile c(t), the occupied fraction of the cube's slab at
coordinate t along axis i. The normalised L1 distance to a 0/1 pattern
phi(t) is mean_t |c(t) - phi(t)|, and the admissible patterns are those
whose interior runs are at least ceil(eta / delta) cells long (runs
touching the cube faces are unconstrained). A dynamic program over
(phase, run length) finds the optimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .core import GridSet
from .energy import cube_cells

_TIE = 1e-12


@dataclass(frozen=True)
class StripeDistance:
    direction: int
    eta: float
    value: float
    pattern: tuple = ()


def min_run_cells(eta: float, delta: float) -> int:
    if eta < 0:
        raise ValueError("eta must be non-negative")
    return max(1, math.ceil(eta / delta - 1e-12))


def run_dp(profiles: np.ndarray, r_min: int) -> np.ndarray:
    """Minimal sum |c - phi| over admissible patterns, for a batch of profiles (B, T)."""
    c = np.atleast_2d(np.asarray(profiles, dtype=float))
    B, T = c.shape
    r_min = max(1, min(r_min, T))
    top = r_min - 1
    # first[ph]: still inside the first run (no length constraint)
    # run[ph, k]: inside a later run of length k + 1, the last slot meaning >= r_min
    first = np.stack([c[:, 0], 1.0 - c[:, 0]])
    run = np.full((2, r_min, B), np.inf)
    for t in range(1, T):
        cost = np.stack([c[:, t], 1.0 - c[:, t]])
        new = np.empty_like(run)
        for ph in (0, 1):
            switch_in = np.minimum(first[1 - ph], run[1 - ph, top])
            if r_min == 1:
                new[ph, 0] = np.minimum(switch_in, run[ph, 0])
            else:
                new[ph, 0] = switch_in
                new[ph, 1:top] = run[ph, : top - 1]
                new[ph, top] = np.minimum(run[ph, top - 1], run[ph, top])
            new[ph] += cost[ph]
        first = first + cost
        run = new
    return np.minimum(first.min(axis=0), run.min(axis=(0, 1)))


def _pattern_ok(phi, r_min: int) -> bool:
    edges = np.flatnonzero(np.diff(phi)) + 1
    runs = np.diff(np.concatenate([[0], edges, [len(phi)]]))
    return len(runs) <= 2 or bool(np.all(runs[1:-1] >= r_min))


def best_pattern(profile, r_min: int):
    """Optimal pattern for one profile with deterministic tie-breaking.

    Among patterns within 1e-12 of the optimum, the one with fewest runs and
    then the lexicographically smallest phase sequence is returned.
    """
    c = np.asarray(profile, dtype=float)
    T = len(c)
    r_min = min(r_min, T + 1)
    # state: (phase, first?, capped run length); value: (cost, runs, pattern)
    states = {}
    for ph in (0, 1):
        states[(ph, True, 1)] = (abs(c[0] - ph), 1, (ph,))
    for t in range(1, T):
        nxt = {}
        for (ph, is_first, k), (cost, runs, pat) in states.items():
            for new in (ph, 1 - ph):
                if new == ph:
                    key = (ph, is_first, min(k + 1, r_min))
                    val = (cost + abs(c[t] - ph), runs, pat + (ph,))
                else:
                    if not is_first and k < r_min:
                        continue
                    key = (new, False, 1)
                    val = (cost + abs(c[t] - new), runs + 1, pat + (new,))
                cur = nxt.get(key)
                if cur is None or _better(val, cur):
                    nxt[key] = val
        states = nxt
    best = None
    for val in states.values():
        if best is None or _better(val, best):
            best = val
    return best[0], best[2]


def _better(a, b) -> bool:
    if a[0] < b[0] - _TIE:
        return True
    if a[0] > b[0] + _TIE:
        return False
    return (a[1], a[2]) < (b[1], b[2])


def brute_force_distance(profile, r_min: int) -> float:
    """Exhaustive search over all 0/1 patterns (short profiles only)."""
    c = np.asarray(profile, dtype=float)
    T = len(c)
    if T > 20:
        raise ValueError("profile too long for enumeration")
    best = np.inf
    for bits in range(1 << T):
        phi = (bits >> np.arange(T)) & 1
        if _pattern_ok(phi, r_min):
            best = min(best, float(np.abs(c - phi).sum()))
    return best


def _cube_index(center, lc: int, n: int):
    return np.ix_(*[(np.arange(lc) + c - lc // 2) % n for c in center])


def column_profile(grid: GridSet, center, lc: int, direction: int) -> np.ndarray:
    sub = grid.occupancy[_cube_index(center, lc, grid.n)].astype(float)
    axes = tuple(a for a in range(grid.d) if a != direction)
    return sub.mean(axis=axes)


def stripe_distance(grid: GridSet, center, l: float, direction: int, eta: float) -> StripeDistance:
    """D^i_eta(E, Q_l(z)) for the cube of side l centred at a cell."""
    lc = cube_cells(l, grid.delta, grid.n) if l < grid.L else grid.n
    prof = column_profile(grid, center, lc, direction)
    cost, pat = best_pattern(prof, min_run_cells(eta, grid.delta))
    return StripeDistance(direction, eta, cost / lc, pat)


def box_distance(grid: GridSet, direction: int, eta: float) -> float:
    """D^i_eta over the whole periodic box (cube = [0, L)^d)."""
    prof = grid.occupancy.mean(axis=tuple(a for a in range(grid.d) if a != direction))
    return float(run_dp(prof[None, :], min_run_cells(eta, grid.delta))[0] / grid.n)


def d_eta(grid: GridSet, center, l: float, eta: float) -> float:
    return min(stripe_distance(grid, center, l, i, eta).value for i in range(grid.d))


def distance_field(grid: GridSet, l: float, eta: float) -> np.ndarray:
    """D^i_eta(E, Q_l(z)) for every cell centre z; shape (d,) + grid shape."""
    n, d = grid.n, grid.d
    lc = cube_cells(l, grid.delta, n)
    r_min = min_run_cells(eta, grid.delta)
    occ = grid.occupancy.astype(float)
    out = np.empty((d,) + occ.shape)
    for i in range(d):
        # slab averages over the perpendicular window, for every position
        size = [lc] * d
        size[i] = 1
        # scipy's window for size s covers x - s//2 .. x - s//2 + s - 1, the cube convention
        slab = ndimage.uniform_filter(occ, size=size, mode="wrap")
        # profile of the cube at z: slab at coordinate z_i - lc//2 + t along axis i
        prof = np.stack([np.roll(slab, lc // 2 - t, axis=i) for t in range(lc)], axis=-1)
        vals = run_dp(prof.reshape(-1, lc), r_min) / lc
        out[i] = vals.reshape(occ.shape)
    return out


# -- classification -------------------------------------------------------------

@dataclass(frozen=True)
class RegionParams:
    l: float
    eta: float
    delta_thresh: float
    rho: float
    M: float = math.inf

    def __post_init__(self):
        if not self.delta_thresh > 0:
            raise ValueError("delta threshold must be positive")
        if self.rho < 0 or self.l <= 0:
            raise ValueError("invalid region parameters")


@dataclass
class RegionLabels:
    """Per-cell labels: -1 for A_-1, 0 for A_0, i + 1 for A_i (direction i)."""

    labels: np.ndarray
    distances: np.ndarray
    components: int
    anomalies: list = field(default_factory=list)

    def fraction(self, label: int) -> float:
        return float(np.mean(self.labels == label))


def _dilate(mask: np.ndarray, radius: int) -> np.ndarray:
    if radius <= 0 or not mask.any():
        return mask.copy()
    return ndimage.maximum_filter(mask.astype(np.uint8), size=2 * radius + 1, mode="wrap").astype(bool)


def periodic_label(mask: np.ndarray):
    """Face-connected components on the torus. Returns (labels, count)."""
    lab, count = ndimage.label(mask)
    parent = list(range(count + 1))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for ax in range(mask.ndim):
        first = np.take(lab, 0, axis=ax)
        last = np.take(lab, -1, axis=ax)
        for a, b in zip(first.ravel(), last.ravel()):
            if a and b:
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
    roots = np.array([find(a) for a in range(count + 1)])
    uniq, relabel = np.unique(roots, return_inverse=True)
    out = relabel[lab]
    # label 0 stays background since root(0) = 0 is the smallest
    return out, len(uniq) - 1


def classify_regions(grid: GridSet, region: RegionParams, distances: np.ndarray | None = None) -> RegionLabels:
    """Partition into A_-1, A_0 and oriented components A_1..A_d."""
    D = distance_field(grid, region.l, region.eta) if distances is None else distances
    delta = grid.delta
    close = D <= region.delta_thresh
    a0_tilde = D.min(axis=0) >= region.delta_thresh
    am1_tilde = close.sum(axis=0) >= 2
    a0 = _dilate(a0_tilde, math.ceil(region.rho / delta - 1e-12))
    am1 = _dilate(am1_tilde, math.ceil(1.0 / delta - 1e-12))
    labels = np.zeros(grid.occupancy.shape, dtype=np.int8)
    labels[am1] = -1
    labels[a0] = 0  # A_0 takes precedence where the enlargements overlap
    rest = ~(a0 | am1)
    comp, count = periodic_label(rest)
    anomalies = []
    for c in range(1, count + 1):
        cells = comp == c
        dirs = np.argmin(D[:, cells], axis=0)
        present = np.unique(dirs)
        if present.size > 1:
            anomalies.append({"component": c, "directions": [int(x) + 1 for x in present], "cells": int(cells.sum())})
            labels[cells] = dirs.astype(np.int8) + 1
        else:
            labels[cells] = present[0] + 1
    return RegionLabels(labels, D, count, anomalies)


# -- Lipschitz probe ------------------------------------------------------------

@dataclass
class LipschitzReport:
    max_ratio: float
    ratios: np.ndarray


def lipschitz_probe(grid: GridSet, l: float, eta: float, n_pairs: int, seed: int, max_shift: float | None = None) -> LipschitzReport:
    """Empirical sup of |D(z) - D(z')| * l / |z - z'| over random centre pairs."""
    rng = np.random.default_rng(seed)
    n, d = grid.n, grid.d
    shift = int(round((l if max_shift is None else max_shift) / grid.delta))
    D = distance_field(grid, l, eta).min(axis=0)
    z = rng.integers(0, n, size=(n_pairs, d))
    dz = rng.integers(-shift, shift + 1, size=(n_pairs, d))
    z2 = (z + dz) % n
    dist = np.sqrt((dz.astype(float) ** 2).sum(axis=1)) * grid.delta
    diff = np.abs(D[tuple(z.T)] - D[tuple(z2.T)])
    ratios = np.where(dist > 0, diff * l / np.where(dist > 0, dist, 1.0), 0.0)
    return LipschitzReport(float(ratios.max(initial=0.0)), ratios)
