"""Exact energies of periodic one-dimensional profiles.

A profile is an L-periodic subset of the line described by its sorted
boundary points. Two independent evaluation routes are provided:

* the pair formula, where every boundary point interacts with every other
  boundary point (and all periodic images) through ``phi``;
* the per-boundary decomposition into r_tau values.

Both are closed-form up to lattice tails, which are certified. The
constrained search and brute-force routines work on the "unwrapped"
representation x_0 < ... < x_{m-1} < x_0 + L with the set occupying
[x_{2j}, x_{2j+1}].
"""

from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import digamma, zeta

from .kernel import KernelParams, PoleError, make_params
from .lattice import lattice_sum

TAU_PRECISION_FLOOR = 1e-4


@dataclass(frozen=True)
class PeriodicProfile:
    """L-periodic set with boundaries in [0, L).

    With parity 0 the set is the union of [b_{2j}, b_{2j+1}); with parity 1
    it is the union of [b_{2j+1}, b_{2j+2}), the last interval wrapping
    around through L.
    """

    L: float
    boundaries: tuple
    parity: int = 0

    def __post_init__(self):
        b = tuple(float(x) for x in self.boundaries)
        object.__setattr__(self, "boundaries", b)
        if not self.L > 0:
            raise ValueError("period must be positive")
        if len(b) == 0 or len(b) % 2:
            raise ValueError("need an even, nonzero number of boundary points")
        if self.parity not in (0, 1):
            raise ValueError("parity must be 0 or 1")
        if b[0] < 0 or b[-1] >= self.L:
            raise ValueError("boundaries must lie in [0, L)")
        if any(y <= x for x, y in zip(b, b[1:])):
            raise ValueError("boundaries must be strictly increasing")
        if self.L - b[-1] + b[0] <= 0:
            raise ValueError("wrap-around gap must be positive")

    @property
    def m(self) -> int:
        return len(self.boundaries)

    def unwrapped(self) -> np.ndarray:
        """Boundary positions starting at an up-crossing, x_{m-1} < x_0 + L."""
        b = np.asarray(self.boundaries)
        if self.parity == 0:
            return b.copy()
        return np.concatenate([b[1:], [b[0] + self.L]])

    def gaps(self) -> np.ndarray:
        x = self.unwrapped()
        return np.diff(np.concatenate([x, [x[0] + self.L]]))

    @property
    def min_gap(self) -> float:
        return float(self.gaps().min())

    @property
    def density(self) -> float:
        return float(self.gaps()[0::2].sum() / self.L)

    def signs(self) -> np.ndarray:
        """+1 where the set starts (moving right), -1 where it ends."""
        s = np.where(np.arange(self.m) % 2 == 0, 1.0, -1.0)
        return s if self.parity == 0 else -s

    def translate(self, c: float) -> "PeriodicProfile":
        return from_unwrapped(self.unwrapped() + c, self.L)

    def complement(self) -> "PeriodicProfile":
        return PeriodicProfile(self.L, self.boundaries, 1 - self.parity)

    def reflect(self) -> "PeriodicProfile":
        # x -> -x reverses the order; the last down-crossing becomes the first up-crossing
        return from_unwrapped(-self.unwrapped()[::-1], self.L)

    def normalized(self) -> "PeriodicProfile":
        """Translate so that the first up-crossing sits at 0."""
        x = self.unwrapped()
        return from_unwrapped(x - x[0], self.L)


def from_unwrapped(x, L: float, start_up: bool = True) -> PeriodicProfile:
    """Profile from increasing positions; x[0] is an up-crossing if ``start_up``."""
    x = np.asarray(x, dtype=float)
    sig = np.where(np.arange(len(x)) % 2 == 0, 1.0, -1.0)
    if not start_up:
        sig = -sig
    y = np.mod(x, L)
    y[y >= L] = 0.0
    order = np.argsort(y, kind="stable")
    parity = 0 if sig[order[0]] > 0 else 1
    return PeriodicProfile(float(L), tuple(y[order]), parity)


def stripe_profile(h: float, alpha: float, offset: float = 0.0) -> PeriodicProfile:
    """One period of E_{h, alpha}: period 2h, occupied width 2 alpha h."""
    L = 2.0 * h
    return from_unwrapped([offset, offset + 2.0 * alpha * h], L)


def equal_stripes(n_pairs: int, alpha: float, L: float, offset: float = 0.0) -> PeriodicProfile:
    p = L / n_pairs
    x = np.ravel([[offset + k * p, offset + k * p + alpha * p] for k in range(n_pairs)])
    return from_unwrapped(x, L)


def random_profile(rng: np.random.Generator, L: float, alpha: float, n_pairs: int) -> PeriodicProfile:
    """Uniform (Dirichlet) widths and gaps at exact density alpha."""
    w = rng.dirichlet(np.ones(n_pairs)) * alpha * L
    g = rng.dirichlet(np.ones(n_pairs)) * (1.0 - alpha) * L
    steps = np.ravel(np.column_stack([w, g]))[:-1]
    x = rng.uniform(0, L) + np.concatenate([[0.0], np.cumsum(steps)])
    return from_unwrapped(x, L)


# -- energies -----------------------------------------------------------------

@dataclass
class EnergyBreakdown:
    total_density: float
    per_boundary_r: list
    image_cutoff: int
    tail_bound: float
    pair_tail_bound: float = 0.0


def _check(params: KernelParams, profile: PeriodicProfile) -> None:
    if params.eps == 0.0 and profile.min_gap <= 0:
        raise PoleError("zero gap at tau = 0")
    if 0 < params.tau < TAU_PRECISION_FLOOR:
        warnings.warn(f"tau={params.tau} below {TAU_PRECISION_FLOOR}: reduced precision", stacklevel=3)


def _lattice_phi(params: KernelParams, coef, offset, L: float, tol: float):
    """sum_{n>=0} sum_i coef_i phi(offset_i + n L) with a certified tail."""
    k = params.c1 * params.c2
    res = lattice_sum(
        np.asarray(coef) * k,
        np.asarray(offset) + params.eps,
        params.beta,
        L,
        rtol=tol,
        atol=tol * 1e-3,
    )
    return res


def _periodic(x: np.ndarray, L: float, j):
    """x_j for any integer j on the periodically extended sequence."""
    m = len(x)
    j = np.asarray(j)
    return x[j % m] + (j // m) * L


def pair_energy(params: KernelParams, profile: PeriodicProfile, tol: float = 1e-13):
    """L * energy density through boundary-pair interactions.

    Returns (value, tail_bound, terms_used).
    """
    x = profile.unwrapped()
    m, L = len(x), profile.L
    sig = np.where(np.arange(m) % 2 == 0, 1.0, -1.0)
    i, k = np.meshgrid(np.arange(m), np.arange(1, m + 1), indexing="ij")
    off = _periodic(x, L, i + k) - x[i]
    coef = sig[i] * sig[(i + k) % m]
    res = _lattice_phi(params, coef.ravel(), off.ravel(), L, tol)
    return -m - 4.0 * res.value, 4.0 * res.tail_bound, res.terms_used


def _r_parts(params: KernelParams, x: np.ndarray, L: float, i: int, tol: float):
    m = len(x)
    g_minus = x[i] - _periodic(x, L, i - 1)
    g_plus = _periodic(x, L, i + 1) - x[i]
    phi = lambda t: params.c1 * params.c2 * (t + params.eps) ** (-params.beta)  # noqa: E731
    local = 2.0 * phi(g_minus) + 2.0 * phi(g_plus) - 2.0 * phi(g_minus + g_plus)

    ks = np.arange(m)
    s = np.where(ks % 2 == 0, -1.0, 1.0)  # sign (-1)^(j-i+1) for j = i + 2 + k
    right = _periodic(x, L, i + 2 + ks)
    r_x = _lattice_phi(
        params,
        np.concatenate([s, -s]),
        np.concatenate([right - _periodic(x, L, i - 1), right - x[i]]),
        L,
        tol,
    )
    left = _periodic(x, L, i - 2 - ks)
    r_y = _lattice_phi(
        params,
        np.concatenate([s, -s]),
        np.concatenate([_periodic(x, L, i + 1) - left, x[i] - left]),
        L,
        tol,
    )
    value = -1.0 + local - r_x.value - r_y.value
    return value, r_x.tail_bound + r_y.tail_bound, max(r_x.terms_used, r_y.terms_used)


def r_tau_at(params: KernelParams, profile: PeriodicProfile, boundary_index: int, tol: float = 1e-13) -> float:
    """r_tau at the boundary point ``profile.boundaries[boundary_index]``."""
    _check(params, profile)
    if not 0 <= boundary_index < profile.m:
        raise IndexError("boundary index out of range")
    i = boundary_index if profile.parity == 0 else (boundary_index - 1) % profile.m
    return _r_parts(params, profile.unwrapped(), profile.L, i, tol)[0]


def profile_energy(params: KernelParams, profile: PeriodicProfile, tol: float = 1e-13) -> EnergyBreakdown:
    """Energy density (pair route) together with all r_tau values."""
    _check(params, profile)
    x = profile.unwrapped()
    total, pair_tail, n_pair = pair_energy(params, profile, tol)
    rs, tails, cut = [], 0.0, n_pair
    for i in range(profile.m):
        v, t, n = _r_parts(params, x, profile.L, i, tol)
        rs.append(v)
        tails += t
        cut = max(cut, n)
    if profile.parity == 1:
        rs = rs[-1:] + rs[:-1]  # back to the stored boundary order
    return EnergyBreakdown(total / profile.L, rs, cut, tails + pair_tail, pair_tail)


def stimax_lower_bound(params: KernelParams, profile: PeriodicProfile, factor: float = 1.0) -> np.ndarray:
    """Right-hand side of the r_tau lower bound at every stored boundary.

    ``factor`` scales the constant c1 c2 (1 gives the bound as usually
    quoted, 2^-beta a version that holds for all gaps).
    """
    b = np.asarray(profile.boundaries)
    L = profile.L
    g_plus = np.diff(np.concatenate([b, [b[0] + L]]))
    g_minus = np.roll(g_plus, 1)
    cap = np.inf if params.tau == 0 else 1.0 / params.tau
    k = factor * params.c1 * params.c2
    return -1.0 + k * np.minimum(g_plus ** -params.beta, cap) + k * np.minimum(g_minus ** -params.beta, cap)


# -- fast vectorised route (Hurwitz zeta), used for search ---------------------

def _zeta_phi_sum(params: KernelParams, coef, offset, L: float, axis=-1):
    """sum_n sum_i coef_i phi(offset_i + n L) along ``axis`` via Hurwitz zeta.

    For beta = 1 the coefficients must cancel along ``axis``.
    """
    a = (np.asarray(offset) + params.eps) / L
    k = params.c1 * params.c2
    if params.beta == 1.0:
        return -k / L * np.sum(coef * digamma(a), axis=axis)
    return k * L ** (-params.beta) * np.sum(coef * zeta(params.beta, a), axis=axis)


def _zeta_dphi_sum(params: KernelParams, offset, L: float):
    """sum_n phi'(offset + n L), elementwise."""
    a = (np.asarray(offset) + params.eps) / L
    b = params.beta
    return -b * params.c1 * params.c2 * L ** (-(b + 1)) * zeta(b + 1, a)


def fast_energy_batch(params: KernelParams, X: np.ndarray, L: float) -> np.ndarray:
    """L * energy density for a batch of unwrapped boundary arrays (shape B x m)."""
    X = np.atleast_2d(X)
    B, m = X.shape
    sig = np.where(np.arange(m) % 2 == 0, 1.0, -1.0)
    ext = np.concatenate([X, X + L], axis=1)
    i = np.arange(m)[:, None]
    k = np.arange(1, m + 1)[None, :]
    off = ext[:, i + k] - X[:, :, None]
    coef = (sig[:, None] * sig[(i + k) % m])[None]
    s = _zeta_phi_sum(params, coef.reshape(1, -1), off.reshape(B, -1), L)
    return -m - 4.0 * s


def energy_gradient(params: KernelParams, x: np.ndarray, L: float) -> np.ndarray:
    """Gradient of L * energy density with respect to unwrapped positions."""
    m = len(x)
    sig = np.where(np.arange(m) % 2 == 0, 1.0, -1.0)
    j = np.arange(m)[:, None]
    k = np.arange(1, m)[None, :]
    fwd = _periodic(x, L, j + k) - x[:, None]
    bwd = x[:, None] - _periodic(x, L, j - k)
    sp_f = _zeta_dphi_sum(params, fwd, L)
    sp_b = _zeta_dphi_sum(params, bwd, L)
    inner = (sig[(j - k) % m] * sp_b).sum(1) - (sig[(j + k) % m] * sp_f).sum(1)
    return -4.0 * sig * inner


# -- constrained search ---------------------------------------------------------

@dataclass
class SearchResult:
    profile: PeriodicProfile | None
    energy_density: float
    iterations: int
    converged: bool
    merges: int = 0
    history: list = field(default_factory=list)


def _volume(x: np.ndarray, L: float) -> float:
    return float(np.sum(x[1::2] - x[0::2]))


def _dilate(x: np.ndarray, target: float) -> np.ndarray:
    """Scale every occupied interval about its centre to reach ``target`` volume."""
    lo, hi = x[0::2], x[1::2]
    c = 0.5 * (lo + hi)
    f = target / np.sum(hi - lo)
    y = x.copy()
    y[0::2] = c - f * (c - lo)
    y[1::2] = c + f * (hi - c)
    return y


def _merge(x: np.ndarray, L: float, thresh: float):
    """Annihilate boundary pairs closer than ``thresh``; returns (x, n_merged).

    x[0] stays an up-crossing.
    """
    merged = 0
    while len(x) >= 2:
        g = np.diff(np.concatenate([x, [x[0] + L]]))
        j = int(np.argmin(g))
        if g[j] >= thresh:
            break
        if j == len(x) - 1:
            x = np.concatenate([x[2:-1], [x[1] + L]]) if len(x) > 2 else x[:0]
        else:
            x = np.delete(x, [j, j + 1])
        merged += 1
    return x, merged


def _project(g: np.ndarray) -> np.ndarray:
    """Remove the volume-changing and translation components of a direction."""
    m = len(g)
    n = np.where(np.arange(m) % 2 == 0, -1.0, 1.0)
    g = g - (g @ n) / m * n
    return g - g.mean()


def constrained_local_search(
    params: KernelParams,
    init: PeriodicProfile,
    alpha: float | None = None,
    tol: float = 1e-15,
    gtol: float = 1e-11,
    max_iter: int = 20000,
    merge_fraction: float = 1e-9,
) -> SearchResult:
    """Projected gradient descent over boundary positions at fixed volume."""
    L = init.L
    alpha = init.density if alpha is None else alpha
    target = alpha * L
    x = _dilate(init.unwrapped(), target)
    x, merges = _merge(x, L, merge_fraction * L)
    if len(x) == 0:
        return SearchResult(None, 0.0, 0, True, merges)
    e = float(fast_energy_batch(params, x, L)[0])
    step = 1e-2 * L / len(x)
    prev_x = prev_g = None
    hist = [e]
    small = 0
    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        g = _project(energy_gradient(params, x, L))
        gn = float(np.abs(g).max())
        if gn < gtol:
            converged = True
            break
        if prev_g is not None:
            s_, y_ = x - prev_x, g - prev_g
            sy = float(s_ @ y_)
            if sy > 0:
                step = float(s_ @ s_) / sy
        # keep every gap positive along the step
        gaps = np.diff(np.concatenate([x, [x[0] + L]]))
        dgap = np.diff(np.concatenate([-g, [-g[0]]]))
        neg = dgap < 0
        cap = np.min(gaps[neg] / -dgap[neg]) if np.any(neg) else np.inf
        t = min(step, 0.99 * cap) if np.isfinite(cap) else step
        accepted = False
        for _ in range(60):
            y = _dilate(x - t * g, target)
            y, nm = _merge(y, L, merge_fraction * L)
            if len(y) == 0:
                return SearchResult(None, 0.0, it, True, merges + nm, hist)
            ey = float(fast_energy_batch(params, y, L)[0])
            if nm or ey <= e - 1e-4 * t * float(g @ g):
                accepted = True
                break
            t *= 0.5
        if not accepted:
            converged = True
            break
        if nm:
            merges += nm
            prev_x = prev_g = None
            step = 1e-2 * L / len(y)
        else:
            prev_x, prev_g = x, g
        decrease = e - ey
        x, e = y, ey
        hist.append(e)
        small = small + 1 if abs(decrease) < tol * max(1.0, abs(e)) else 0
        if small >= 3:
            converged = True
            break
    prof = from_unwrapped(x, L)
    return SearchResult(prof, e / L, it, converged, merges, hist)


# -- brute force -----------------------------------------------------------------

def _compositions(total: int, parts: int):
    """All tuples of ``parts`` positive integers summing to ``total``."""
    for cuts in itertools.combinations(range(1, total), parts - 1):
        yield np.diff((0,) + cuts + (total,))


def brute_force_min(
    params: KernelParams,
    m_pairs: int,
    alpha: float,
    L: float,
    grid_n: int,
    max_configs: int = 2_000_000,
    batch: int = 20000,
):
    """Exhaustive minimum over boundary placements on a uniform grid.

    Widths are multiples of alpha L / grid_n and gaps multiples of
    (1 - alpha) L / grid_n; the first boundary is pinned at 0.
    Returns (profile, energy_density).
    """
    if m_pairs < 1:
        raise ValueError("m_pairs must be >= 1")
    n_comp = math.comb(grid_n - 1, m_pairs - 1)
    if n_comp**2 > max_configs:
        raise ValueError(f"{n_comp**2} configurations exceed the limit {max_configs}")
    W = np.array(list(_compositions(grid_n, m_pairs)), dtype=float) * alpha * L / grid_n
    G = np.array(list(_compositions(grid_n, m_pairs)), dtype=float) * (1 - alpha) * L / grid_n
    wi, gi = np.meshgrid(np.arange(len(W)), np.arange(len(G)), indexing="ij")
    wi, gi = wi.ravel(), gi.ravel()
    best_e, best_x = np.inf, None
    for s in range(0, len(wi), batch):
        w, g = W[wi[s:s + batch]], G[gi[s:s + batch]]
        steps = np.empty((len(w), 2 * m_pairs))
        steps[:, 0::2], steps[:, 1::2] = w, g
        X = np.concatenate([np.zeros((len(w), 1)), np.cumsum(steps[:, :-1], axis=1)], axis=1)
        e = fast_energy_batch(params, X, L)
        j = int(np.argmin(e))
        if best_x is None or e[j] < best_e - 1e-14 * abs(best_e):
            best_e, best_x = float(e[j]), X[j]
    prof = from_unwrapped(best_x, L)
    return prof, float(pair_energy(params, prof)[0] / L)


def same_configuration(a: PeriodicProfile, b: PeriodicProfile, tol: float) -> bool:
    """Equal up to translation: gap sequences agree after some cyclic shift."""
    if a.m != b.m or a.L != b.L:
        return False
    ga, gb = a.gaps(), b.gaps()
    return any(np.max(np.abs(np.roll(ga, 2 * k) - gb)) <= tol for k in range(a.m // 2))


# -- reflection positivity probe -----------------------------------------------

@dataclass
class RPReport:
    n_samples: int
    violations: list
    min_margin: float
    c0_empirical: float
    worst_profile: PeriodicProfile | None = None


def _lambda_interp(params: KernelParams):
    from scipy.interpolate import CubicSpline

    from .analytic import lambda_value

    a = np.linspace(0.02, 0.98, 49)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lam = np.array([lambda_value(params, float(t)).lam for t in a])
    spline = CubicSpline(np.concatenate([[0.0], a, [1.0]]), np.concatenate([[0.0], lam, [0.0]]))
    return lambda t: float(spline(np.clip(t, 0.0, 1.0)))


def _interval_excess(profile, rs, lam, lo, hi):
    """sum of r over boundaries in [lo, hi) minus |I| Lambda(alpha(I))."""
    x = profile.unwrapped()
    L, m = profile.L, profile.m
    n0 = int(np.floor((lo - x[0]) / L)) - 1
    pos = np.concatenate([x + (n0 + t) * L for t in range(int((hi - lo) / L) + 3)])
    rr = np.tile(rs, len(pos) // m)
    inside = (pos >= lo) & (pos < hi)
    total_r = float(rr[inside].sum())
    # occupied length in [lo, hi)
    starts, ends = pos[0::2], pos[1::2]
    occ = float(np.sum(np.clip(np.minimum(ends, hi) - np.maximum(starts, lo), 0.0, None)))
    return total_r - (hi - lo) * lam(occ / (hi - lo))


def rp_probe(
    params: KernelParams,
    n_samples: int,
    m_max: int,
    alpha: float,
    L,
    rng_seed: int,
    tol: float = 1e-6,
    n_intervals: int = 0,
) -> RPReport:
    """Random density-alpha profiles against the stripe minimum Lambda(tau, alpha).

    ``m_max`` bounds the number of boundary points. ``L`` is a period or a
    (low, high) range to draw periods from. Samples use independent child
    generators so results do not depend on how the work is partitioned.
    """
    from .analytic import lambda_value

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lam_alpha = lambda_value(params, alpha).lam
    lam = _lambda_interp(params) if n_intervals else None
    children = np.random.SeedSequence(rng_seed).spawn(n_samples)
    violations, min_margin, c0, worst = [], np.inf, np.inf, None
    for child in children:
        rng = np.random.default_rng(child)
        n_pairs = int(rng.integers(1, m_max // 2 + 1))
        period = float(rng.uniform(*L)) if np.ndim(L) else float(L)
        prof = random_profile(rng, period, alpha, n_pairs)
        br = profile_energy(params, prof)
        margin = br.total_density - lam_alpha
        if margin < min_margin:
            min_margin, worst = margin, prof
        if margin < -tol:
            violations.append((prof, margin))
        for _ in range(n_intervals):
            lo = float(rng.uniform(0, period))
            hi = lo + float(rng.uniform(0.1, 3.0)) * period
            c0 = min(c0, _interval_excess(prof, br.per_boundary_r, lam, lo, hi))
    return RPReport(n_samples, violations, float(min_margin), float(c0), worst)


# -- serialisation ----------------------------------------------------------------

def profile_to_json(profile: PeriodicProfile, params: KernelParams) -> str:
    obj = {
        "L": profile.L,
        "boundaries": list(profile.boundaries),
        "tau": params.tau,
        "d": params.d,
        "p": params.p,
    }
    if profile.parity:
        obj["parity"] = profile.parity
    return json.dumps(obj)


def profile_from_json(line: str):
    obj = json.loads(line)
    extra = set(obj) - {"L", "boundaries", "tau", "d", "p", "parity"}
    if extra:
        raise ValueError(f"unknown profile keys: {sorted(extra)}")
    prof = PeriodicProfile(float(obj["L"]), tuple(obj["boundaries"]), int(obj.get("parity", 0)))
    return prof, make_params(int(obj["d"]), float(obj["p"]), float(obj["tau"]))


def write_profiles(path, items) -> None:
    with open(path, "w") as fh:
        for prof, params in items:
            fh.write(profile_to_json(prof, params) + "\n")


def read_profiles(path) -> list:
    with open(path) as fh:
        return [profile_from_json(line) for line in fh if line.strip()]
