"""Closed-form energy of periodic stripes and the optimal-period problem.

For the stripe set of half-period h and density alpha the energy density is

    F(h, alpha) = -1/h + C(alpha, eps/h) / h^(q-1)

where C is a lattice series over the even integers. Everything here is
built from that series and its partial derivatives.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .kernel import KernelParams
from .lattice import SeriesResult, lattice_sum

logger = logging.getLogger(__name__)

TAU_VALIDATED = 0.1
ALPHA_CLAMP = 1e-4
SERIES_RTOL = 1e-13


class AnomalyWarning(UserWarning):
    """Observation that would contradict the uniqueness of the optimal period."""


class BracketError(RuntimeError):
    pass


@dataclass(frozen=True)
class StripeConfig:
    h: float
    alpha: float

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("half-period must be positive")
        if not 0 < self.alpha < 1:
            raise ValueError("density must lie in (0, 1)")


@dataclass(frozen=True)
class SeriesDerivatives:
    """C and all first and second partials in (alpha, s)."""

    c: SeriesResult
    c_a: SeriesResult
    c_aa: SeriesResult
    c_s: SeriesResult
    c_ss: SeriesResult
    c_sa: SeriesResult


@dataclass(frozen=True)
class LambdaSample:
    tau: float
    alpha: float
    h_star: float
    lam: float
    d_alpha: float
    d2_alpha: float
    certificate: float = 0.0


def check_alpha(alpha: float) -> float:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"density {alpha} outside (0, 1)")
    if alpha < 0.01 or alpha > 0.99:
        warnings.warn(f"density {alpha} outside [0.01, 0.99]: extrapolation", stacklevel=3)
    return min(max(alpha, ALPHA_CLAMP), 1.0 - ALPHA_CLAMP)


def _check_tau(params: KernelParams) -> None:
    if params.tau > TAU_VALIDATED:
        warnings.warn(
            f"tau={params.tau} above the validated range (0, {TAU_VALIDATED}]", stacklevel=3
        )


def _offsets(alpha: float, s: float):
    return np.array([2 * alpha + s, 2 - 2 * alpha + s, 2 + s])


def _prefactor(params: KernelParams) -> float:
    return 2.0 * params.c1 * params.c2


def _scaled(res: SeriesResult, factor: float) -> SeriesResult:
    return SeriesResult(res.value * factor, res.tail_bound * abs(factor), res.terms_used)


def _sum(params, coef, alpha, s, power, tol):
    # absolute floor keeps exact zeros (e.g. dC/dalpha at 1/2) from stalling
    return lattice_sum(coef, _offsets(alpha, s), power, 2.0, rtol=tol, atol=tol * 1e-3)


def series_C(params: KernelParams, alpha: float, s: float = 0.0, tol: float = SERIES_RTOL) -> SeriesResult:
    """The stripe series C(q, alpha, s) with a certified tail."""
    if not 0 < alpha < 1:
        raise ValueError("density must lie in (0, 1)")
    if s < 0:
        raise ValueError("s must be non-negative")
    r = params.q - 2.0
    res = _sum(params, [1.0, 1.0, -2.0], alpha, s, r, tol)
    return _scaled(res, _prefactor(params))


def series_derivatives(params: KernelParams, alpha: float, s: float = 0.0, tol: float = SERIES_RTOL) -> SeriesDerivatives:
    if not 0 < alpha < 1:
        raise ValueError("density must lie in (0, 1)")
    r = params.q - 2.0
    k0 = _prefactor(params)
    c = series_C(params, alpha, s, tol)
    c_a = _scaled(_sum(params, [1.0, -1.0, 0.0], alpha, s, r + 1, tol), -2.0 * r * k0)
    c_aa = _scaled(_sum(params, [1.0, 1.0, 0.0], alpha, s, r + 2, tol), 4.0 * r * (r + 1) * k0)
    c_s = _scaled(_sum(params, [1.0, 1.0, -2.0], alpha, s, r + 1, tol), -r * k0)
    c_ss = _scaled(_sum(params, [1.0, 1.0, -2.0], alpha, s, r + 2, tol), r * (r + 1) * k0)
    c_sa = _scaled(_sum(params, [1.0, -1.0, 0.0], alpha, s, r + 2, tol), 2.0 * r * (r + 1) * k0)
    return SeriesDerivatives(c, c_a, c_aa, c_s, c_ss, c_sa)


def series_C_partials(params: KernelParams, alpha: float, s: float = 0.0, tol: float = SERIES_RTOL):
    """(dC/dalpha, d2C/dalpha2, dC/ds) as certified series."""
    der = series_derivatives(params, alpha, s, tol)
    return der.c_a, der.c_aa, der.c_s


# -- stripe energy and its partials ---------------------------------------

def stripe_energy(params: KernelParams, cfg: StripeConfig, tol: float = SERIES_RTOL) -> float:
    h = cfg.h
    c = series_C(params, cfg.alpha, params.eps / h, tol).value
    return -1.0 / h + c / h ** (params.q - 1.0)


def energy_partials(params: KernelParams, h: float, alpha: float, tol: float = SERIES_RTOL) -> dict:
    """F and its partials F_h, F_hh, F_a, F_aa, F_ah at (h, alpha)."""
    q = params.q
    s = params.eps / h
    der = series_derivatives(params, alpha, s, tol)
    c, ca, caa, cs, css, csa = (x.value for x in (der.c, der.c_a, der.c_aa, der.c_s, der.c_ss, der.c_sa))
    return {
        "F": -1.0 / h + c / h ** (q - 1),
        "F_h": 1.0 / h**2 - ((q - 1) * c + s * cs) / h**q,
        "F_hh": -2.0 / h**3 + (q * (q - 1) * c + 2 * q * s * cs + s * s * css) / h ** (q + 1),
        "F_a": ca / h ** (q - 1),
        "F_aa": caa / h ** (q - 1),
        "F_ah": -((q - 1) * ca + s * csa) / h**q,
    }


def _dF_dh(params, h, alpha, tol=SERIES_RTOL):
    q = params.q
    s = params.eps / h
    c = series_C(params, alpha, s, tol).value
    if s == 0.0:
        return 1.0 / h**2 - (q - 1) * c / h**q
    r = q - 2.0
    cs = -r * _prefactor(params) * _sum(params, [1.0, 1.0, -2.0], alpha, s, r + 1, tol).value
    return 1.0 / h**2 - ((q - 1) * c + s * cs) / h**q


def derivative_sign_changes(params: KernelParams, alpha: float, n_samples: int = 64):
    """Sample dF/dh on the search bracket and return (grid, values, #sign changes)."""
    m = min(alpha, 1.0 - alpha)
    hs = np.geomspace(0.01 / m, 100.0 / m, n_samples)
    vals = np.array([_dF_dh(params, h, alpha) for h in hs])
    signs = np.sign(vals)
    changes = int(np.count_nonzero(signs[1:] != signs[:-1]))
    return hs, vals, changes


def optimal_period(params: KernelParams, alpha: float, tol: float = 1e-13):
    """Unique minimiser h* of h -> F(h, alpha) and the residual |dF/dh(h*)|."""
    alpha = check_alpha(alpha)
    _check_tau(params)
    q = params.q
    if params.eps == 0.0:
        c = series_C(params, alpha).value
        h = ((q - 1.0) * c) ** (1.0 / (q - 2.0))
        return float(h), float(abs(_dF_dh(params, h, alpha)))

    hs, vals, changes = derivative_sign_changes(params, alpha)
    if changes != 1:
        warnings.warn(
            f"dF/dh changes sign {changes} times on the bracket (tau={params.tau}, alpha={alpha})",
            AnomalyWarning,
            stacklevel=2,
        )
    idx = np.flatnonzero((vals[:-1] < 0) & (vals[1:] > 0))
    if idx.size == 0:
        raise BracketError(f"no minimiser of F in [{hs[0]}, {hs[-1]}]")
    lo, hi = hs[idx[0]], hs[idx[0] + 1]
    while hi - lo > 1e-3 * lo:
        mid = 0.5 * (lo + hi)
        if _dF_dh(params, mid, alpha) < 0:
            lo = mid
        else:
            hi = mid
    h = 0.5 * (lo + hi)
    for _ in range(50):
        d = energy_partials(params, h, alpha)
        step = d["F_h"] / d["F_hh"] if d["F_hh"] > 0 else 0.0
        new = h - step
        if not lo <= new <= hi:
            new = 0.5 * (lo + hi)
        if _dF_dh(params, new, alpha) < 0:
            lo = max(lo, new)
        else:
            hi = min(hi, new)
        if abs(new - h) <= tol * h:
            h = new
            break
        h = new
    return float(h), float(abs(_dF_dh(params, h, alpha)))


def lambda_value(params: KernelParams, alpha: float, tol: float = 1e-13) -> LambdaSample:
    """Minimal energy density of density-alpha stripes, with alpha derivatives."""
    h, cert = optimal_period(params, alpha, tol)
    alpha = check_alpha(alpha)
    d = energy_partials(params, h, alpha)
    d2 = d["F_aa"] - d["F_ah"] ** 2 / d["F_hh"]
    return LambdaSample(params.tau, alpha, h, d["F"], d["F_a"], d2, cert)


# -- diagnostics ------------------------------------------------------------

@dataclass
class ConvexityReport:
    rows: list = field(default_factory=list)  # (alpha, d2_alpha, floor_ratio)
    c_tilde: float = float("nan")
    c2_fit: float = float("nan")
    events: list = field(default_factory=list)


def convexity_scan(params: KernelParams, alpha_grid, tol: float = 1e-13) -> ConvexityReport:
    rep = ConvexityReport()
    d_alpha = []
    for a in alpha_grid:
        smp = lambda_value(params, float(a), tol)
        floor = min(a, 1 - a) ** (params.q - 1)
        rep.rows.append((float(a), smp.d2_alpha, smp.d2_alpha / floor))
        d_alpha.append(abs(smp.d_alpha))
        if not smp.d2_alpha > 0:
            rep.events.append(f"non-positive second derivative {smp.d2_alpha:.3e} at alpha={a}")
    if rep.rows:
        rep.c_tilde = min(r[2] for r in rep.rows)
        rep.c2_fit = max(d_alpha)
    return rep


def abc_series(params: KernelParams, alpha: float, tol: float = SERIES_RTOL):
    """The three tau = 0 series appearing in the convexity determinant."""
    q = params.q
    off = _offsets(alpha, 0.0)
    a1 = lattice_sum([1.0, 1.0, 0.0], off, q, 2.0, rtol=tol)
    a2 = lattice_sum([1.0, 1.0, -2.0], off, q - 2, 2.0, rtol=tol)
    a3 = lattice_sum([1.0, -1.0, 0.0], off, q - 1, 2.0, rtol=tol, atol=tol)
    return a1, a2, a3


def abc_inequality_check(params: KernelParams, alpha: float, const: float = 0.0):
    """(A1, A2, A3, margin) with margin = A1 A2 - A3^2 - const alpha^-(q-2)."""
    if not 0 < alpha <= 0.5:
        raise ValueError("abc check is stated for alpha in (0, 1/2]")
    a1, a2, a3 = (x.value for x in abc_series(params, alpha))
    margin = a1 * a2 - a3 * a3 - const * alpha ** (-(params.q - 2))
    return a1, a2, a3, margin


def abc_fit_constant(params: KernelParams, alpha_grid) -> float:
    """Largest const with A1 A2 - A3^2 >= const alpha^-(q-2) on the grid."""
    vals = []
    for a in alpha_grid:
        a1, a2, a3, m = abc_inequality_check(params, float(a))
        vals.append(m * a ** (params.q - 2))
    return float(min(vals))


def a3_tail(params: KernelParams, alpha: float) -> float:
    """sum_{k>=1} |a_{3,k}| (all terms share one sign for alpha <= 1/2)."""
    q = params.q
    off = np.array([2 + 2 * alpha, 2 - 2 * alpha])
    return abs(lattice_sum([1.0, -1.0], off, q - 1, 2.0, atol=1e-15).value)


@dataclass
class RateReport:
    taus: list
    alphas: list
    # sup_h deviation tables indexed [tau][alpha] for order 0, 1, 2 in h
    dev: np.ndarray
    slope_tau: np.ndarray  # per order, averaged over alphas
    slope_alpha: np.ndarray  # per order, averaged over taus


def _fit_slope(x, y) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def perturbation_rates(
    make,  # callable tau -> KernelParams
    taus,
    alpha_grid,
    c4: float = 0.5,
    n_h: int = 64,
) -> RateReport:
    """Sup over h >= c4/alpha of |d^k_h F_tau - d^k_h F_0|, k = 0, 1, 2."""
    p0 = make(0.0)
    dev = np.zeros((3, len(taus), len(alpha_grid)))
    for j, a in enumerate(alpha_grid):
        hs = np.geomspace(c4 / a, 100.0 / a, n_h)
        base = [energy_partials(p0, h, a) for h in hs]
        for i, t in enumerate(taus):
            pt = make(t)
            cur = [energy_partials(pt, h, a) for h in hs]
            for k, key in enumerate(("F", "F_h", "F_hh")):
                dev[k, i, j] = max(abs(c[key] - b[key]) for c, b in zip(cur, base))
    slope_tau = np.array([np.mean([_fit_slope(taus, dev[k, :, j]) for j in range(len(alpha_grid))]) for k in range(3)])
    if len(alpha_grid) > 1:
        slope_alpha = np.array([np.mean([_fit_slope(alpha_grid, dev[k, i, :]) for i in range(len(taus))]) for k in range(3)])
    else:
        slope_alpha = np.full(3, np.nan)
    return RateReport(list(taus), list(alpha_grid), dev, slope_tau, slope_alpha)


def f0_curvature_at_optimum(params: KernelParams, alpha: float) -> float:
    """Second h-derivative of F_0 at h*_0 (closed form)."""
    q = params.q
    c = series_C(params, alpha).value
    return (q - 1) ** (-3.0 / (q - 2)) * (q - 2) * c ** (-3.0 / (q - 2))


def lambda_closed_form_tau0(params: KernelParams, alpha: float) -> float:
    q = params.q
    c = series_C(params, alpha).value
    return -(q - 2) / (q - 1) ** ((q - 1) / (q - 2)) * c ** (-1.0 / (q - 2))


__all__ = [
    "AnomalyWarning",
    "BracketError",
    "ConvexityReport",
    "LambdaSample",
    "RateReport",
    "SeriesDerivatives",
    "StripeConfig",
    "a3_tail",
    "abc_fit_constant",
    "abc_inequality_check",
    "abc_series",
    "check_alpha",
    "convexity_scan",
    "derivative_sign_changes",
    "energy_partials",
    "f0_curvature_at_optimum",
    "lambda_closed_form_tau0",
    "lambda_value",
    "optimal_period",
    "perturbation_rates",
    "series_C",
    "series_C_partials",
    "series_derivatives",
    "stripe_energy",
]
