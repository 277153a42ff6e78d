"""Power-law kernel, its one-dimensional reduction and interval interactions.

The kernel is K_tau(z) = (||z||_1 + eps)^(-p) with eps = tau^(1/beta) and
beta = p - d - 1. Integrating out the d-1 perpendicular coordinates gives
the line kernel c1 * (|z| + eps)^(-q), q = p - d + 1, whose double
antiderivative ``phi`` is the building block of every 1D energy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate


class PoleError(ZeroDivisionError):
    """Kernel evaluated at its singularity (tau = 0, zero distance)."""


@dataclass(frozen=True)
class KernelParams:
    d: int
    p: float
    tau: float
    beta: float
    q: float
    c1: float
    eps: float

    @property
    def c2(self) -> float:
        """1 / ((q-1)(q-2)), the normalisation of ``phi``."""
        return 1.0 / ((self.q - 1.0) * (self.q - 2.0))


def perpendicular_mass(d: int, p: float) -> float:
    """Closed form of the integral of (||xi||_1 + 1)^(-p) over R^(d-1).

    The L1 sphere of radius r in R^m has measure 2^m r^(m-1)/(m-1)!, which
    turns the integral into a Beta function: 2^(d-1) Gamma(q) / Gamma(p).
    """
    if d == 1:
        return 1.0
    q = p - d + 1
    return math.exp((d - 1) * math.log(2.0) + math.lgamma(q) - math.lgamma(p))


def perpendicular_mass_quad(d: int, p: float, epsabs: float = 1e-13) -> float:
    """Quadrature of the same integral over L1 shells."""
    if d == 1:
        return 1.0
    m = d - 1
    shell = 2.0**m / math.factorial(m - 1)
    val, _ = integrate.quad(
        lambda r: shell * r ** (m - 1) * (r + 1.0) ** (-p),
        0.0,
        np.inf,
        epsabs=epsabs,
        epsrel=1e-12,
        limit=200,
    )
    return val


def make_params(d: int, p: float, tau: float, verify: bool = False) -> KernelParams:
    if d < 1 or int(d) != d:
        raise ValueError(f"dimension must be a positive integer, got {d}")
    if p < d + 2:
        raise ValueError(f"exponent p={p} outside the admissible range p >= d + 2")
    if tau < 0:
        raise ValueError(f"tau must be non-negative, got {tau}")
    d = int(d)
    p = float(p)
    tau = float(tau)
    beta = p - d - 1
    q = p - d + 1
    c1 = perpendicular_mass(d, p)
    if verify:
        c1_quad = perpendicular_mass_quad(d, p)
        if abs(c1_quad - c1) > 1e-9 * c1:
            raise ArithmeticError(f"c1 closed form {c1} disagrees with quadrature {c1_quad}")
    eps = tau ** (1.0 / beta) if tau > 0 else 0.0
    return KernelParams(d=d, p=p, tau=tau, beta=beta, q=q, c1=c1, eps=eps)


def _check_pole(params: KernelParams, x) -> None:
    if params.eps == 0.0 and np.any(np.asarray(x) == 0):
        raise PoleError("kernel pole: tau = 0 at zero distance")


def hat_kernel(params: KernelParams, z):
    """Line kernel c1 (|z| + eps)^(-q)."""
    az = np.abs(z)
    _check_pole(params, az)
    out = params.c1 * (az + params.eps) ** (-params.q)
    return float(out) if np.ndim(out) == 0 else out


def phi(params: KernelParams, t):
    """Double antiderivative of the line kernel, vanishing at infinity."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("phi is defined for t >= 0")
    _check_pole(params, t)
    out = params.c1 * params.c2 * (t + params.eps) ** (-(params.q - 2.0))
    return float(out) if out.ndim == 0 else out


def first_moment(params: KernelParams) -> float:
    """Integral of |z| times the line kernel over R, i.e. 2 phi(0)."""
    return 2.0 * phi(params, 0.0)


@dataclass(frozen=True)
class IntervalPair:
    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        if not (self.a < self.b <= self.c < self.d):
            raise ValueError(f"need a < b <= c < d, got {self}")


def interaction(params: KernelParams, a, b, c, d):
    """Vectorised double integral of the line kernel over [a,b] x [c,d], b <= c."""
    f = lambda t: phi(params, t)  # noqa: E731
    return f(np.asarray(d) - a) - f(np.asarray(d) - b) - f(np.asarray(c) - a) + f(np.asarray(c) - b)


def interval_interaction(params: KernelParams, pair: IntervalPair) -> float:
    return float(interaction(params, pair.a, pair.b, pair.c, pair.d))


def jc_diagnostic(params: KernelParams, epsabs: float = 1e-11) -> float:
    """Quadrature value of the critical constant J_c (uses the tau = 1 kernel).

    Nested quadrature: along the first axis, and over L1 shells of the
    perpendicular coordinates.
    """
    d, p = params.d, params.p
    if d == 1:
        inner = lambda z: (z + 1.0) ** (-p)  # noqa: E731
    else:
        m = d - 1
        shell = 2.0**m / math.factorial(m - 1)

        def inner(z):
            v, _ = integrate.quad(
                lambda r: shell * r ** (m - 1) * (z + r + 1.0) ** (-p),
                0.0, np.inf, epsabs=epsabs * 1e-2, epsrel=1e-12, limit=200,
            )
            return v

    val, _ = integrate.quad(lambda z: z * inner(z), 0.0, np.inf, epsabs=epsabs, epsrel=1e-12, limit=200)
    return 2.0 * val
