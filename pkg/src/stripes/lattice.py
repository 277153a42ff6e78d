"""Power-law lattice sums with certified Euler-Maclaurin tails.

All series in the package have the form

    S = sum_{n >= 0} sum_i c_i (o_i + n * step) ** (-power)

with positive offsets. The first ``n_direct`` cells are summed explicitly;
the rest is replaced by the Euler-Maclaurin expansion with two derivative
corrections, and the remainder is bounded through the sixth derivative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# 2 |B_6| / 6!  (DLMF 2.10.1 remainder with |B_6 - B~_6(x)| <= 2 |B_6|)
_REMAINDER_FACTOR = 2.0 * (1.0 / 42.0) / 720.0


class ConvergenceError(RuntimeError):
    """Raised when a requested tolerance cannot be reached."""


@dataclass(frozen=True)
class SeriesResult:
    value: float
    tail_bound: float
    terms_used: int


def _rising(x: float, j: int) -> float:
    out = 1.0
    for i in range(j):
        out *= x + i
    return out


def _power_derivative(x, power: float, j: int):
    """j-th derivative of x**(-power)."""
    return (-1.0) ** j * _rising(power, j) * x ** (-power - j)


def em_tail(coef, offset, power: float, step: float, start: int):
    """Tail sum over n >= start and a rigorous bound on its truncation error."""
    coef = np.asarray(coef, dtype=float)
    x = np.asarray(offset, dtype=float) + start * step
    if np.any(x <= 0):
        raise ValueError("lattice offsets must be positive on the tail")
    if power == 1.0:
        integral = -np.sum(coef * np.log(x)) / step
    else:
        integral = np.sum(coef * x ** (1.0 - power)) / (step * (power - 1.0))
    f0 = np.sum(coef * x ** (-power))
    f1 = step * np.sum(coef * _power_derivative(x, power, 1))
    f3 = step**3 * np.sum(coef * _power_derivative(x, power, 3))
    value = integral + 0.5 * f0 - f1 / 12.0 + f3 / 720.0
    bound = _REMAINDER_FACTOR * step**5 * np.sum(
        np.abs(coef) * np.abs(_power_derivative(x, power, 5))
    )
    return float(value), float(bound)


def lattice_sum(
    coef,
    offset,
    power: float,
    step: float,
    rtol: float = 1e-13,
    atol: float = 0.0,
    n_direct: int = 16,
    max_direct: int = 1 << 22,
) -> SeriesResult:
    """Evaluate sum_{n>=0} sum_i coef_i (offset_i + n*step)**(-power).

    For ``power <= 1`` the coefficients must sum to zero, otherwise the
    series diverges.
    """
    coef = np.asarray(coef, dtype=float).ravel()
    offset = np.asarray(offset, dtype=float).ravel()
    if power < 1.0:
        raise ValueError("power must be >= 1")
    if power == 1.0 and abs(coef.sum()) > 1e-12 * max(1.0, np.abs(coef).sum()):
        raise ValueError("coefficients must cancel for power == 1")
    if np.any(offset <= 0):
        raise ValueError("offsets must be positive")

    n = n_direct
    while True:
        ks = np.arange(n, dtype=float)
        direct = float(np.sum(coef[None, :] * (offset[None, :] + step * ks[:, None]) ** (-power)))
        tail, bound = em_tail(coef, offset, power, step, n)
        value = direct + tail
        if bound <= max(atol, rtol * abs(value)):
            return SeriesResult(value, bound, n)
        if n >= max_direct:
            raise ConvergenceError(
                f"lattice sum tail bound {bound:.3e} above tolerance after {n} terms"
            )
        n *= 2


def hurwitz_combination(coef, offset, power: float, step: float) -> float:
    """Same sum through scipy's Hurwitz zeta (digamma when power == 1).

    Kept as an independent route for cross-checks.
    """
    from scipy.special import digamma, zeta

    coef = np.asarray(coef, dtype=float)
    a = np.asarray(offset, dtype=float) / step
    if power == 1.0:
        return float(-np.sum(coef * digamma(a)) / step)
    return float(np.sum(coef * zeta(power, a)) * step ** (-power))


__all__ = [
    "ConvergenceError",
    "SeriesResult",
    "em_tail",
    "lattice_sum",
    "hurwitz_combination",
]
