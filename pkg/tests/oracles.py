"""Independent reference evaluations used by the tests.

These work from the defining integrals by quadrature, with scipy's Hurwitz
zeta for the far periodic images. They share no code with the package
beyond the profile's boundary list.
"""

import math

import numpy as np
from scipy import integrate
from scipy.special import zeta


def c1_of(d, p):
    return 2.0 ** (d - 1) * math.gamma(p - d + 1) / math.gamma(p)


def _intervals(x, L):
    """Occupied intervals [a, b] of one period, from unwrapped boundaries."""
    return np.asarray(x[0::2]), np.asarray(x[1::2])


def _overlap(a, b, L, rho):
    """|E cap (E + rho)| over one period."""
    tot = 0.0
    for n in range(-3, 4):
        lo = np.maximum(a[:, None], a[None, :] + rho + n * L)
        hi = np.minimum(b[:, None], b[None, :] + rho + n * L)
        tot += np.clip(hi - lo, 0.0, None).sum()
    return tot


def functional_quadrature(d, p, tau, x, L):
    """L * energy density of the periodic 1D set from its defining integral.

    L F = -m + 2 int_0^inf Khat(rho) [m rho - int_0^L |chi(u) - chi(u + rho)| du] drho.
    """
    q = p - d + 1
    beta = p - d - 1
    eps = tau ** (1.0 / beta) if tau > 0 else 0.0
    c1 = c1_of(d, p)
    a, b = _intervals(x, L)
    m = len(x)
    vol = float(np.sum(b - a))

    def g(rho):
        return 2.0 * (vol - _overlap(a, b, L, rho))

    def khat(r):
        return c1 * (r + eps) ** (-q)

    # breakpoints of the piecewise-linear g on [0, L]
    diffs = np.concatenate([np.subtract.outer(x, x).ravel() % L, [0.0, L]])
    pts = np.unique(np.clip(diffs, 0.0, L))

    min_gap = float(np.min(np.diff(np.concatenate([x, [x[0] + L]]))))

    def near(r):
        # m rho - g(rho) vanishes identically below the smallest gap
        return 0.0 if r <= min_gap else khat(r) * (m * r - g(r))

    def far(r):
        # sum over n >= 1 of Khat(r + nL) (m (r + nL) - g(r)) via Hurwitz zeta
        s0 = (r + eps) / L + 1.0
        k_sum = c1 * L ** (-q) * zeta(q, s0)
        rk_sum = c1 * (L ** (1 - q) * zeta(q - 1, s0) - eps * L ** (-q) * zeta(q, s0))
        return m * rk_sum - g(r) * k_sum

    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        if hi - lo < 1e-15:
            continue
        v1, _ = integrate.quad(near, lo, hi, epsabs=1e-14, epsrel=1e-13, limit=200)
        v2, _ = integrate.quad(far, lo, hi, epsabs=1e-14, epsrel=1e-13, limit=200)
        total += v1 + v2
    return -m + 2.0 * total


def r_quadrature(d, p, tau, x, L, i, n_images=20_000):
    """r_tau at unwrapped boundary x[i] straight from its definition (tau > 0)."""
    q = p - d + 1
    beta = p - d - 1
    eps = tau ** (1.0 / beta)
    c1 = c1_of(d, p)
    m = len(x)
    first_moment = 2.0 * c1 * eps ** (2 - q) / ((q - 1) * (q - 2))

    def tail(t):  # int_t^inf Khat
        return c1 * (t + eps) ** (1 - q) / (q - 1)

    def xs(j):
        return x[j % m] + (j // m) * L

    s_minus, s, s_plus = xs(i - 1), x[i], xs(i + 1)
    n = np.arange(n_images)[:, None] * L
    # phase of (s^-, s): the set occupies [x_2k, x_2k+1]
    left_occupied = (i - 1) % 2 == 0

    def opposite(left_side_occ):
        """Endpoints (c, d) of one period's intervals of the opposite phase."""
        a, b = x[0::2], x[1::2]
        if left_side_occ:  # opposite phase = gaps [b_k, a_{k+1}]
            return b, np.concatenate([a[1:], [a[0] + L]])
        return a, b

    c_o, d_o = opposite(left_occupied)
    # to the right of u in (s^-, s): intervals of opposite phase beyond s (shifted by images)
    cr = (c_o[None, :] + n - L).ravel()
    dr = (d_o[None, :] + n - L).ravel()
    keep = dr > s
    cr, dr = np.maximum(cr[keep], s), dr[keep]

    def inner_right(u):
        return float(np.sum(tail(cr - u) - tail(dr - u)))

    right_occupied = i % 2 == 0
    c_o2, d_o2 = opposite(right_occupied)
    cl = (c_o2[None, :] - n + L).ravel()
    dl = (d_o2[None, :] - n + L).ravel()
    keep = cl < s
    cl, dl = cl[keep], np.minimum(dl[keep], s)

    def inner_left(u):
        return float(np.sum(tail(u - dl) - tail(u - cl)))

    t1, _ = integrate.quad(inner_right, s_minus, s, epsabs=1e-13, epsrel=1e-12, limit=200)
    t2, _ = integrate.quad(inner_left, s, s_plus, epsabs=1e-13, epsrel=1e-12, limit=200)
    return -1.0 + first_moment - t1 - t2
