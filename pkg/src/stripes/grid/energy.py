"""Discrete energy of a periodic grid set and its slicing decomposition.

The kernel is sampled at cell offsets (midpoint rule): W(k) = K_tau(delta k)
delta^d for k != 0. With O(k) the measure of {x : chi(x) != chi(x + delta k)}
the energy reads

    L^d F = (M - 1) Per_1 - sum_k W(k) O(k),   M = sum_k W(k) delta |k_i|.

M and the total kernel mass are lattice sums over L1 shells and are
evaluated exactly through Hurwitz zeta functions. The overlap sum is folded
onto one periodic cell: images within a box are summed directly and the
remaining (tiny, almost flat) mass is spread uniformly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import comb

import numpy as np
from scipy.special import zeta

from ..kernel import KernelParams
from .core import GridSet

# number of points of Z^d with L1 norm t, as polynomial coefficients in t
_SHELL_POLY = {
    1: [2.0],
    2: [0.0, 4.0],
    3: [2.0, 0.0, 4.0],
}


def _shell_series(poly, p: float, e: float) -> float:
    """sum_{t>=1} P(t) (t + e)^(-p) for a polynomial P, via Hurwitz zeta."""
    total = 0.0
    for j, a in enumerate(poly):
        if a == 0.0:
            continue
        # t^j = sum_i C(j,i) (t+e)^i (-e)^(j-i)
        for i in range(j + 1):
            total += a * comb(j, i) * (-e) ** (j - i) * zeta(p - i, 1.0 + e)
    return float(total)


def lattice_mass(params: KernelParams, delta: float) -> float:
    """sum over k != 0 in Z^d of W(k)."""
    d, p = params.d, params.p
    e = params.eps / delta
    return delta ** (d - p) * _shell_series(_SHELL_POLY[d], p, e)


def first_moment_mass(params: KernelParams, delta: float) -> float:
    """M = sum over k != 0 of W(k) delta |k_1|."""
    d, p = params.d, params.p
    e = params.eps / delta
    poly = [0.0] + [c / d for c in _SHELL_POLY[d]]
    return delta ** (d + 1 - p) * _shell_series(poly, p, e)


@dataclass(frozen=True)
class KernelTable:
    """Kernel weights folded onto one periodic cell."""

    w_per: np.ndarray  # shape (n,)*d, indexed by offset k mod n
    w_per_prev: np.ndarray  # same with one image shell fewer (tail estimate)
    along: np.ndarray  # direct weights summed over perpendicular offsets, by offset -R n .. (R+1) n - 1
    moment: float  # M
    box_images: int
    remainder: float  # kernel mass outside the image box (spread uniformly)


MAX_BOX_CELLS = 8_000_000


def default_images(n: int, d: int) -> int:
    """Largest image radius whose box holds at most MAX_BOX_CELLS offsets (capped at 15)."""
    r = int((MAX_BOX_CELLS ** (1.0 / d) / n - 1) // 2)
    return max(1, min(r, 15))


def _direct_weights(params: KernelParams, delta: float, ks) -> np.ndarray:
    r = sum(np.abs(k) for k in ks) * delta
    with np.errstate(divide="ignore"):
        w = (r + params.eps) ** (-params.p) * delta**params.d
    w[r == 0] = 0.0
    return w


def _symmetrize(a: np.ndarray) -> np.ndarray:
    neg = np.roll(np.flip(a), 1, axis=tuple(range(a.ndim)))
    return 0.5 * (a + neg)


@lru_cache(maxsize=32)
def _kernel_table_cached(params: KernelParams, n: int, L: float, images: int) -> KernelTable:
    d = params.d
    delta = L / n
    side = 2 * images + 1
    ax = np.arange(side * n) - images * n
    ks = np.meshgrid(*([ax] * d), indexing="ij")
    w = _direct_weights(params, delta, ks)
    del ks
    blocks = w.reshape(sum(([side, n] for _ in range(d)), []))
    # ax starts at -images*n, which is 0 mod n, so the folded index is the offset mod n
    folded = blocks.sum(axis=tuple(range(0, 2 * d, 2)))
    inner = blocks[tuple(slice(1, side - 1) if k % 2 == 0 else slice(None) for k in range(2 * d))]
    folded_prev = inner.sum(axis=tuple(range(0, 2 * d, 2)))
    # the box is one cell longer on the positive side; averaging W(k) with
    # W(-k) leaves every energy unchanged (O is even) and makes the table symmetric
    folded, folded_prev = _symmetrize(folded), _symmetrize(folded_prev)
    along = w.sum(axis=tuple(range(1, d)))
    total = lattice_mass(params, delta)
    remainder = max(total - float(folded.sum()), 0.0)
    remainder_prev = max(total - float(folded_prev.sum()), 0.0)
    return KernelTable(
        folded + remainder / n**d,
        folded_prev + remainder_prev / n**d,
        along,
        first_moment_mass(params, delta),
        images,
        remainder,
    )


def kernel_table(params: KernelParams, n: int, L: float, images: int | None = None) -> KernelTable:
    if images is None:
        images = default_images(n, params.d)
    if images < 1:
        raise ValueError("need at least one image shell")
    return _kernel_table_cached(params, int(n), float(L), int(images))


def autocorrelation(occ: np.ndarray) -> np.ndarray:
    """A(k) = sum_x chi(x) chi(x + k) on the periodic grid (exact integers)."""
    f = np.fft.rfftn(occ.astype(float))
    a = np.fft.irfftn(f * np.conj(f), s=occ.shape, axes=tuple(range(occ.ndim)))
    return np.rint(a)


def overlap_sum(table: KernelTable, grid: GridSet, previous: bool = False) -> float:
    """sum_k W(k) O(k) with O(k) = delta^d (2 N - 2 A(k))."""
    A = autocorrelation(grid.occupancy)
    O = 2.0 * grid.n_occupied - 2.0 * A
    w = table.w_per_prev if previous else table.w_per
    return float(np.sum(w * O)) * grid.delta**grid.d


@dataclass
class GridEnergy:
    density: float
    perimeter: float
    moment: float
    tail_estimate: float  # change when the outermost image shell is dropped
    box_images: int


def grid_energy_report(params: KernelParams, grid: GridSet, images: int | None = None) -> GridEnergy:
    if params.d != grid.d:
        raise ValueError("kernel and grid dimensions differ")
    tab = kernel_table(params, grid.n, grid.L, images)
    per = grid.perimeter()
    base = (tab.moment - 1.0) * per
    total = base - overlap_sum(tab, grid)
    prev = base - overlap_sum(tab, grid, previous=True)
    vol = grid.L**grid.d
    return GridEnergy(total / vol, per, tab.moment, abs(total - prev) / vol, tab.box_images)


def grid_energy(params: KernelParams, grid: GridSet, images: int | None = None) -> float:
    """Energy density of the periodic grid set."""
    return grid_energy_report(params, grid, images).density


# -- decomposition ---------------------------------------------------------------

@dataclass
class DecompositionReport:
    r_total: np.ndarray  # per direction, sum over slice boundaries of r (weighted by delta^(d-1))
    v_total: np.ndarray
    w_total: np.ndarray
    rhs_total: float
    energy: float
    slack: float
    # per-direction face fields: r and v stored at the cell to the right of each face
    r_field: list = field(default_factory=list, repr=False)
    v_field: list = field(default_factory=list, repr=False)
    w_field: list = field(default_factory=list, repr=False)


def _one_sided_kernel(tab: KernelTable, n: int, axis: int, d: int) -> np.ndarray:
    """w_plus[j], j = 0..n-1: line kernel summed over images on the positive side.

    The folded line kernel w_per(j) (all perpendicular offsets) is split as
    w_plus(j) + w_plus(n - j). Directly summed images within the box go to
    their own side; the far remainder is shared equally.
    """
    images = tab.box_images
    line_per = tab.w_per.sum(axis=tuple(a for a in range(d) if a != axis))
    ax = np.arange(len(tab.along)) - images * n
    pos = np.bincount(ax[ax > 0] % n, weights=tab.along[ax > 0], minlength=n)
    # the kernel is even, so the negative side mirrors pos: neg[j] = pos[j]
    neg_shift = np.roll(pos[::-1], 1)  # pos[(n - j) % n]
    deficit = line_per - pos - neg_shift
    w_plus = pos + 0.5 * deficit
    w_plus[0] = 0.0
    return w_plus


def _slice_runs(line: np.ndarray):
    """Face positions f (between cells f-1 and f) where the phase changes."""
    return np.flatnonzero(line != np.roll(line, 1))


def _cross_field(tab: KernelTable, occ: np.ndarray, axis: int) -> np.ndarray:
    """phi(x) = sum_k W(k) |chi(x + k_i e_i) - chi(x)| |chi(x + k_perp) - chi(x)|."""
    d = occ.ndim
    n = occ.shape[0]
    chi = occ.astype(float)
    moved = np.moveaxis(chi, axis, 0)  # axis i first
    # G[x, j] = |chi(x + j e_i) - chi(x)|
    shifts_i = np.stack([np.roll(moved, -j, axis=0) for j in range(n)], axis=-1)
    G = np.abs(shifts_i - moved[..., None]).reshape(n ** d, n)
    # H[x, kp] = |chi(x + kp) - chi(x)| over perpendicular offsets
    perp_axes = tuple(range(1, d))
    H = np.empty((n**d, n ** (d - 1)))
    perp_offsets = np.indices((n,) * (d - 1)).reshape(d - 1, -1).T
    for c, off in enumerate(perp_offsets):
        H[:, c] = np.abs(np.roll(moved, tuple(-off), axis=perp_axes) - moved).ravel()
    Wm = np.moveaxis(tab.w_per, axis, 0).reshape(n, -1)
    phi = np.einsum("xj,xj->x", G @ Wm, H)
    return np.moveaxis(phi.reshape((n,) * d), 0, axis)


def decomposition_terms(params: KernelParams, grid: GridSet, images: int | None = None) -> DecompositionReport:
    """Slicing decomposition (r, v, w per direction) of the grid energy."""
    d, n, L, delta = grid.d, grid.n, grid.L, grid.delta
    tab = kernel_table(params, n, L, images)
    occ = grid.occupancy
    r_tot, v_tot, w_tot = np.zeros(d), np.zeros(d), np.zeros(d)
    r_fields, v_fields, w_fields = [], [], []
    for i in range(d):
        w_plus = _one_sided_kernel(tab, n, i, d)
        moved = np.moveaxis(occ, i, 0).astype(float)
        # R+(u) = sum_j w_plus(j) mm(u, u+j);  R-(u) = sum_j w_plus(j) mm(u, u-j)
        r_plus = np.zeros_like(moved)
        r_minus = np.zeros_like(moved)
        for j in range(1, n):
            r_plus += w_plus[j] * np.abs(np.roll(moved, -j, axis=0) - moved)
            r_minus += w_plus[j] * np.abs(np.roll(moved, j, axis=0) - moved)
        phi = np.moveaxis(_cross_field(tab, occ, i), i, 0)
        flat_occ = moved.reshape(n, -1)
        rp, rm, ph = (a.reshape(n, -1) for a in (r_plus, r_minus, phi))
        r_face = np.zeros_like(flat_occ)
        v_face = np.zeros_like(flat_occ)
        for c in range(flat_occ.shape[1]):
            faces = _slice_runs(flat_occ[:, c])
            if faces.size == 0:
                continue
            cp, cm, cph = (np.concatenate([[0.0], np.cumsum(np.tile(q[:, c], 3))]) for q in (rp, rm, ph))
            m = faces.size
            for a in range(m):
                s = faces[a]
                s_prev = faces[a - 1] if a > 0 else faces[-1] - n
                s_next = faces[a + 1] if a < m - 1 else faces[0] + n
                # cells s_prev..s-1 lie left of s, cells s..s_next-1 right of it
                lo, mid, hi = s_prev + n, s + n, s_next + n
                left = cp[mid] - cp[lo]
                right = cm[hi] - cm[mid]
                r_face[s, c] = -1.0 + tab.moment - delta * (left + right)
                v_face[s, c] = delta / (2.0 * d) * (cph[hi] - cph[lo])
        w_cell = ph / d
        face_area = delta ** (d - 1)
        r_tot[i] = face_area * r_face.sum()
        v_tot[i] = face_area * v_face.sum()
        w_tot[i] = delta**d * w_cell.sum()
        shape = moved.shape
        r_fields.append(np.moveaxis(r_face.reshape(shape), 0, i))
        v_fields.append(np.moveaxis(v_face.reshape(shape), 0, i))
        w_fields.append(np.moveaxis(w_cell.reshape(shape), 0, i))
    vol = L**d
    rhs = float((r_tot.sum() + v_tot.sum() + w_tot.sum()) / vol)
    energy = grid_energy(params, grid, images)
    return DecompositionReport(r_tot / vol, v_tot / vol, w_tot / vol, rhs, energy, energy - rhs, r_fields, v_fields, w_fields)


# -- localisation ------------------------------------------------------------------

def _box_sum(field_: np.ndarray, lc: int) -> np.ndarray:
    """Periodic sum over the side-lc cube whose first cell is z - lc // 2."""
    out = field_.astype(float)
    for ax in range(field_.ndim):
        c = np.cumsum(np.concatenate([out, out], axis=ax), axis=ax)
        c = np.concatenate([np.zeros_like(np.take(c, [0], axis=ax)), c], axis=ax)
        n = field_.shape[ax]
        start = (np.arange(n) - lc // 2) % n
        out = np.take(c, start + lc, axis=ax) - np.take(c, start, axis=ax)
    return out


def cube_cells(l: float, delta: float, n: int) -> int:
    lc = int(round(l / delta))
    if not 1 <= lc < n:
        raise ValueError(f"cube side {l} must satisfy delta <= l < L")
    return lc


def f_bar_field(params: KernelParams, grid: GridSet, l: float, report: DecompositionReport | None = None) -> np.ndarray:
    """F_bar_i(E, Q_l(z)) at every cell centre z; shape (d,) + grid shape."""
    rep = report or decomposition_terms(params, grid)
    d, delta = grid.d, grid.delta
    lc = cube_cells(l, delta, grid.n)
    side = lc * delta
    out = np.empty((d,) + grid.occupancy.shape)
    for i in range(d):
        faces = delta ** (d - 1) * (rep.r_field[i] + rep.v_field[i])
        cells = delta**d * rep.w_field[i]
        out[i] = (_box_sum(faces, lc) + _box_sum(cells, lc)) / side**d
    return out


def f_bar_local(params: KernelParams, grid: GridSet, center_cell, l: float, report: DecompositionReport | None = None) -> np.ndarray:
    """Per-direction localized energy on the side-l cube centred at a cell."""
    rep = report or decomposition_terms(params, grid)
    d, n, delta = grid.d, grid.n, grid.delta
    lc = cube_cells(l, delta, n)
    idx = np.ix_(*[(np.arange(lc) + c - lc // 2) % n for c in center_cell])
    out = np.empty(d)
    for i in range(d):
        faces = delta ** (d - 1) * (rep.r_field[i][idx].sum() + rep.v_field[i][idx].sum())
        out[i] = (faces + delta**d * rep.w_field[i][idx].sum()) / (lc * delta) ** d
    return out
