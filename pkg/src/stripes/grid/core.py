"""Periodic binary grids and the standard fixtures."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class GridSet:
    """Occupancy of the periodic box [0, L)^d sampled on n^d cells."""

    d: int
    n: int
    L: float
    occupancy: np.ndarray

    def __post_init__(self):
        occ = np.ascontiguousarray(self.occupancy, dtype=np.uint8)
        if occ.shape != (self.n,) * self.d:
            raise ValueError(f"occupancy shape {occ.shape} does not match n={self.n}, d={self.d}")
        if np.any(occ > 1):
            raise ValueError("occupancy must be binary")
        if not self.L > 0:
            raise ValueError("box size must be positive")
        self.occupancy = occ

    @property
    def delta(self) -> float:
        return self.L / self.n

    @property
    def alpha(self) -> float:
        return float(self.occupancy.sum()) / self.occupancy.size

    @property
    def n_occupied(self) -> int:
        return int(self.occupancy.sum())

    def with_occupancy(self, occ) -> "GridSet":
        return GridSet(self.d, self.n, self.L, occ)

    def face_counts(self) -> np.ndarray:
        """Number of occupied/empty face pairs normal to each axis."""
        c = self.occupancy
        return np.array([int(np.count_nonzero(c != np.roll(c, -1, axis=i))) for i in range(self.d)])

    def perimeter(self) -> float:
        """1-perimeter of the voxel set inside the box."""
        return float(self.face_counts().sum()) * self.delta ** (self.d - 1)


def make_stripes(n: int, alpha: float, period_cells: int, direction: int = 0, d: int = 2, L: float | None = None, offset: int = 0) -> GridSet:
    """Slabs normal to axis ``direction``: width round(alpha * period_cells) per period."""
    if n % period_cells:
        raise ValueError(f"period {period_cells} does not divide n={n}")
    width = int(round(alpha * period_cells))
    if not 0 < width < period_cells:
        raise ValueError("stripe width must be strictly between 0 and the period")
    line = ((np.arange(n) - offset) % period_cells < width).astype(np.uint8)
    shape = [1] * d
    shape[direction] = n
    occ = np.broadcast_to(line.reshape(shape), (n,) * d).copy()
    return GridSet(d, n, float(n if L is None else L), occ)


def make_checkerboard(n: int, cell: int, d: int = 2, L: float | None = None, alpha: float = 0.5) -> GridSet:
    """Alternating tiles of side ``cell``.

    For alpha != 1/2 the "on" tiles hold round(alpha n^d) cells in total,
    each filled as a centred square (Chebyshev ball) of near-equal size;
    alpha > 1/2 is the complement of the 1 - alpha pattern.
    """
    if n % (2 * cell):
        raise ValueError(f"2*cell={2 * cell} does not divide n={n}")
    if not 0 < alpha < 1:
        raise ValueError("density must lie in (0, 1)")
    if alpha > 0.5:
        g = make_checkerboard(n, cell, d, L, 1.0 - alpha)
        return g.with_occupancy(1 - g.occupancy)
    idx = np.indices((n,) * d)
    on = ((idx // cell).sum(axis=0) % 2).astype(bool)
    target = int(round(alpha * n**d))
    if target == on.sum():
        return GridSet(d, n, float(n if L is None else L), on.astype(np.uint8))
    # fill rank by rank across the "on" tiles (centre outwards inside each
    # tile) so tile sizes differ by at most one cell
    c = (cell - 1) / 2.0
    local = idx % cell
    cheb = np.max(np.abs(local - c), axis=0).ravel()
    eucl = np.sum((local - c) ** 2, axis=0).ravel()
    tile = np.ravel_multi_index(tuple(k.ravel() // cell for k in idx), (n // cell,) * d)
    key = np.lexsort((eucl, cheb, tile))
    rank = np.empty(n**d, dtype=np.int64)
    rank[key] = np.arange(n**d) % cell**d
    cand = np.flatnonzero(on.ravel())
    order = cand[np.lexsort((tile[cand], rank[cand]))]
    occ = np.zeros(n**d, dtype=np.uint8)
    occ[order[:target]] = 1
    return GridSet(d, n, float(n if L is None else L), occ.reshape((n,) * d))


def make_disc(n: int, alpha: float, d: int = 2, L: float | None = None) -> GridSet:
    """Centred ball holding exactly round(alpha n^d) cells (closest to the centre first)."""
    target = int(round(alpha * n**d))
    if not 0 < target < n**d:
        raise ValueError("density must leave the ball non-trivial")
    c = (n - 1) / 2.0
    r2 = sum((g - c) ** 2 for g in np.indices((n,) * d))
    order = np.argsort(r2, axis=None, kind="stable")
    occ = np.zeros(n**d, dtype=np.uint8)
    occ[order[:target]] = 1
    return GridSet(d, n, float(n if L is None else L), occ.reshape((n,) * d))


def make_random(n: int, alpha: float, rng: np.random.Generator, d: int = 2, L: float | None = None) -> GridSet:
    """Exactly round(alpha n^d) occupied cells placed uniformly."""
    target = int(round(alpha * n**d))
    occ = np.zeros(n**d, dtype=np.uint8)
    occ[rng.choice(n**d, size=target, replace=False)] = 1
    return GridSet(d, n, float(n if L is None else L), occ.reshape((n,) * d))


def make_full(n: int, d: int = 2, L: float | None = None) -> GridSet:
    return GridSet(d, n, float(n if L is None else L), np.ones((n,) * d, dtype=np.uint8))


def make_half_and_half(n: int, period_cells: int, alpha: float = 0.5, L: float | None = None) -> GridSet:
    """Left half striped along axis 0, right half along axis 1 (d = 2)."""
    a = make_stripes(n, alpha, period_cells, 0).occupancy
    b = make_stripes(n, alpha, period_cells, 1).occupancy
    occ = a.copy()
    occ[:, n // 2:] = b[:, n // 2:]
    return GridSet(2, n, float(n if L is None else L), occ)
