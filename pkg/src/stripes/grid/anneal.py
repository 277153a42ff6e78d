"""Volume-preserving Metropolis annealing on the periodic grid.

Moves exchange an occupied and an empty cell, so the occupied count never
changes. With U = W * chi (periodic convolution with the folded kernel) the
total energy is

    L^d F = (M - 1) delta^(d-1) #faces - 2 delta^d N sum(W) + 2 delta^d chi.U

and a swap a -> b changes chi.U by 2 (U[b] - U[a] + W(0) - W(b - a)).
The field U is updated in O(n^d) after each accepted move and rebuilt from
scratch at every consistency check.

Proposals come in three kinds: a uniform occupied/empty pair, a face-neighbour
pair across the interface, and a pair of interface cells drawn anywhere in
the box (rejection sampled from pre-drawn candidates). The last kind lets
material hop between distant interfaces; its proposal is not symmetric, so
the chain is an optimiser rather than an exact sampler.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from ..kernel import KernelParams
from .core import GridSet, make_random
from .distance import box_distance, min_run_cells
from .energy import grid_energy, kernel_table

CHECK_EVERY = 10_000
INTERFACE_TRIES = 32
# stripes at tau = 0.05 melt near T = 0.2; 2.5e8 proposals fit in ~6 min on one core
DEFAULT_T_START = 0.17
DEFAULT_T_END = 0.04
DEFAULT_MOVES = 250_000_000


@dataclass(frozen=True)
class Schedule:
    t_start: float
    t_end: float
    n_moves: int
    boundary_fraction: float = 0.8
    local_fraction: float = 0.5  # share of boundary moves that swap face neighbours

    def __post_init__(self):
        if not (self.t_start > 0 and self.t_end > 0 and self.n_moves > 0):
            raise ValueError("temperatures and move count must be positive")
        if not (0.0 <= self.boundary_fraction <= 1.0 and 0.0 <= self.local_fraction <= 1.0):
            raise ValueError("move fractions must lie in [0, 1]")

    def temperatures(self, start: int, stop: int) -> np.ndarray:
        k = np.arange(start, stop, dtype=float)
        frac = k / max(self.n_moves - 1, 1)
        return self.t_start * (self.t_end / self.t_start) ** frac


def default_schedule(n_moves: int | None = None) -> Schedule:
    """Desk-scale schedule used by the command line (64^2 grid, tau = 0.05)."""
    return Schedule(DEFAULT_T_START, DEFAULT_T_END, DEFAULT_MOVES if n_moves is None else n_moves, 0.8, 0.5)


@dataclass
class AnnealResult:
    grid: GridSet
    energy: float
    trace: list  # (move, energy density, D_eta, temperature)
    accepted: int
    max_mismatch: float
    distances: np.ndarray  # box D^i_eta per direction at the end
    eta: float
    meta: dict = field(default_factory=dict)


@numba.njit(cache=True)
def _coords(c, n, d, out):
    for k in range(d - 1, -1, -1):
        out[k] = c % n
        c //= n


@numba.njit(cache=True)
def _flip_faces(chi, c, n, d, tmp):
    """Change in the face count if cell c is flipped (before flipping)."""
    _coords(c, n, d, tmp)
    old = chi[c]
    same = 0
    stride = 1
    for k in range(d - 1, -1, -1):
        x = tmp[k]
        for s in (-1, 1):
            y = (x + s) % n
            nb = c + (y - x) * stride
            if chi[nb] == old:
                same += 1
        stride *= n
    return 2 * same - 2 * d


@numba.njit(cache=True)
def _offset_index(a, b, n, d, ta, tb):
    """Flat index of the periodic offset b - a."""
    _coords(a, n, d, ta)
    _coords(b, n, d, tb)
    idx = 0
    for k in range(d):
        idx = idx * n + (tb[k] - ta[k]) % n
    return idx


@numba.njit(cache=True)
def _update_field(U, w, a, b, n, d, ta, tb):
    """U[x] += W(x - b) - W(x - a) for every cell x."""
    _coords(a, n, d, ta)
    _coords(b, n, d, tb)
    if d == 2:
        for i in range(n):
            ib = ((i - tb[0]) % n) * n
            ia = ((i - ta[0]) % n) * n
            for j in range(n):
                U[i * n + j] += w[ib + (j - tb[1]) % n] - w[ia + (j - ta[1]) % n]
    else:
        for i in range(n):
            for j in range(n):
                rb = (((i - tb[0]) % n) * n + (j - tb[1]) % n) * n
                ra = (((i - ta[0]) % n) * n + (j - ta[1]) % n) * n
                base = (i * n + j) * n
                for k in range(n):
                    U[base + k] += w[rb + (k - tb[2]) % n] - w[ra + (k - ta[2]) % n]


@numba.njit(cache=True)
def _on_interface(chi, c, n, d, tmp):
    """True if cell c has a face neighbour in the other phase."""
    _coords(c, n, d, tmp)
    stride = 1
    for k in range(d - 1, -1, -1):
        x = tmp[k]
        for s in (-1, 1):
            nb = c + (((x + s) % n) - x) * stride
            if chi[nb] != chi[c]:
                return True
        stride *= n
    return False


@numba.njit(cache=True)
def _pick_interface(chi, lst, picks, n, d, tmp):
    """First candidate from ``picks`` lying on the interface (else the last one)."""
    c = lst[picks[0] % lst.shape[0]]
    for t in range(picks.shape[0]):
        c = lst[picks[t] % lst.shape[0]]
        if _on_interface(chi, c, n, d, tmp):
            return c
    return c


@numba.njit(cache=True)
def _run_chunk(chi, U, w, n, d, occ_list, emp_list, pos, kind, cell, direction, pick_occ, pick_emp, u_acc, temps, face_coef, q_coef, energy, faces):
    """Metropolis sweep over pre-drawn proposals.

    kind 0: uniform pair; kind 1: neighbouring pair across a face;
    kind 2: an occupied and an empty interface cell anywhere in the box.
    """
    ta = np.empty(d, dtype=np.int64)
    tb = np.empty(d, dtype=np.int64)
    tmp = np.empty(d, dtype=np.int64)
    accepted = 0
    n_occ = occ_list.shape[0]
    n_emp = emp_list.shape[0]
    for m in range(kind.shape[0]):
        if kind[m] == 1:
            c = cell[m]
            _coords(c, n, d, tmp)
            k = direction[m] // 2
            s = 1 if direction[m] % 2 else -1
            stride = 1
            for _ in range(d - 1 - k):
                stride *= n
            x = tmp[k]
            nb = c + (((x + s) % n) - x) * stride
            if chi[c] == chi[nb]:
                continue
            if chi[c] == 1:
                a, b = c, nb
            else:
                a, b = nb, c
        elif kind[m] == 2:
            a = _pick_interface(chi, occ_list, pick_occ[m], n, d, tmp)
            b = _pick_interface(chi, emp_list, pick_emp[m], n, d, tmp)
        else:
            a = occ_list[pick_occ[m, 0] % n_occ]
            b = emp_list[pick_emp[m, 0] % n_emp]
        df = _flip_faces(chi, a, n, d, tmp)
        chi[a] = 0
        df += _flip_faces(chi, b, n, d, tmp)
        chi[b] = 1
        dq = 2.0 * (U[b] - U[a] + w[0] - w[_offset_index(a, b, n, d, ta, tb)])
        de = face_coef * df + q_coef * dq
        if de <= 0.0 or u_acc[m] < math.exp(-de / temps[m]):
            accepted += 1
            energy += de
            faces += df
            _update_field(U, w, a, b, n, d, ta, tb)
            ia, ib = pos[a], pos[b]
            occ_list[ia] = b
            emp_list[ib] = a
            pos[b] = ia
            pos[a] = ib
        else:
            chi[a] = 1
            chi[b] = 0
    return energy, faces, accepted


def _field(w: np.ndarray, chi: np.ndarray) -> np.ndarray:
    """U(x) = sum_y W(x - y) chi(y), periodic."""
    return np.fft.irfftn(np.fft.rfftn(w) * np.fft.rfftn(chi.astype(float)), s=chi.shape, axes=tuple(range(chi.ndim)))


def _total_energy(tab, chi: np.ndarray, U: np.ndarray, delta: float, d: int) -> tuple:
    faces = sum(int(np.count_nonzero(chi != np.roll(chi, -1, axis=i))) for i in range(d))
    N = int(chi.sum())
    q = float((chi * U).sum())
    e = (tab.moment - 1.0) * delta ** (d - 1) * faces - 2.0 * delta**d * N * float(tab.w_per.sum()) + 2.0 * delta**d * q
    return e, faces


def _period_cells(grid: GridSet, direction: int) -> float:
    """Mean stripe period (cells) along ``direction`` from the thresholded column profile."""
    prof = grid.occupancy.mean(axis=tuple(a for a in range(grid.d) if a != direction)) > 0.5
    n_up = int(np.count_nonzero(prof & ~np.roll(prof, 1)))
    return grid.n / n_up if n_up else math.inf


def anneal(
    params: KernelParams,
    n: int,
    alpha: float,
    L: float,
    schedule: Schedule,
    seed: int,
    eta: float | None = None,
    trace_every: int = CHECK_EVERY,
    init: GridSet | None = None,
    mismatch_tol: float = 1e-8,
) -> AnnealResult:
    """Anneal a random density-alpha configuration; fully determined by ``seed``.

    The state with the lowest energy among the consistency checkpoints (every
    CHECK_EVERY moves and the last move) is returned.
    """
    d = params.d
    if abs(alpha * n**d - round(alpha * n**d)) > 1e-9:
        raise ValueError("alpha * n^d must be an integer")
    rng = np.random.default_rng(seed)
    grid = make_random(n, alpha, rng, d=d, L=L) if init is None else init
    delta = grid.delta
    eta = 2.0 * delta if eta is None else eta
    tab = kernel_table(params, n, L)
    w = np.ascontiguousarray(tab.w_per).ravel()
    chi = grid.occupancy.ravel().copy()
    U = _field(tab.w_per, grid.occupancy).ravel()
    energy, faces = _total_energy(tab, grid.occupancy, U.reshape(grid.occupancy.shape), delta, d)
    face_coef = (tab.moment - 1.0) * delta ** (d - 1)
    q_coef = 2.0 * delta**d
    occ_list = np.flatnonzero(chi == 1).astype(np.int64)
    emp_list = np.flatnonzero(chi == 0).astype(np.int64)
    pos = np.empty(chi.size, dtype=np.int64)
    pos[occ_list] = np.arange(occ_list.size)
    pos[emp_list] = np.arange(emp_list.size)
    vol = L**d
    trace = [(0, energy / vol, _box_d(grid, eta), schedule.t_start)]
    accepted = 0
    mismatch = 0.0
    done = 0
    best_energy, best_chi, best_move = energy, chi.copy(), 0
    step = min(CHECK_EVERY, trace_every)
    while done < schedule.n_moves:
        m = min(step, schedule.n_moves - done)
        u = rng.random(m)
        bf, lf = schedule.boundary_fraction, schedule.local_fraction
        kind = np.where(u < bf * lf, 1, np.where(u < bf, 2, 0)).astype(np.int8)
        cell = rng.integers(0, chi.size, m)
        direction = rng.integers(0, 2 * d, m)
        pick_occ = rng.integers(0, occ_list.size, (m, INTERFACE_TRIES))
        pick_emp = rng.integers(0, emp_list.size, (m, INTERFACE_TRIES))
        u_acc = rng.random(m)
        temps = schedule.temperatures(done, done + m)
        energy, faces, acc = _run_chunk(
            chi, U, w, n, d, occ_list, emp_list, pos, kind, cell, direction,
            pick_occ, pick_emp, u_acc, temps, face_coef, q_coef, energy, faces,
        )
        accepted += acc
        done += m
        if done % CHECK_EVERY == 0 or done == schedule.n_moves:
            cur = grid.with_occupancy(chi.reshape(grid.occupancy.shape))
            full = grid_energy(params, cur) * vol
            mismatch = max(mismatch, abs(full - energy) / max(1.0, abs(full)))
            U = _field(tab.w_per, cur.occupancy).ravel()
            energy, faces = _total_energy(tab, cur.occupancy, U.reshape(cur.occupancy.shape), delta, d)
            if energy < best_energy:
                best_energy, best_chi, best_move = energy, chi.copy(), done
        if done % trace_every == 0 or done == schedule.n_moves:
            cur = grid.with_occupancy(chi.reshape(grid.occupancy.shape))
            trace.append((done, energy / vol, _box_d(cur, eta), float(temps[-1])))
    # the lowest checked state is returned; the final state is always checked
    final = grid.with_occupancy(best_chi.reshape(grid.occupancy.shape))
    dists = np.array([box_distance(final, i, eta) for i in range(d)])
    meta = {"min_run_cells": min_run_cells(eta, delta), "box_images": tab.box_images, "best_move": best_move}
    if mismatch > mismatch_tol:
        meta["mismatch_exceeded"] = True
    return AnnealResult(final, best_energy / vol, trace, accepted, mismatch, dists, eta, meta)


def _box_d(grid: GridSet, eta: float) -> float:
    return min(box_distance(grid, i, eta) for i in range(grid.d))


def stripe_period(grid: GridSet) -> float:
    """Observed stripe period (length units) along the best-fitting direction."""
    dists = [box_distance(grid, i, 0.0) for i in range(grid.d)]
    i = int(np.argmin(dists))
    return _period_cells(grid, i) * grid.delta
