"""Brute-force reference evaluations.

Deliberately naive: every sup is an explicit loop over the cubes that
contain a cell, every rearrangement a full sort.  Used by the verify suite
and tests as the independent side of each fast/brute comparison.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .grid import (Cube, Grid, all_cubes, as_rational, core_cells,
                   enumerate_cubes_containing)


def _mean_abs(values: np.ndarray, q: Cube) -> float:
    block = np.abs(values[q.slices()])
    return block.sum() / block.size


def _kth(values: np.ndarray, q: Cube, frac) -> float:
    v = sorted(np.abs(values[q.slices()]).ravel().tolist(), reverse=True)
    return v[math.floor(as_rational(frac) * len(v))]


def brute_hl_maximal(grid: Grid, values: np.ndarray) -> np.ndarray:
    out = np.zeros(grid.shape)
    for c in grid.cells():
        out[c] = max(_mean_abs(values, q) for q in enumerate_cubes_containing(grid, c))
    return out


def brute_median_maximal(grid: Grid, values: np.ndarray, lam: float) -> np.ndarray:
    out = np.zeros(grid.shape)
    for c in grid.cells():
        out[c] = max(_kth(values, q, lam) for q in enumerate_cubes_containing(grid, c))
    return out


def brute_shifted_median_maximal(grid: Grid, values: np.ndarray, tau: float, r: float) -> np.ndarray:
    out = np.zeros(grid.shape)
    for q in all_cubes(grid):
        val = _kth(values, q, tau)
        core = core_cells(grid, q, r).bits
        out[core] = np.maximum(out[core], val)
    return out


def brute_dyadic_maximal(grid: Grid, values: np.ndarray, cube: Cube) -> np.ndarray:
    out = np.zeros(grid.shape)
    dyadic = []
    size = cube.side
    while size >= 1:
        for offs in itertools.product(range(cube.side // size), repeat=grid.dim):
            dyadic.append(Cube(tuple(a + o * size for a, o in zip(cube.anchor, offs)), size))
        size //= 2
    for c in itertools.product(*(range(a, a + cube.side) for a in cube.anchor)):
        out[c] = max(_mean_abs(values, p) for p in dyadic if p.contains(c))
    return out


def brute_norm(a: np.ndarray, p: np.ndarray, cell_measure: float = 1.0, iters: int = 200) -> float:
    """Plain bisection on lambda for sum h (a / lambda)^p = 1."""
    a = np.abs(np.asarray(a, float)).ravel()
    p = np.asarray(p, float).ravel()
    if not np.any(a > 0):
        return 0.0
    rho = lambda lam: float(np.sum((a / lam) ** p) * cell_measure)
    lo, hi = 1e-300, 1.0
    while rho(hi) > 1:
        hi *= 2
    lo = hi / 2
    while rho(lo) <= 1 and lo > 1e-300:
        lo /= 2
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if rho(mid) > 1:
            lo = mid
        else:
            hi = mid
    return hi
