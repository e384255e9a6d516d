"""Rearrangements and maximal-type operators on grids.

All suprema run over grid-aligned cubes inside the box.  Per-cube values
are computed one side length at a time and pushed to the cells each cube
serves with an axis-separable sliding max, so every operator is an exact
max-reduction over the same set of cubes a brute-force enumeration visits.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .grid import (CellMask, Cube, Grid, as_cell, as_rational, core_offsets,
                   is_power_of_two)
from .modular import GridFunction, _same_grid


class RearrangementRangeWarning(UserWarning):
    pass


def order_index(n_cells: int, fraction) -> int:
    """0-based position in the descending sort of a cube's values that
    realizes the rearrangement at ``fraction`` of the cube's measure."""
    return math.floor(as_rational(fraction) * n_cells)


def rearrangement_value(f: GridFunction, cube: Cube, t: float) -> float:
    """(f chi_Q)^*(t): the smallest alpha >= 0 whose superlevel set in Q has
    measure at most t."""
    grid = f.grid
    if not grid.contains_cube(cube):
        raise ValueError(f"{cube} outside grid")
    if t < 0:
        raise ValueError("t must be nonnegative")
    n = cube.n_cells()
    k = math.floor(as_rational(t) / as_rational(grid.cell_measure))
    if k >= n:
        warnings.warn(f"t={t} >= |Q|; rearrangement is 0 by convention",
                      RearrangementRangeWarning, stacklevel=2)
        return 0.0
    v = np.sort(np.abs(f.on_cube(cube)), axis=None)[::-1]
    return float(v[k])


# -- per-side cube tables -------------------------------------------------

def _window_sums(values: np.ndarray, s: int) -> np.ndarray:
    """Sum of ``values`` over every cube of side s, indexed by anchor."""
    sat = values
    for ax in range(values.ndim):
        sat = np.cumsum(sat, axis=ax)
        pad = [(0, 0)] * values.ndim
        pad[ax] = (1, 0)
        sat = np.pad(sat, pad)
    if values.ndim == 1:
        return sat[s:] - sat[:-s]
    return sat[s:, s:] - sat[:-s, s:] - sat[s:, :-s] + sat[:-s, :-s]


def _window_averages(values: np.ndarray, s: int) -> np.ndarray:
    return _window_sums(values, s) / (s ** values.ndim)


def _window_order_stat(values: np.ndarray, s: int, k: int) -> np.ndarray:
    """k-th largest (0-based) value over every cube of side s."""
    n = s ** values.ndim
    j = n - 1 - k
    if values.ndim == 1:
        win = sliding_window_view(values, s)
        return np.partition(win, j, axis=-1)[:, j]
    win = sliding_window_view(values, (s, s))
    rows = win.shape[0]
    out = np.empty(win.shape[:2])
    step = max(1, 2_000_000 // max(1, win.shape[1] * n))
    for r0 in range(0, rows, step):
        block = win[r0:r0 + step].reshape(-1, win.shape[1], n)
        out[r0:r0 + step] = np.partition(block, j, axis=-1)[..., j]
    return out


def _spread(V: np.ndarray, lo: int, hi: int, shape: tuple[int, ...]) -> np.ndarray:
    """out[c] = max of V[a] over anchors a with c - hi <= a <= c - lo per axis."""
    w = hi - lo + 1
    out = V
    for ax, L in enumerate(shape):
        n_anchor = out.shape[ax]
        pad = [(0, 0)] * out.ndim
        pad[ax] = (hi, L + hi - lo - n_anchor - hi)
        padded = np.pad(out, pad, constant_values=-np.inf)
        out = sliding_window_view(padded, w, axis=ax).max(axis=-1)
        out = np.take(out, np.arange(L), axis=ax)
    return out


def _sup_over_cubes(grid: Grid, per_side, r: float | None = None, anchor_ok=None) -> np.ndarray:
    out = np.full(grid.shape, -np.inf)
    for s in range(1, min(grid.extent) + 1):
        lo, hi = (0, s - 1) if r is None else core_offsets(s, r)
        if lo > hi:
            continue
        V = per_side(s)
        if anchor_ok is not None:
            ok = anchor_ok(s)
            if not ok.any():
                continue
            V = np.where(ok, V, -np.inf)
        out = np.maximum(out, _spread(V, lo, hi, grid.shape))
    return out


# -- operators -------------------------------------------------------------

def hl_maximal(f: GridFunction) -> GridFunction:
    """Mf(c) = max over cubes Q containing c of the mean of |f| on Q."""
    a = np.abs(f.values)
    out = _sup_over_cubes(f.grid, lambda s: _window_averages(a, s))
    return GridFunction(f.grid, out)


def _check_fraction(x: float, name: str) -> None:
    if not 0 < x < 1:
        raise ValueError(f"{name} must lie in (0, 1), got {x}")


def median_maximal(f: GridFunction, lam: float) -> GridFunction:
    """m_lam f(c) = max over cubes Q containing c of (f chi_Q)^*(lam |Q|)."""
    _check_fraction(lam, "lambda")
    a = np.abs(f.values)
    d = f.grid.dim
    out = _sup_over_cubes(
        f.grid, lambda s: _window_order_stat(a, s, order_index(s ** d, lam)))
    return GridFunction(f.grid, out)


def shifted_median_maximal(f: GridFunction, tau: float, r: float) -> GridFunction:
    """m_{tau,r} f(c): like the median maximal operator, but a cube only
    reaches the cells of its concentric r-core."""
    _check_fraction(tau, "tau")
    _check_fraction(r, "r")
    a = np.abs(f.values)
    d = f.grid.dim
    out = _sup_over_cubes(
        f.grid, lambda s: _window_order_stat(a, s, order_index(s ** d, tau)), r=r)
    out = np.where(np.isneginf(out), 0.0, out)
    return GridFunction(f.grid, out)


def _doubling_anchor_ok(grid: Grid, s: int) -> np.ndarray:
    """Anchors of side-s cubes Q for which some side-2s cube P inside the
    box has Q within its 1/2-core."""
    lo, hi = core_offsets(2 * s, 0.5)
    masks = []
    for L in grid.extent:
        ok = np.zeros(L - s + 1, dtype=bool)
        for a in range(L - s + 1):
            b_min = max(0, a + s - 1 - hi)
            b_max = min(a - lo, L - 2 * s)
            ok[a] = b_min <= b_max
        masks.append(ok)
    return masks[0] if grid.dim == 1 else np.logical_and.outer(masks[0], masks[1])


@dataclass(frozen=True)
class ShiftCheck:
    lhs: np.ndarray          # m_t restricted to cubes with a grid doubling in the box
    rhs: np.ndarray          # m_{t / 2^dim, 1/2}
    full_lhs: np.ndarray     # unrestricted m_t, reported only
    t: float

    @property
    def holds(self) -> bool:
        return bool(np.all(self.lhs <= self.rhs))

    @property
    def cells_fully_covered(self) -> np.ndarray:
        """Cells where the restricted sup already equals m_t."""
        return self.lhs == self.full_lhs


def shift_domination_check(f: GridFunction, t: float) -> ShiftCheck:
    """Compare m_t f with m_{t r^n, r} f at r = 1/2.

    Only cubes whose doubled cube is realizable on the grid enter the
    left-hand side; the unrestricted m_t is returned for reporting.
    """
    _check_fraction(t, "t")
    grid = f.grid
    a = np.abs(f.values)
    d = grid.dim
    per_side = lambda s: _window_order_stat(a, s, order_index(s ** d, t))
    lhs = _sup_over_cubes(grid, per_side, anchor_ok=lambda s: _doubling_anchor_ok(grid, s))
    lhs = np.where(np.isneginf(lhs), 0.0, lhs)
    rhs = shifted_median_maximal(f, t / 2 ** d, 0.5).values
    full = median_maximal(f, t).values
    return ShiftCheck(lhs, rhs, full, t)


# -- families of disjoint cubes ---------------------------------------------

@dataclass(frozen=True)
class FamilyMember:
    cube: Cube
    weight: float = 1.0
    subset: CellMask | None = None


@dataclass(frozen=True)
class WeightedFamily:
    """Pairwise disjoint cubes with weights t_Q >= 0 and optional E_Q in Q."""

    grid: Grid
    members: tuple[FamilyMember, ...] = field(default_factory=tuple)

    def __post_init__(self):
        members = tuple(self.members)
        object.__setattr__(self, "members", members)
        seen = np.zeros(self.grid.shape, dtype=bool)
        for m in members:
            if not self.grid.contains_cube(m.cube):
                raise ValueError(f"{m.cube} outside grid")
            if not (m.weight >= 0 and np.isfinite(m.weight)):
                raise ValueError("weights must be finite and nonnegative")
            sl = m.cube.slices()
            if seen[sl].any():
                raise ValueError(f"family cubes overlap at {m.cube}")
            seen[sl] = True
            if m.subset is not None:
                _same_grid(self.grid, m.subset.grid)
                if not m.subset.is_subset_of(CellMask.of_cube(self.grid, m.cube)):
                    raise ValueError(f"subset not contained in {m.cube}")

    @classmethod
    def of_cubes(cls, grid: Grid, cubes, weights=None) -> "WeightedFamily":
        cubes = list(cubes)
        weights = [1.0] * len(cubes) if weights is None else list(weights)
        return cls(grid, tuple(FamilyMember(c, float(w)) for c, w in zip(cubes, weights)))

    @property
    def cubes(self) -> list[Cube]:
        return [m.cube for m in self.members]

    def union(self) -> CellMask:
        bits = np.zeros(self.grid.shape, dtype=bool)
        for m in self.members:
            bits[m.cube.slices()] = True
        return CellMask(self.grid, bits)

    def step_function(self) -> GridFunction:
        """sum of t_Q chi_Q"""
        v = np.zeros(self.grid.shape)
        for m in self.members:
            v[m.cube.slices()] = m.weight
        return GridFunction(self.grid, v)

    def subset_step_function(self) -> GridFunction:
        """sum of t_Q chi_{E_Q}"""
        v = np.zeros(self.grid.shape)
        for m in self.members:
            if m.subset is None:
                raise ValueError(f"member {m.cube} has no subset")
            v[m.subset.bits] = m.weight
        return GridFunction(self.grid, v)

    def min_fill(self) -> float:
        """min over members of |E_Q| / |Q| (1.0 for an empty family)."""
        if not self.members:
            return 1.0
        return min(
            (m.subset.count() if m.subset is not None else 0) / m.cube.n_cells()
            for m in self.members)

    def with_subsets(self, subsets) -> "WeightedFamily":
        return WeightedFamily(self.grid, tuple(
            FamilyMember(m.cube, m.weight, e) for m, e in zip(self.members, subsets)))

    def with_weights(self, weights) -> "WeightedFamily":
        return WeightedFamily(self.grid, tuple(
            FamilyMember(m.cube, float(w), m.subset) for m, w in zip(self.members, weights)))

    def to_dict(self) -> dict:
        out = []
        for m in self.members:
            d = {"cube": m.cube.to_dict(), "weight": m.weight}
            if m.subset is not None:
                d["subset"] = [list(c) for c in m.subset.cells()]
            out.append(d)
        return {"grid": self.grid.to_dict(), "members": out}

    @classmethod
    def from_dict(cls, d: dict) -> "WeightedFamily":
        grid = Grid.from_dict(d["grid"])
        members = []
        for m in d["members"]:
            subset = None
            if "subset" in m:
                subset = CellMask.of_cells(grid, [as_cell(c, grid.dim) for c in m["subset"]])
            members.append(FamilyMember(Cube.from_dict(m["cube"]), float(m["weight"]), subset))
        return cls(grid, tuple(members))


def averaging_operator(f: GridFunction, family) -> GridFunction:
    """T_F f = sum over Q in F of <f>_Q chi_Q; zero off the union."""
    cubes = family.cubes if isinstance(family, WeightedFamily) else list(family)
    if not isinstance(family, WeightedFamily):
        WeightedFamily.of_cubes(f.grid, cubes)  # disjointness check
    else:
        _same_grid(f.grid, family.grid)
    out = np.zeros(f.grid.shape)
    for q in cubes:
        block = f.on_cube(q)
        out[q.slices()] = block.sum() / block.size
    return GridFunction(f.grid, out)


def dyadic_maximal_on_cube(f: GridFunction, cube: Cube) -> GridFunction:
    """M_Q^d f on the cells of ``cube`` (zero elsewhere): the max of the
    mean of |f| over dyadic subcubes of Q containing the cell."""
    if not is_power_of_two(cube.side):
        raise ValueError(f"cube side {cube.side} is not a power of 2")
    if not f.grid.contains_cube(cube):
        raise ValueError(f"{cube} outside grid")
    block = np.abs(f.on_cube(cube))
    d = f.grid.dim
    best = np.full(block.shape, -np.inf)
    size = cube.side
    while size >= 1:
        m = cube.side // size
        if d == 1:
            avg = block.reshape(m, size).sum(axis=1) / size
            up = np.repeat(avg, size)
        else:
            avg = block.reshape(m, size, m, size).sum(axis=(1, 3)) / size ** 2
            up = np.repeat(np.repeat(avg, size, axis=0), size, axis=1)
        best = np.maximum(best, up)
        size //= 2
    out = np.zeros(f.grid.shape)
    out[cube.slices()] = best
    return GridFunction(f.grid, out)
