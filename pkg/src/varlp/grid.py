"""Uniform grids on 1D/2D boxes, grid-aligned cubes and cell masks."""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

Cell = tuple[int, ...]


def as_rational(x) -> Fraction:
    """The rational a float stands for: the one with the smallest
    denominator (searched in powers of ten) that rounds back to it, so
    0.3 -> 3/10 and 1/3 -> 1/3.  Ints and Fractions pass through."""
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    return _float_rational(float(x))


@functools.lru_cache(maxsize=4096)
def _float_rational(x: float) -> Fraction:
    exact = Fraction(x)
    for digits in range(18):
        cand = exact.limit_denominator(10 ** digits)
        if float(cand) == x:
            return cand
    return exact


@dataclass(frozen=True)
class Grid:
    dim: int
    extent: tuple[int, ...]
    cell_side: float = 1.0

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        extent = tuple(int(e) for e in np.atleast_1d(self.extent))
        if len(extent) != self.dim or any(e < 1 for e in extent):
            raise ValueError(f"bad extent {self.extent!r} for dim {self.dim}")
        object.__setattr__(self, "extent", extent)
        if not (self.cell_side > 0 and np.isfinite(self.cell_side)):
            raise ValueError("cell_side must be positive and finite")

    @classmethod
    def line(cls, n: int, cell_side: float = 1.0) -> "Grid":
        return cls(1, (n,), cell_side)

    @classmethod
    def square(cls, n: int, cell_side: float = 1.0) -> "Grid":
        return cls(2, (n, n), cell_side)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.extent

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.extent))

    @property
    def cell_measure(self) -> float:
        return self.cell_side ** self.dim

    def contains_cell(self, cell) -> bool:
        cell = as_cell(cell, self.dim)
        return all(0 <= c < e for c, e in zip(cell, self.extent))

    def contains_cube(self, cube: "Cube") -> bool:
        return len(cube.anchor) == self.dim and all(
            a >= 0 and a + cube.side <= e for a, e in zip(cube.anchor, self.extent)
        )

    def cells(self):
        return itertools.product(*(range(e) for e in self.extent))

    def box(self) -> "Cube | None":
        """The whole box as a cube, when it is one."""
        if len(set(self.extent)) == 1:
            return Cube((0,) * self.dim, self.extent[0])
        return None

    def to_dict(self) -> dict:
        return {"dim": self.dim, "extent": list(self.extent), "cell_side": self.cell_side}

    @classmethod
    def from_dict(cls, d: dict) -> "Grid":
        return cls(int(d["dim"]), tuple(d["extent"]), float(d.get("cell_side", 1.0)))


def as_cell(cell, dim: int) -> Cell:
    if isinstance(cell, (int, np.integer)):
        cell = (int(cell),)
    cell = tuple(int(c) for c in cell)
    if len(cell) != dim:
        raise ValueError(f"cell {cell} does not have {dim} coordinates")
    return cell


@dataclass(frozen=True, order=True)
class Cube:
    """Axis-parallel cube: lower-corner cell ``anchor`` and ``side`` in cells."""

    side: int
    anchor: Cell

    def __init__(self, anchor, side: int):
        if isinstance(anchor, (int, np.integer)):
            anchor = (int(anchor),)
        object.__setattr__(self, "anchor", tuple(int(a) for a in anchor))
        object.__setattr__(self, "side", int(side))
        if self.side < 1:
            raise ValueError("cube side must be a positive integer")

    @property
    def dim(self) -> int:
        return len(self.anchor)

    def n_cells(self) -> int:
        return self.side ** self.dim

    def measure(self, grid: Grid) -> float:
        return (self.side * grid.cell_side) ** grid.dim

    def slices(self) -> tuple[slice, ...]:
        return tuple(slice(a, a + self.side) for a in self.anchor)

    def contains(self, cell) -> bool:
        cell = as_cell(cell, self.dim)
        return all(a <= c < a + self.side for a, c in zip(self.anchor, cell))

    def intersects(self, other: "Cube") -> bool:
        return all(
            a < b + other.side and b < a + self.side
            for a, b in zip(self.anchor, other.anchor)
        )

    def is_subcube_of(self, other: "Cube") -> bool:
        return all(
            b <= a and a + self.side <= b + other.side
            for a, b in zip(self.anchor, other.anchor)
        )

    def sort_key(self):
        return (-self.side, self.anchor)

    def to_dict(self) -> dict:
        return {"anchor": list(self.anchor), "side": self.side}

    @classmethod
    def from_dict(cls, d: dict) -> "Cube":
        return cls(tuple(d["anchor"]), int(d["side"]))


@dataclass(frozen=True)
class CellMask:
    grid: Grid
    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=bool)
        if bits.shape != self.grid.shape:
            raise ValueError(f"mask shape {bits.shape} != grid shape {self.grid.shape}")
        bits = bits.copy()
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @classmethod
    def empty(cls, grid: Grid) -> "CellMask":
        return cls(grid, np.zeros(grid.shape, dtype=bool))

    @classmethod
    def full(cls, grid: Grid) -> "CellMask":
        return cls(grid, np.ones(grid.shape, dtype=bool))

    @classmethod
    def of_cube(cls, grid: Grid, cube: Cube) -> "CellMask":
        _check_inside(grid, cube)
        bits = np.zeros(grid.shape, dtype=bool)
        bits[cube.slices()] = True
        return cls(grid, bits)

    @classmethod
    def of_cells(cls, grid: Grid, cells) -> "CellMask":
        bits = np.zeros(grid.shape, dtype=bool)
        for c in cells:
            bits[as_cell(c, grid.dim)] = True
        return cls(grid, bits)

    def count(self) -> int:
        return int(self.bits.sum())

    def measure(self) -> float:
        return self.count() * self.grid.cell_measure

    def cells(self) -> list[Cell]:
        return [tuple(int(i) for i in c) for c in np.argwhere(self.bits)]

    def is_subset_of(self, other: "CellMask") -> bool:
        return not np.any(self.bits & ~other.bits)

    def __and__(self, other: "CellMask") -> "CellMask":
        return CellMask(self.grid, self.bits & other.bits)

    def __or__(self, other: "CellMask") -> "CellMask":
        return CellMask(self.grid, self.bits | other.bits)

    def __sub__(self, other: "CellMask") -> "CellMask":
        return CellMask(self.grid, self.bits & ~other.bits)


def _check_inside(grid: Grid, cube: Cube) -> None:
    if not grid.contains_cube(cube):
        raise ValueError(f"{cube} does not lie inside grid of extent {grid.extent}")


def cells_of(grid: Grid, cube: Cube) -> list[Cell]:
    """Cells of ``cube`` in row-major order."""
    _check_inside(grid, cube)
    return list(itertools.product(*(range(a, a + cube.side) for a in cube.anchor)))


def enumerate_cubes_containing(grid: Grid, cell) -> list[Cube]:
    """Every grid-aligned cube inside the box containing ``cell``, once each."""
    cell = as_cell(cell, grid.dim)
    if not grid.contains_cell(cell):
        raise ValueError(f"cell {cell} outside grid")
    out = []
    for s in range(1, min(grid.extent) + 1):
        ranges = [
            range(max(0, c - s + 1), min(c, e - s) + 1)
            for c, e in zip(cell, grid.extent)
        ]
        out.extend(Cube(a, s) for a in itertools.product(*ranges))
    return out


def all_cubes(grid: Grid, sides=None):
    """Yield every cube inside the box, by increasing side then anchor."""
    for s in sides or range(1, min(grid.extent) + 1):
        for a in itertools.product(*(range(e - s + 1) for e in grid.extent)):
            yield Cube(a, s)


def count_cubes(grid: Grid) -> int:
    return sum(
        int(np.prod([e - s + 1 for e in grid.extent]))
        for s in range(1, min(grid.extent) + 1)
    )


def core_offsets(side: int, r: float) -> tuple[int, int]:
    """Per-axis cell offsets [lo, hi] inside a cube of ``side`` whose centers
    lie in the closed concentric cube of relative size ``r``.

    Exact in the rational value of ``r`` (see ``as_rational``): offset i qualifies when
    |2i + 1 - side| <= r * side.  Even sides with r * side < 1 have an empty
    core, returned as lo > hi.
    """
    if not 0 < r < 1:
        raise ValueError(f"r must lie in (0, 1), got {r}")
    bound = as_rational(r) * side
    inside = [i for i in range(side) if abs(2 * i + 1 - side) <= bound]
    if not inside:
        return side // 2, side // 2 - 1
    return inside[0], inside[-1]


def core_cells(grid: Grid, cube: Cube, r: float) -> CellMask:
    _check_inside(grid, cube)
    lo, hi = core_offsets(cube.side, r)
    bits = np.zeros(grid.shape, dtype=bool)
    bits[tuple(slice(a + lo, a + hi + 1) for a in cube.anchor)] = True
    return CellMask(grid, bits)


def is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0
