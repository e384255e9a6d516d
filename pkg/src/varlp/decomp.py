"""Calderon-Zygmund stopping cubes, level families, and covering extraction."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .grid import CellMask, Cube, Grid, core_cells, is_power_of_two
from .modular import GridFunction


def dyadic_children(cube: Cube) -> list[Cube]:
    h = cube.side // 2
    return [Cube(tuple(a + h * o for a, o in zip(cube.anchor, offs)), h)
            for offs in itertools.product((0, 1), repeat=cube.dim)]


def cz_decompose(v: GridFunction, cube: Cube, threshold: float) -> list[Cube]:
    """Maximal dyadic subcubes P of ``cube`` with mean(v on P) > threshold.

    Top-down stopping: a cube is selected as soon as its mean exceeds the
    threshold, otherwise it is split into its 2^dim children.  Output is
    sorted by (side desc, anchor).
    """
    if not is_power_of_two(cube.side):
        raise ValueError(f"cube side {cube.side} is not a power of 2")
    if not v.grid.contains_cube(cube):
        raise ValueError(f"{cube} outside grid")
    if np.any(v.on_cube(cube) < 0):
        raise ValueError("v must be nonnegative on the cube")
    selected = []
    stack = [cube]
    while stack:
        q = stack.pop()
        block = v.on_cube(q)
        if block.sum() / block.size > threshold:
            selected.append(q)
        elif q.side > 1:
            stack.extend(dyadic_children(q))
    return sorted(selected, key=Cube.sort_key)


def union_mask(grid: Grid, cubes) -> CellMask:
    bits = np.zeros(grid.shape, dtype=bool)
    for q in cubes:
        bits[q.slices()] = True
    return CellMask(grid, bits)


@dataclass(frozen=True)
class CZLevel:
    k: int
    threshold: float
    cubes: tuple[Cube, ...]
    omega: CellMask
    subsets: tuple[CellMask, ...]   # E_j^k = P_j^k minus Omega_{k+1}

    def fill_ratios(self) -> list[float]:
        return [e.count() / p.n_cells() for p, e in zip(self.cubes, self.subsets)]


@dataclass(frozen=True)
class CZLevels:
    cube: Cube
    lam: float
    alpha: float
    growth: float
    levels: tuple[CZLevel, ...]

    def level(self, k: int) -> CZLevel:
        for lv in self.levels:
            if lv.k == k:
                return lv
        raise KeyError(k)

    def violations(self) -> list[str]:
        """Invariant failures; empty when everything holds."""
        bad = []
        for lv in self.levels:
            for i, p in enumerate(lv.cubes):
                for q in lv.cubes[i + 1:]:
                    if p.intersects(q):
                        bad.append(f"level {lv.k}: {p} meets {q}")
                if not p.is_subcube_of(self.cube):
                    bad.append(f"level {lv.k}: {p} leaves Q")
            for p, e, ratio in zip(lv.cubes, lv.subsets, lv.fill_ratios()):
                if ratio < self.lam:
                    bad.append(f"level {lv.k}: |E|/|P| = {ratio} < {self.lam} on {p}")
        for a, b in zip(self.levels, self.levels[1:]):
            if b.k == a.k + 1 and not b.omega.is_subset_of(a.omega):
                bad.append(f"Omega_{b.k} not inside Omega_{a.k}")
        return bad

    def to_dict(self) -> dict:
        return {
            "cube": self.cube.to_dict(), "lambda": self.lam, "alpha": self.alpha,
            "growth": self.growth,
            "levels": [{
                "k": lv.k, "threshold": lv.threshold,
                "cubes": [c.to_dict() for c in lv.cubes],
                "subset_counts": [e.count() for e in lv.subsets],
            } for lv in self.levels],
        }


def build_cz_levels(v: GridFunction, cube: Cube, lam: float, k_range) -> CZLevels:
    """Level families Omega_k = {M_Q^d v > growth^k * alpha} for k in k_range,
    with growth = 2^dim / (1 - lam) and alpha the mean of v over Q."""
    if not 0 < lam < 1:
        raise ValueError("lambda must lie in (0, 1)")
    ks = sorted(set(int(k) for k in k_range))
    if any(k < 0 for k in ks):
        raise ValueError("levels must be nonnegative")
    if cube.n_cells() == 0:
        raise ValueError("empty cube")
    grid = v.grid
    alpha = v.average(cube)
    growth = 2 ** grid.dim / (1 - lam)
    cache: dict[int, tuple[list[Cube], CellMask]] = {}

    def level(k):
        if k not in cache:
            thr = growth ** k * alpha
            cubes = cz_decompose(v, cube, thr)
            cache[k] = (cubes, union_mask(grid, cubes))
        return cache[k]

    levels = []
    for k in ks:
        cubes, omega = level(k)
        _, nxt = level(k + 1)
        subsets = tuple(CellMask.of_cube(grid, p) - nxt for p in cubes)
        levels.append(CZLevel(k, growth ** k * alpha, tuple(cubes), omega, subsets))
    return CZLevels(cube, lam, alpha, growth, tuple(levels))


@dataclass(frozen=True)
class CoverExtraction:
    points: tuple[tuple[tuple[int, ...], Cube], ...]
    selected: tuple[Cube, ...]
    subfamilies: tuple[tuple[Cube, ...], ...]

    @property
    def subfamily_count(self) -> int:
        return len(self.subfamilies)

    def uncovered_points(self) -> list[tuple[int, ...]]:
        return [c for c, _ in self.points if not any(q.contains(c) for q in self.selected)]

    def overlapping_pairs(self) -> list[tuple[Cube, Cube]]:
        bad = []
        for fam in self.subfamilies:
            for i, p in enumerate(fam):
                bad.extend((p, q) for q in fam[i + 1:] if p.intersects(q))
        return bad

    def to_dict(self) -> dict:
        return {
            "selected": [q.to_dict() for q in self.selected],
            "subfamilies": [[q.to_dict() for q in fam] for fam in self.subfamilies],
            "subfamily_count": self.subfamily_count,
        }


def besicovitch_extract(grid: Grid, points, r: float) -> CoverExtraction:
    """Greedy subcover of marked cubes, split into disjoint subfamilies.

    ``points`` is a sequence of (cell, cube) pairs with the cell in the
    r-core of its cube.  Cubes are visited by decreasing side (ties by
    anchor, then cell); a cube is kept when its marked cell is not yet
    covered.  Kept cubes are then first-fit colored on their intersection
    graph, in selection order.
    """
    pts = []
    for cell, q in points:
        cell = tuple(int(c) for c in np.atleast_1d(cell))
        if not core_cells(grid, q, r).bits[cell]:
            raise ValueError(f"cell {cell} is not in the {r}-core of {q}")
        pts.append((cell, q))
    order = sorted(pts, key=lambda cq: (cq[1].sort_key(), cq[0]))
    covered = np.zeros(grid.shape, dtype=bool)
    selected: list[Cube] = []
    for cell, q in order:
        if covered[cell]:
            continue
        selected.append(q)
        covered[q.slices()] = True
    families: list[list[Cube]] = []
    for q in selected:
        for fam in families:
            if not any(q.intersects(o) for o in fam):
                fam.append(q)
                break
        else:
            families.append([q])
    return CoverExtraction(tuple(pts), tuple(selected), tuple(tuple(f) for f in families))
