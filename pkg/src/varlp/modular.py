"""Modular, Luxemburg norm and dual exponents on a grid."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import CellMask, Cube, Grid

DEFAULT_TOL = 1e-12


class GridMismatchError(ValueError):
    pass


class DualUndefinedError(ValueError):
    """Raised when p_- = 1, so the dual exponent is unbounded."""


def _frozen(values, grid: Grid) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(grid.shape)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GridFunction:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.values, self.grid)
        if not np.all(np.isfinite(arr)):
            raise ValueError("grid function values must be finite")
        object.__setattr__(self, "values", arr)

    @classmethod
    def zeros(cls, grid: Grid) -> "GridFunction":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "GridFunction":
        return cls(grid, np.full(grid.shape, float(c)))

    @classmethod
    def indicator(cls, mask: CellMask) -> "GridFunction":
        return cls(mask.grid, mask.bits.astype(float))

    def abs(self) -> "GridFunction":
        return GridFunction(self.grid, np.abs(self.values))

    def scaled(self, c: float) -> "GridFunction":
        return GridFunction(self.grid, c * self.values)

    def restricted(self, mask: CellMask) -> "GridFunction":
        _same_grid(self.grid, mask.grid)
        return GridFunction(self.grid, np.where(mask.bits, self.values, 0.0))

    def on_cube(self, cube: Cube) -> np.ndarray:
        return self.values[cube.slices()]

    def average(self, cube: Cube) -> float:
        return float(self.on_cube(cube).mean())


@dataclass(frozen=True)
class ExponentField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.values, self.grid)
        if not np.all(np.isfinite(arr)):
            raise ValueError("exponent must be finite (p_+ < infinity)")
        if np.any(arr < 1):
            raise ValueError(f"exponent must be >= 1, found {arr.min()}")
        object.__setattr__(self, "values", arr)

    @classmethod
    def constant(cls, grid: Grid, q: float) -> "ExponentField":
        return cls(grid, np.full(grid.shape, float(q)))

    def p_minus(self, region: CellMask | None = None) -> float:
        return float(self._on(region).min())

    def p_plus(self, region: CellMask | None = None) -> float:
        return float(self._on(region).max())

    def is_constant(self) -> bool:
        return bool(np.all(self.values == self.values.flat[0]))

    def _on(self, region: CellMask | None) -> np.ndarray:
        if region is None:
            return self.values.ravel()
        _same_grid(self.grid, region.grid)
        if not region.bits.any():
            raise ValueError("p_-/p_+ of an empty region")
        return self.values[region.bits]


def _same_grid(*grids: Grid) -> None:
    first = grids[0]
    for g in grids[1:]:
        if g != first:
            raise GridMismatchError(f"grid mismatch: {first} vs {g}")


def _region_bits(grid: Grid, region: CellMask | None) -> np.ndarray:
    if region is None:
        return np.ones(grid.shape, dtype=bool)
    _same_grid(grid, region.grid)
    return region.bits


def modular(f: GridFunction, p: ExponentField, region: CellMask | None = None) -> float:
    """Sum over ``region`` of |f(c)|^p(c) times the cell measure."""
    _same_grid(f.grid, p.grid)
    bits = _region_bits(f.grid, region)
    a = np.abs(f.values[bits])
    return float(np.sum(a ** p.values[bits]) * f.grid.cell_measure)


def _logsumexp(z: np.ndarray) -> float:
    m = z.max()
    return float(m + math.log(np.exp(z - m).sum()))


def norm_of_values(a: np.ndarray, p: np.ndarray, cell_measure: float = 1.0,
                   tol: float = DEFAULT_TOL) -> float:
    """Luxemburg norm of a flat array of nonnegative cell values.

    Works on u = log(lambda), where u -> log(modular(f / e^u)) is convex
    and strictly decreasing.  The root is kept inside a bracket taken from
    the modular/norm sandwich; each step is a Newton step from the left
    end (which never overshoots a convex decreasing function) or, failing
    that, a bisection.  Terminates once the bracket has relative width tol.
    """
    keep = a > 0
    if not keep.any():
        return 0.0
    a = a[keep]
    p = p[keep]
    base = p * np.log(a) + math.log(cell_measure)

    def F(u):
        z = base - p * u
        m = z.max()
        w = np.exp(z - m)
        s = w.sum()
        return m + math.log(s), -float((p * w).sum() / s)

    log_rho = F(0.0)[0]
    pm, pp = float(p.min()), float(p.max())
    if log_rho <= 0:
        lo, hi = log_rho / pm, log_rho / pp
    else:
        lo, hi = log_rho / pp, log_rho / pm
    if hi - lo <= tol:
        return math.exp(0.5 * (lo + hi))
    # the sandwich bounds are exact in theory; widen a hair for rounding
    pad = 4 * np.finfo(float).eps * max(1.0, abs(lo), abs(hi))
    lo -= pad
    hi += pad
    u = lo
    val, der = F(u)
    for _ in range(300):
        if hi - lo <= tol:
            break
        step = -val / der if der < 0 else math.inf
        if 0 <= step < 0.5 * tol:
            cand = lo + 0.5 * tol
        elif lo < lo + step < hi:
            cand = lo + step
        else:
            cand = 0.5 * (lo + hi)
        if not lo < cand < hi:
            cand = 0.5 * (lo + hi)
            if not lo < cand < hi:
                break
        v, d = F(cand)
        if v >= 0:
            lo, val, der = cand, v, d
        else:
            hi = cand
    return math.exp(0.5 * (lo + hi))


def luxemburg_norm(f: GridFunction, p: ExponentField, region: CellMask | None = None,
                   tol: float = DEFAULT_TOL) -> float:
    """inf{lam > 0 : modular(f / lam) <= 1} over ``region``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    _same_grid(f.grid, p.grid)
    bits = _region_bits(f.grid, region)
    return norm_of_values(np.abs(f.values[bits]), p.values[bits], f.grid.cell_measure, tol)


def indicator_norm(mask: CellMask, p: ExponentField, tol: float = DEFAULT_TOL) -> float:
    _same_grid(mask.grid, p.grid)
    pv = p.values[mask.bits]
    return norm_of_values(np.ones_like(pv), pv, mask.grid.cell_measure, tol)


def dual_exponent(p: ExponentField) -> ExponentField:
    if p.p_minus() <= 1:
        raise DualUndefinedError("dual exponent undefined: p_- = 1 makes p' unbounded")
    v = p.values
    return ExponentField(p.grid, v / (v - 1))


@dataclass(frozen=True)
class SandwichReport:
    norm: float
    modular: float
    lower: float
    upper: float
    norm_above_one: bool
    lower_holds: bool
    upper_holds: bool

    @property
    def holds(self) -> bool:
        return self.lower_holds and self.upper_holds


def check_modular_norm_sandwich(f: GridFunction, p: ExponentField, region: CellMask | None = None,
                                tol: float = DEFAULT_TOL,
                                slack: float | None = None) -> SandwichReport:
    """Compare the norm with rho^(1/p_+) and rho^(1/p_-) on ``region``.

    ``slack`` is relative to the norm; it defaults to 10 * tol.
    """
    bits = _region_bits(f.grid, region)
    if not bits.any():
        raise ValueError("region must be nonempty")
    region = CellMask(f.grid, bits)
    rho = modular(f, p, region)
    nrm = luxemburg_norm(f, p, region, tol)
    pm, pp = p.p_minus(region), p.p_plus(region)
    above = nrm > 1
    if above:
        lower, upper = rho ** (1 / pp), rho ** (1 / pm)
    else:
        lower, upper = rho ** (1 / pm), rho ** (1 / pp)
    eps = (10 * tol if slack is None else slack) * max(nrm, lower, upper, 1e-300)
    return SandwichReport(nrm, rho, lower, upper, above, lower <= nrm + eps, nrm <= upper + eps)


@dataclass(frozen=True)
class HolderReport:
    pairing: float
    norm_f: float
    norm_g_dual: float
    constant: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.pairing <= self.bound * (1 + 1e-12)

    @property
    def empirical_constant(self) -> float:
        """Smallest constant that would make this instance hold."""
        denom = self.norm_f * self.norm_g_dual
        return self.pairing / denom if denom > 0 else 0.0


def holder_pairing_check(f: GridFunction, g: GridFunction, p: ExponentField,
                         region: CellMask | None = None, constant: float = 2.0,
                         tol: float = DEFAULT_TOL) -> HolderReport:
    """Integral of |fg| against constant * ||f||_p * ||g||_p'."""
    _same_grid(f.grid, g.grid, p.grid)
    pd = dual_exponent(p)
    bits = _region_bits(f.grid, region)
    region = CellMask(f.grid, bits)
    pairing = float(np.sum(np.abs(f.values[bits] * g.values[bits])) * f.grid.cell_measure)
    nf = luxemburg_norm(f, p, region, tol)
    ng = luxemburg_norm(g, pd, region, tol)
    return HolderReport(pairing, nf, ng, constant, constant * nf * ng)
