"""Single-instance functionals behind the condition checkers."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..grid import CellMask, Cube, as_rational
from ..maximal import WeightedFamily, order_index
from ..modular import (DEFAULT_TOL, ExponentField, GridFunction, _same_grid,
                       indicator_norm, luxemburg_norm, norm_of_values)
from .chains import ConstantChain31


def cube_indicator_norm(p: ExponentField, cube: Cube, tol: float = DEFAULT_TOL) -> float:
    pv = p.values[cube.slices()].ravel()
    return norm_of_values(np.ones_like(pv), pv, p.grid.cell_measure, tol)


def apvar_ratio(p: ExponentField, cube: Cube, f: GridFunction, tol: float = DEFAULT_TOL) -> float:
    """<|f|>_Q ||chi_Q|| / ||f chi_Q||."""
    _same_grid(p.grid, f.grid)
    block = np.abs(f.on_cube(cube))
    if not np.any(block > 0):
        raise ZeroDivisionError("f vanishes on the cube")
    pv = p.values[cube.slices()]
    num = block.mean() * cube_indicator_norm(p, cube, tol)
    return num / norm_of_values(block.ravel(), pv.ravel(), p.grid.cell_measure, tol)


def required_count(lam: float, n_cells: int) -> int:
    """Fewest cells E can have with |E| >= lam |Q|."""
    return math.ceil(as_rational(lam) * n_cells)


def ainfty_ratio(p: ExponentField, lam: float, family: WeightedFamily,
                 tol: float = DEFAULT_TOL) -> float:
    """||sum t_Q chi_Q|| / ||sum t_Q chi_{E_Q}||."""
    _same_grid(p.grid, family.grid)
    for m in family.members:
        if m.subset is None:
            raise ValueError(f"member {m.cube} has no subset E_Q")
        if m.subset.count() < required_count(lam, m.cube.n_cells()):
            raise ValueError(f"|E_Q| < lambda |Q| on {m.cube}")
    den = luxemburg_norm(family.subset_step_function(), p, tol=tol)
    if den == 0:
        raise ZeroDivisionError("all weights vanish")
    return luxemburg_norm(family.step_function(), p, tol=tol) / den


def rh_functional(p: ExponentField, r: float, family: WeightedFamily) -> tuple[float, float]:
    """(sum_Q int_Q t_Q^p, sum_Q |Q| <t_Q^(r p)>_Q^(1/r))."""
    if not r > 1:
        raise ValueError("r must exceed 1")
    _same_grid(p.grid, family.grid)
    h = p.grid.cell_measure
    inp = out = 0.0
    for m in family.members:
        pv = p.values[m.cube.slices()]
        size = m.cube.measure(p.grid)
        inp += float(np.sum(m.weight ** pv)) * h
        out += size * float(np.mean(m.weight ** (r * pv))) ** (1 / r)
    return inp, out


def _log_mean_exp(z: np.ndarray) -> float:
    m = z.max()
    return float(m + math.log(np.mean(np.exp(z - m))))


def _log_mean_exp_rows(z: np.ndarray) -> np.ndarray:
    m = z.max(axis=1, keepdims=True)
    return (m + np.log(np.mean(np.exp(z - m), axis=1, keepdims=True))).ravel()


def _log_ratio_scan(pv, log_ts, r, log_size, log_h, log_k, chunk=2048):
    """Vectorized log-ratio of the two sides of the b(Q) inequality."""
    out = np.empty(log_ts.size)
    for i in range(0, log_ts.size, chunk):
        lt = log_ts[i:i + chunk, None]
        lhs = log_size + _log_mean_exp_rows(r * pv[None, :] * lt) / r
        rhs = log_h + _log_mean_exp_rows(pv[None, :] * lt) + math.log(pv.size)
        out[i:i + chunk] = lhs - rhs - log_k
    return out


@dataclass(frozen=True)
class BValue:
    cube: Cube
    k: float
    t_max: float
    t_q: float | None
    b: float
    residual: float       # |LHS - k RHS| / LHS at t_q; 0 when b = 0
    capped: bool          # sup reached t_max with strict inequality


def b_function(p: ExponentField, cube: Cube, r: float, C: float,
               scan_points: int = 4000, tol: float = DEFAULT_TOL) -> BValue:
    """The cube function b(Q) built from reverse-Holder constants (r, C).

    t_Q is the largest t in (0, t_max] with
        |Q| <t^(r p)>_Q^(1/r) > k int_Q t^p,    k = 2^(1 + p_+/p_-) C,
    where t_max solves int_Q t^p = 1.  The sign of the difference only
    depends on the log-ratio of the two sides, which is scanned on a
    geometric grid and refined by bisection in log t.
    """
    if not r > 1 or not C > 0:
        raise ValueError("need r > 1 and C > 0")
    grid = p.grid
    k = 2 ** (1 + p.p_plus() / p.p_minus()) * C
    pv = p.values[cube.slices()].ravel()
    t_max = 1 / cube_indicator_norm(p, cube, tol)
    log_size = math.log(cube.measure(grid))
    log_h = math.log(grid.cell_measure)

    def log_ratio(log_t):
        lhs = log_size + _log_mean_exp(r * pv * log_t) / r
        rhs = log_h + _log_mean_exp(pv * log_t) + math.log(pv.size)
        return lhs - rhs - math.log(k)

    hi_log = math.log(t_max)
    if log_ratio(hi_log) > 0:
        lhs = math.exp(log_size + _log_mean_exp(r * pv * hi_log) / r)
        return BValue(cube, k, t_max, t_max, lhs, 0.0, True)
    span = 60.0
    grid_t = np.linspace(hi_log - span, hi_log, scan_points)
    vals = _log_ratio_scan(pv, grid_t, r, log_size, log_h, math.log(k))
    pos = np.nonzero(vals > 0)[0]
    if pos.size == 0:
        # below the scan the ratio tends to its small-t limit
        low = pv == pv.min()
        limit = (1 - 1 / r) * math.log(pv.size / low.sum()) - math.log(k)
        if limit <= 0:
            return BValue(cube, k, t_max, None, 0.0, 0.0, False)
        a = hi_log - span
        while log_ratio(a) <= 0:
            a -= span
            if a < hi_log - 50 * span:
                return BValue(cube, k, t_max, None, 0.0, 0.0, False)
        lo_x, hi_x = a, a + span
    else:
        i = pos[-1]
        lo_x, hi_x = grid_t[i], grid_t[i + 1]
    while hi_x - lo_x > 1e-14 * max(1.0, abs(lo_x)):
        mid = 0.5 * (lo_x + hi_x)
        if mid in (lo_x, hi_x):
            break
        if log_ratio(mid) > 0:
            lo_x = mid
        else:
            hi_x = mid
    t_q = math.exp(lo_x)
    lhs = cube.measure(grid) * float(np.mean(t_q ** (r * pv))) ** (1 / r)
    rhs = k * float(np.sum(t_q ** pv)) * grid.cell_measure
    return BValue(cube, k, t_max, t_q, lhs, abs(lhs - rhs) / lhs, False)


@dataclass(frozen=True)
class Lemma34Check:
    lhs: float
    rhs: float
    p_lambda: float
    window: tuple[float, float]

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs


def lemma34_window(p: ExponentField, cube: Cube, eps: float,
                   tol: float = DEFAULT_TOL) -> tuple[float, float]:
    w = 1 / cube_indicator_norm(p, cube, tol) ** (1 + eps)
    return min(1.0, w), max(1.0, w)


def lemma34_check(p: ExponentField, cube: Cube, gamma: float, eps: float, C: float,
                  t: float, lam: float = 0.5, tol: float = DEFAULT_TOL) -> Lemma34Check:
    """<t^(gamma p)>_Q^(1/gamma) against C <t^p>_Q, for t in the admissible
    window; also reports p_lambda, the rearrangement of p on Q at lam |Q|."""
    lo, hi = lemma34_window(p, cube, eps, tol)
    slack = 1e-12
    if not lo * (1 - slack) <= t <= hi * (1 + slack):
        raise ValueError(f"t = {t} outside window [{lo}, {hi}]")
    pv = p.values[cube.slices()].ravel()
    lhs = float(np.mean(t ** (gamma * pv))) ** (1 / gamma)
    rhs = C * float(np.mean(t ** pv))
    k = order_index(pv.size, lam)
    p_lam = float(np.sort(pv)[::-1][k])
    return Lemma34Check(lhs, rhs, p_lam, (lo, hi))


@dataclass(frozen=True)
class Theorem31Check:
    lhs: float
    rhs: float
    t: float
    fill: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs


def theorem31_verify(p: ExponentField, cube: Cube, subset: CellMask, t: float,
                     chain: ConstantChain31, b_of_q: float,
                     tol: float = DEFAULT_TOL) -> Theorem31Check:
    """int_Q t^p against 2 (int_E t^p + t^delta b(Q) chi_(0,1)(t)).

    Reports; a violation only says the supplied constants do not work here.
    """
    _same_grid(p.grid, subset.grid)
    if not subset.is_subset_of(CellMask.of_cube(p.grid, cube)):
        raise ValueError("E must lie inside Q")
    n = cube.n_cells()
    fill = subset.count() / n
    if subset.count() < chain.eta * n:
        raise ValueError(f"|E|/|Q| = {fill} below eta = {chain.eta}")
    t_cap = 1 / cube_indicator_norm(p, cube, tol)
    if not 0 < t <= t_cap * (1 + 1e-12):
        raise ValueError(f"t = {t} outside (0, {t_cap}]")
    h = p.grid.cell_measure
    lhs = float(np.sum(t ** p.values[cube.slices()])) * h
    on_e = float(np.sum(t ** p.values[subset.bits])) * h
    extra = t ** chain.delta * b_of_q if t < 1 else 0.0
    return Theorem31Check(lhs, 2 * (on_e + extra), t, fill)
