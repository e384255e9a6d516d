"""Invariant suites across all modules.

Each suite draws seeded random instances, checks one family of invariants
and returns how many instances passed.  Random data takes dyadic values
(integers over 8) so that sums are exact and fast/brute comparisons can be
made with ``==``.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .conditions import b_function, chain31, chain45
from .conditions.search import random_family_cubes
from .decomp import besicovitch_extract, build_cz_levels, cz_decompose, union_mask
from .grid import CellMask, Cube, Grid, all_cubes, core_offsets
from .maximal import (WeightedFamily, averaging_operator, dyadic_maximal_on_cube,
                      hl_maximal, median_maximal, shift_domination_check,
                      shifted_median_maximal)
from .modular import (ExponentField, GridFunction, check_modular_norm_sandwich,
                      luxemburg_norm)
from .oracles import (brute_dyadic_maximal, brute_hl_maximal, brute_median_maximal,
                      brute_shifted_median_maximal)

LEVELS = {
    # instances per suite at each level
    "quick": {"norm": 200, "sandwich": 200, "level_set": 40, "dominations": 40, "pes": 20,
              "cz": 20, "cover": 30, "brute": 10, "b_zero": 1},
    "full": {"norm": 1000, "sandwich": 1000, "level_set": 200, "dominations": 200, "pes": 100,
             "cz": 100, "cover": 100, "brute": 50, "b_zero": 2},
}
DEFAULT_LAMBDAS = (0.25, 0.5, 0.75)


# -- random instances --------------------------------------------------------

def random_grid(rng: np.random.Generator, max_cells: int = 64, dims=(1, 2)) -> Grid:
    dim = int(rng.choice(dims))
    if dim == 1:
        return Grid.line(int(rng.integers(1, max_cells + 1)))
    side = int(math.isqrt(max_cells))
    return Grid(2, (int(rng.integers(1, side + 1)), int(rng.integers(1, side + 1))))


def dyadic_values(rng: np.random.Generator, grid: Grid, high: int = 64,
                  signed: bool = False, zero_frac: float = 0.3) -> np.ndarray:
    """Values k/8 with few distinct levels, a share of zeros, optional signs."""
    levels = int(rng.integers(1, 9))
    pool = rng.integers(1, high + 1, levels) / 8.0
    v = rng.choice(pool, size=grid.shape)
    v[rng.random(grid.shape) < zero_frac] = 0.0
    if signed:
        v *= rng.choice([-1.0, 1.0], size=grid.shape)
    return v


def random_exponent(rng: np.random.Generator, grid: Grid, p_max: float = 8.0) -> ExponentField:
    kind = int(rng.integers(3))
    if kind == 0:
        return ExponentField.constant(grid, float(rng.uniform(1, p_max)))
    if kind == 1:
        lo, hi = sorted(rng.uniform(1, p_max, 2))
        return ExponentField(grid, np.where(rng.random(grid.shape) < 0.5, lo, hi))
    return ExponentField(grid, rng.uniform(1, p_max, grid.shape))


def random_family(rng: np.random.Generator, grid: Grid) -> list[Cube]:
    return random_family_cubes(rng, grid)


def random_marked_cubes(rng: np.random.Generator, grid: Grid, count: int, r: float):
    """(cell, cube) pairs with each cell inside the r-core of its cube."""
    out = []
    while len(out) < count:
        s = int(rng.integers(1, min(grid.extent) + 1))
        lo, hi = core_offsets(s, r)
        if lo > hi:
            continue
        q = Cube(tuple(int(rng.integers(0, e - s + 1)) for e in grid.extent), s)
        cell = tuple(a + int(rng.integers(lo, hi + 1)) for a in q.anchor)
        out.append((cell, q))
    return out


# -- results -----------------------------------------------------------------

@dataclass
class SuiteResult:
    name: str
    passed: int = 0
    total: int = 0
    lam: float | None = None
    failures: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return self.passed == self.total

    def record(self, ok: bool, detail) -> None:
        self.total += 1
        if ok:
            self.passed += 1
        elif len(self.failures) < 5:
            self.failures.append(detail)

    def line(self) -> str:
        tag = f"[lambda={self.lam:g}]" if self.lam is not None else ""
        status = "PASS" if self.ok else "FAIL"
        return f"{status} {self.name}{tag}: {self.passed}/{self.total} ({self.seconds:.2f}s)"


@dataclass
class VerifySummary:
    level: str
    results: list

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.results)

    def to_dict(self) -> dict:
        return {"level": self.level, "ok": self.ok, "suites": [
            {"name": r.name, "lambda": r.lam, "passed": r.passed, "total": r.total,
             "failures": [str(f) for f in r.failures]} for r in self.results]}


# -- suites --------------------------------------------------------------------

def suite_norm_constant(rng, n: int) -> SuiteResult:
    """Constant exponent q: the norm is the classical q-norm."""
    res = SuiteResult("norm-constant-exponent")
    for i in range(n):
        grid = random_grid(rng, 64, dims=(1,))
        q = [1.0, 1.5, 2.0, 4.0][i % 4]
        a = rng.normal(size=grid.shape) * np.exp(rng.uniform(-5, 5))
        got = luxemburg_norm(GridFunction(grid, a), ExponentField.constant(grid, q))
        want = float(np.sum(np.abs(a) ** q) * grid.cell_measure) ** (1 / q)
        res.record(abs(got - want) <= 1e-10 * want, (grid.extent, q, got, want))
    return res


def suite_sandwich(rng, n: int) -> SuiteResult:
    """Modular/norm sandwich on both sides of norm 1."""
    res = SuiteResult("modular-norm-sandwich")
    for i in range(n):
        grid = random_grid(rng, 64)
        p = random_exponent(rng, grid)
        region = CellMask(grid, rng.random(grid.shape) < rng.uniform(0.3, 1.0))
        f = GridFunction(grid, rng.normal(size=grid.shape))
        nrm = luxemburg_norm(f, p, region)
        if nrm == 0:
            res.record(True, None)
            continue
        # alternate between norm above and below 1
        target = rng.uniform(0.05, 3.0) * (1 if i % 2 else -1)
        f = f.scaled(math.exp(target) / nrm)
        rep = check_modular_norm_sandwich(f, p, region, slack=1e-9)
        res.record(rep.holds, rep)
    return res


def suite_level_set(rng, n: int, lam: float) -> SuiteResult:
    """{m_lam f > alpha} equals {M chi_{|f| > alpha} > lam} for every alpha."""
    res = SuiteResult("level-set-identity", lam=lam)
    for _ in range(n):
        grid = random_grid(rng, 64)
        v = dyadic_values(rng, grid, signed=True)
        f = GridFunction(grid, v)
        med = median_maximal(f, lam).values
        ok = True
        for alpha in np.unique(np.concatenate([[0.0], np.abs(v).ravel()])):
            chi = GridFunction(grid, (np.abs(v) > alpha).astype(float))
            rhs = hl_maximal(chi).values > lam
            if not np.array_equal(med > alpha, rhs):
                ok = False
                res.record(False, (grid.extent, float(alpha)))
                break
        if ok:
            res.record(True, None)
    return res


def suite_dominations(rng, n: int, lam: float) -> SuiteResult:
    """m_lam f <= Mf / lam, |T f| <= Mf and the two step-function bounds."""
    res = SuiteResult("pointwise-dominations", lam=lam)
    for _ in range(n):
        grid = random_grid(rng, 64)
        f = GridFunction(grid, dyadic_values(rng, grid, signed=True))
        mf = hl_maximal(f).values
        ok = bool(np.all(median_maximal(f, lam).values <= mf / lam))
        cubes = random_family(rng, grid)
        ok &= bool(np.all(np.abs(averaging_operator(f, cubes).values) <= mf))
        weights = rng.integers(1, 65, len(cubes)) / 8.0
        subsets = []
        for q in cubes:
            need = math.ceil(lam * q.n_cells())
            k = int(rng.integers(need, q.n_cells() + 1))
            cells = _cube_cells(q)
            pick = rng.permutation(len(cells))[:k]
            subsets.append(CellMask.of_cells(grid, [cells[j] for j in pick]))
        fam = WeightedFamily.of_cubes(grid, cubes, weights).with_subsets(subsets)
        step = fam.step_function().values
        sub = fam.subset_step_function()
        ok &= bool(np.all(step <= averaging_operator(sub, fam).values / lam))
        t = float(rng.uniform(0.01, lam))
        if t < lam:
            ok &= bool(np.all(step <= median_maximal(sub, t).values))
        res.record(ok, (grid.extent, [c.to_dict() for c in cubes]))
    return res


def _cube_cells(q: Cube):
    return list(itertools.product(*(range(a, a + q.side) for a in q.anchor)))


def suite_pes(rng, n: int) -> SuiteResult:
    """m_t f <= m_{t / 2^dim, 1/2} f wherever the doubled cube fits."""
    res = SuiteResult("shift-domination")
    for _ in range(n):
        grid = random_grid(rng, 64)
        f = GridFunction(grid, dyadic_values(rng, grid))
        t = float(rng.choice([0.125, 0.25, 0.5, 0.75, rng.uniform(0.01, 0.99)]))
        chk = shift_domination_check(f, t)
        res.record(chk.holds, (grid.extent, t))
    return res


def suite_cz(rng, n: int, lam: float) -> SuiteResult:
    """CZ union equals the dyadic superlevel set; every level fills >= lam."""
    res = SuiteResult("cz-decomposition", lam=lam)
    for _ in range(n):
        dim = int(rng.integers(1, 3))
        side = 1 << int(rng.integers(0, 6 if dim == 1 else 4))
        extra = int(rng.integers(0, 4))
        grid = Grid(dim, (side + extra,) * dim)
        q = Cube(tuple(int(rng.integers(0, extra + 1)) for _ in range(dim)), side)
        v = GridFunction(grid, dyadic_values(rng, grid))
        ok = True
        md = dyadic_maximal_on_cube(v, q).values
        ok &= bool(np.array_equal(md, brute_dyadic_maximal(grid, v.values, q)))
        qmask = CellMask.of_cube(grid, q).bits
        for alpha in np.unique(np.concatenate([[0.0], v.values[q.slices()].ravel()])):
            cubes = cz_decompose(v, q, float(alpha))
            ok &= bool(np.array_equal(union_mask(grid, cubes).bits, (md > alpha) & qmask))
        if v.average(q) > 0:
            levels = build_cz_levels(v, q, lam, range(0, 6))
            ok &= not levels.violations()
        res.record(ok, (grid.extent, q.to_dict()))
    return res


def suite_cover(rng, n: int) -> SuiteResult:
    """Coverage, disjoint subfamilies and order independence."""
    res = SuiteResult("besicovitch-extraction")
    for _ in range(n):
        grid = random_grid(rng, 64)
        r = float(rng.choice([0.25, 0.5, 0.75]))
        pts = random_marked_cubes(rng, grid, int(rng.integers(1, 21)), r)
        ext = besicovitch_extract(grid, pts, r)
        shuffled = [pts[i] for i in rng.permutation(len(pts))]
        again = besicovitch_extract(grid, shuffled, r)
        ok = (not ext.uncovered_points() and not ext.overlapping_pairs()
              and ext.selected == again.selected and ext.subfamilies == again.subfamilies)
        res.record(ok, (grid.extent, r, len(pts)))
    return res


def suite_brute(rng, n: int) -> SuiteResult:
    """Fast maximal operators equal their brute-force references."""
    res = SuiteResult("maximal-vs-brute-force")
    for _ in range(n):
        grid = random_grid(rng, 36)
        v = dyadic_values(rng, grid, signed=True)
        f = GridFunction(grid, v)
        lam = float(rng.choice([0.25, 0.5, 0.75, rng.uniform(0.01, 0.99)]))
        r = float(rng.choice([0.25, 0.5, 0.75]))
        ok = bool(np.array_equal(hl_maximal(f).values, brute_hl_maximal(grid, v)))
        ok &= bool(np.array_equal(median_maximal(f, lam).values,
                                  brute_median_maximal(grid, v, lam)))
        ok &= bool(np.array_equal(shifted_median_maximal(f, lam, r).values,
                                  brute_shifted_median_maximal(grid, v, lam, r)))
        res.record(ok, (grid.extent, lam, r))
    return res


def suite_chains() -> SuiteResult:
    res = SuiteResult("constant-chains")
    c = chain31(2, 1, 2, 2, 1.5)
    ok = (c.k, c.eps, c.A, c.delta) == (4, 1 / 3, 16.0, 0.5)
    ok &= abs(c.A * (1 - c.eta) ** (1 / c.gamma_dual) - 0.5) <= 1e-12
    res.record(ok, c)
    d = chain45(0.5, 0.5, 1, 1, 1, 2, 2)
    ok = (d.nu, d.t, d.r, d.gamma) == (0.5, 0.75, 13 / 14, 0.5) and d.margin > 0
    res.record(ok, d)
    return res


def suite_b_zero(rng, n: int) -> SuiteResult:
    """b vanishes on every cube for a constant exponent."""
    res = SuiteResult("b-function-constant-exponent")
    for _ in range(n):
        grid = Grid.line(64) if rng.random() < 0.5 else Grid.square(8)
        p = ExponentField.constant(grid, float(rng.uniform(1, 6)))
        r, C = float(rng.uniform(1.1, 4)), float(rng.uniform(0.5, 3))
        ok = all(b_function(p, q, r, C, scan_points=200).b == 0 for q in all_cubes(grid))
        res.record(ok, (grid.extent, r, C))
    return res


def verify_suite(level: str = "quick", lambdas=DEFAULT_LAMBDAS, seed: int = 0,
                 log=print) -> VerifySummary:
    """Run every invariant suite; failures are reported, never raised."""
    if level not in LEVELS:
        raise ValueError(f"level must be one of {sorted(LEVELS)}")
    sizes = LEVELS[level]
    rng = np.random.default_rng(seed)
    jobs = [
        lambda: suite_norm_constant(rng, sizes["norm"]),
        lambda: suite_sandwich(rng, sizes["sandwich"]),
    ]
    for lam in lambdas:
        jobs += [
            lambda lam=lam: suite_level_set(rng, sizes["level_set"], lam),
            lambda lam=lam: suite_dominations(rng, sizes["dominations"], lam),
            lambda lam=lam: suite_cz(rng, sizes["cz"], lam),
        ]
    jobs += [
        lambda: suite_pes(rng, sizes["pes"]),
        lambda: suite_cover(rng, sizes["cover"]),
        lambda: suite_brute(rng, sizes["brute"]),
        suite_chains,
        lambda: suite_b_zero(rng, sizes["b_zero"]),
    ]
    results = []
    for job in jobs:
        start = time.perf_counter()
        try:
            r = job()
        except Exception as exc:  # a crashing suite counts as a failure
            r = SuiteResult(getattr(job, "__name__", "suite"))
            r.record(False, repr(exc))
        r.seconds = time.perf_counter() - start
        results.append(r)
        if log:
            log(r.line())
    summary = VerifySummary(level, results)
    if log:
        log(f"{'ALL PASS' if summary.ok else 'FAILURES'}: "
            f"{sum(r.ok for r in results)}/{len(results)} suites")
    return summary
