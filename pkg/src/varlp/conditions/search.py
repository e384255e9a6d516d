"""Seeded adversarial searches for lower bounds on condition constants.

Every search consumes a deterministic stream of candidates and keeps a
running maximum, so a larger budget with the same seed only extends the
stream.  Even-numbered slots go to a structured sweep (single cubes in
order of increasing side) until it runs out; the rest are random.  Ties
keep the earliest candidate.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from ..grid import CellMask, Cube, Grid, all_cubes
from ..maximal import (FamilyMember, WeightedFamily, averaging_operator, hl_maximal,
                       median_maximal, shifted_median_maximal)
from ..modular import DEFAULT_TOL, ExponentField, GridFunction, luxemburg_norm, norm_of_values
from .ratios import (ainfty_ratio, apvar_ratio, cube_indicator_norm, required_count,
                     rh_functional)


@dataclass
class ConditionReport:
    name: str
    params: dict
    best_ratio: float
    witness: dict | None
    evaluations: int
    wall_time_s: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ConditionReport":
        return cls(**d)


class _Best:
    def __init__(self):
        self.value = -math.inf
        self.witness = None
        self.evaluations = 0
        self.payload = None

    def offer(self, value: float, witness_fn, payload=None) -> None:
        self.evaluations += 1
        if value > self.value:
            self.value = value
            self.witness = witness_fn()
            self.payload = payload


def _interleave(structured, random_fn, budget: int):
    """Yield ``budget`` candidates: structured ones on even slots while they
    last, random ones otherwise."""
    it = iter(structured)
    exhausted = False
    for i in range(budget):
        if not exhausted and i % 2 == 0:
            try:
                yield next(it)
                continue
            except StopIteration:
                exhausted = True
        yield random_fn()


# -- random cube families ----------------------------------------------------

def random_cube(rng: np.random.Generator, grid: Grid) -> Cube:
    s = int(rng.integers(1, min(grid.extent) + 1))
    return Cube(tuple(int(rng.integers(0, e - s + 1)) for e in grid.extent), s)


def random_scattered_cubes(rng: np.random.Generator, grid: Grid) -> list[Cube]:
    target = int(rng.integers(1, 7))
    out: list[Cube] = []
    for _ in range(4 * target):
        q = random_cube(rng, grid)
        if not any(q.intersects(o) for o in out):
            out.append(q)
        if len(out) == target:
            break
    return out


def random_dyadic_cubes(rng: np.random.Generator, grid: Grid) -> list[Cube]:
    side = 1 << (min(grid.extent).bit_length() - 1)
    root = Cube(tuple(int(rng.integers(0, e - side + 1)) for e in grid.extent), side)
    split_p = rng.uniform(0.2, 0.8)
    leaves, stack = [], [root]
    while stack:
        q = stack.pop()
        if q.side > 1 and rng.random() < split_p:
            h = q.side // 2
            offs = [(0,), (1,)] if grid.dim == 1 else [(0, 0), (0, 1), (1, 0), (1, 1)]
            stack.extend(Cube(tuple(a + h * o for a, o in zip(q.anchor, off)), h) for off in offs)
        else:
            leaves.append(q)
    keep_p = rng.uniform(0.2, 1.0)
    kept = [q for q in leaves if rng.random() < keep_p]
    return kept or [leaves[int(rng.integers(len(leaves)))]]


def random_family_cubes(rng: np.random.Generator, grid: Grid) -> list[Cube]:
    kind = int(rng.integers(3))
    if kind == 0:
        return [random_cube(rng, grid)]
    if kind == 1:
        return random_dyadic_cubes(rng, grid)
    return random_scattered_cubes(rng, grid)


def random_weights(rng: np.random.Generator, p: ExponentField, cubes, cache) -> list[float]:
    mode = int(rng.integers(3))
    if mode == 0:
        return [1 / _chi_norm(p, q, cache) for q in cubes]
    if mode == 1:
        return list(np.exp(rng.uniform(math.log(1e-3), math.log(1e3), len(cubes))))
    c = math.exp(rng.uniform(math.log(1e-2), math.log(1e2)))
    return [c / _chi_norm(p, q, cache) for q in cubes]


def _chi_norm(p: ExponentField, q: Cube, cache: dict) -> float:
    if q not in cache:
        cache[q] = cube_indicator_norm(p, q)
    return cache[q]


STRUCTURED_SCALES = (1e-2, 1e-1, 1.0, 1e1, 1e2)


def _structured_weights(p: ExponentField, q: Cube, cache) -> list[float]:
    return [1 / _chi_norm(p, q, cache)] + list(STRUCTURED_SCALES)


# -- A-infinity ----------------------------------------------------------------

def adversarial_subsets(p: ExponentField, lam: float, cubes, weights,
                        rounds: int = 10, tol: float = DEFAULT_TOL):
    """Choose E_Q to (heuristically) minimize ||sum t_Q chi_{E_Q}||.

    With the current denominator norm L, each cube keeps the ceil(lam n)
    cells where (t_Q / L)^p(c) is smallest (ties by row-major cell order),
    then L is recomputed; at most ``rounds`` rounds.  The iteration is run
    from the current numerator norm and from both extreme starts (L -> 0
    and L -> infinity), which covers both orderings of p within a cube.
    Returns (best ratio, subsets).
    """
    grid = p.grid
    h = grid.cell_measure
    num_vals, num_p = [], []
    for q, t in zip(cubes, weights):
        pv = p.values[q.slices()].ravel()
        num_vals.append(np.full(pv.size, t))
        num_p.append(pv)
    numerator = norm_of_values(np.concatenate(num_vals), np.concatenate(num_p), h, tol)
    best_ratio, best_idx = -math.inf, None
    seen = {}
    for start in (numerator, math.inf, 0.0):
        lam_hat = start
        prev = None
        for _ in range(rounds):
            chosen = []
            for q, t, pv in zip(cubes, weights, num_p):
                m = required_count(lam, pv.size)
                if lam_hat == math.inf:
                    key = -pv
                elif lam_hat == 0:
                    key = pv
                else:
                    key = pv * math.log(t / lam_hat)
                chosen.append(np.sort(np.argsort(key, kind="stable")[:m]))
            sig = b"".join(c.tobytes() for c in chosen)
            if sig == prev:
                break
            prev = sig
            if sig not in seen:
                den = norm_of_values(
                    np.concatenate([np.full(c.size, t) for c, t in zip(chosen, weights)]),
                    np.concatenate([pv[c] for c, pv in zip(chosen, num_p)]), h, tol)
                seen[sig] = den
                ratio = numerator / den
                if ratio > best_ratio:
                    best_ratio, best_idx = ratio, chosen
            lam_hat = seen[sig]
    subsets = []
    for q, idx in zip(cubes, best_idx):
        bits = np.zeros(grid.shape, dtype=bool)
        local = np.zeros(q.n_cells(), dtype=bool)
        local[idx] = True
        bits[q.slices()] = local.reshape((q.side,) * grid.dim)
        subsets.append(CellMask(grid, bits))
    return best_ratio, subsets


def ainfty_search(p: ExponentField, lam: float, budget: int = 1000, seed: int = 0,
                  tol: float = DEFAULT_TOL) -> ConditionReport:
    """Lower bound for the best constant in the A-infinity inequality at ``lam``."""
    if not 0 < lam < 1:
        raise ValueError("lambda must lie in (0, 1)")
    if budget < 1:
        raise ValueError("budget must be >= 1")
    start = time.perf_counter()
    grid = p.grid
    rng = np.random.default_rng(seed)
    cache: dict = {}

    def structured():
        for q in all_cubes(grid):
            for t in _structured_weights(p, q, cache):
                yield [q], [t]

    def rand():
        cubes = random_family_cubes(rng, grid)
        return cubes, random_weights(rng, p, cubes, cache)

    best = _Best()
    for cubes, weights in _interleave(structured(), rand, budget):
        ratio, subsets = adversarial_subsets(p, lam, cubes, weights, tol=tol)
        best.offer(ratio, lambda: WeightedFamily(grid, tuple(
            FamilyMember(q, float(t), e) for q, t, e in zip(cubes, weights, subsets))).to_dict())
    return ConditionReport("ainfty", {"lambda": lam, "budget": budget, "seed": seed},
                           best.value, best.witness, best.evaluations,
                           time.perf_counter() - start)


# -- A_p(.) --------------------------------------------------------------------

def _level_masks(pv: np.ndarray):
    seen = set()
    for s in np.unique(pv):
        for m in (pv <= s, pv >= s):
            key = m.tobytes()
            if m.any() and key not in seen:
                seen.add(key)
                yield m


def apvar_search(p: ExponentField, budget: int = 1000, seed: int = 0,
                 tol: float = DEFAULT_TOL) -> ConditionReport:
    """Lower bound for the A_p(.) constant: sup over cubes Q and f of
    <|f|>_Q ||chi_Q|| / ||f chi_Q||."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    start = time.perf_counter()
    grid = p.grid
    rng = np.random.default_rng(seed)
    state = {"n_random": 0}
    best = _Best()

    def structured():
        for q in all_cubes(grid):
            pv = p.values[q.slices()]
            for m in _level_masks(pv):
                yield q, m.astype(float)

    def rand():
        state["n_random"] += 1
        if best.payload is not None and state["n_random"] % 4 == 0:
            q, vals = best.payload
            vals = vals.copy()
            idx = tuple(int(rng.integers(s)) for s in vals.shape)
            if rng.random() < 0.3:
                vals[idx] = 0.0
            else:
                vals[idx] = vals[idx] * math.exp(rng.normal()) if vals[idx] > 0 else rng.random()
            if not np.any(vals > 0):
                vals[idx] = 1.0
            return q, vals
        q = random_cube(rng, grid)
        pv = p.values[q.slices()]
        kind = int(rng.integers(3))
        if kind == 0:
            vals = (rng.random(pv.shape) < rng.uniform(0.05, 1.0)).astype(float)
            if not vals.any():
                vals.flat[int(rng.integers(vals.size))] = 1.0
        elif kind == 1:
            mu = rng.uniform(-4.0, 4.0)
            with np.errstate(divide="ignore"):
                expo = np.where(pv > 1, 1.0 / np.maximum(pv - 1, 1e-300), np.inf)
            vals = np.exp(np.clip(mu * expo, -50, 50))
        else:
            qexp = rng.uniform(0.5, 4.0)
            vals = cube_indicator_norm(p, q) ** (-pv / qexp)
        return q, vals

    for q, vals in _interleave(structured(), rand, budget):
        f = np.zeros(grid.shape)
        f[q.slices()] = vals
        ratio = apvar_ratio(p, q, GridFunction(grid, f), tol)
        best.offer(ratio, lambda: {"cube": q.to_dict(), "values": vals.ravel().tolist()},
                   payload=(q, vals))
    return ConditionReport("apvar", {"budget": budget, "seed": seed}, best.value,
                           best.witness, best.evaluations, time.perf_counter() - start)


# -- reverse Holder ------------------------------------------------------------

def rh_search(p: ExponentField, r: float, budget: int = 1000, seed: int = 0,
              tol: float = DEFAULT_TOL) -> ConditionReport:
    """Largest output sum found over families normalized to input sum <= 1;
    a lower bound on the reverse-Holder constant C at exponent r."""
    if not r > 1:
        raise ValueError("r must exceed 1")
    start = time.perf_counter()
    grid = p.grid
    rng = np.random.default_rng(seed)
    cache: dict = {}

    def structured():
        for q in all_cubes(grid):
            yield [q], [1.0]

    def rand():
        cubes = random_family_cubes(rng, grid)
        return cubes, random_weights(rng, p, cubes, cache)

    best = _Best()
    for cubes, weights in _interleave(structured(), rand, budget):
        fam = WeightedFamily.of_cubes(grid, cubes, weights)
        c = 1 / luxemburg_norm(fam.step_function(), p, tol=tol)
        fam = fam.with_weights([c * w for w in weights])
        inp, out = rh_functional(p, r, fam)
        while inp > 1:
            fam = fam.with_weights([m.weight * (1 - 1e-13) for m in fam.members])
            inp, out = rh_functional(p, r, fam)
        best.offer(out, fam.to_dict)
    return ConditionReport("rh", {"r": r, "budget": budget, "seed": seed}, best.value,
                           best.witness, best.evaluations, time.perf_counter() - start)


# -- operator norms ----------------------------------------------------------------

OPERATORS = ("M", "m_lambda", "m_tau_r", "T_F")


def _apply(op: str, f: GridFunction, lam, tau, r, family=None) -> GridFunction:
    if op == "M":
        return hl_maximal(f)
    if op == "m_lambda":
        return median_maximal(f, lam)
    if op == "m_tau_r":
        return shifted_median_maximal(f, tau, r)
    if op == "T_F":
        return averaging_operator(f, family)
    raise ValueError(f"unknown operator {op!r}; choose from {OPERATORS}")


def operator_norm_estimate(op: str, p: ExponentField, budget: int = 1000, seed: int = 0,
                           lam: float = 0.5, tau: float = 0.5, r: float = 0.5,
                           families=("indicators", "steps", "witnesses", "ascent"),
                           tol: float = DEFAULT_TOL) -> ConditionReport:
    """Lower bound on the norm of ``op`` on L^p(.) of the grid.

    For T_F every candidate also draws a random disjoint family, so the
    bound is uniform over families.  With at most 20 cells all indicator
    functions are swept; otherwise indicators of all cubes.
    """
    if op not in OPERATORS:
        raise ValueError(f"unknown operator {op!r}; choose from {OPERATORS}")
    if budget < 1:
        raise ValueError("budget must be >= 1")
    start = time.perf_counter()
    grid = p.grid
    n = grid.n_cells
    rng = np.random.default_rng(seed)
    cache: dict = {}
    best = _Best()
    kinds = [k for k in ("indicators", "steps", "witnesses") if k in families]
    ascent = "ascent" in families

    def structured():
        if "indicators" not in families:
            return
        if n <= 20:
            for bits in range(1, 2 ** n):
                v = np.array([(bits >> i) & 1 for i in range(n)], dtype=float)
                yield v.reshape(grid.shape)
        else:
            for q in all_cubes(grid):
                v = np.zeros(grid.shape)
                v[q.slices()] = 1.0
                yield v

    def rand():
        if ascent and best.payload is not None and rng.random() < 0.25:
            v = best.payload.copy()
            idx = tuple(int(rng.integers(e)) for e in grid.extent)
            v[idx] = v[idx] * math.exp(rng.normal()) if v[idx] > 0 else rng.random()
            return v
        kind = kinds[int(rng.integers(len(kinds)))] if kinds else "indicators"
        if kind == "indicators":
            v = (rng.random(grid.shape) < rng.uniform(0.05, 1.0)).astype(float)
        elif kind == "steps":
            v = np.zeros(grid.shape)
            for q in random_scattered_cubes(rng, grid):
                v[q.slices()] = math.exp(rng.uniform(-3, 3))
        else:
            cubes = random_family_cubes(rng, grid)
            weights = random_weights(rng, p, cubes, cache)
            _, subsets = adversarial_subsets(p, lam, cubes, weights, rounds=3, tol=tol)
            v = np.zeros(grid.shape)
            for t, e in zip(weights, subsets):
                v[e.bits] = t
        if not v.any():
            v.flat[int(rng.integers(v.size))] = 1.0
        return v

    for v in _interleave(structured(), rand, budget):
        f = GridFunction(grid, v)
        family = None
        if op == "T_F":
            family = WeightedFamily.of_cubes(grid, random_family_cubes(rng, grid))
        out = _apply(op, f, lam, tau, r, family)
        ratio = luxemburg_norm(out, p, tol=tol) / luxemburg_norm(f, p, tol=tol)

        def witness():
            w = {"f": v.ravel().tolist()}
            if family is not None:
                w["family"] = family.to_dict()
            return w
        best.offer(ratio, witness, payload=v)
    params = {"operator": op, "budget": budget, "seed": seed, "families": list(families)}
    if op == "m_lambda":
        params["lambda"] = lam
    if op == "m_tau_r":
        params.update(tau=tau, r=r)
    return ConditionReport(f"operator:{op}", params, best.value, best.witness,
                           best.evaluations, time.perf_counter() - start)


# -- replay ----------------------------------------------------------------------

def reevaluate(report: ConditionReport | dict, p: ExponentField) -> float:
    """Recompute a report's ratio from its witness alone."""
    if isinstance(report, dict):
        report = ConditionReport.from_dict(report)
    w, grid = report.witness, p.grid
    if report.name == "ainfty":
        return ainfty_ratio(p, report.params["lambda"], WeightedFamily.from_dict(w))
    if report.name == "apvar":
        q = Cube.from_dict(w["cube"])
        f = np.zeros(grid.shape)
        f[q.slices()] = np.array(w["values"]).reshape((q.side,) * grid.dim)
        return apvar_ratio(p, q, GridFunction(grid, f))
    if report.name == "rh":
        return rh_functional(p, report.params["r"], WeightedFamily.from_dict(w))[1]
    if report.name.startswith("operator:"):
        prm = report.params
        f = GridFunction(grid, np.array(w["f"]).reshape(grid.shape))
        family = WeightedFamily.from_dict(w["family"]) if "family" in w else None
        out = _apply(prm["operator"], f, prm.get("lambda"), prm.get("tau"), prm.get("r"), family)
        return luxemburg_norm(out, p) / luxemburg_norm(f, p)
    raise ValueError(f"no replay rule for {report.name!r}")
