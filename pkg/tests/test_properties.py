"""Property tests over generated grids, functions and exponents."""

import math

import numpy as np
from hypothesis import assume, given
from hypothesis import strategies as st

from varlp.conditions import ainfty_ratio, chain31, chain45, required_count
from varlp.decomp import cz_decompose, union_mask
from varlp.grid import CellMask, Cube, Grid, all_cubes, core_cells
from varlp.maximal import (WeightedFamily, averaging_operator, dyadic_maximal_on_cube,
                           hl_maximal, median_maximal, shift_domination_check,
                           shifted_median_maximal)
from varlp.modular import (ExponentField, GridFunction, check_modular_norm_sandwich,
                           luxemburg_norm, modular)
from varlp.oracles import brute_median_maximal, brute_norm, brute_shifted_median_maximal


@st.composite
def grids(draw, max_side_1d=40, max_side_2d=6):
    if draw(st.booleans()):
        return Grid.line(draw(st.integers(1, max_side_1d)))
    return Grid(2, (draw(st.integers(1, max_side_2d)), draw(st.integers(1, max_side_2d))))


@st.composite
def dyadic_functions(draw, grid=None, signed=True):
    grid = grid or draw(grids())
    lo = -64 if signed else 0
    ints = draw(st.lists(st.integers(lo, 64), min_size=grid.n_cells, max_size=grid.n_cells))
    return GridFunction(grid, np.array(ints, float).reshape(grid.shape) / 8)


@st.composite
def exponents(draw, grid, p_max=8.0):
    vals = draw(st.lists(st.floats(1.0, p_max), min_size=grid.n_cells, max_size=grid.n_cells))
    return ExponentField(grid, np.array(vals).reshape(grid.shape))


fractions = st.sampled_from([0.1, 0.2, 0.25, 0.3, 1 / 3, 0.5, 0.6, 0.7, 0.75, 0.9])


@given(st.data())
def test_norm_matches_bisection(data):
    grid = data.draw(grids())
    f = data.draw(dyadic_functions(grid))
    p = data.draw(exponents(grid))
    got = luxemburg_norm(f, p)
    want = brute_norm(f.values, p.values)
    assert math.isclose(got, want, rel_tol=1e-11, abs_tol=0)


@given(st.data(), st.floats(1e-3, 1e3))
def test_norm_homogeneous_and_triangle(data, c):
    grid = data.draw(grids())
    f = data.draw(dyadic_functions(grid))
    g = data.draw(dyadic_functions(grid))
    p = data.draw(exponents(grid))
    nf = luxemburg_norm(f, p)
    assert math.isclose(luxemburg_norm(f.scaled(c), p), c * nf, rel_tol=1e-11, abs_tol=1e-300)
    s = GridFunction(grid, f.values + g.values)
    assert luxemburg_norm(s, p) <= (nf + luxemburg_norm(g, p)) * (1 + 1e-11)


@given(st.data())
def test_norm_unit_ball_is_modular_ball(data):
    grid = data.draw(grids())
    f = data.draw(dyadic_functions(grid))
    p = data.draw(exponents(grid))
    n = luxemburg_norm(f, p)
    assume(n > 0)
    assert math.isclose(modular(f.scaled(1 / n), p), 1.0, rel_tol=1e-9)


@given(st.data(), st.floats(-6, 6))
def test_sandwich(data, log_scale):
    grid = data.draw(grids())
    f = data.draw(dyadic_functions(grid))
    p = data.draw(exponents(grid))
    assume(np.any(f.values != 0))
    rep = check_modular_norm_sandwich(f.scaled(math.exp(log_scale)), p, slack=1e-9)
    assert rep.holds


@given(st.data(), fractions)
def test_level_set_identity(data, lam):
    f = data.draw(dyadic_functions())
    med = median_maximal(f, lam).values
    for alpha in np.unique(np.abs(f.values)):
        chi = GridFunction(f.grid, (np.abs(f.values) > alpha).astype(float))
        assert np.array_equal(med > alpha, hl_maximal(chi).values > lam)


@given(st.data(), fractions)
def test_maximal_orderings(data, lam):
    f = data.draw(dyadic_functions())
    mf = hl_maximal(f).values
    med = median_maximal(f, lam).values
    assert np.all(mf >= np.abs(f.values))
    assert np.all(med <= mf / lam)
    # m_lam decreases as lam grows
    assert np.all(median_maximal(f, min(lam + 0.05, 0.99)).values <= med)


@given(st.data(), fractions, st.sampled_from([0.25, 0.5, 0.75, 0.3]))
def test_median_operators_match_brute_force(data, lam, r):
    f = data.draw(dyadic_functions(data.draw(grids(24, 5))))
    assert np.array_equal(median_maximal(f, lam).values,
                          brute_median_maximal(f.grid, f.values, lam))
    assert np.array_equal(shifted_median_maximal(f, lam, r).values,
                          brute_shifted_median_maximal(f.grid, f.values, lam, r))


@given(st.data(), fractions)
def test_shift_domination(data, t):
    f = data.draw(dyadic_functions())
    assert shift_domination_check(f, t).holds


@given(st.data())
def test_averaging_below_maximal(data):
    grid = data.draw(grids())
    f = data.draw(dyadic_functions(grid))
    cubes = []
    for q in data.draw(st.permutations(list(all_cubes(grid)))[:6]) if False else []:
        pass
    rng = np.random.default_rng(data.draw(st.integers(0, 2 ** 32 - 1)))
    from varlp.verify import random_family
    cubes = random_family(rng, grid)
    assert np.all(np.abs(averaging_operator(f, cubes).values) <= hl_maximal(f).values)


@given(st.data(), st.integers(0, 5))
def test_cz_union_is_dyadic_superlevel(data, log_side):
    dim = data.draw(st.sampled_from([1, 2]))
    side = 2 ** (log_side if dim == 1 else min(log_side, 3))
    grid = Grid(dim, (side,) * dim)
    v = data.draw(dyadic_functions(grid, signed=False))
    q = Cube((0,) * dim, side)
    alpha = data.draw(st.sampled_from(sorted(set(v.values.ravel().tolist()) | {0.0})))
    cubes = cz_decompose(v, q, alpha)
    assert np.array_equal(union_mask(grid, cubes).bits,
                          dyadic_maximal_on_cube(v, q).values > alpha)


@given(st.integers(1, 30), st.floats(0.01, 0.99))
def test_core_inside_cube(side, r):
    grid = Grid.line(side)
    q = Cube(0, side)
    core = core_cells(grid, q, r)
    assert core.is_subset_of(CellMask.of_cube(grid, q))
    if side % 2 == 1:
        assert core.bits[side // 2]


@given(st.floats(1.01, 6), st.floats(0.1, 10), st.floats(1, 5), st.floats(0, 4), st.data())
def test_chain31_residuals(r, C, p_minus, spread, data):
    gamma = data.draw(st.floats(1 + (r - 1) * 0.05, 1 + (r - 1) * 0.95))
    c = chain31(r, C, p_minus, p_minus + spread, gamma)
    assert max(c.residuals().values()) < 1e-9
    assert 0 < c.eps and c.A > 0


@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.integers(1, 2), st.integers(1, 10),
       st.floats(1, 4), st.floats(1, 4), st.floats(0, 2))
def test_chain45_margin(lam, eta, n, N, C, p_minus, spread):
    c = chain45(lam, eta, n, N, C, p_minus, p_minus + spread)
    assert c.nu < c.t * c.r ** n - (1 - c.r ** n)
    assert 0 < c.gamma < 1
    assert max(c.residuals().values()) < 1e-9


@given(st.data(), st.sampled_from([1.0, 1.5, 2.0, 4.0]), fractions)
def test_ainfty_constant_exponent_bound(data, q_exp, lam):
    grid = data.draw(grids())
    p = ExponentField.constant(grid, q_exp)
    rng = np.random.default_rng(data.draw(st.integers(0, 2 ** 32 - 1)))
    from varlp.verify import random_family
    cubes = random_family(rng, grid)
    weights = np.exp(rng.uniform(-4, 4, len(cubes)))
    subsets = []
    for q in cubes:
        m = required_count(lam, q.n_cells())
        k = int(rng.integers(m, q.n_cells() + 1))
        local = np.zeros(q.n_cells(), bool)
        local[rng.permutation(q.n_cells())[:k]] = True
        bits = np.zeros(grid.shape, bool)
        bits[q.slices()] = local.reshape((q.side,) * grid.dim)
        subsets.append(CellMask(grid, bits))
    fam = WeightedFamily.of_cubes(grid, cubes, weights).with_subsets(subsets)
    assert ainfty_ratio(p, lam, fam) <= lam ** (-1 / q_exp) * (1 + 1e-9)
