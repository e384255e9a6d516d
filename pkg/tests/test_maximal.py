import warnings

import numpy as np
import pytest

from varlp.grid import CellMask, Cube, Grid
from varlp.maximal import (RearrangementRangeWarning, WeightedFamily, averaging_operator,
                           dyadic_maximal_on_cube, hl_maximal, median_maximal, order_index,
                           rearrangement_value, shift_domination_check,
                           shifted_median_maximal)
from varlp.modular import GridFunction
from varlp.oracles import (brute_dyadic_maximal, brute_hl_maximal, brute_median_maximal,
                           brute_shifted_median_maximal)
from varlp.verify import dyadic_values, random_grid


def line(*vals):
    g = Grid.line(len(vals))
    return GridFunction(g, np.array(vals, float))


def test_order_index_is_exact():
    assert order_index(4, 0.5) == 2
    assert order_index(3, 0.5) == 1
    assert order_index(10, 0.3) == 3   # 0.3 * 10 is 3.0000000000000004 in floats
    assert order_index(7, 0.0) == 0


def test_rearrangement_example():
    assert rearrangement_value(line(3, 1, 2), Cube(0, 3), 1.5) == 2


def test_rearrangement_constant_and_zero():
    f = line(5, 5, 5, 5)
    assert rearrangement_value(f, Cube(0, 4), 2.7) == 5
    assert rearrangement_value(line(1, -7, 2), Cube(0, 3), 0) == 7


def test_rearrangement_beyond_cube_warns():
    with pytest.warns(RearrangementRangeWarning):
        assert rearrangement_value(line(1, 2), Cube(0, 2), 2.0) == 0


def test_rearrangement_uses_cell_measure():
    g = Grid(1, (4,), 0.5)
    f = GridFunction(g, np.array([4.0, 3, 2, 1]))
    # t = 0.75 covers one full cell of measure 0.5
    assert rearrangement_value(f, Cube(0, 4), 0.75) == 3


def test_hl_maximal_example():
    assert hl_maximal(line(0, 4, 0)).values.tolist() == [2, 4, 2]


def test_hl_maximal_constant():
    g = Grid(2, (3, 5))
    assert np.all(hl_maximal(GridFunction.constant(g, -2.5)).values == 2.5)


def test_hl_maximal_indicator():
    g = Grid.line(9)
    mask = CellMask.of_cells(g, [(2,), (6,)])
    m = hl_maximal(GridFunction.indicator(mask)).values
    assert m[2] == m[6] == 1
    assert np.all((m > 0) & (m <= 1))


def test_median_maximal_example():
    assert median_maximal(line(0, 4, 0), 0.5).values.tolist() == [0, 4, 0]


def test_median_maximal_constant():
    g = Grid.square(4)
    assert np.all(median_maximal(GridFunction.constant(g, 3), 0.3).values == 3)


def test_median_maximal_indicator_dichotomy():
    g = Grid.line(12)
    rng = np.random.default_rng(2)
    bits = rng.random(12) < 0.3
    chi = GridFunction(g, bits.astype(float))
    for lam in (0.2, 0.5, 0.8):
        m = median_maximal(chi, lam).values
        assert set(np.unique(m)) <= {0.0, 1.0}
        expected = hl_maximal(chi).values > lam
        assert np.array_equal(m == 1, expected)


def test_median_rejects_bad_lambda():
    with pytest.raises(ValueError):
        median_maximal(line(1, 2), 1.0)


def test_shifted_example():
    assert shifted_median_maximal(line(0, 4, 0), 0.25, 0.5).values.tolist() == [4, 4, 4]


def test_shifted_near_one_matches_median():
    rng = np.random.default_rng(4)
    for _ in range(20):
        g = random_grid(rng, 36)
        f = GridFunction(g, dyadic_values(rng, g))
        # with r close to 1 every cell of a cube of side <= 6 is in its core
        assert np.array_equal(shifted_median_maximal(f, 0.4, 0.99).values,
                              median_maximal(f, 0.4).values)


def test_shifted_constant():
    g = Grid.line(7)
    assert np.all(shifted_median_maximal(GridFunction.constant(g, 2), 0.5, 0.5).values == 2)


@pytest.mark.parametrize("seed", range(15))
def test_fast_operators_equal_brute_force(seed):
    rng = np.random.default_rng(seed)
    g = random_grid(rng, 36)
    v = dyadic_values(rng, g, signed=True)
    f = GridFunction(g, v)
    lam = float(rng.uniform(0.01, 0.99))
    r = float(rng.uniform(0.05, 0.95))
    assert np.array_equal(hl_maximal(f).values, brute_hl_maximal(g, v))
    assert np.array_equal(median_maximal(f, lam).values, brute_median_maximal(g, v, lam))
    assert np.array_equal(shifted_median_maximal(f, lam, r).values,
                          brute_shifted_median_maximal(g, v, lam, r))


def test_generic_floats_agree_to_rounding():
    rng = np.random.default_rng(0)
    g = Grid.square(6)
    v = rng.normal(size=g.shape)
    f = GridFunction(g, v)
    assert np.allclose(hl_maximal(f).values, brute_hl_maximal(g, v), rtol=1e-12, atol=0)


def test_averaging_example():
    g = Grid.line(4)
    f = GridFunction(g, np.array([1.0, 3, 2, 6]))
    assert averaging_operator(f, [Cube(0, 2), Cube(2, 2)]).values.tolist() == [2, 2, 4, 4]


def test_averaging_single_and_empty():
    g = Grid.line(5)
    f = GridFunction(g, np.array([1.0, 2, 3, 4, 5]))
    assert averaging_operator(f, [Cube(0, 5)]).values.tolist() == [3] * 5
    assert averaging_operator(f, []).values.tolist() == [0] * 5


def test_averaging_rejects_overlap():
    f = line(1, 2, 3)
    with pytest.raises(ValueError):
        averaging_operator(f, [Cube(0, 2), Cube(1, 2)])


def test_dyadic_examples():
    f = line(0, 0, 8, 0)
    assert dyadic_maximal_on_cube(f, Cube(0, 4)).values.tolist() == [2, 2, 8, 4]
    g = Grid.line(8)
    c = GridFunction.constant(g, 3)
    assert dyadic_maximal_on_cube(c, Cube(4, 4)).values.tolist() == [0] * 4 + [3] * 4


def test_dyadic_support_off_cube():
    f = line(0, 0, 0, 0, 5, 5)
    assert np.all(dyadic_maximal_on_cube(f, Cube(0, 4)).values == 0)


def test_dyadic_rejects_non_power_of_two():
    with pytest.raises(ValueError):
        dyadic_maximal_on_cube(line(1, 2, 3), Cube(0, 3))


@pytest.mark.parametrize("seed", range(10))
def test_dyadic_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    dim = 1 + seed % 2
    side = 8 if dim == 2 else 16
    g = Grid(dim, (side + 2,) * dim)
    v = dyadic_values(rng, g)
    q = Cube((1,) * dim, side)
    assert np.array_equal(dyadic_maximal_on_cube(GridFunction(g, v), q).values,
                          brute_dyadic_maximal(g, v, q))


def test_shift_domination_small():
    chk = shift_domination_check(line(0, 4, 0, 0, 1, 3, 3, 0), 0.5)
    assert chk.holds
    assert np.all(chk.lhs <= chk.full_lhs)


def test_weighted_family_validation():
    g = Grid.line(6)
    with pytest.raises(ValueError):
        WeightedFamily.of_cubes(g, [Cube(0, 3), Cube(2, 2)])
    with pytest.raises(ValueError):
        WeightedFamily.of_cubes(g, [Cube(0, 3)], [-1])
    fam = WeightedFamily.of_cubes(g, [Cube(0, 3), Cube(3, 3)], [1.0, 2.0])
    with pytest.raises(ValueError):
        fam.with_subsets([CellMask.of_cells(g, [(4,)]), None])


def test_weighted_family_round_trip():
    g = Grid.square(4)
    fam = WeightedFamily.of_cubes(g, [Cube((0, 0), 2), Cube((2, 2), 2)], [0.5, 3.0])
    fam = fam.with_subsets([CellMask.of_cells(g, [(0, 0), (1, 1)]),
                            CellMask.of_cells(g, [(3, 3)])])
    back = WeightedFamily.from_dict(fam.to_dict())
    assert back.cubes == fam.cubes
    assert np.array_equal(back.subset_step_function().values, fam.subset_step_function().values)
    assert fam.min_fill() == 0.25
