import math

import pytest

from varlp import maximal
from varlp.verify import suite_level_set, verify_suite
import numpy as np


def test_quick_all_pass():
    summary = verify_suite("quick", log=None)
    assert summary.ok, [r.failures for r in summary.results if not r.ok]


def test_lambda_list_repeats_suites():
    one = verify_suite("quick", (0.5,), log=None)
    three = verify_suite("quick", (0.25, 0.5, 0.75), log=None)
    per_lam = {"level-set-identity", "pointwise-dominations", "cz-decomposition"}
    count = lambda s: sum(r.name in per_lam for r in s.results)
    assert count(three) == 3 * count(one)


def test_off_by_one_rearrangement_is_caught(monkeypatch):
    def shifted(n_cells, fraction):
        return min(math.floor(fraction * n_cells) + 1, n_cells - 1)
    monkeypatch.setattr(maximal, "order_index", shifted)
    res = suite_level_set(np.random.default_rng(0), 40, 0.5)
    assert res.passed < res.total


def test_unknown_level():
    with pytest.raises(ValueError):
        verify_suite("huge", log=None)
