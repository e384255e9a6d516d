import json
import math

import numpy as np
import pytest

from varlp.grid import Grid
from varlp.io import read_array, write_array
from varlp.scenario import (ConfigError, ScenarioConfig, dumps, generate_exponent, payload,
                            run_scenario, trends_csv, validate_report, write_outputs)


def test_constant_exponent():
    p = generate_exponent("constant", {"value": 2}, Grid.line(5))
    assert np.all(p.values == 2)


def test_two_valued_split():
    p = generate_exponent("two-valued-split",
                          {"low": 1.5, "high": 3, "axis": 0, "fraction": 0.5}, Grid.line(8))
    assert p.values.tolist() == [1.5] * 4 + [3] * 4
    p2 = generate_exponent("two-valued-split", {"low": 1.5, "high": 3, "axis": 1}, Grid.square(4))
    assert p2.values[:, :2].tolist() == [[1.5, 1.5]] * 4


def test_smooth_wave_extrema():
    p = generate_exponent("smooth-wave", {"base": 2, "amplitude": 0.5, "period": 16},
                          Grid.line(32))
    c = np.arange(32)
    assert np.allclose(p.values, 2 + 0.5 * np.sin(2 * math.pi * c / 16))
    assert p.p_minus() == pytest.approx(1.5) and p.p_plus() == pytest.approx(2.5)


def test_radial_step():
    p = generate_exponent("radial-step", {"inner": 3, "outer": 1.5, "radius": 0.5},
                          Grid.square(8))
    assert p.values[4, 4] == 3 and p.values[0, 0] == 1.5


def test_custom_from_file(tmp_path):
    g = Grid.line(4)
    write_array(tmp_path / "p.csv", g, np.array([1.0, 2.0, 3.0, 4.0]))
    p = generate_exponent("custom-from-file", {"path": "p.csv"}, g, base_dir=tmp_path)
    assert p.values.tolist() == [1, 2, 3, 4]
    with pytest.raises(ConfigError):
        generate_exponent("custom-from-file", {"path": "p.csv"}, Grid.line(5), base_dir=tmp_path)


@pytest.mark.parametrize("kind,params", [
    ("constant", {"value": 0.5}),
    ("constant", {"value": float("inf")}),
    ("smooth-wave", {"base": 1.2, "amplitude": 0.5, "period": 8}),
    ("constant", {}),
    ("spiral", {}),
])
def test_generator_errors(kind, params):
    with pytest.raises(ConfigError):
        generate_exponent(kind, params, Grid.line(8))


def test_array_io_round_trip(tmp_path):
    g = Grid(2, (3, 4), 0.5)
    v = np.arange(12.0).reshape(3, 4) / 7
    for name in ("a.csv", "a.json"):
        write_array(tmp_path / name, g, v)
        g2, v2 = read_array(tmp_path / name)
        assert g2 == g and np.array_equal(v2, v)


def test_config_validation():
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict({"conditions": ["nope"]})
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict({"lambdas": [1.5]})
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict({"surprise": 1})
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict({"grid": {"dim": 3, "extent": [2, 2, 2]}})


def small_config(**kw):
    d = {"grid": {"dim": 1, "extent": [12], "cell_side": 1.0},
         "exponent": {"kind": "constant", "params": {"value": 2.0}},
         "conditions": ["ainfty", "apvar", "rh", "operator:T_F"],
         "lambdas": [0.25, 0.5], "budget": 150, "seed": 3}
    d.update(kw)
    return ScenarioConfig.from_dict(d)


def test_smoke_constant_exponent():
    report = run_scenario(small_config(verify="quick"))
    validate_report(report)
    assert report["verify"]["ok"]
    for c in report["conditions"]:
        if c["name"] == "ainfty":
            lam = c["params"]["lambda"]
            assert abs(c["best_ratio"] - lam ** -0.5) <= 1e-6


def test_empty_condition_selection():
    report = run_scenario(small_config(conditions=[]))
    validate_report(report)
    assert report["conditions"] == [] and report["trends"] == []
    assert report["config"]["conditions"] == []


def test_rerun_is_byte_identical():
    a = run_scenario(small_config())
    b = run_scenario(small_config())
    assert dumps(payload(a)) == dumps(payload(b))
    assert "timing" in a and "timing" not in payload(a)


def test_box_ladder_and_outputs(tmp_path):
    cfg = small_config(exponent={"kind": "two-valued-split",
                                 "params": {"low": 1.5, "high": 3.0}},
                       conditions=["apvar"], box_sizes=[8, 16], budget=60)
    report = run_scenario(cfg)
    validate_report(report)
    assert [e["box_cells"] for e in report["exponents"]] == [8, 16]
    rpath, tpath = write_outputs(report, tmp_path / "out")
    assert json.loads(rpath.read_text()) == json.loads(dumps(report))
    lines = tpath.read_text().splitlines()
    assert lines[0] == "box_cells,condition,lambda,best_ratio,witness_id"
    assert len(lines) == 3
    assert trends_csv(report) == tpath.read_text()


def test_array_io_bare_json_list(tmp_path):
    (tmp_path / "l.json").write_text("[[1, 2], [3, 4]]")
    g, v = read_array(tmp_path / "l.json")
    assert g.shape == (2, 2) and v[1, 0] == 3.0
    (tmp_path / "bad.json").write_text('{"shape": [2]}')
    with pytest.raises(ValueError):
        read_array(tmp_path / "bad.json")
