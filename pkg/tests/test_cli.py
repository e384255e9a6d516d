import json

import numpy as np
import pytest

from varlp.cli import main
from varlp.grid import Grid
from varlp.io import read_array, write_array


@pytest.fixture
def f_csv(tmp_path):
    path = tmp_path / "f.csv"
    write_array(path, Grid.line(4), np.array([0.0, 4.0, 0.0, 0.0]))
    return path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr().out


def test_norm(capsys, f_csv):
    code, out = run(capsys, "norm", f_csv, "--p", 2)
    assert code == 0 and json.loads(out)["norm"] == pytest.approx(4)


def test_maximal_and_median(capsys, f_csv, tmp_path):
    code, out = run(capsys, "maximal", f_csv)
    assert code == 0 and out.splitlines()[1] == "2.0,4.0,2.0,1.3333333333333333"
    code, _ = run(capsys, "median", f_csv, "--lam", 0.25, "--core", 0.5, "--out", tmp_path / "m")
    assert code == 0
    _, v = read_array(tmp_path / "m" / "median.csv")
    assert v.tolist() == [4.0, 4.0, 4.0, 0.0]


def test_cz(capsys, tmp_path):
    path = tmp_path / "v.csv"
    write_array(path, Grid.line(4), np.array([0.0, 0, 8, 0]))
    code, out = run(capsys, "cz", path, "--cube", "0:4", "--threshold", 3)
    assert code == 0 and json.loads(out)["cubes"] == [{"anchor": [2], "side": 2}]
    code, out = run(capsys, "cz", path, "--cube", "0:4", "--lam", 0.5, "--levels", 2)
    assert code == 0 and json.loads(out)["violations"] == []


def test_cover(capsys, tmp_path):
    doc = {"grid": {"dim": 1, "extent": [10], "cell_side": 1.0}, "r": 0.5,
           "points": [{"cell": [2], "cube": {"anchor": [1], "side": 3}},
                      {"cell": [4], "cube": {"anchor": [3], "side": 3}}]}
    path = tmp_path / "pts.json"
    path.write_text(json.dumps(doc))
    code, out = run(capsys, "cover", path)
    res = json.loads(out)
    assert code == 0 and res["uncovered_points"] == [] and res["subfamily_count"] == 2


def test_searches(capsys):
    code, out = run(capsys, "ainfty-search", "--p", 2, "--grid", 8, "--lam", 0.5, "--budget", 60)
    assert code == 0 and json.loads(out)["reports"][0]["best_ratio"] == pytest.approx(2 ** 0.5)
    code, out = run(capsys, "apvar-search", "--p", 2, "--grid", "4x4", "--budget", 30)
    assert code == 0 and json.loads(out)["best_ratio"] == pytest.approx(1)
    code, out = run(capsys, "rh", "--p", 2, "--grid", 6, "--budget", 20, "--b-constant", 1)
    doc = json.loads(out)
    assert code == 0 and all(b["b"] == 0 for b in doc["b_values"])


def test_chains(capsys):
    code, out = run(capsys, "chains", "31", "--r", 2, "--C", 1, "--p-minus", 2, "--p-plus", 2,
                    "--gamma", 1.5)
    assert code == 0 and json.loads(out)["A"] == 16
    code, out = run(capsys, "chains", "45", "--lam", 0.5, "--eta", 0.5, "--C", 1,
                    "--p-minus", 2, "--p-plus", 2)
    assert code == 0 and json.loads(out)["gamma"] == 0.5


def test_verify_quick(capsys):
    code, out = run(capsys, "verify", "--level", "quick", "--lam", 0.5)
    assert code == 0 and "ALL PASS" in out


def test_run_writes_report(capsys, tmp_path):
    cfg = {"grid": {"dim": 1, "extent": [8], "cell_side": 1.0},
           "exponent": {"kind": "constant", "params": {"value": 2.0}},
           "conditions": ["ainfty"], "lambdas": [0.5], "budget": 40, "seed": 1}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    code, _ = run(capsys, "run", "--config", path, "--out", tmp_path / "out")
    assert code == 0
    assert (tmp_path / "out" / "report.json").exists()
    assert (tmp_path / "out" / "trends.csv").exists()


def test_io_and_config_errors(capsys, tmp_path):
    assert main(["norm", str(tmp_path / "missing.csv"), "--p", "2"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", "--config", str(bad), "--out", str(tmp_path)]) == 2
    bad.write_text(json.dumps({"conditions": ["nope"]}))
    assert main(["run", "--config", str(bad), "--out", str(tmp_path)]) == 2
    with pytest.raises(SystemExit):
        main(["chains", "31", "--C", "1", "--p-minus", "2", "--p-plus", "2"])
