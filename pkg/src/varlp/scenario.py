"""Scenario configs, exponent generators and the experiment report."""

from __future__ import annotations

import copy
import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .conditions import (OPERATORS, ainfty_search, apvar_search, operator_norm_estimate,
                         rh_search)
from .grid import Grid
from .io import read_array
from .modular import ExponentField

SCHEMA_VERSION = "1.0"
EXPONENT_KINDS = ("constant", "two-valued-split", "smooth-wave", "radial-step",
                  "custom-from-file")
CONDITIONS = ("ainfty", "apvar", "rh") + tuple(f"operator:{op}" for op in OPERATORS)
TREND_COLUMNS = ("box_cells", "condition", "lambda", "best_ratio", "witness_id")
TIMING_KEYS = ("wall_time_s", "runtime_s")


class ConfigError(ValueError):
    pass


def _axis_coords(grid: Grid, axis: int) -> np.ndarray:
    if not 0 <= axis < grid.dim:
        raise ConfigError(f"axis {axis} out of range for dim {grid.dim}")
    idx = np.indices(grid.shape)[axis]
    return idx.astype(float)


def generate_exponent(kind: str, params: dict, grid: Grid, base_dir=None) -> ExponentField:
    params = dict(params or {})
    try:
        if kind == "constant":
            values = np.full(grid.shape, float(params["value"]))
        elif kind == "two-valued-split":
            c = _axis_coords(grid, int(params.get("axis", 0)))
            cut = float(params.get("fraction", 0.5)) * grid.extent[int(params.get("axis", 0))]
            values = np.where(c < cut, float(params["low"]), float(params["high"]))
        elif kind == "smooth-wave":
            c = _axis_coords(grid, int(params.get("axis", 0)))
            values = float(params["base"]) + float(params["amplitude"]) * np.sin(
                2 * math.pi * c / float(params["period"]))
        elif kind == "radial-step":
            centers = [np.indices(grid.shape)[ax] + 0.5 - e / 2 for ax, e in enumerate(grid.extent)]
            dist = np.sqrt(sum(c ** 2 for c in centers))
            radius = float(params.get("radius", 0.5)) * min(grid.extent) / 2
            values = np.where(dist <= radius, float(params["inner"]), float(params["outer"]))
        elif kind == "custom-from-file":
            path = Path(params["path"])
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            file_grid, values = read_array(path)
            if file_grid.shape != grid.shape:
                raise ConfigError(f"exponent file shape {file_grid.shape} != grid {grid.shape}")
        else:
            raise ConfigError(f"unknown exponent kind {kind!r}; choose from {EXPONENT_KINDS}")
    except KeyError as exc:
        raise ConfigError(f"exponent kind {kind!r} needs parameter {exc.args[0]!r}") from None
    if not np.all(np.isfinite(values)):
        raise ConfigError("exponent must be finite (p_+ < infinity)")
    if np.any(values < 1):
        raise ConfigError(f"exponent values must be >= 1 (found {values.min()})")
    return ExponentField(grid, values)


@dataclass
class ScenarioConfig:
    grid: dict = field(default_factory=lambda: {"dim": 1, "extent": [16], "cell_side": 1.0})
    exponent: dict = field(default_factory=lambda: {"kind": "constant", "params": {"value": 2.0}})
    conditions: list = field(default_factory=list)
    lambdas: list = field(default_factory=lambda: [0.5])
    rh_r: float = 2.0
    tau: float = 0.5
    core_r: float = 0.5
    budget: int = 1000
    seed: int = 0
    box_sizes: list = field(default_factory=list)
    output: dict = field(default_factory=dict)
    verify: str | None = None
    base_dir: str | None = None

    @classmethod
    def from_dict(cls, d: dict, base_dir=None) -> "ScenarioConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**copy.deepcopy(d))
        if base_dir is not None and cfg.base_dir is None:
            cfg.base_dir = str(base_dir)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        path = Path(path)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        return cls.from_dict(doc, base_dir=path.parent)

    def validate(self) -> None:
        for c in self.conditions:
            if c not in CONDITIONS:
                raise ConfigError(f"unknown condition {c!r}; choose from {CONDITIONS}")
        for lam in self.lambdas:
            if not 0 < lam < 1:
                raise ConfigError(f"lambda {lam} outside (0, 1)")
        if not self.rh_r > 1:
            raise ConfigError("rh_r must exceed 1")
        if not (0 < self.tau < 1 and 0 < self.core_r < 1):
            raise ConfigError("tau and core_r must lie in (0, 1)")
        if int(self.budget) < 1:
            raise ConfigError("budget must be >= 1")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.verify not in (None, "quick", "full"):
            raise ConfigError("verify must be null, 'quick' or 'full'")
        self.base_grid()
        if self.exponent.get("kind") not in EXPONENT_KINDS:
            raise ConfigError(f"unknown exponent kind {self.exponent.get('kind')!r}")

    def base_grid(self) -> Grid:
        try:
            return Grid.from_dict(self.grid)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad grid: {exc}") from None

    def grids(self) -> list[Grid]:
        base = self.base_grid()
        if not self.box_sizes:
            return [base]
        return [Grid(base.dim, (int(n),) * base.dim, base.cell_side) for n in self.box_sizes]

    def echo(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        return d


def _witness_id(condition: str, lam, box: int) -> str:
    tag = condition.replace(":", "-")
    return f"{tag}/n{box}" + (f"/lam{lam:g}" if lam is not None else "")


def run_scenario(cfg: ScenarioConfig, log=None) -> dict:
    """Run every selected checker on every box size; returns the report dict."""
    start = time.perf_counter()
    report = {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "varlp", "version": __version__},
        "config": cfg.echo(),
        "exponents": [],
        "conditions": [],
        "trends": [],
        "timing": {},
    }
    for grid in cfg.grids():
        box = grid.extent[0]
        p = generate_exponent(cfg.exponent["kind"], cfg.exponent.get("params", {}), grid,
                              cfg.base_dir)
        report["exponents"].append({
            "box_cells": box, "grid": grid.to_dict(),
            "p_minus": p.p_minus(), "p_plus": p.p_plus(),
        })
        for cond in cfg.conditions:
            lams = cfg.lambdas if cond in ("ainfty", "operator:m_lambda") else [None]
            for lam in lams:
                if log:
                    log(f"box {box}: {cond}" + (f" lambda={lam}" if lam is not None else ""))
                rep = _run_condition(cond, p, lam, cfg)
                wid = _witness_id(cond, lam, box)
                d = rep.to_dict()
                report["timing"][wid] = d.pop("wall_time_s")
                d["witness_id"] = wid
                d["box_cells"] = box
                report["conditions"].append(d)
                report["trends"].append({
                    "box_cells": box, "condition": cond,
                    "lambda": lam, "best_ratio": rep.best_ratio, "witness_id": wid,
                })
    if cfg.verify:
        from .verify import verify_suite
        summary = verify_suite(cfg.verify, tuple(cfg.lambdas), seed=int(cfg.seed), log=None)
        report["verify"] = summary.to_dict()
        report["timing"]["verify_s"] = sum(r.seconds for r in summary.results)
    report["timing"]["runtime_s"] = time.perf_counter() - start
    return report


def _run_condition(cond: str, p: ExponentField, lam, cfg: ScenarioConfig):
    budget, seed = int(cfg.budget), int(cfg.seed)
    if cond == "ainfty":
        return ainfty_search(p, lam, budget, seed)
    if cond == "apvar":
        return apvar_search(p, budget, seed)
    if cond == "rh":
        return rh_search(p, cfg.rh_r, budget, seed)
    op = cond.split(":", 1)[1]
    return operator_norm_estimate(op, p, budget, seed, lam=lam if lam is not None else 0.5,
                                  tau=cfg.tau, r=cfg.core_r)


def payload(report: dict) -> dict:
    """The report without wall-clock fields."""
    out = copy.deepcopy(report)
    out.pop("timing", None)
    for c in out.get("conditions", []):
        for k in TIMING_KEYS:
            c.pop(k, None)
    return out


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"


def trends_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=TREND_COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in report["trends"]:
        w.writerow({k: ("" if row[k] is None else row[k]) for k in TREND_COLUMNS})
    return buf.getvalue()


def load_schema() -> dict:
    text = resources.files("varlp").joinpath("schema/report.schema.json").read_text("utf-8")
    return json.loads(text)


def validate_report(report: dict) -> None:
    import jsonschema
    jsonschema.validate(report, load_schema())


def write_outputs(report: dict, out_dir) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rpath = out_dir / "report.json"
    tpath = out_dir / "trends.csv"
    rpath.write_text(dumps(report), encoding="utf-8")
    tpath.write_text(trends_csv(report), encoding="utf-8")
    return rpath, tpath
