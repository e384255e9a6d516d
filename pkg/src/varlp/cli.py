"""Command line entry point: ``varlp <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .conditions import (ainfty_search, apvar_search, b_function, chain31, chain45,
                         rh_search)
from .decomp import besicovitch_extract, build_cz_levels, cz_decompose
from .grid import CellMask, Cube, Grid
from .io import format_csv, read_array
from .maximal import (dyadic_maximal_on_cube, hl_maximal, median_maximal,
                      shifted_median_maximal)
from .modular import ExponentField, GridFunction, check_modular_norm_sandwich, luxemburg_norm
from .scenario import (ConfigError, ScenarioConfig, dumps, generate_exponent, payload,
                       run_scenario, validate_report, write_outputs)
from .verify import DEFAULT_LAMBDAS, verify_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _parse_grid(text: str) -> Grid:
    parts = [int(x) for x in text.lower().split("x")]
    return Grid(len(parts), tuple(parts))


def _parse_cube(text: str, dim: int) -> Cube:
    """'a:side' in 1D, 'a,b:side' in 2D."""
    anchor, side = text.split(":")
    coords = tuple(int(x) for x in anchor.split(","))
    if len(coords) != dim:
        raise ConfigError(f"cube {text!r} does not match grid dimension {dim}")
    return Cube(coords, int(side))


def _exponent(args, grid: Grid | None = None) -> ExponentField:
    """From --exponent FILE, --p VALUE (with a grid), or --config."""
    if getattr(args, "exponent", None):
        pgrid, values = read_array(args.exponent)
        if grid is not None and pgrid.shape != grid.shape:
            raise ConfigError(f"exponent shape {pgrid.shape} != input shape {grid.shape}")
        return ExponentField(grid or pgrid, values)
    if getattr(args, "config", None):
        cfg = ScenarioConfig.load(args.config)
        g = grid or cfg.base_grid()
        return generate_exponent(cfg.exponent["kind"], cfg.exponent.get("params", {}), g,
                                 cfg.base_dir)
    if getattr(args, "p", None) is not None:
        g = grid or (_parse_grid(args.grid) if getattr(args, "grid", None) else None)
        if g is None:
            raise ConfigError("--p needs an input array or --grid")
        return generate_exponent("constant", {"value": args.p}, g)
    raise ConfigError("give --exponent FILE, --p VALUE or --config FILE")


def _emit(args, doc: dict, name: str, array_text: str | None = None) -> None:
    text = dumps(doc)
    if getattr(args, "out", None):
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{name}.json").write_text(text, encoding="utf-8")
        if array_text is not None:
            (out / f"{name}.csv").write_text(array_text, encoding="utf-8")
        print(f"wrote {out / (name + '.json')}")
    else:
        sys.stdout.write(array_text if array_text is not None else text)


def _input(args) -> GridFunction:
    grid, values = read_array(args.input)
    return GridFunction(grid, values)


# -- subcommands -------------------------------------------------------------

def cmd_norm(args) -> int:
    f = _input(args)
    p = _exponent(args, f.grid)
    rep = check_modular_norm_sandwich(f, p, tol=args.tol)
    _emit(args, {"norm": luxemburg_norm(f, p, tol=args.tol), "modular": rep.modular,
                 "sandwich_lower": rep.lower, "sandwich_upper": rep.upper,
                 "sandwich_holds": rep.holds}, "norm")
    return EXIT_OK


def cmd_maximal(args) -> int:
    f = _input(args)
    if args.dyadic:
        out = dyadic_maximal_on_cube(f, _parse_cube(args.dyadic, f.grid.dim))
    else:
        out = hl_maximal(f)
    _emit(args, {}, "maximal", format_csv(f.grid, out.values))
    return EXIT_OK


def cmd_median(args) -> int:
    f = _input(args)
    if args.core is not None:
        out = shifted_median_maximal(f, args.lam, args.core)
    else:
        out = median_maximal(f, args.lam)
    _emit(args, {}, "median", format_csv(f.grid, out.values))
    return EXIT_OK


def cmd_cz(args) -> int:
    v = _input(args)
    cube = _parse_cube(args.cube, v.grid.dim)
    if args.threshold is not None:
        cubes = cz_decompose(v, cube, args.threshold)
        doc = {"threshold": args.threshold, "cubes": [c.to_dict() for c in cubes]}
    else:
        levels = build_cz_levels(v, cube, args.lam, range(args.levels))
        doc = levels.to_dict()
        doc["violations"] = levels.violations()
    _emit(args, doc, "cz")
    return EXIT_OK


def cmd_cover(args) -> int:
    doc = json.loads(Path(args.input).read_text(encoding="utf-8"))
    grid = Grid.from_dict(doc["grid"])
    points = [(tuple(p["cell"]), Cube.from_dict(p["cube"])) for p in doc["points"]]
    ext = besicovitch_extract(grid, points, float(doc.get("r", args.r)))
    out = ext.to_dict()
    out["uncovered_points"] = [list(c) for c in ext.uncovered_points()]
    _emit(args, out, "cover")
    return EXIT_OK


def _search_doc(rep) -> dict:
    d = rep.to_dict()
    d.pop("wall_time_s", None)
    return d


def cmd_ainfty(args) -> int:
    p = _exponent(args)
    reps = [_search_doc(ainfty_search(p, lam, args.budget, args.seed)) for lam in args.lam]
    _emit(args, {"reports": reps}, "ainfty")
    return EXIT_OK


def cmd_apvar(args) -> int:
    p = _exponent(args)
    _emit(args, _search_doc(apvar_search(p, args.budget, args.seed)), "apvar")
    return EXIT_OK


def cmd_rh(args) -> int:
    p = _exponent(args)
    doc = _search_doc(rh_search(p, args.r, args.budget, args.seed))
    if args.b_constant is not None:
        from .grid import all_cubes
        doc["b_values"] = [{
            "cube": q.to_dict(), "b": bv.b, "t_q": bv.t_q, "capped": bv.capped,
        } for q in all_cubes(p.grid) for bv in [b_function(p, q, args.r, args.b_constant)]]
    _emit(args, doc, "rh")
    return EXIT_OK


def cmd_chains(args) -> int:
    if args.which == "31":
        c = chain31(args.r, args.C, args.p_minus, args.p_plus, args.gamma)
    else:
        c = chain45(args.lam, args.eta, args.n, args.N, args.C, args.p_minus, args.p_plus)
    _emit(args, c.to_dict(), f"chain{args.which}")
    return EXIT_OK


def cmd_verify(args) -> int:
    summary = verify_suite(args.level, tuple(args.lam), seed=args.seed or 0)
    if args.out:
        _emit(args, summary.to_dict(), "verify")
    return EXIT_OK if summary.ok else EXIT_FAIL


def cmd_run(args) -> int:
    cfg = ScenarioConfig.load(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.validate()
    out = args.out or cfg.output.get("dir")
    if not out:
        raise ConfigError("run needs --out or output.dir in the config")
    report = run_scenario(cfg, log=lambda m: print(m, file=sys.stderr))
    validate_report(report)
    rpath, tpath = write_outputs(report, Path(out))
    print(f"wrote {rpath}")
    print(f"wrote {tpath}")
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def _add_exponent_args(sp, with_grid: bool) -> None:
    sp.add_argument("--exponent", help="exponent array (CSV or JSON)")
    sp.add_argument("--p", type=float, help="constant exponent value")
    sp.add_argument("--config", help="scenario config supplying the grid and exponent")
    if with_grid:
        sp.add_argument("--grid", help="grid shape for --p, e.g. 32 or 8x8")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="varlp", description=__doc__)
    ap.add_argument("--version", action="version", version=f"varlp {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", help="output directory (default: stdout)")
        sp.add_argument("--seed", type=int, default=None, help="RNG seed (u64)")
        return sp

    sp = common(sub.add_parser("norm", help="Luxemburg norm of an array"))
    sp.add_argument("input")
    _add_exponent_args(sp, with_grid=False)
    sp.add_argument("--tol", type=float, default=1e-12)
    sp.set_defaults(func=cmd_norm)

    sp = common(sub.add_parser("maximal", help="Hardy-Littlewood maximal function"))
    sp.add_argument("input")
    sp.add_argument("--dyadic", metavar="CUBE", help="dyadic maximal function on CUBE (a,b:side)")
    sp.set_defaults(func=cmd_maximal)

    sp = common(sub.add_parser("median", help="median maximal function"))
    sp.add_argument("input")
    sp.add_argument("--lam", type=float, default=0.5)
    sp.add_argument("--core", type=float, help="core ratio r for the shifted operator")
    sp.set_defaults(func=cmd_median)

    sp = common(sub.add_parser("cz", help="Calderon-Zygmund decomposition"))
    sp.add_argument("input")
    sp.add_argument("--cube", required=True, help="ambient dyadic cube, e.g. 0:16 or 0,0:8")
    sp.add_argument("--threshold", type=float, help="single threshold")
    sp.add_argument("--lam", type=float, default=0.5, help="fill fraction for level families")
    sp.add_argument("--levels", type=int, default=4)
    sp.set_defaults(func=cmd_cz)

    sp = common(sub.add_parser("cover", help="Besicovitch-type subcover extraction"))
    sp.add_argument("input", help="JSON with grid, r and points [{cell, cube}]")
    sp.add_argument("--r", type=float, default=0.5)
    sp.set_defaults(func=cmd_cover)

    sp = common(sub.add_parser("ainfty-search", help="adversarial search for the family condition"))
    _add_exponent_args(sp, with_grid=True)
    sp.add_argument("--lam", type=float, nargs="+", default=[0.5])
    sp.add_argument("--budget", type=int, default=1000)
    sp.set_defaults(func=cmd_ainfty)

    sp = common(sub.add_parser("apvar-search", help="adversarial search for the single-cube condition"))
    _add_exponent_args(sp, with_grid=True)
    sp.add_argument("--budget", type=int, default=1000)
    sp.set_defaults(func=cmd_apvar)

    sp = common(sub.add_parser("rh", help="reverse-Holder search and the b function"))
    _add_exponent_args(sp, with_grid=True)
    sp.add_argument("--r", type=float, default=2.0)
    sp.add_argument("--budget", type=int, default=1000)
    sp.add_argument("--b-constant", type=float, help="also tabulate b(Q) with this constant C")
    sp.set_defaults(func=cmd_rh)

    sp = common(sub.add_parser("chains", help="explicit constant chains"))
    sp.add_argument("which", choices=["31", "45"])
    sp.add_argument("--r", type=float)
    sp.add_argument("--C", type=float, required=True)
    sp.add_argument("--p-minus", type=float, required=True)
    sp.add_argument("--p-plus", type=float, required=True)
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--lam", type=float)
    sp.add_argument("--eta", type=float)
    sp.add_argument("--n", type=int, default=1)
    sp.add_argument("--N", type=int, default=1)
    sp.set_defaults(func=cmd_chains)

    sp = common(sub.add_parser("verify", help="run the invariant suites"))
    sp.add_argument("--level", choices=["quick", "full"], default="quick")
    sp.add_argument("--lam", type=float, nargs="+", default=list(DEFAULT_LAMBDAS))
    sp.set_defaults(func=cmd_verify)

    sp = common(sub.add_parser("run", help="run a scenario config"))
    sp.add_argument("--config", required=True)
    sp.set_defaults(func=cmd_run)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "chains":
        needed = ["r"] if args.which == "31" else ["lam", "eta"]
        missing = [n for n in needed if getattr(args, n) is None]
        if missing:
            parser.error(f"chains {args.which} needs --{' --'.join(missing)}")
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        parser.error("--seed must be an unsigned 64-bit integer")
    if getattr(args, "seed", None) is None and args.command not in ("verify", "run"):
        args.seed = 0
    try:
        return args.func(args)
    except (ConfigError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"varlp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"varlp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
