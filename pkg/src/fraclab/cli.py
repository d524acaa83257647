"""Command line entry point: ``fraclab <subcommand> [--config file] [overrides]``.

Exit codes: 0 all verdicts pass, 1 some verdict fails, 2 configuration or
contract error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from .constants import load_constants
from .dimension import DEFAULT_WINDOW, projection_dimension, set_dimension
from .errors import BudgetExceeded, ContractViolation, DegenerateInstance, UnknownFractal
from .fractals import catalog, generate_cover, project_cover, resolve
from .geometry import Direction
from .harness import ExperimentConfig, run_experiment

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

# subcommand -> experiment kind
EXPERIMENTS = {"marstrand": "marstrand", "packing": "packing", "toy-verify": "toy-verify", "recover": "recovery-sweep"}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; explicit flags override its fields")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output path (reports write <out>.json and <out>.csv)")
    p.add_argument("--directions", type=int)
    p.add_argument("--window", type=int, nargs=2, metavar=("R_MIN", "R_MAX"))
    p.add_argument("--tol", type=float)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fraclab", description="Fractal projection and toy-complexity laboratory")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("catalog", help="list the built-in fractals")
    _common(p)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("cover", help="dyadic cover of a fractal at precision r")
    _common(p)
    p.add_argument("fractal", nargs="?", help="catalog name or IFS JSON file")
    p.add_argument("-r", "--precision", type=int)

    p = sub.add_parser("project", help="project a cover onto the line through a direction")
    _common(p)
    p.add_argument("fractal", nargs="?")
    p.add_argument("-r", "--precision", type=int)
    p.add_argument("--direction", type=float, nargs="+")

    p = sub.add_parser("dim", help="box dimension of a set or projection, or effective dimension of a point")
    _common(p)
    p.add_argument("fractal", nargs="?")
    p.add_argument("--mode", choices=("ls", "liminf", "limsup"))
    p.add_argument("--direction", type=float, nargs="+")
    p.add_argument("--source", choices=("rational", "random", "fractal"), help="estimate a point's effective dimension")
    p.add_argument("--point", type=int, nargs="+", help="numerators of a rational point")
    p.add_argument("--denominator", type=int)
    p.add_argument("--dimension", type=int)
    p.add_argument("--r-max", dest="r_max", type=int)
    p.add_argument("--estimator", choices=("lzdp", "lz78"))

    for name, helptext in (("marstrand", "least-squares projection sweep"),
                           ("packing", "upper-box projection sweep"),
                           ("toy-verify", "exhaustive toy-universe lemma checks"),
                           ("recover", "Monte Carlo direction-recovery sweep")):
        p = sub.add_parser(name, help=helptext)
        _common(p)
        if name in ("marstrand", "packing"):
            p.add_argument("fractal", nargs="?")
            p.add_argument("--fraction", type=float)
            p.add_argument("--method", choices=("auto", "projected", "composed"))
        else:
            p.add_argument("--instances", type=int)
        if name == "toy-verify":
            p.add_argument("--max-length", dest="max_length", type=int)
            p.add_argument("--lemma-max-length", dest="lemma_max_length", type=int)
        if name == "recover":
            p.add_argument("--ns", type=int, nargs="+")
            p.add_argument("--precision", type=int)
    return ap


_NON_FIELDS = {"command", "config", "json"}


def _settings(args: argparse.Namespace) -> dict:
    """Config file fields overlaid with every flag given explicitly."""
    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ContractViolation(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise ContractViolation("config must be a JSON object")
        extra = set(data) - _EXPERIMENT_KEYS - {"kind", "mode", "direction"}
        if extra:
            raise ContractViolation(f"unknown config fields: {sorted(extra)}")
    for k, v in vars(args).items():
        if k not in _NON_FIELDS and v is not None:
            data[k] = v
    return data


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _require(data: dict, key: str):
    if data.get(key) is None:
        raise ContractViolation(f"missing required setting {key!r}")
    return data[key]


def cmd_catalog(args, data) -> int:
    rows = [{"name": f.name, "n": f.dimension, "maps": len(f.maps), "dimension": f.moran_dimension,
             "exceptional": [list(d) for d in f.exceptional]} for f in catalog()]
    if args.json:
        _emit(json.dumps(rows, indent=2) + "\n", data.get("out"))
    else:
        _emit("".join(f"{r['name']:<14} n={r['n']} maps={r['maps']:<2} s={r['dimension']:.6f}\n" for r in rows),
              data.get("out"))
    return EXIT_OK


def cmd_cover(args, data) -> int:
    ifs = resolve(_require(data, "fractal"))
    cover = generate_cover(ifs, int(_require(data, "precision")))
    if data.get("out"):
        Path(data["out"]).parent.mkdir(parents=True, exist_ok=True)
        cover.to_csv(data["out"])
    print(json.dumps({"fractal": ifs.name, "r": cover.precision, "cells": len(cover)}))
    return EXIT_OK


def cmd_project(args, data) -> int:
    ifs = resolve(_require(data, "fractal"))
    e = Direction.from_vector(_require(data, "direction"))
    proj = project_cover(generate_cover(ifs, int(_require(data, "precision"))), e)
    if data.get("out"):
        Path(data["out"]).parent.mkdir(parents=True, exist_ok=True)
        proj.to_csv(data["out"])
    print(json.dumps({"fractal": ifs.name, "r": proj.precision, "direction": list(e.components), "cells": len(proj)}))
    return EXIT_OK


def cmd_dim(args, data) -> int:
    if data.get("source"):
        return _experiment("dim-point", data)
    ifs = resolve(_require(data, "fractal"))
    window = tuple(data.get("window") or DEFAULT_WINDOW)
    mode = data.get("mode") or "ls"
    if data.get("direction"):
        est = projection_dimension(ifs, Direction.from_vector(data["direction"]), window, mode)
    else:
        est = set_dimension(ifs, window, mode)
    _emit(est.to_json() + "\n", data.get("out"))
    return EXIT_OK


_EXPERIMENT_KEYS = {"fractal", "directions", "seed", "window", "tol", "fraction", "exceptional", "method", "max_length",
                    "lemma_max_length", "instances", "source", "point", "denominator", "dimension", "r_max",
                    "estimator", "ns", "precision", "t_range", "out"}


def _experiment(kind: str, data: dict) -> int:
    data = {k: v for k, v in data.items() if k in _EXPERIMENT_KEYS}
    data.pop("kind", None)
    cfg = ExperimentConfig.from_dict({"kind": kind, **data})
    report = run_experiment(cfg, load_constants())
    print(json.dumps({"kind": report.kind, "verdicts": report.verdicts, "summary": report.summary},
                     indent=2, sort_keys=True))
    return EXIT_OK if report.passed else EXIT_FAIL


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        data = _settings(args)
        if args.command in EXPERIMENTS:
            return _experiment(EXPERIMENTS[args.command], data)
        return {"catalog": cmd_catalog, "cover": cmd_cover, "project": cmd_project, "dim": cmd_dim}[args.command](args, data)
    except (ContractViolation, BudgetExceeded, UnknownFractal, DegenerateInstance, ValueError) as exc:
        print(f"fraclab: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
