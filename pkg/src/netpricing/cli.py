"""Command-line front end.

Machine-readable JSON (or CSV for plots) goes to stdout; human-oriented
notes go to stderr.  Exit codes: 0 success, 2 a solver hit its limit,
64 usage error, 65 data error.
"""

from __future__ import annotations

import argparse
import json
import math
import statistics
import sys
from pathlib import Path

import numpy as np

from . import conjugate, cuts, feasibility, follower, instance, milp, oracle
from .errors import NetPricingError

EXIT_OK = 0
EXIT_LIMIT = 2
EXIT_USAGE = 64
EXIT_DATA = 65


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2))


def _toll_list(t) -> list:
    return ["unbounded" if not math.isfinite(v) else v for v in np.asarray(t, dtype=float)]


def _load(path: str) -> instance.Instance:
    return instance.parse(Path(path).read_text())


def _record_dict(rec: feasibility.PathRecord) -> dict:
    return {
        "commodity": rec.commodity,
        "base_cost": rec.base_cost,
        "w": list(rec.pattern),
        "arcs": list(rec.arcs),
    }


def _cmd_solve(args) -> int:
    inst = _load(args.instance)
    if args.method == "enum":
        result = conjugate.solve_by_enumeration(inst)
        _emit({
            "method": "enum",
            "revenue": result.revenue,
            "w": [int(v) for v in result.w],
            "t": _toll_list(result.t),
            "cells": result.cells,
            "status": "optimal",
        })
        return EXIT_OK
    if args.method == "single-toll":
        revenue, price = conjugate.solve_single_toll(inst)
        _emit({"method": "single-toll", "revenue": revenue, "t": price, "status": "optimal"})
        return EXIT_OK
    if args.method == "oracle":
        result = oracle.brute_force_solve(inst)
        _emit({
            "method": "oracle",
            "revenue": result.revenue,
            "t": _toll_list(result.t),
            "paths": [_record_dict(r) for r in result.selection],
            "status": "optimal",
        })
        return EXIT_OK
    report = milp.solve(inst, n_pairs=args.cuts, time_limit=args.time_limit,
                        gap_limit=args.gap)
    payload = json.loads(report.to_json())
    payload["method"] = "milp"
    _emit(payload)
    return EXIT_OK if report.status == "optimal" else EXIT_LIMIT


def _cmd_generate(args) -> int:
    cfg = None
    if args.config:
        cfg = instance.GeneratorConfig.from_dict(json.loads(Path(args.config).read_text()))
    inst = instance.generate_grid(args.grid, args.commodities, args.seed, cfg)
    print(instance.serialize(inst))
    return EXIT_OK


def _cmd_paths(args) -> int:
    inst = _load(args.instance)
    records_by_k = feasibility.enumerate_all(inst)
    _emit([
        {"commodity": k, "paths": [_record_dict(r) for r in records_by_k[k]]}
        for k in sorted(records_by_k)
    ])
    return EXIT_OK


def _cmd_classify(args) -> int:
    inst = _load(args.instance)
    w = [int(part) for part in args.w.split(",")]
    result = feasibility.classify_w(inst, np.array(w, dtype=float))
    payload = {
        "w": w,
        "classification": result.classification,
        "decompositions": [
            [_record_dict(r) for r in decomposition]
            for decomposition in result.decompositions
        ],
    }
    if result.sbf is not None:
        payload["sbf_objective"] = result.sbf.sbf_objective
    _emit(payload)
    return EXIT_OK


def _cmd_plot(args) -> int:
    inst = _load(args.instance)
    box = []
    for axis in args.box.split(","):
        lo, _, hi = axis.partition(":")
        box.append((float(lo), float(hi)))
    rows = follower.reaction_plot_sample(inst, box, args.resolution)
    follower.write_plot_csv(rows, inst.n_tolled, sys.stdout)
    return EXIT_OK


def _cmd_bench(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    l_values = [int(v) for v in args.l_list.split(",")]
    n_values = [int(v) for v in args.n_list.split(",")]
    seeds = [int(v) for v in args.seeds.split(",")]
    cfg = instance.GeneratorConfig(tolled_fraction=args.tolled_fraction)
    runs = []
    for L in l_values:
        for seed in seeds:
            inst = instance.generate_grid(L, args.commodities, seed, cfg)
            for n_cuts in n_values:
                report = milp.solve(inst, n_pairs=n_cuts, time_limit=args.time_limit,
                                    gap_limit=args.gap)
                name = f"run_L{L}_N{n_cuts}_s{seed}.json"
                (out / name).write_text(report.to_json())
                runs.append((L, n_cuts, report))
                print(f"L={L} N={n_cuts} seed={seed}: revenue={report.revenue:.6g} "
                      f"status={report.status} nodes={report.nodes}", file=sys.stderr)
    summary = []
    for L in l_values:
        for n_cuts in n_values:
            group = [r for (gl, gn, r) in runs if gl == L and gn == n_cuts]
            summary.append({
                "L": L,
                "N": n_cuts,
                "runs": len(group),
                "solved": sum(r.status == "optimal" for r in group),
                "mean_millis": statistics.mean(r.millis for r in group),
                "mean_gap": statistics.mean(r.gap for r in group),
                "mean_nodes": statistics.mean(r.nodes for r in group),
            })
    (out / "summary.json").write_text(json.dumps(summary, indent=2))
    print(f"{'L':>3} {'N':>5} {'solved':>7} {'mean ms':>9} {'mean gap':>9}", file=sys.stderr)
    for row in summary:
        print(f"{row['L']:>3} {row['N']:>5} {row['solved']:>4}/{row['runs']:<2} "
              f"{row['mean_millis']:>9.1f} {row['mean_gap']:>9.4f}", file=sys.stderr)
    _emit(summary)
    return EXIT_OK


def _build_parser() -> _Parser:
    parser = _Parser(prog="netpricing", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve an instance")
    p.add_argument("instance")
    p.add_argument("--method", choices=["enum", "milp", "single-toll", "oracle"],
                   default="milp")
    p.add_argument("--cuts", type=int, default=0, help="commodity pairs used for cuts")
    p.add_argument("--time-limit", type=float, default=None, help="seconds")
    p.add_argument("--gap", type=float, default=0.0, help="relative gap limit")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("generate", help="generate a random grid instance")
    p.add_argument("--grid", type=int, required=True, help="grid side length L")
    p.add_argument("--commodities", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--config", default=None, help="generator-config JSON file")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("paths", help="list feasible paths per commodity")
    p.add_argument("instance")
    p.set_defaults(func=_cmd_paths)

    p = sub.add_parser("classify", help="strong/weak classification of a usage vector")
    p.add_argument("instance")
    p.add_argument("--w", required=True, help="comma-separated integers")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("plot", help="sample follower reactions over a toll grid (CSV)")
    p.add_argument("instance")
    p.add_argument("--box", required=True, help="per-axis lo:hi, comma-separated")
    p.add_argument("--resolution", type=int, required=True)
    p.set_defaults(func=_cmd_plot)

    p = sub.add_parser("bench", help="desk-scale cut-effectiveness experiment")
    p.add_argument("--L-list", dest="l_list", required=True)
    p.add_argument("--N-list", dest="n_list", required=True)
    p.add_argument("--seeds", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--commodities", type=int, default=3)
    p.add_argument("--tolled-fraction", type=float, default=0.125)
    p.add_argument("--time-limit", type=float, default=None)
    p.add_argument("--gap", type=float, default=0.0)
    p.set_defaults(func=_cmd_bench)
    return parser


def run(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (NetPricingError, FileNotFoundError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main(argv=None) -> int:
    return run(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
