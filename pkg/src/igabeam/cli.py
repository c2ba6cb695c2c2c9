"""Command line interface: run, converge, bench.

    igabeam run model.json --out results/
    igabeam converge master.json --degrees 3,4,5 --levels 5 --out conv/
    igabeam bench mainspring --n 1 --h 0.05 --model D1 --out mainspring.json

``run`` writes path.csv, one profile CSV per section probe, and
summary.json; on solver failure the partial path is still written and the
exit code is nonzero.  ``bench`` emits a ready-to-run model document for
one of the built-in benchmarks.  Everything is deterministic.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import model_io
from .errors import SolverError, ValidationError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SOLVER = 3


def _load_model(path: str) -> model_io.ModelFile:
    with open(path) as f:
        return model_io.parse_model(f.read())


def _cmd_run(args) -> int:
    try:
        model = _load_model(args.model)
    except ValidationError as exc:
        for issue in exc.issues:
            print(f"error: {issue}", file=sys.stderr)
        return EXIT_VALIDATION
    asm = model_io.build_assembler(model)
    trackers = model_io.build_trackers(model, asm)
    runner = (
        model_io.newton_run if model.solver.method == "newton" else model_io.arclength_run
    )
    try:
        records = runner(asm, model.solver, trackers)
    except SolverError as exc:
        if exc.records:
            model_io.write_run_outputs(args.out, model, exc.records, asm, trackers)
            print(f"partial results written to {args.out}", file=sys.stderr)
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    summary = model_io.write_run_outputs(args.out, model, records, asm, trackers)
    print(
        f"converged path with {summary['steps']} steps to LPF "
        f"{summary['final_lpf']:.6g}; {len(summary['limit_points'])} limit points"
    )
    print(f"results written to {args.out}")
    return EXIT_OK


def _cmd_converge(args) -> int:
    try:
        model = _load_model(args.model)
        degrees = [int(d) for d in args.degrees.split(",") if d]
        results = model_io.convergence_study(
            model, degrees, args.levels, reference=args.reference
        )
    except ValidationError as exc:
        for issue in exc.issues:
            print(f"error: {issue}", file=sys.stderr)
        return EXIT_VALIDATION
    except SolverError as exc:
        print(f"solver failure during study: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    os.makedirs(args.out, exist_ok=True)
    for p, rows in results.items():
        path = os.path.join(args.out, f"convergence_p{p}.csv")
        model_io.write_convergence_csv(path, rows)
        print(f"degree {p}: {len(rows)} meshes -> {path}")
    return EXIT_OK


def _add_common_bench(sub):
    sub.add_argument("--model", default=None, help="constitutive model D0..Da")
    sub.add_argument("--out", default=None, help="output JSON path")


def _cmd_bench(args) -> int:
    kwargs = {}
    if args.model:
        kwargs["model"] = args.model
    if args.name == "mainspring":
        kwargs.update(n=args.n, h=args.h)
        if args.degree is not None:
            kwargs["degree"] = args.degree
        if args.elements is not None:
            kwargs["elements"] = args.elements
        if args.increments is not None:
            kwargs["n_increments"] = args.increments
        if args.force_update is not None:
            kwargs["force_update"] = args.force_update
    elif args.name in ("lee", "arch"):
        kwargs["case"] = args.case
    try:
        model = model_io.benchmark_model(args.name, **kwargs)
    except ValidationError as exc:
        for issue in exc.issues:
            print(f"error: {issue}", file=sys.stderr)
        return EXIT_VALIDATION
    out = args.out or f"{args.name}.json"
    with open(out, "w") as f:
        f.write(model_io.serialize_model(model) + "\n")
    print(f"model written to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="igabeam",
        description="Rotation-free isogeometric analysis of curved planar beams",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="solve a model and write result tables")
    p_run.add_argument("model", help="model JSON document")
    p_run.add_argument("--out", default="out", help="output directory")
    p_run.set_defaults(func=_cmd_run)

    p_conv = sub.add_parser("converge", help="mesh refinement study")
    p_conv.add_argument("model", help="single-patch master model JSON")
    p_conv.add_argument("--degrees", default="3,4,5", help="comma-separated degrees")
    p_conv.add_argument("--levels", type=int, default=5, help="number of meshes per degree")
    p_conv.add_argument(
        "--reference", choices=("analytic", "fine"), default="analytic"
    )
    p_conv.add_argument("--out", default="out", help="output directory")
    p_conv.set_defaults(func=_cmd_converge)

    p_bench = sub.add_parser("bench", help="emit a built-in benchmark model")
    bench_sub = p_bench.add_subparsers(dest="name", required=True)

    b_main = bench_sub.add_parser("mainspring", help="moment-loaded roll-up cantilever")
    b_main.add_argument("--n", type=int, default=1, help="number of circles at LPF=1")
    b_main.add_argument("--h", type=float, default=0.05, help="square section size")
    b_main.add_argument("--degree", type=int, default=None)
    b_main.add_argument("--elements", type=int, default=None)
    b_main.add_argument("--increments", type=int, default=None)
    b_main.add_argument("--force-update", dest="force_update", default=None)
    _add_common_bench(b_main)
    b_main.set_defaults(func=_cmd_bench)

    b_lee = bench_sub.add_parser("lee", help="Lee's frame")
    b_lee.add_argument("--case", choices=("LF", "LF1", "LF2"), default="LF")
    _add_common_bench(b_lee)
    b_lee.set_defaults(func=_cmd_bench)

    b_arch = bench_sub.add_parser("arch", help="parabolic arch, apex point load")
    b_arch.add_argument("--case", choices=("R1", "R2", "R3", "R4"), default="R1")
    _add_common_bench(b_arch)
    b_arch.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
