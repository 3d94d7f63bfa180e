"""Command-line entry point: ``spi-lab <subcommand> [flags]``.

Exit codes: 0 on pass, 1 when a checked inequality fails, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import bounds, lemmas
from .constraints import FamilyPolytope, UniformMatroid, constraint_from_json
from .continuous_greedy import mcg_bound
from .errors import SpiLabError
from .io import function_from_json
from .ocrs import estimate_selectability, make_ocrs
from .spi import (
    ExperimentReport,
    experiment_config_from_json,
    instance_from_json,
    prophet_opt_exact,
    run_experiment,
)
from .submodular import concave_closure_value, multilinear_exact

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _emit(args, rows: list[list], header: list[str] | None = None, payload=None) -> None:
    if args.format == "json":
        if payload is None:
            payload = [dict(zip(header, r)) for r in rows] if header else rows
        text = json.dumps(payload, indent=2, sort_keys=True, default=_fmt) + "\n"
    else:
        buf = _io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if header:
            w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
        text = buf.getvalue()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_config(args) -> tuple[dict, Path]:
    if not args.config:
        raise UsageError(f"{args.command} needs --config PATH")
    path = Path(args.config)
    if not path.exists():
        raise UsageError(f"config file not found: {path}")
    return json.loads(path.read_text()), path.parent


def cmd_gap(args) -> int:
    """Correlation-gap check on {"function": {...}, "x": [...]} (x optional)."""
    spec, _ = _load_config(args)
    fspec = spec.get("function", spec)
    f = function_from_json(fspec, fspec.get("n"))
    if "x" in spec:
        xs = [np.asarray(spec["x"], dtype=float)]
    else:
        rng = np.random.default_rng(args.seed)
        xs = [rng.random(f.n) * rng.random() for _ in range(args.reps or 20)]
    rows, ok = [], True
    for x in xs:
        F = multilinear_exact(f, x)
        fp = concave_closure_value(f, x)
        p = float(x.max()) if x.size else 0.0
        lower = (1.0 - p) * (1.0 - 1.0 / math.e) * fp
        ratio = F / fp if fp > 0 else 1.0
        passed = F >= lower - 1e-9 and F <= fp + 1e-9
        ok &= passed
        rows.append([F, fp, ratio, p, lower, passed])
    _emit(args, rows, ["F", "closure", "ratio", "p", "lower_bound", "pass"])
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_mcg_bound(args) -> int:
    if args.p is None or args.b is None:
        raise UsageError("mcg-bound needs --p and --b")
    print(_fmt(mcg_bound(args.p, args.b)))
    return EXIT_PASS


def cmd_table1(args) -> int:
    rows = [r.csv_fields() for r in bounds.table1(args.k)]
    _emit(args, rows, bounds.TABLE_HEADER)
    return EXIT_PASS


def cmd_simulate(args) -> int:
    spec, base = _load_config(args)
    if args.seed is not None:
        spec["seed"] = args.seed
    if args.reps is not None:
        spec["reps"] = args.reps
    if args.b is not None:
        spec["b"] = args.b
    report = run_experiment(experiment_config_from_json(spec, base))
    if args.format == "json":
        text = report.to_json() + "\n"
    else:
        buf = _io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(ExperimentReport.CSV_FIELDS)
        w.writerow(report.csv_row())
        text = buf.getvalue()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_PASS if report.passed else EXIT_FAIL


def cmd_verify_lemmas(args) -> int:
    reports = lemmas.verify_lemmas(args.reps or 100, args.seed or 0)
    rows = [[r.name, r.cases, r.violations, r.worst_slack, r.passed] for r in reports]
    _emit(args, rows, ["lemma", "cases", "violations", "min_slack", "pass"])
    return EXIT_PASS if all(r.passed for r in reports) else EXIT_FAIL


def cmd_opt(args) -> int:
    spec, _ = _load_config(args)
    inst = instance_from_json(spec.get("instance", spec))
    _emit(args, [[prophet_opt_exact(inst)]], ["opt"])
    return EXIT_PASS


def cmd_selectability(args) -> int:
    """Selectability report for {"constraint": {...}, "n": N, "x": [...], "b": B}
    or, without --config, a uniform matroid given by --k and --b over --n elements."""
    if args.config:
        spec, _ = _load_config(args)
        n = int(spec.get("n", len(spec["x"]) if "x" in spec else 0))
        C = constraint_from_json(spec["constraint"], n)
        b = float(spec.get("b", args.b if args.b is not None else 0.5))
        x = np.asarray(spec["x"], dtype=float) if "x" in spec else None
    else:
        if args.k is None:
            raise UsageError("selectability needs --config or --k")
        n = args.n or max(2 * args.k, 4)
        C = UniformMatroid(n, args.k)
        b = args.b if args.b is not None else 0.5
        x = None
    if x is None:
        x = np.full(C.n, b * C.rank((1 << C.n) - 1) / C.n)
    P = FamilyPolytope(C)
    trials = args.reps or 100_000
    est = estimate_selectability(make_ocrs, P, b, x, trials, args.seed or 0)
    pi = make_ocrs(P, b, x, args.seed or 0)
    lit = pi.literature_c(b) if pi.literature_c else None
    ok = True
    rows = []
    for e in range(C.n):
        passed = lit is None or est.mean[e] >= lit - 3 * est.stderr[e]
        ok &= bool(passed)
        rows.append([e, float(est.mean[e]), float(est.stderr[e]), "" if lit is None else lit, passed])
    _emit(args, rows, ["element", "estimate", "stderr", "literature_c", "pass"])
    return EXIT_PASS if ok else EXIT_FAIL


COMMANDS = {
    "gap": cmd_gap,
    "mcg-bound": cmd_mcg_bound,
    "table1": cmd_table1,
    "simulate": cmd_simulate,
    "verify-lemmas": cmd_verify_lemmas,
    "opt": cmd_opt,
    "selectability": cmd_selectability,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spi-lab", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON input file")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--p", type=float, default=None)
    common.add_argument("--b", type=float, default=None)
    common.add_argument("--k", type=int, default=None)
    common.add_argument("--n", type=int, default=None)
    common.add_argument("--reps", type=int, default=None)
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=(fn.__doc__ or name).splitlines()[0])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    try:
        return COMMANDS[args.command](args)
    except (UsageError, SpiLabError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"spi-lab {args.command}: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
