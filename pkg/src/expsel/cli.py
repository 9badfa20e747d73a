"""Command-line front end: ``expsel run | compare | sweep | selftest``.

Exit codes: 0 success, 1 selftest failure, 2 parse/validation failure,
3 condition unreachable, 4 enumeration cap exceeded, 5 missing auxiliary
events for the requested prescription.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time

import numpy as np

from . import acceptance, prescriptions, scenario, wignerfriend
from .tables import ConditionUnreachable, IllPosedSelection, PathCapExceeded, ProbabilityTable

EXIT_OK, EXIT_SELFTEST, EXIT_INVALID, EXIT_UNREACHABLE, EXIT_CAP, EXIT_AUX = 0, 1, 2, 3, 4, 5


def fmt(p: float) -> str:
    return f"{p:.12f}"


def _rounded(p: float) -> float:
    return float(fmt(p))


def _table_json(table: ProbabilityTable) -> dict:
    return {
        "labels": [str(label) for label in table.labels],
        "probabilities": [_rounded(p) for p in table.probabilities],
        "normalization": float(f"{table.normalization:.12e}"),
    }


def _table_text(table: ProbabilityTable) -> list[str]:
    return [f"{label} {fmt(p)}" for label, p in zip(table.labels, table.probabilities)]


def _emit_run(args, doc, table, elapsed_ms) -> str:
    kind = doc.kind
    if args.format == "json":
        report = {"engine": args.engine, "prescription": kind, "table": _table_json(table)}
        if args.timing:
            report["wall_time_ms"] = elapsed_ms
        return json.dumps(report, sort_keys=True, indent=2) + "\n"
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["label", "probability"])
        for label, p in zip(table.labels, table.probabilities):
            w.writerow([label, fmt(p)])
        return buf.getvalue()
    lines = [f"# engine={args.engine} prescription={kind}", *_table_text(table)]
    lines.append(f"# normalization={table.normalization:.12e}")
    if args.timing:
        lines.append(f"# wall_time_ms={elapsed_ms:.3f}")
    return "\n".join(lines) + "\n"


def cmd_run(args) -> int:
    doc = scenario.load(args.file)
    start = time.perf_counter()
    table = scenario.run(doc, args.engine)
    elapsed = 1000 * (time.perf_counter() - start)
    sys.stdout.write(_emit_run(args, doc, table, elapsed))
    return EXIT_OK


def cmd_compare(args) -> int:
    doc = scenario.load(args.file)
    a = scenario.run(doc, args.engine)
    b = scenario.run(doc, args.engine, kind=args.against)
    div = prescriptions.compare(a, b)
    if args.format == "json":
        report = {
            "engine": args.engine,
            "a": {"prescription": doc.kind, "table": _table_json(a)},
            "b": {"prescription": args.against, "table": _table_json(b)},
            "divergence": {
                "max_abs_diff": _rounded(div.max_abs_diff),
                "total_variation": _rounded(div.total_variation),
            },
        }
        sys.stdout.write(json.dumps(report, sort_keys=True, indent=2) + "\n")
    elif args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["label", doc.kind, args.against])
        for label, pa, pb in div.per_label:
            w.writerow([label, fmt(pa), fmt(pb)])
        w.writerow(["max_abs_diff", fmt(div.max_abs_diff), ""])
        w.writerow(["total_variation", fmt(div.total_variation), ""])
        sys.stdout.write(buf.getvalue())
    else:
        lines = [f"# engine={args.engine}", f"# A: {doc.kind}", *_table_text(a), f"# B: {args.against}", *_table_text(b)]
        lines += [f"max_abs_diff {fmt(div.max_abs_diff)}", f"total_variation {fmt(div.total_variation)}"]
        sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_sweep(args) -> int:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["theta", "phi", "p00", "p01", "p10", "p11", "alpha_sq_0", "alpha_sq_1"])
    worst = 0.0
    for th, ph in wignerfriend.grid(args.theta_steps, args.phi_steps):
        scn = wignerfriend.build_scenario(th, ph)
        row = [fmt(th), fmt(ph)]
        for i in (0, 1):
            target = np.array([acceptance.alpha_sq(th, i), acceptance.beta_sq(th, i)])
            try:
                p = wignerfriend.wigner_table(scn, 2, i, engine=args.engine).probabilities
            except ConditionUnreachable:
                row += ["nan", "nan"]
                continue
            worst = max(worst, float(np.max(np.abs(p - target))))
            row += [fmt(p[0]), fmt(p[1])]
        row += [fmt(acceptance.alpha_sq(th, 0)), fmt(acceptance.alpha_sq(th, 1))]
        w.writerow(row)
    buf.write(f"# max_deviation={worst:.3e}\n")
    sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_selftest(args) -> int:
    ok = acceptance.run_all(workers=args.workers, stream=sys.stdout)
    return EXIT_OK if ok else EXIT_SELFTEST


def _positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return n


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--workers", type=_positive, default=None, help="path-sum worker threads")
    parser = argparse.ArgumentParser(prog="expsel", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="evaluate a scenario file")
    run.add_argument("file")
    run.add_argument("--engine", choices=scenario.ENGINES, default="operator")
    run.add_argument("--format", choices=("text", "csv", "json"), default="text")
    run.add_argument("--timing", action="store_true", help="include wall time (breaks byte-identical output)")
    run.set_defaults(func=cmd_run)

    cmp_ = sub.add_parser("compare", parents=[common], help="compare the document's prescription with another")
    cmp_.add_argument("file")
    cmp_.add_argument("--against", choices=prescriptions.KINDS, required=True)
    cmp_.add_argument("--engine", choices=scenario.ENGINES, default="operator")
    cmp_.add_argument("--format", choices=("text", "csv", "json"), default="text")
    cmp_.set_defaults(func=cmd_compare)

    sweep = sub.add_parser("sweep", parents=[common], help="Wigner t=2 tables over a (theta, phi) grid")
    sweep.add_argument("--theta-steps", type=_positive, default=9)
    sweep.add_argument("--phi-steps", type=_positive, default=9)
    sweep.add_argument("--format", choices=("csv",), default="csv")
    sweep.add_argument("--engine", choices=scenario.ENGINES, default="operator")
    sweep.set_defaults(func=cmd_sweep)

    st = sub.add_parser("selftest", parents=[common], help="run the acceptance suite")
    st.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.workers is not None:
        os.environ["EXPSEL_WORKERS"] = str(args.workers)
    else:
        args.workers = int(os.environ.get("EXPSEL_WORKERS", "1"))
    try:
        return args.func(args)
    except scenario.ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ConditionUnreachable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNREACHABLE
    except PathCapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except scenario.MissingAuxiliary as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_AUX
    except (IllPosedSelection, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
