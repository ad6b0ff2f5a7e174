"""Command line entry point.

Usage::

    relcalc run scenario.json [--json-out report.json] [--eps 1e-6]
    relcalc fuzz --dims 2..5 --trials 1000 --seed 42 --suite appendix [--json-out out.json]
    relcalc demo scaling-up

Exit codes: 0 when everything passes, 1 on a failed assertion or task
error, 2 on unusable input (bad scenario, unknown suite or demo).
"""

import argparse
from importlib import resources
import os
from pathlib import Path
import sys

from threadpoolctl import threadpool_limits

import numpy as np

from .fuzz import SUITES, fuzz, parse_dims
from .limits import LimitReport
from .scenario import DEFAULT_EPS, ScenarioError, load_path, run

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

# demo name -> closed-form answers printed next to the computed objects
DEMOS = {
    "scaling-up": (
        "T_n = sqrt(n) R with R of rank 2 on R^3",
        ["dom T = ker R = span{(2, -1, 1)}, and T = 0 there",
         "T*T = ker R x (ker R)-perp"],
    ),
    "scaling-down": (
        "K_n = (1/n) A with A invertible on R^3",
        ["K_inf = dom A x mul A = R^3 x {0}, the zero operator"],
    ),
    "truncation": (
        "A_k = spectral truncation of A = diag(1, 3) at k = 1, 2, 3",
        ["A_1 = A_2 = diag(1, 0), A_3 = diag(1, 3)",
         "T_k = (A_k)^(1/2): diag(1, 0), diag(1, 0), diag(1, sqrt 3)"],
    ),
    "pipeline": (
        "T_n = sqrt(n) T for a relation T with mul T = span{e3}",
        ["S_r has domain span{e2} and vanishes there",
         "H_inf = span{e2} x span{e1, e3} and H_inf,op = S_r* S_r"],
    ),
}


def _write(path, text):
    Path(path).write_text(text + "\n", encoding="utf-8")


def _fmt(m) -> str:
    m = np.asarray(m, dtype=float)
    if m.size == 0:
        return f"<{m.shape[0]}x{m.shape[1]} empty>"
    return np.array2string(np.where(np.abs(m) < 1e-12, 0.0, m), precision=4, suppress_small=True)


def _describe(result) -> list:
    """Short text rendering of a task result for the demo listing."""
    if isinstance(result, LimitReport):
        out = [f"dom_limit basis:\n{_fmt(result.dom_limit.basis)}"]
        if result.psd_limit is not None:
            out.append(f"limit graph basis (H coordinates over K coordinates):\n{_fmt(result.psd_limit.graph.basis)}")
        out.append(f"checks: {result.checks}")
        return out
    if isinstance(result, list):
        return [f"[{i + 1}]\n{_fmt(m)}" for i, m in enumerate(result)]
    if isinstance(result, np.ndarray):
        return [_fmt(result)]
    if hasattr(result, "graph"):
        return [f"graph basis:\n{_fmt(result.graph.basis)}"]
    return [repr(result)]


def cmd_run(args) -> int:
    try:
        scenario = load_path(args.file)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    report = run(scenario, eps=args.eps)
    for line in report.lines():
        print(line)
    if args.json_out:
        _write(args.json_out, report.dumps())
    return report.exit_code


def cmd_fuzz(args) -> int:
    try:
        dims = parse_dims(args.dims)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.suite != "all" and args.suite not in SUITES:
        print(f"error: unknown suite {args.suite!r}; choose from all, {', '.join(SUITES)}", file=sys.stderr)
        return EXIT_INPUT
    if args.trials < 0:
        print("error: --trials must be nonnegative", file=sys.stderr)
        return EXIT_INPUT
    report = fuzz(args.suite, dims, args.trials, args.seed, jobs=args.jobs)
    for line in report.lines():
        print(line)
    if args.json_out:
        _write(args.json_out, report.dumps())
    return report.exit_code


def demo_path(name: str):
    return resources.files("relcalc") / "scenarios" / f"{name}.json"


def cmd_demo(args) -> int:
    if args.name not in DEMOS:
        print(f"error: unknown demo {args.name!r}; choose from {', '.join(DEMOS)}", file=sys.stderr)
        return EXIT_INPUT
    title, answers = DEMOS[args.name]
    scenario = load_path(demo_path(args.name))
    report = run(scenario)
    print(f"demo {args.name}: {title}")
    print("closed form:")
    for a in answers:
        print(f"  {a}")
    print("computed:")
    for t in report.tasks:
        print(f"  [{t.status.upper()}] {t.label}")
        for block in _describe(t.result):
            print("    " + block.replace("\n", "\n    "))
    print(f"verdict: {report.verdict.upper()}")
    return report.exit_code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="relcalc", description="Finite-dimensional linear relation calculus.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute a scenario file")
    p.add_argument("file")
    p.add_argument("--json-out", default=None, help="write the full report as JSON")
    p.add_argument("--eps", type=float, default=DEFAULT_EPS,
                   help="default tolerance for expectations without their own 'tol'")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("fuzz", help="randomized identity checks")
    p.add_argument("--dims", default="1..4", help="dimension range A..B")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--suite", default="all")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes")
    p.add_argument("--json-out", default=None)
    p.set_defaults(func=cmd_fuzz)

    p = sub.add_parser("demo", help="run a bundled worked example")
    p.add_argument("name")
    p.set_defaults(func=cmd_demo)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors already
        return int(exc.code or 0)
    # the matrices are tiny; BLAS threads only add contention
    with threadpool_limits(limits=1):
        return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
