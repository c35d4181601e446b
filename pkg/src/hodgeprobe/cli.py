"""Command-line front end.

Exit codes: 0 success, 1 a predicted invariant failed, 2 parse error,
3 validation error (including unknown catalog labels).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .abelian import catalog_labels, elementary_divisors, from_catalog
from .errors import ParseError, UnknownLabel, ValidationError
from .exact_linalg import format_matrix
from .scenario import CHECKS, check_scenario, parse_scenario

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_INVALID = 0, 1, 2, 3


def _field_name(d: int) -> str:
    return "Q(i)" if not d else f"Q(sqrt{d}, i)"


def _load(args):
    try:
        text = Path(args.scenario).read_text()
    except OSError as exc:
        raise ParseError(f"{args.scenario}: {exc.strerror}") from None
    sc = parse_scenario(text)
    if getattr(args, "check", None):
        sc.checks = list(args.check)
    if getattr(args, "budget_terms", None) is not None:
        sc.budget_terms = args.budget_terms
    if getattr(args, "budget_monomials", None) is not None:
        sc.budget_monomials = args.budget_monomials
    if sc.budget_terms <= 0 or sc.budget_monomials <= 0:
        raise ValidationError("budgets: must be positive")
    check_scenario(sc)
    return sc


def cmd_validate(args) -> int:
    from .runner import run

    sc = _load(args)
    sc.checks = ["validate"]
    report = run(sc)
    if not args.quiet:
        print(f"scenario ok; variety validation: {report['checks'][0]['status']}")
    return report["exit_code"]


def cmd_run(args) -> int:
    from .runner import dumps, run, summary, validate_report

    sc = _load(args)
    report = run(sc, timings=args.timings)
    validate_report(report)
    out = args.out or sc.output
    text = dumps(report)
    if out:
        Path(out).write_text(text)
    if not args.quiet:
        print(summary(report))
        if not out:
            print(text, end="")
    return report["exit_code"]


def cmd_catalog(args) -> int:
    if args.action == "list":
        print(f"{'label':<10}{'n':<4}{'field':<16}divisors")
        for label in catalog_labels():
            A = from_catalog(label)
            print(f"{label:<10}{A.n:<4}{_field_name(A.d):<16}{elementary_divisors(A)}")
        return EXIT_OK
    if not args.label:
        raise ValidationError("catalog show needs a label")
    A = from_catalog(args.label)
    print(f"{A.label}: n = {A.n}, field {_field_name(A.d)}, divisors {elementary_divisors(A)}")
    for name, M in (("J", A.J), ("E", A.E)):
        print(f"{name} =")
        for row in format_matrix(M):
            print("  [" + ", ".join(f"{x:>6}" for x in row) + "]")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hodgeprobe", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_args(p):
        p.add_argument("--scenario", required=True, help="TOML scenario file")
        p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("validate", help="parse a scenario and validate its variety")
    scenario_args(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="run a scenario and emit a JSON report")
    scenario_args(p)
    p.add_argument("--check", action="append", choices=CHECKS, help="overrides the file; repeatable")
    p.add_argument("--budget-terms", type=int)
    p.add_argument("--budget-monomials", type=int)
    p.add_argument("--out", help="write the JSON report here")
    p.add_argument("--timings", action="store_true", help="include wall-clock timings")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("catalog", help="list or show built-in varieties")
    p.add_argument("action", choices=("list", "show"))
    p.add_argument("label", nargs="?")
    p.set_defaults(func=cmd_catalog)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ValidationError, UnknownLabel) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
