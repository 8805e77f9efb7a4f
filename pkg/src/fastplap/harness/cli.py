"""Command line entry point: ``fastplap solve|check|sweep|selftest|report``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from typing import Optional, Sequence

from ..estimates.core import HypothesisError
from .config import ConfigError, load_spec
from .runner import SUITES, read_report, run_spec, selftest, sweep_spec


def _values(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fastplap", description="Fast p-Laplacian experiments and estimate checks.")
    sub = ap.add_subparsers(dest="command", required=True)

    for name, help_ in (("solve", "solve only, write the trajectory series"), ("check", "solve and run every listed check")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("spec")
        sp.add_argument("--out", help="directory for checks.csv, report.json, summary.txt, plot_data.csv")

    sp = sub.add_parser("sweep", help="one run per parameter value plus cross-run rows")
    sp.add_argument("spec")
    sp.add_argument("--param", required=True, choices=("lambda", "p", "R", "grid_points", "eps"))
    sp.add_argument("--values", required=True, type=_values)
    sp.add_argument("--out")

    sp = sub.add_parser("selftest", help="inequality-lab suites")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--draws", type=int, default=1_000_000)
    sp.add_argument("--suites", default=",".join(SUITES), help="comma-separated subset; empty for none")
    sp.add_argument("--inject-cp", type=float, default=None, dest="inject_cp",
                    help="debug: replace the cp constant to show the suite detects a wrong value")
    sp.add_argument("--out")

    sp = sub.add_parser("report", help="print the summary of a report directory")
    sp.add_argument("dir")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            rows, summary = read_report(args.dir)
            sys.stdout.write(summary or "".join(f"{r['verdict']}  {r['name']}\n" for r in rows))
            return 0 if all(r["verdict"] == "pass" for r in rows) else 1
        if args.command == "selftest":
            suites = [s.strip() for s in args.suites.split(",") if s.strip()]
            rep = selftest(args.seed, suites, cp_override=args.inject_cp, draws=args.draws)
        else:
            spec = load_spec(args.spec)
            if args.command == "solve":
                spec = replace(spec, checks=())
                rep = run_spec(spec)
            elif args.command == "check":
                rep = run_spec(spec)
            else:
                rep = sweep_spec(spec, args.param, args.values)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except HypothesisError as exc:
        print(f"hypothesis error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if getattr(args, "out", None):
        rep.write(args.out)
    sys.stdout.write(rep.summary())
    return 0 if rep.passed else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
