"""Command line: ``lieobs run|batch|check|rate``.

Exit codes: 0 ok, 1 invariant-suite failure, 2 validation, 3 divergence.
Set LIEOBS_OUTPUT_DIR to redirect all output files.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import sim
from .exceptions import UsageError


def _cmd_run(args) -> int:
    code = sim.run_scenario(args.scenario, args.out)
    if code == sim.EXIT_OK:
        print(f"ok: {args.scenario}")
    return code


def _cmd_batch(args) -> int:
    try:
        results = sim.run_batch(args.directory, args.out, args.workers)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return sim.EXIT_VALIDATION
    for path, code in results.items():
        print(f"{code}  {path}")
    return max(results.values())


def _cmd_check(args) -> int:
    from .checks import run_checks

    rows = run_checks()
    w = max(len(f"{m}: {n}") for m, n, _, _ in rows)
    for module, name, ok, detail in rows:
        print(f"{'PASS' if ok else 'FAIL'}  {f'{module}: {name}':<{w}}  {detail}")
    failed = sum(not ok for _, _, ok, _ in rows)
    print(f"{len(rows) - failed}/{len(rows)} checks passed")
    return sim.EXIT_CHECK if failed else sim.EXIT_OK


def _cmd_rate(args) -> int:
    try:
        cols = sim.read_csv(args.csv)
        if "t" not in cols or "cost" not in cols:
            raise UsageError("CSV needs 't' and 'cost' columns")
        rep = sim.fit_exponential_rate(cols["t"], cols["cost"], args.tail)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return sim.EXIT_VALIDATION
    print(json.dumps(rep.to_dict(), indent=2))
    return sim.EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lieobs", description="Invariant observers on SO(3) and SE(3).")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate one scenario file")
    r.add_argument("scenario")
    r.add_argument("-o", "--out", help=f"output directory (overrides ${sim.OUTPUT_ENV})")
    r.set_defaults(func=_cmd_run)

    b = sub.add_parser("batch", help="run every scenario in a directory concurrently")
    b.add_argument("directory")
    b.add_argument("-o", "--out")
    b.add_argument("-j", "--workers", type=int)
    b.set_defaults(func=_cmd_batch)

    c = sub.add_parser("check", help="run the invariant suites and print a pass/fail table")
    c.set_defaults(func=_cmd_check)

    t = sub.add_parser("rate", help="fit the exponential tail rate of an exported cost trace")
    t.add_argument("csv")
    t.add_argument("--tail", type=float, default=0.5, help="tail fraction in (0, 1]")
    t.set_defaults(func=_cmd_rate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
