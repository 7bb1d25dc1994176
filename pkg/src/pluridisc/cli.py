"""Command line entry point: ``pluridisc <kind> [--config PATH] [flags]``."""
from __future__ import annotations

import argparse
import logging
import sys

from .config import ExperimentConfig
from .errors import PluriError
from .harness import report, run

DEFAULT_SETS = {
    "envelope": {"A": {"type": "ClosedDisc", "center": [0, 0], "radius": 0.5}},
    "disc-opt": {"A": {"type": "ClosedDisc", "center": [0, 0], "radius": 0.5}},
    "capacity": {"A": {"type": "ClosedDisc", "center": [0, 0], "radius": 0.5}},
    "boundary": {"U": {"type": "Arc", "start": 0, "end": "1/2", "closed": False}},
    "verify": {},
}
DEFAULT_POINTS = {"envelope": [0.7], "disc-opt": [0.7], "boundary": [0, 0.5], "capacity": [],
                  "verify": []}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pluridisc", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for kind in ("envelope", "disc-opt", "boundary", "capacity", "verify"):
        p = sub.add_parser(kind, help=f"run a {kind} experiment")
        p.add_argument("--config", help="JSON experiment file; flags override its fields")
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.add_argument("--grid-h", type=float, dest="grid_h")
        p.add_argument("--degree", type=int)
        p.add_argument("--restarts", type=int)
        p.add_argument("--samples", type=int, help="boundary samples M for sigma_f")
        p.add_argument("--tol", type=float)
    p = sub.add_parser("report", help="summarize result directories")
    p.add_argument("dir", nargs="?")
    p.add_argument("--out", help="same as the positional directory")
    return ap


def _config(args) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.load(args.config)
        base = cfg.to_dict()
        base["kind"] = args.command
    else:
        base = {"kind": args.command, "sets": DEFAULT_SETS[args.command],
                "points": DEFAULT_POINTS[args.command], "out": f"runs/{args.command}"}
    cfg = ExperimentConfig.from_dict(base)
    return cfg.with_overrides(seed=args.seed, out=args.out, grid_h=args.grid_h,
                              degree=args.degree, restarts=args.restarts,
                              samples=args.samples, tol=args.tol)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "report":
            target = args.dir or args.out
            if not target:
                print("report needs a directory", file=sys.stderr)
                return 2
            summary = report(target)
            print(summary.text())
            return 1 if summary.failed else 0
        rec = run(_config(args))
    except PluriError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for e in rec.failures:
        print(f"FAIL {e['row']}/{e['check']}: value={e.get('value')} threshold={e.get('threshold')}")
    print(f"{len(rec.ledger) - len(rec.failures)}/{len(rec.ledger)} checks passed")
    return 1 if rec.failures else 0


if __name__ == "__main__":
    sys.exit(main())
