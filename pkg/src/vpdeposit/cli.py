"""Command line entry point.

Exit codes: 0 success, 1 configuration error, 2 timestep (one cell per
step) violation, 3 equivalence failure in ``compare``.
"""

from __future__ import annotations

import argparse
import re
import sys

from .config import load_config
from .driver import run_scenario
from .errors import CFLViolation, ConfigError, GeometryError
from .mesh import BlockBounds
from .mirrors import generate_mirrors

EXIT_CONFIG = 1
EXIT_CFL = 2
EXIT_MISMATCH = 3
EQUIVALENCE_TOL = 1e-12


def _fmt(v) -> str:
    return "<" + ",".join(f"{x:g}" for x in v) + ">"


def _parse_point(text):
    parts = [p for p in re.split(r"[\s,<>()\[\]]+", text.strip()) if p]
    return tuple(float(p) for p in parts)


def _mirrors(args) -> int:
    bounds = BlockBounds(tuple(args.lo), tuple(args.hi))
    delta = tuple(args.delta)
    ndim = len(bounds.lo)
    if len(bounds.hi) != ndim or len(delta) != ndim:
        print("--lo, --hi and --delta need the same number of values", file=sys.stderr)
        return EXIT_CONFIG
    points = [tuple(args.point)] if args.point else None
    if points is None:
        if sys.stdin.isatty():
            print(f"enter {ndim} coordinates per line (Ctrl-D to finish)", file=sys.stderr)
        points = []
        for line in sys.stdin:
            if line.strip():
                try:
                    points.append(_parse_point(line))
                except ValueError:
                    print(f"cannot parse point: {line.strip()!r}", file=sys.stderr)
                    return EXIT_CONFIG
    for p in points:
        if len(p) != ndim:
            print(f"point {p} does not have {ndim} coordinates", file=sys.stderr)
            return EXIT_CONFIG
        try:
            ms = generate_mirrors(p, bounds, delta)
        except CFLViolation as exc:
            print(str(exc), file=sys.stderr)
            return EXIT_CFL
        listing = ", ".join(_fmt(m) for m in ms) if ms else "none"
        print(f"{_fmt(p)} has {len(ms)} mirror{'s' if len(ms) != 1 else ''}: {listing}")
    return 0


def _run(args, compare: bool) -> int:
    try:
        scenario = load_config(args.config)
        strategies = ("virtual", "baseline") if compare else None
        run = run_scenario(scenario, args.output, strategies)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CFLViolation as exc:
        print(f"timestep violation: {exc}", file=sys.stderr)
        return EXIT_CFL
    except GeometryError as exc:
        print(f"geometry error: {exc}", file=sys.stderr)
        return EXIT_CFL
    out = args.output or scenario.output or "out"
    for strategy, results in run.results.items():
        total = sum(r.stats.messages for r in results)
        print(f"{strategy}: {len(results)} step(s), {total} message(s)")
    if run.diffs:
        print(f"max |virtual - baseline| = {run.max_diff:.3e}")
    print(f"artifacts written to {out}")
    if compare and run.max_diff > EQUIVALENCE_TOL:
        print(f"equivalence failure: {run.max_diff:.3e} > {EQUIVALENCE_TOL:g}", file=sys.stderr)
        return EXIT_MISMATCH
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vpdeposit",
        description="Virtual-particle vs halo CIC deposition on block meshes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("run", "run the strategies listed in the config"),
                       ("compare", "run both strategies and check they agree")):
        p = sub.add_parser(name, help=text)
        p.add_argument("config", help="scenario TOML file")
        p.add_argument("-o", "--output", help="output directory (overrides run.output)")
    m = sub.add_parser("mirrors", help="print the mirrors of points near block faces")
    m.add_argument("--lo", type=float, nargs="+", required=True, help="block lower bounds")
    m.add_argument("--hi", type=float, nargs="+", required=True, help="block upper bounds")
    m.add_argument("--delta", type=float, nargs="+", required=True, help="cell size per axis")
    m.add_argument("--point", type=float, nargs="+",
                   help="coordinates; read one point per line from stdin when omitted")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "mirrors":
        return _mirrors(args)
    return _run(args, compare=args.command == "compare")


if __name__ == "__main__":
    sys.exit(main())
