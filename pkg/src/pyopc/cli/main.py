# src/pyopc/cli/main.py
from __future__ import annotations

import argparse
import logging
import sys
from typing import List, Optional

from pyopc import __version__
from pyopc.cli.config import load_config
from pyopc.cli.pipeline import run_command
from pyopc.cli.store import DirectoryResultStore
from pyopc.errors import OPCError

logger = logging.getLogger("pyopc")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pyopc",
        description="Optimal investment, replication and portfolio compression in batch.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "simulate paths and write per-time summaries",
        "replicate": "calibrate, build and simulate the optimal strategy",
        "select": "enumerate subsets and select the best m stocks",
        "verify": "run every applicable check (exit 3 on failure)",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, metavar="PATH", help="YAML run configuration")
        p.add_argument("--out", metavar="DIR", help="output directory (overrides output.directory)")
        p.add_argument("--seed", type=int, metavar="N", help="overrides sim.seed")
        p.add_argument("--threads", type=int, metavar="N", help="worker threads; never changes results")
        level = p.add_mutually_exclusive_group()
        level.add_argument("-v", "--verbose", action="store_true", help="debug logging")
        level.add_argument("-q", "--quiet", action="store_true", help="warnings only")
    return parser


def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    logger.handlers[:] = [handler]
    logger.setLevel(level)
    logger.propagate = False


def main(argv: Optional[List[str]] = None) -> int:
    """
    명령 하나 실행
    종료 코드: 0 성공, 1 설정/검증, 2 보정, 3 검증 실패
    """
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    try:
        config = load_config(args.config).with_overrides(seed=args.seed, out=args.out, threads=args.threads)
        store = DirectoryResultStore(config.output.directory)
        result = run_command(args.command, config, store)
    except OPCError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code

    line = f"{result.command}: wrote {len(result.files)} file(s) to {config.output.directory}"
    if result.reports:
        passed = sum(r.passed for r in result.reports)
        line += f"; {passed}/{len(result.reports)} check(s) passed"
    print(line)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
