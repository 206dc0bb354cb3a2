"""Command line entry point.

    macrostab <experiment> --config <file> [--out <dir>] [--seed <u64>] [--threads <n>]

Exit codes: 0 success, 2 validation failure, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import os
import sys

from macrostab.config import EXPERIMENTS, ConfigError, load_config
from macrostab.experiments import run

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NONCONVERGENCE = 3

THREADS_ENV = "MACROSTAB_THREADS"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="macrostab",
                                     description="spin-chain stability experiments")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", required=True, help="flat key-value config file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config's master seed")
        p.add_argument("--threads", type=int, default=None,
                       help=f"worker threads (default: ${THREADS_ENV} or 1)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    threads = args.threads
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1"))
    if threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        config = load_config(text, seed_override=args.seed)
        if config.experiment != args.experiment:
            raise ConfigError(
                f"config says experiment={config.experiment!r}, "
                f"but {args.experiment!r} was requested")
        record = run(config, args.out, threads=threads)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    for name, rows in record.tables:
        print(f"wrote {os.path.join(args.out, name)} ({rows} rows)")
    if record.flags:
        for flag in record.flags:
            print(f"flag: {flag}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
