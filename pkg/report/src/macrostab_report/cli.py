"""Command line entry point.

    macrostab-report --kind <KIND> --in <csv...> --out <image>

Exit codes: 0 success, 2 invalid input (bad schema, missing file).
"""

from __future__ import annotations

import argparse
import sys

from macrostab_report.figures import render
from macrostab_report.schemas import FigureKind, FigureSpec, SchemaError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="macrostab-report",
                                     description="render experiment CSVs as figures")
    parser.add_argument("--kind", required=True,
                        choices=[kind.value for kind in FigureKind])
    parser.add_argument("--in", dest="inputs", required=True, nargs="+",
                        help="input CSV file(s); order is documented per kind")
    parser.add_argument("--out", required=True, help="output image path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec(FigureKind(args.kind), tuple(args.inputs), args.out)
        annotations = render(spec)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    notes = ", ".join(annotations.values())
    print(f"wrote {args.out}" + (f" ({notes})" if notes else ""))
    return 0


if __name__ == "__main__":
    sys.exit(main())
