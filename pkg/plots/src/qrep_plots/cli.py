"""Command-line wrapper: one figure per invocation."""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from .figures import FIGURE_KINDS, FigureSpec, PlotDataError, render


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qrep-plots",
        description="Render one figure from a sweep CSV table.",
    )
    parser.add_argument("kind", choices=FIGURE_KINDS, help="figure kind")
    parser.add_argument("csv_path", help="input CSV produced by the sweep CLI")
    parser.add_argument("out_path", help="output image (.png or .svg)")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        spec = FigureSpec(csv_path=args.csv_path, kind=args.kind, out_path=args.out_path)
        path = render(spec)
    except (PlotDataError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
