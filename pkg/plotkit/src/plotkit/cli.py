"""Command line entry point: render figure sets from a sweep CSV."""

from __future__ import annotations

import argparse
import sys

from .figures import FIGSETS, PlotError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plots", description="Render protocol comparison figures from a sweep CSV."
    )
    parser.add_argument("--csv", required=True, help="sweep CSV produced by the sweep tool")
    parser.add_argument(
        "--figset",
        required=True,
        choices=sorted(FIGSETS) + ["all"],
        help="which figure to render, or 'all'",
    )
    parser.add_argument("--out", required=True, help="output directory for images")
    args = parser.parse_args(argv)

    names = sorted(FIGSETS) if args.figset == "all" else [args.figset]
    try:
        for name in names:
            path = render(args.csv, FIGSETS[name], args.out)
            print(path)
    except PlotError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
