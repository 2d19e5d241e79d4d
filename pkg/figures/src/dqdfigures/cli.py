"""render_fig: draw a heatmap figure from a phase-shift map CSV.

Exit codes: 0 on success, 1 on bad input (schema mismatch, unreadable file).
"""

from __future__ import annotations

import argparse
import sys

from .core import FigureRecipe, SchemaError, render

_KIND_BY_NAME = {
    "sweep": "heatmap_with_isolines",
    "pulse": "pulse_map",
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="render_fig",
        description="Render a phase-shift map CSV as a heatmap image.",
    )
    parser.add_argument("--kind", required=True, choices=sorted(_KIND_BY_NAME))
    parser.add_argument("--in", dest="csv_path", required=True, help="input CSV file")
    parser.add_argument("--out", dest="out_path", required=True, help="output image file")
    parser.add_argument("--vmin", type=float, default=None, help="color floor in degrees")
    parser.add_argument("--vmax", type=float, default=None, help="color ceiling in degrees")
    args = parser.parse_args(argv)

    try:
        recipe = FigureRecipe(
            csv_path=args.csv_path,
            kind=_KIND_BY_NAME[args.kind],
            out_path=args.out_path,
            vmin=args.vmin,
            vmax=args.vmax,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    try:
        path = render(recipe)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
