"""Figure regeneration CLI.

Usage: render --figure fig3_profile --in outputs/ --out fig3.png
Input files are located by their conventional names inside --in;
--input name=path overrides individual inputs.
"""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_IDS, FigureSpec, render
from .readers import SchemaError

_ALIASES = {
    "fig2": "fig2_diffusivity",
    "fig3": "fig3_profile",
    "fig4": "fig4_slippage",
    "fig5": "fig5_impact_decay",
    "appendix": "appendix_price_path",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="render", description="Regenerate experiment figures from CSVs")
    parser.add_argument("--figure", required=True,
                        help=f"one of {FIGURE_IDS} (or fig2..fig5, appendix)")
    parser.add_argument("--in", dest="indir", required=True,
                        help="directory holding the experiment CSVs")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--input", action="append", default=[],
                        metavar="NAME=PATH",
                        help="override a named input file")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    figure = _ALIASES.get(args.figure, args.figure)
    inputs = {}
    for item in args.input:
        if "=" not in item:
            print(f"bad --input {item!r}: expected NAME=PATH", file=sys.stderr)
            return 2
        name, path = item.split("=", 1)
        inputs[name] = path
    try:
        spec = FigureSpec(figure=figure, indir=args.indir, out=args.out,
                          inputs=inputs)
        render(spec)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
