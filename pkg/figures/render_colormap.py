#!/usr/bin/env python3
"""Render a gamma,delta,g2_0 sweep CSV as a log-color heatmap.

usage: render_colormap.py --in sweep.csv --out map.png [--linear] [--title T]
"""

import argparse
import sys

from blockade_figures import FigureSpec, SchemaError, render_colormap


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--in", dest="inputs", required=True, help="sweep CSV (gamma,delta,g2_0)")
    p.add_argument("--out", dest="output", required=True, help="image path (.png or .svg)")
    p.add_argument("--linear", action="store_true", help="linear color scale")
    p.add_argument("--title", default="")
    args = p.parse_args(argv)
    try:
        path = render_colormap(FigureSpec(inputs=(args.inputs,), kind="colormap",
                                          output=args.output, log_color=not args.linear,
                                          title=args.title))
    except (SchemaError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
