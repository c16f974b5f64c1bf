#!/usr/bin/env python3
"""Overlay one or more tau,g2[,stderr] CSVs as g2(tau) curves.

usage: render_tau_curves.py --in a.csv [--in b.csv ...] --out fig.png
       [--labels "LLPB,UPB,conventional"] [--guide 0.5] [--xmax 12]
"""

import argparse
import sys

from blockade_figures import FigureSpec, SchemaError, render_tau_curves


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--in", dest="inputs", action="append", required=True,
                   help="curve CSV; repeat for overlays")
    p.add_argument("--out", dest="output", required=True, help="image path (.png or .svg)")
    p.add_argument("--labels", default="", help="comma-separated legend labels")
    p.add_argument("--guide", type=float, default=None, help="horizontal guide level")
    p.add_argument("--xmax", type=float, default=None)
    p.add_argument("--title", default="")
    args = p.parse_args(argv)
    labels = tuple(s.strip() for s in args.labels.split(",")) if args.labels else ()
    try:
        path = render_tau_curves(FigureSpec(
            inputs=tuple(args.inputs), kind="tau-curves", output=args.output,
            labels=labels, guide_level=args.guide, title=args.title,
            xlim=(0.0, args.xmax) if args.xmax else None))
    except (SchemaError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
