"""plotviz command line: render --kind <k> --in <csv...> --out <img>."""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, FigureSpec, render
from .schemas import SchemaError


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plotviz",
        description="Render safety-bound experiment CSVs into figures.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure")
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--in", dest="inputs", nargs="+", required=True,
                   help="input CSV file(s); trajectories takes summary then paths")
    p.add_argument("--out", required=True, help="output image path")
    p.add_argument("--log-y", action="store_true", help="log scale on probability axes")
    p.add_argument("--xlabel")
    p.add_argument("--ylabel")
    args = parser.parse_args(argv)

    options = {"log_y": args.log_y}
    if args.xlabel:
        options["xlabel"] = args.xlabel
    if args.ylabel:
        options["ylabel"] = args.ylabel
    spec = FigureSpec(
        kind=args.kind, inputs=tuple(args.inputs), output=args.out, options=options
    )
    try:
        path = render(spec)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(path, file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
