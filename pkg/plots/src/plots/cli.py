"""Command line front end: plot <csv> --kind K --window a,b --out file.png"""

import argparse
import sys

from . import KINDS, FigureSpec, PlotError, plot


def _window_arg(text):
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("window must be 'a,b'")
    return (float(parts[0]), float(parts[1]))


def main(argv=None):
    parser = argparse.ArgumentParser(prog="plot")
    parser.add_argument("csv")
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--window", type=_window_arg, required=True)
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)

    try:
        spec = FigureSpec(csv=args.csv, kind=args.kind,
                          window=args.window, out=args.out)
        fits = plot(spec)
    except PlotError as exc:
        print("plot error: %s" % exc, file=sys.stderr)
        return 1
    for name in sorted(fits):
        expo, r2 = fits[name]
        print("probe=%s window=[%g,%g] exponent=%.6f r2=%.6f"
              % (name, spec.window[0], spec.window[1], expo, r2))
    print("wrote %s" % args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
