"""plots command: render one figure kind from the laboratory's CSV files."""

import argparse
import sys

from .figures import FIGURES, SchemaMismatch, render


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="plots",
        description="Render a static figure from make-take CSV outputs.",
    )
    ap.add_argument("figure_kind", choices=sorted(FIGURES))
    ap.add_argument("csv_paths", nargs="+", metavar="csv")
    ap.add_argument("-o", "--out", default=None,
                    help="output image path (default: <figure_kind>.png)")
    args = ap.parse_args(argv)
    out = args.out or f"{args.figure_kind.replace('-', '_')}.png"
    try:
        render(args.csv_paths, args.figure_kind, out)
    except (SchemaMismatch, ValueError, OSError) as exc:
        print(f"plots: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
