"""plotkit <figure-kind> --in DIR --out FILE.png"""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_KINDS, FigureSpec, render
from .io import PlotkitError


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plotkit", description="Render figures from adiabat output directories")
    parser.add_argument("kind", choices=FIGURE_KINDS)
    parser.add_argument("--in", dest="input_dir", required=True,
                        help="adiabat scenario output directory")
    parser.add_argument("--out", dest="output", required=True,
                        help="output image path (.png)")
    parser.add_argument("--title", default=None)
    args = parser.parse_args(argv)

    try:
        info = render(FigureSpec(kind=args.kind, input_dir=args.input_dir,
                                 output=args.output, title=args.title))
    except PlotkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.output} ({info['kind']})")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
