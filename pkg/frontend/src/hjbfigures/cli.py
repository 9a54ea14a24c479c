"""render: turn hjbsolve CSV artifacts into publication figures."""

import argparse
import sys

from hjbfigures.figures import FIGURE_KINDS, render
from hjbfigures.io import CsvError


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render", description="Render a figure from hjbsolve CSV outputs."
    )
    parser.add_argument("--job", required=True, choices=sorted(FIGURE_KINDS))
    parser.add_argument(
        "--in",
        dest="inputs",
        required=True,
        nargs="+",
        metavar="CSV",
        help="input CSV file(s); radial_profiles takes one per profile",
    )
    parser.add_argument(
        "--out",
        required=True,
        help="output image path; format follows the extension",
    )
    args = parser.parse_args(argv)
    try:
        render(args.job, args.inputs, args.out)
    except CsvError as exc:
        print(f"render: error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
