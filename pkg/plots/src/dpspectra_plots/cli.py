"""Batch figure rendering from checked-in figure specs.

    dpspectra-plot --spec figures/S1a.json
    dpspectra-plot --spec figures/S1a.json --dump-csv /tmp/series.csv

Exit codes: 0 success, 2 spec or schema error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .render import FigureSpec, FigureSpecError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="dpspectra-plot")
    parser.add_argument(
        "--spec", action="append", required=True,
        help="figure spec JSON; repeat to render several figures",
    )
    parser.add_argument("--out", default=None, help="override the spec output path (single spec only)")
    parser.add_argument(
        "--dump-csv", default=None,
        help="write the plotted series back out as CSV (single spec only)",
    )
    args = parser.parse_args(argv)
    if len(args.spec) > 1 and (args.dump_csv or args.out):
        print("--dump-csv/--out apply to a single --spec", file=sys.stderr)
        return 2
    try:
        for spec_path in args.spec:
            spec = FigureSpec.load(spec_path)
            series = render(spec, out_override=args.out)
            print(f"rendered {spec_path} -> {args.out or spec.out}")
            if args.dump_csv:
                series.dump(args.dump_csv)
                print(f"dumped plotted series to {args.dump_csv}")
    except (FigureSpecError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"figure error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
