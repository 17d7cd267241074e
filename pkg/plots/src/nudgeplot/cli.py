"""Console entry points: plot-timeseries and plot-convergence."""

from __future__ import annotations

import argparse
import os
import sys

from .figures import FigureSpec, plot_timeseries
from .tables import render_convergence_table


def _split_input(arg: str) -> tuple[str, str]:
    """'path.csv:label' -> (path, label); label defaults to the file stem."""
    if ":" in arg:
        path, label = arg.rsplit(":", 1)
        if path and label:
            return path, label
    stem = os.path.splitext(os.path.basename(arg))[0]
    return arg, stem


def main_timeseries(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot-timeseries",
        description="Plot one CSV column against time from step CSV files.",
    )
    parser.add_argument("--csv", action="append", required=True, metavar="PATH[:LABEL]",
                        help="input CSV, repeatable; optional legend label after a colon")
    parser.add_argument("--field", required=True, help="y column name, e.g. rel_err or chi")
    parser.add_argument("--log", action="store_true", help="log-scale y axis")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--force", action="store_true", help="overwrite an existing output file")
    parser.add_argument("--title", default=None)
    args = parser.parse_args(argv)
    spec = FigureSpec(
        inputs=[_split_input(a) for a in args.csv],
        y_field=args.field,
        out_path=args.out,
        log_scale=args.log,
        title=args.title,
        force=args.force,
    )
    try:
        out = plot_timeseries(spec)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


def main_convergence(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot-convergence",
        description="Render a convergence CSV (dt,final_err,rate,chi_max) as a text table.",
    )
    parser.add_argument("--csv", required=True, help="input convergence CSV")
    parser.add_argument("--out", default=None, help="optional output text file (default: stdout)")
    parser.add_argument("--force", action="store_true", help="overwrite an existing output file")
    args = parser.parse_args(argv)
    try:
        table = render_convergence_table(args.csv)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.out:
        if os.path.exists(args.out) and not args.force:
            print(f"error: output {args.out!r} already exists; pass --force to overwrite",
                  file=sys.stderr)
            return 1
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(table)
        print(f"wrote {args.out}")
    else:
        print(table, end="")
    return 0


if __name__ == "__main__":
    sys.exit(main_timeseries())
