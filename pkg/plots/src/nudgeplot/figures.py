"""
Time-series figures from step CSV files.

The input schema is the twin-experiment step log:

    step,t,chi,err_l2,rel_err,proj_err,rel_proj_err,grad_v_sq,repeats

Input files are never modified; existing output files are refused unless
overwriting is forced.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


@dataclass(frozen=True)
class FigureSpec:
    """One figure: labeled CSV inputs, a y column, scale, and output path."""

    inputs: list  # [(csv_path, label), ...]
    y_field: str
    out_path: str
    log_scale: bool = False
    x_field: str = "t"
    title: str | None = None
    force: bool = False


def read_series(path: str, x_field: str, y_field: str) -> tuple[list, list]:
    """Columns x, y from one CSV as floats; names errors precisely."""
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise OSError(f"cannot read CSV {path!r}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames or []
        for name in (x_field, y_field):
            if name not in cols:
                raise ValueError(f"column {name!r} not found in {path!r} (has {cols})")
        xs, ys = [], []
        for row in reader:
            xs.append(float(row[x_field]))
            ys.append(float(row[y_field]))
    return xs, ys


def plot_timeseries(spec: FigureSpec) -> str:
    """Render the figure; returns the output path."""
    if not spec.inputs:
        raise ValueError("figure needs at least one input CSV")
    if os.path.exists(spec.out_path) and not spec.force:
        raise FileExistsError(
            f"output {spec.out_path!r} already exists; pass force to overwrite"
        )
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    try:
        for path, label in spec.inputs:
            xs, ys = read_series(path, spec.x_field, spec.y_field)
            ax.plot(xs, ys, label=label)
        if spec.log_scale:
            ax.set_yscale("log")
        ax.set_xlabel(spec.x_field)
        ax.set_ylabel(spec.y_field)
        if spec.title:
            ax.set_title(spec.title)
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
        fig.tight_layout()
        fig.savefig(spec.out_path, dpi=150)
    finally:
        plt.close(fig)
    return spec.out_path
