"""
Text rendering of convergence tables.

The input schema is `dt,final_err,rate,chi_max`, one row per step size.
Cells are rendered verbatim (no reformatting), so published tables pass
through unchanged; an empty rate cell prints as '-'.
"""

from __future__ import annotations

import csv

COLUMNS = ("dt", "final_err", "rate", "chi_max")
HEADINGS = ("dt", "error", "rate", "chi_max")


def read_rows(path: str) -> list[dict]:
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise OSError(f"cannot read CSV {path!r}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames or []
        missing = [c for c in COLUMNS if c not in cols]
        if missing:
            raise ValueError(f"columns {missing} not found in {path!r} (has {cols})")
        return [dict(row) for row in reader]


def render_convergence_table(path: str) -> str:
    """Aligned text table in column order dt | error | rate | chi_max."""
    rows = read_rows(path)
    cells = [list(HEADINGS)]
    for row in rows:
        cells.append([
            row["dt"],
            row["final_err"],
            row["rate"] if row["rate"] not in ("", None) else "-",
            row["chi_max"],
        ])
    widths = [max(len(r[i]) for r in cells) for i in range(len(HEADINGS))]
    lines = []
    for i, row in enumerate(cells):
        lines.append("  ".join(c.rjust(w) for c, w in zip(row, widths)))
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"
