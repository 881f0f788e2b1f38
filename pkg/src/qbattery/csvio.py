"""Deterministic CSV emission: 12 significant digits, scientific notation, LF."""

from __future__ import annotations

import io

__all__ = ["format_value", "render_csv", "write_csv"]


def format_value(v):
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    return f"{float(v):.11e}"


def render_csv(columns, rows):
    """Rows are dicts keyed by column name; missing keys render empty."""
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(format_value(row.get(c)) for c in columns) + "\n")
    return buf.getvalue()


def write_csv(path, columns, rows):
    text = render_csv(columns, rows)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return text
