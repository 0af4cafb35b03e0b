"""Result tables and file outputs: CSV, markdown, and static SVG plots.

Machine outputs (CSV) carry full-precision values that survive a
parse round trip; human outputs (markdown, SVG labels) use the
four-decimal formatting of the published tables, rounding half to even.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import math

LONG_COLUMNS = ("N", "estimator", "kernel", "h_rule", "h_value",
                "bias", "variance", "mse", "stderr")


@dataclass(frozen=True)
class OutputTable:
    """A captioned table holding raw values plus their 4-decimal rendering."""

    caption: str
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]

    def __post_init__(self):
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError(
                    f"row of width {len(row)} does not match {len(self.columns)} columns"
                )

    def formatted_rows(self) -> list[list[str]]:
        return [[format_cell(v) for v in row] for row in self.rows]


def format_cell(value) -> str:
    """4-decimal rendering of numbers (round half to even); text passes through."""
    if isinstance(value, str):
        return value
    if isinstance(value, int):
        return str(value)
    v = float(value)
    if math.isnan(v):
        return ""
    return f"{v:.4f}"


def raw_cell(value) -> str:
    """Full-precision rendering that round-trips through float()."""
    if isinstance(value, str):
        return value
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def long_table(rows: list[dict], caption: str) -> OutputTable:
    """The long-form results table with the canonical column set."""
    table_rows = tuple(tuple(r[c] for c in LONG_COLUMNS) for r in rows)
    return OutputTable(caption=caption, columns=LONG_COLUMNS, rows=table_rows)


def pivot_table(rows: list[dict], value_key: str, caption: str,
                column_order: tuple[str, ...]) -> OutputTable:
    """Paper-shaped table: one row per N, one column per estimator."""
    by_n: dict[int, dict[str, float]] = {}
    for r in rows:
        by_n.setdefault(r["N"], {})[r["estimator"]] = r[value_key]
    table_rows = []
    for n in sorted(by_n):
        table_rows.append((n, *[by_n[n].get(label, float("nan")) for label in column_order]))
    return OutputTable(caption=caption, columns=("N", *column_order), rows=tuple(table_rows))


def write_csv(table: OutputTable, path: Path) -> Path:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([raw_cell(v) for v in row])
    return path


def read_csv(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_markdown(tables: list[OutputTable], path: Path) -> Path:
    parts = []
    for table in tables:
        lines = [f"### {table.caption}", ""]
        lines.append("| " + " | ".join(table.columns) + " |")
        lines.append("|" + "|".join("---" for _ in table.columns) + "|")
        for row in table.formatted_rows():
            lines.append("| " + " | ".join(row) + " |")
        parts.append("\n".join(lines))
    path.write_text("\n\n".join(parts) + "\n")
    return path


# ---------------------------------------------------------------------------
# SVG plots
# ---------------------------------------------------------------------------

_PANEL_W, _PANEL_H = 360, 300
_MARGIN = 52
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b")


def write_svg(rows: list[dict], path: Path, title: str) -> Path:
    """Bias and variance versus bandwidth for the fixed-h estimators, one
    polyline per sample size, with the SAA level as a dashed reference."""
    panels = [
        _panel(rows, "bias", "bias", 0),
        _panel(rows, "variance", "variance", 1),
    ]
    width = 2 * (_PANEL_W + _MARGIN) + _MARGIN
    height = _PANEL_H + 2 * _MARGIN + 20
    body = "\n".join(panels)
    svg = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">\n'
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{title}</text>\n'
        f"{body}\n</svg>\n"
    )
    path.write_text(svg)
    return path


def _panel(rows: list[dict], key: str, label: str, index: int) -> str:
    fixed = [r for r in rows if r["h_rule"].startswith("h=")]
    saa = [r for r in rows if r["kernel"] == ""]
    if not fixed:
        return ""
    ns = sorted({r["N"] for r in fixed})
    hs = sorted({float(r["h_value"]) for r in fixed})
    values = [float(r[key]) for r in fixed] + [float(r[key]) for r in saa]
    vmin, vmax = min(values), max(values)
    if vmax - vmin < 1e-12:
        vmax = vmin + 1.0
    pad = 0.08 * (vmax - vmin)
    vmin, vmax = vmin - pad, vmax + pad
    x0 = _MARGIN + index * (_PANEL_W + _MARGIN + _MARGIN // 2)
    y0 = _MARGIN + 10

    def sx(h):
        return x0 + (h - hs[0]) / (hs[-1] - hs[0] or 1.0) * _PANEL_W

    def sy(v):
        return y0 + (vmax - v) / (vmax - vmin) * _PANEL_H

    parts = [
        f'<rect x="{x0}" y="{y0}" width="{_PANEL_W}" height="{_PANEL_H}" '
        f'fill="none" stroke="#333"/>',
        f'<text x="{x0 + _PANEL_W / 2:.1f}" y="{y0 + _PANEL_H + 34:.1f}" '
        f'text-anchor="middle" font-size="12">bandwidth h</text>',
        f'<text x="{x0 - 8:.1f}" y="{y0 - 6:.1f}" font-size="12">{label}</text>',
    ]
    for h in hs:
        parts.append(
            f'<text x="{sx(h):.1f}" y="{y0 + _PANEL_H + 16:.1f}" text-anchor="middle" '
            f'font-size="10">{h:g}</text>'
        )
    for i, n in enumerate(ns):
        pts = sorted(
            ((float(r["h_value"]), float(r[key])) for r in fixed if r["N"] == n),
        )
        coords = " ".join(f"{sx(h):.2f},{sy(v):.2f}" for h, v in pts)
        color = _COLORS[i % len(_COLORS)]
        parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        parts.append(
            f'<text x="{x0 + _PANEL_W + 4:.1f}" y="{sy(pts[-1][1]):.1f}" '
            f'font-size="10" fill="{color}">N={n}</text>'
        )
        for r in saa:
            if r["N"] == n:
                y = sy(float(r[key]))
                parts.append(
                    f'<line x1="{x0}" y1="{y:.2f}" x2="{x0 + _PANEL_W}" y2="{y:.2f}" '
                    f'stroke="{color}" stroke-width="1" stroke-dasharray="5,4"/>'
                )
    return "\n".join(parts)


def emit_outputs(
    rows: list[dict],
    out_dir,
    name: str,
    formats=("csv", "md"),
    caption: str = "",
    column_order: tuple[str, ...] | None = None,
) -> list[Path]:
    """Write `<name>.csv` / `<name>.md` / `<name>.svg` into ``out_dir``.

    When ``column_order`` is given (a preset table layout), bias and
    variance pivot CSVs shaped like the published tables are written
    alongside the long-form CSV.
    """
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        probe = out_dir / f".{name}.probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OSError(f"output directory {out_dir} is not writable: {exc}") from exc
    caption = caption or name
    written: list[Path] = []
    long = long_table(rows, caption)
    tables = [long]
    if column_order is not None:
        tables.append(pivot_table(rows, "bias", f"{caption}: bias", column_order))
        tables.append(pivot_table(rows, "variance", f"{caption}: variance", column_order))
    for fmt in dict.fromkeys(formats):
        if fmt == "csv":
            written.append(write_csv(long, out_dir / f"{name}.csv"))
            if column_order is not None:
                written.append(write_csv(tables[1], out_dir / f"{name}_bias.csv"))
                written.append(write_csv(tables[2], out_dir / f"{name}_variance.csv"))
        elif fmt == "md":
            written.append(write_markdown(tables, out_dir / f"{name}.md"))
        elif fmt == "svg":
            written.append(write_svg(rows, out_dir / f"{name}.svg", caption))
        else:
            raise ValueError(f"unknown output format {fmt!r}")
    return written
