"""Table emission: byte-stable CSV plus a dependency-free SVG line plot.

Floats are serialized with repr() (shortest round-trip form), non-finite
values as nan/inf tokens, lines end with LF. Identical rows and metadata
therefore produce identical bytes on every platform, which is what the
reproducibility checks diff against.
"""

from __future__ import annotations

import math
import os

from .errors import ContractViolation
from .sweeps import MetricRow

__all__ = ["COLUMNS", "format_csv", "parse_csv", "render_svg", "emit"]

COLUMNS = ("sweep_value", "rrmse_tau", "rrmse_nu", "success_rate",
           "mean_runtime_s", "trials")

# series drawn by render_svg: (field, stroke, label)
_SERIES = (("rrmse_tau", "#1f77b4", "rrmse_tau"),
           ("rrmse_nu", "#d62728", "rrmse_nu"),
           ("success_rate", "#2ca02c", "success_rate"))


def format_csv(rows, meta=None) -> str:
    """Comment header (# key=value, sorted), column line, one line per row."""
    if not rows:
        raise ContractViolation("refusing to format an empty table")
    lines = [f"# {key}={meta[key]}" for key in sorted(meta)] if meta else []
    lines.append(",".join(COLUMNS))
    for r in rows:
        lines.append(",".join((
            repr(float(r.sweep_value)), repr(float(r.rrmse_tau)),
            repr(float(r.rrmse_nu)), repr(float(r.success_rate)),
            repr(float(r.mean_runtime_s)), str(int(r.trials)))))
    return "\n".join(lines) + "\n"


def parse_csv(text: str):
    """Inverse of format_csv: returns (rows, meta)."""
    meta, rows = {}, []
    saw_header = False
    for line in text.splitlines():
        if not line:
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].strip().partition("=")
            if sep:
                meta[key] = value
            continue
        if not saw_header:
            if line != ",".join(COLUMNS):
                raise ContractViolation(f"unexpected column header: {line!r}")
            saw_header = True
            continue
        parts = line.split(",")
        if len(parts) != len(COLUMNS):
            raise ContractViolation(f"malformed row: {line!r}")
        rows.append(MetricRow(
            sweep_value=float(parts[0]), rrmse_tau=float(parts[1]),
            rrmse_nu=float(parts[2]), success_rate=float(parts[3]),
            mean_runtime_s=float(parts[4]), trials=int(parts[5])))
    if not saw_header:
        raise ContractViolation("no column header found")
    return rows, meta


def _fnum(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, n: int = 5):
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def render_svg(rows, title: str = "") -> str:
    """Fixed-size line plot of every metric series against the sweep value.

    Pure string assembly with fixed-precision coordinates, so the output
    is deterministic; non-finite points are simply omitted.
    """
    if not rows:
        raise ContractViolation("refusing to plot an empty table")
    W, H = 640, 400
    ml, mr, mt, mb = 60, 150, 30, 45
    pw, ph = W - ml - mr, H - mt - mb

    xs = [r.sweep_value for r in rows if math.isfinite(r.sweep_value)]
    pts = {}
    for field, _, _ in _SERIES:
        pts[field] = [(r.sweep_value, getattr(r, field)) for r in rows
                      if math.isfinite(r.sweep_value)
                      and math.isfinite(getattr(r, field))]
    ys = [y for series in pts.values() for _, y in series]

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}" font-family="monospace" font-size="11">',
           f'<rect width="{W}" height="{H}" fill="white"/>']
    if title:
        out.append(f'<text x="{ml}" y="18" font-size="13">{title}</text>')
    if not xs or not ys:
        out.append(f'<text x="{W // 2 - 60}" y="{H // 2}">no finite data</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"

    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    def sx(v):
        return ml + pw * (v - x_lo) / (x_hi - x_lo)

    def sy(v):
        return mt + ph * (1.0 - (v - y_lo) / (y_hi - y_lo))

    out.append(f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" '
               'fill="none" stroke="#888"/>')
    for t in _ticks(x_lo, x_hi):
        x = _fnum(sx(t))
        out.append(f'<line x1="{x}" y1="{mt + ph}" x2="{x}" y2="{mt + ph + 4}" '
                   'stroke="#888"/>')
        out.append(f'<text x="{x}" y="{mt + ph + 16}" text-anchor="middle">'
                   f'{t:.4g}</text>')
    for t in _ticks(y_lo, y_hi):
        y = _fnum(sy(t))
        out.append(f'<line x1="{ml - 4}" y1="{y}" x2="{ml}" y2="{y}" '
                   'stroke="#888"/>')
        out.append(f'<text x="{ml - 7}" y="{y}" text-anchor="end" '
                   f'dominant-baseline="middle">{t:.4g}</text>')
    out.append(f'<text x="{ml + pw // 2}" y="{H - 8}" text-anchor="middle">'
               'sweep value</text>')

    legend_y = mt + 10
    for field, color, label in _SERIES:
        series = pts[field]
        if not series:
            continue
        coords = " ".join(f"{_fnum(sx(x))},{_fnum(sy(y))}" for x, y in series)
        out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" '
                   'stroke-width="1.5"/>')
        for x, y in series:
            out.append(f'<circle cx="{_fnum(sx(x))}" cy="{_fnum(sy(y))}" '
                       f'r="2.5" fill="{color}"/>')
        out.append(f'<line x1="{ml + pw + 10}" y1="{legend_y}" '
                   f'x2="{ml + pw + 30}" y2="{legend_y}" stroke="{color}" '
                   'stroke-width="1.5"/>')
        out.append(f'<text x="{ml + pw + 35}" y="{legend_y + 4}">{label}</text>')
        legend_y += 18
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit(rows, csv_path: str, svg_path=None, meta=None, title: str = "") -> None:
    """Write the CSV (and optionally the SVG plot) for a finished sweep."""
    text = format_csv(rows, meta=meta)
    os.makedirs(os.path.dirname(os.path.abspath(csv_path)), exist_ok=True)
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    if svg_path is not None:
        with open(svg_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(render_svg(rows, title=title))
