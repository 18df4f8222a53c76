"""Deterministic result writers: JSON, CSV and self-contained SVG plots."""

from __future__ import annotations

import json
import os

import numpy as np

__all__ = ["fmt17", "write_json", "write_csv", "svg_line_plot",
           "matrix_to_lists", "complex_matrix_columns"]


def fmt17(x) -> str:
    """17 significant digits, '.' decimal separator (round-trips doubles)."""
    return f"{float(x):.17g}"


def matrix_to_lists(m) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"re": [[float(v.real) for v in row] for row in m],
            "im": [[float(v.imag) for v in row] for row in m]}


def write_json(path: str, payload: dict) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2, ensure_ascii=False)
        fh.write("\n")


def write_csv(path: str, header, rows) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(cell if isinstance(cell, str) else fmt17(cell)
                              for cell in row) + "\n")


def complex_matrix_columns(n: int, prefix: str = "") -> list[str]:
    cols = []
    for a in range(n):
        for b in range(n):
            cols.append(f"{prefix}re_{a}{b}")
            cols.append(f"{prefix}im_{a}{b}")
    return cols


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    return list(np.linspace(lo, hi, count))


def svg_line_plot(path: str, series, title: str, xlabel: str,
                  ylabel: str) -> None:
    """Minimal line plot: one polyline per (xs, ys, label) series."""
    width, height = 640, 480
    ml, mr, mt, mb = 70, 20, 40, 50
    pw, ph = width - ml - mr, height - mt - mb

    xs_all = np.concatenate([np.asarray(s[0], dtype=float) for s in series])
    ys_all = np.concatenate([np.asarray(s[1], dtype=float) for s in series])
    x_lo, x_hi = float(xs_all.min()), float(xs_all.max())
    y_lo, y_hi = float(ys_all.min()), float(ys_all.max())
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    def sx(x):
        return ml + (x - x_lo) / (x_hi - x_lo) * pw

    def sy(y):
        return mt + ph - (y - y_lo) / (y_hi - y_lo) * ph

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" '
        f'font-size="16">{title}</text>',
        f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" '
        f'stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="black"/>',
        f'<text x="{ml + pw / 2:.1f}" y="{height - 12}" text-anchor="middle" '
        f'font-size="13">{xlabel}</text>',
        f'<text x="18" y="{mt + ph / 2:.1f}" text-anchor="middle" '
        f'font-size="13" transform="rotate(-90 18 {mt + ph / 2:.1f})">'
        f'{ylabel}</text>',
    ]
    for xt in _ticks(x_lo, x_hi):
        parts.append(f'<line x1="{sx(xt):.2f}" y1="{mt + ph}" '
                     f'x2="{sx(xt):.2f}" y2="{mt + ph + 5}" stroke="black"/>')
        parts.append(f'<text x="{sx(xt):.2f}" y="{mt + ph + 20}" '
                     f'text-anchor="middle" font-size="11">{xt:.3g}</text>')
    for yt in _ticks(y_lo, y_hi):
        parts.append(f'<line x1="{ml - 5}" y1="{sy(yt):.2f}" x2="{ml}" '
                     f'y2="{sy(yt):.2f}" stroke="black"/>')
        parts.append(f'<text x="{ml - 8}" y="{sy(yt) + 4:.2f}" '
                     f'text-anchor="end" font-size="11">{yt:.3g}</text>')
    for i, (xs, ys, label) in enumerate(series):
        color = colors[i % len(colors)]
        pts = " ".join(f"{sx(float(x)):.2f},{sy(float(y)):.2f}"
                       for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{pts}" fill="none" '
                     f'stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<text x="{ml + pw - 8}" y="{mt + 16 + 16 * i}" '
                     f'text-anchor="end" font-size="12" fill="{color}">'
                     f'{label}</text>')
    parts.append("</svg>")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
