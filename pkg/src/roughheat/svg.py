"""Minimal SVG figures (heatmap, log-log lines) plus gnuplot ``.dat`` companions."""

from __future__ import annotations

import html
import math
from pathlib import Path

import numpy as np

W, H = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 90, 40, 55


def _colour(v):
    # diverging blue-white-red on [-1, 1]
    v = max(-1.0, min(1.0, v))
    if v < 0:
        r = g = int(round(255 * (1 + v)))
        b = 255
    else:
        r = 255
        g = b = int(round(255 * (1 - v)))
    return f"#{r:02x}{g:02x}{b:02x}"


def _frame(title, xlabel, ylabel, meta):
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">']
    if meta:
        out.append(f"<metadata>{html.escape(meta)}</metadata>")
    out.append(f'<rect width="{W}" height="{H}" fill="white"/>')
    out.append(f'<text x="{W / 2}" y="22" text-anchor="middle" font-size="14">{html.escape(title)}</text>')
    out.append(f'<text x="{(LEFT + W - RIGHT) / 2}" y="{H - 12}" text-anchor="middle">{html.escape(xlabel)}</text>')
    out.append(f'<text x="18" y="{(TOP + H - BOTTOM) / 2}" text-anchor="middle" '
               f'transform="rotate(-90 18 {(TOP + H - BOTTOM) / 2})">{html.escape(ylabel)}</text>')
    return out


def _ticks(lo, hi, count=5):
    return [lo + (hi - lo) * k / (count - 1) for k in range(count)]


def heatmap(path, x, t, values, title="", meta="", max_cells=160) -> Path:
    """Heatmap of ``values[t_index, x_index]``; rows are thinned to ``max_cells``."""
    values = np.asarray(values, dtype=float)
    ts = max(1, math.ceil(values.shape[0] / max_cells))
    xs = max(1, math.ceil(values.shape[1] / max_cells))
    v = values[::ts, ::xs]
    tt, xx = np.asarray(t)[::ts], np.asarray(x)[::xs]
    scale = np.max(np.abs(v)) or 1.0
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM
    cw, chh = pw / v.shape[1], ph / v.shape[0]
    out = _frame(title, "x", "t", meta)
    for i in range(v.shape[0]):
        y = TOP + ph - (i + 1) * chh
        for j in range(v.shape[1]):
            out.append(f'<rect x="{LEFT + j * cw:.2f}" y="{y:.2f}" width="{cw + 0.05:.2f}" '
                       f'height="{chh + 0.05:.2f}" fill="{_colour(v[i, j] / scale)}"/>')
    out.append(f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for val in _ticks(float(xx[0]), float(xx[-1])):
        px = LEFT + pw * (val - xx[0]) / ((xx[-1] - xx[0]) or 1)
        out.append(f'<text x="{px:.1f}" y="{TOP + ph + 16}" text-anchor="middle">{val:.3g}</text>')
    for val in _ticks(float(tt[0]), float(tt[-1])):
        py = TOP + ph - ph * (val - tt[0]) / ((tt[-1] - tt[0]) or 1)
        out.append(f'<text x="{LEFT - 6}" y="{py + 4:.1f}" text-anchor="end">{val:.3g}</text>')
    for k, val in enumerate((scale, 0.0, -scale)):
        out.append(f'<rect x="{W - RIGHT + 20}" y="{TOP + k * 40}" width="16" height="16" '
                   f'fill="{_colour(val / scale)}" stroke="black"/>')
        out.append(f'<text x="{W - RIGHT + 40}" y="{TOP + k * 40 + 12}">{val:.2g}</text>')
    out.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(out) + "\n")
    return path


def loglog(path, levels, errors, title="", meta="", fit=None) -> Path:
    """``log2(error)`` against level ``n``; ``fit = (rate, intercept)`` adds the fitted line."""
    levels = np.asarray(levels, dtype=float)
    logs = np.log2(np.asarray(errors, dtype=float))
    x0, x1 = levels.min() - 0.5, levels.max() + 0.5
    lo, hi = np.floor(logs.min()) - 1, np.ceil(logs.max()) + 1
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM

    def px(v):
        return LEFT + pw * (v - x0) / (x1 - x0)

    def py(v):
        return TOP + ph - ph * (v - lo) / (hi - lo)

    out = _frame(title, "level n", "log2 error", meta)
    out.append(f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for n in levels:
        out.append(f'<text x="{px(n):.1f}" y="{TOP + ph + 16}" text-anchor="middle">{int(n)}</text>')
    for val in _ticks(lo, hi):
        out.append(f'<text x="{LEFT - 6}" y="{py(val) + 4:.1f}" text-anchor="end">{val:.3g}</text>')
    pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(levels, logs))
    out.append(f'<polyline points="{pts}" fill="none" stroke="#1f4e9c" stroke-width="2"/>')
    for a, b in zip(levels, logs):
        out.append(f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="4" fill="#1f4e9c"/>')
    if fit is not None:
        rate, icpt = fit
        ends = [(x0 + 0.5, icpt - rate * (x0 + 0.5)), (x1 - 0.5, icpt - rate * (x1 - 0.5))]
        out.append(f'<line x1="{px(ends[0][0]):.2f}" y1="{py(ends[0][1]):.2f}" x2="{px(ends[1][0]):.2f}" '
                   f'y2="{py(ends[1][1]):.2f}" stroke="#b22" stroke-dasharray="6 4"/>')
        out.append(f'<text x="{W - RIGHT - 4}" y="{TOP + 16}" text-anchor="end">rate {rate:.3g}</text>')
    out.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(out) + "\n")
    return path


def write_dat(path, header: str, columns) -> Path:
    """Whitespace-separated columns with a ``#`` header line."""
    cols = [np.asarray(c, dtype=float).ravel() for c in columns]
    lines = [f"# {header}"]
    lines += [" ".join(format(v, ".17g") for v in row) for row in zip(*cols)]
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def write_grid_dat(path, x, t, values) -> Path:
    """gnuplot ``splot`` layout: blocks of ``t x value`` separated by blank lines."""
    values = np.asarray(values, dtype=float)
    lines = ["# t x value"]
    for ti, row in zip(t, values):
        lines += [f"{ti:.17g} {xi:.17g} {v:.17g}" for xi, v in zip(x, row)]
        lines.append("")
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path
