"""Hand-rolled SVG line plots: axes, polylines, error bars, nothing else.

CSV files are the primary artifact; these figures are a convenience, so no
plotting dependency is pulled in.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

__all__ = ["line_plot"]

_W, _H = 720, 520
_ML, _MR, _MT, _MB = 70, 20, 40, 55
_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _nice_ticks(lo: float, hi: float, n: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    step = min(m for m in (1.0, 2.0, 2.5, 5.0, 10.0) if m * mag >= raw) * mag
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-12 * abs(step):
        ticks.append(0.0 if abs(t) < step * 1e-9 else t)
        t += step
    return ticks


def line_plot(path, series, title="", xlabel="", ylabel="", hlines=()):
    """Write an SVG of one or more (x, y [, yerr]) series.

    `series` is a list of dicts with keys x, y, optional yerr and label;
    `hlines` draws dashed horizontal reference lines at the given y values.
    """
    xs = [float(v) for s in series for v in s["x"]]
    ys = []
    for s in series:
        err = s.get("yerr")
        for i, v in enumerate(s["y"]):
            e = float(err[i]) if err is not None else 0.0
            ys.extend([float(v) - e, float(v) + e])
    ys.extend(float(h) for h in hlines)
    if not xs or not ys:
        xs, ys = [0.0, 1.0], [0.0, 1.0]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    def px(x):
        return _ML + (x - x_lo) / (x_hi - x_lo) * (_W - _ML - _MR)

    def py(y):
        return _H - _MB - (y - y_lo) / (y_hi - y_lo) * (_H - _MT - _MB)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
    ]
    if title:
        parts.append(
            f'<text x="{_W / 2}" y="24" text-anchor="middle" font-size="16" '
            f'font-family="sans-serif">{escape(title)}</text>'
        )
    axis = 'stroke="black" stroke-width="1"'
    parts.append(f'<line x1="{_ML}" y1="{py(y_lo)}" x2="{_ML}" y2="{py(y_hi)}" {axis}/>')
    parts.append(
        f'<line x1="{_ML}" y1="{_H - _MB}" x2="{_W - _MR}" y2="{_H - _MB}" {axis}/>'
    )
    for t in _nice_ticks(x_lo, x_hi):
        x = px(t)
        parts.append(f'<line x1="{x}" y1="{_H - _MB}" x2="{x}" y2="{_H - _MB + 5}" {axis}/>')
        parts.append(
            f'<text x="{x}" y="{_H - _MB + 20}" text-anchor="middle" font-size="12" '
            f'font-family="sans-serif">{t:g}</text>'
        )
    for t in _nice_ticks(y_lo, y_hi):
        y = py(t)
        parts.append(f'<line x1="{_ML - 5}" y1="{y}" x2="{_ML}" y2="{y}" {axis}/>')
        parts.append(
            f'<text x="{_ML - 8}" y="{y + 4}" text-anchor="end" font-size="12" '
            f'font-family="sans-serif">{t:g}</text>'
        )
    if xlabel:
        parts.append(
            f'<text x="{(_ML + _W - _MR) / 2}" y="{_H - 12}" text-anchor="middle" '
            f'font-size="14" font-family="sans-serif">{escape(xlabel)}</text>'
        )
    if ylabel:
        parts.append(
            f'<text x="18" y="{(_MT + _H - _MB) / 2}" text-anchor="middle" font-size="14" '
            f'font-family="sans-serif" transform="rotate(-90 18 {(_MT + _H - _MB) / 2})">'
            f"{escape(ylabel)}</text>"
        )
    for h in hlines:
        y = py(float(h))
        parts.append(
            f'<line x1="{_ML}" y1="{y}" x2="{_W - _MR}" y2="{y}" stroke="black" '
            f'stroke-width="1" stroke-dasharray="6,4"/>'
        )
    legend_y = _MT + 6
    for i, s in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(s["x"], s["y"]))
        if pts:
            parts.append(
                f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'
            )
        err = s.get("yerr")
        for j, (x, y) in enumerate(zip(s["x"], s["y"])):
            cx, cy = px(x), py(y)
            parts.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="2.5" fill="{color}"/>')
            if err is not None and err[j]:
                y0, y1 = py(float(y) - float(err[j])), py(float(y) + float(err[j]))
                parts.append(
                    f'<line x1="{cx:.2f}" y1="{y0:.2f}" x2="{cx:.2f}" y2="{y1:.2f}" '
                    f'stroke="{color}" stroke-width="1"/>'
                )
        label = s.get("label")
        if label:
            parts.append(
                f'<rect x="{_W - _MR - 150}" y="{legend_y - 9}" width="12" height="3" '
                f'fill="{color}"/>'
            )
            parts.append(
                f'<text x="{_W - _MR - 133}" y="{legend_y - 3}" font-size="12" '
                f'font-family="sans-serif">{escape(str(label))}</text>'
            )
            legend_y += 16
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
