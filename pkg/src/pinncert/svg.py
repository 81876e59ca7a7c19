"""Minimal SVG line charts with a log-scaled y axis."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 420
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _decades(lo: float, hi: float) -> list[int]:
    return list(range(math.floor(math.log10(lo)), math.ceil(math.log10(hi)) + 1))


def line_chart(x, series: dict[str, list[float]], title: str = "", xlabel: str = "",
               log_x: bool = False) -> str:
    """Polyline per series; non-positive or non-finite points are dropped."""
    left, top, right, bottom = 70, 30, 150, 50
    pw, ph = WIDTH - left - right, HEIGHT - top - bottom
    xs = [float(v) for v in x]
    pos = [v for ys in series.values() for v in ys if math.isfinite(v) and v > 0]
    if not xs or not pos:
        ylo, yhi = 1e-1, 1e1
    else:
        ylo, yhi = min(pos), max(pos)
        if ylo == yhi:
            ylo, yhi = ylo / 10, yhi * 10
    decs = _decades(ylo, yhi)
    ly0, ly1 = decs[0], decs[-1]

    if log_x and xs and min(xs) > 0:
        fx = math.log10
    else:
        log_x = False
        fx = float
    tx = [fx(v) for v in xs] or [0.0, 1.0]
    x0, x1 = min(tx), max(tx)
    if x0 == x1:
        x0, x1 = x0 - 1, x1 + 1

    def px(v):
        return left + (fx(v) - x0) / (x1 - x0) * pw

    def py(v):
        return top + (ly1 - math.log10(v)) / (ly1 - ly0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for d in decs:
        y = py(10.0**d)
        out.append(f'<line x1="{left}" y1="{y:.2f}" x2="{left + pw}" y2="{y:.2f}" stroke="#ddd"/>')
        out.append(f'<text x="{left - 6}" y="{y + 4:.2f}" text-anchor="end">1e{d}</text>')
    ticks = xs if len(xs) <= 6 else [xs[round(i * (len(xs) - 1) / 5)] for i in range(6)]
    for v in ticks:
        xp = px(v)
        out.append(f'<line x1="{xp:.2f}" y1="{top + ph}" x2="{xp:.2f}" y2="{top + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{xp:.2f}" y="{top + ph + 16}" text-anchor="middle">{v:.3g}</text>')
    if title:
        out.append(f'<text x="{left + pw / 2}" y="{top - 10}" text-anchor="middle" font-size="13">'
                   f'{escape(title)}</text>')
    if xlabel:
        out.append(f'<text x="{left + pw / 2}" y="{HEIGHT - 10}" text-anchor="middle">'
                   f'{escape(xlabel)}{" (log)" if log_x else ""}</text>')

    for i, (name, ys) in enumerate(series.items()):
        color = COLORS[i % len(COLORS)]
        pts = [f"{px(xv):.2f},{py(yv):.2f}" for xv, yv in zip(xs, ys)
               if math.isfinite(yv) and yv > 0]
        if pts:
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                       f'points="{" ".join(pts)}"/>')
        ly = top + 14 + 16 * i
        out.append(f'<line x1="{left + pw + 10}" y1="{ly - 4}" x2="{left + pw + 30}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 36}" y="{ly}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
