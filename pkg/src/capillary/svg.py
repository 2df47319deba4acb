"""Minimal deterministic SVG charts: log-log line plots and signed bar charts."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 480, 320
MARGIN = 56


def _frame(title, body):
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">\n'
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>\n'
        f'<text x="{WIDTH / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>\n'
        f"{body}</svg>\n"
    )


def _scale(lo, hi, a, b):
    span = hi - lo or 1.0
    return lambda v: a + (v - lo) / span * (b - a)


def loglog(x, y, title="", xlabel="", ylabel=""):
    """Polyline of ``log10 y`` against ``log10 x`` with point markers."""
    lx = [math.log10(v) for v in x]
    ly = [math.log10(v) for v in y]
    sx = _scale(min(lx), max(lx), MARGIN, WIDTH - MARGIN / 2)
    sy = _scale(min(ly), max(ly), HEIGHT - MARGIN, MARGIN / 2 + 10)
    pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(lx, ly))
    parts = [
        f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN / 2}" y2="{HEIGHT - MARGIN}" stroke="black"/>\n',
        f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{MARGIN}" y2="{MARGIN / 2 + 10}" stroke="black"/>\n',
        f'<polyline points="{pts}" fill="none" stroke="steelblue" stroke-width="2"/>\n',
    ]
    for a, b, vx, vy in zip(lx, ly, x, y):
        parts.append(f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="3" fill="steelblue"/>\n')
        parts.append(
            f'<text x="{sx(a):.2f}" y="{HEIGHT - MARGIN + 16}" text-anchor="middle" font-size="10">{vx:g}</text>\n'
        )
    parts.append(
        f'<text x="{WIDTH / 2:.1f}" y="{HEIGHT - 10}" text-anchor="middle" font-size="12">{escape(xlabel)} (log)</text>\n'
    )
    parts.append(
        f'<text x="14" y="{HEIGHT / 2:.1f}" font-size="12" transform="rotate(-90 14 {HEIGHT / 2:.1f})" '
        f'text-anchor="middle">{escape(ylabel)} (log)</text>\n'
    )
    return _frame(title, "".join(parts))


def bars(labels, values, title=""):
    """Horizontal bars for signed values around a zero line."""
    lo, hi = min(0.0, min(values)), max(0.0, max(values))
    sx = _scale(lo, hi, MARGIN * 2, WIDTH - MARGIN / 2)
    row = (HEIGHT - MARGIN) / max(1, len(values))
    parts = [f'<line x1="{sx(0):.2f}" y1="30" x2="{sx(0):.2f}" y2="{HEIGHT - 20}" stroke="black"/>\n']
    for i, (lab, v) in enumerate(zip(labels, values)):
        y = 30 + i * row
        x0, x1 = sorted((sx(0), sx(v)))
        colour = "seagreen" if v >= 0 else "firebrick"
        parts.append(
            f'<rect x="{x0:.2f}" y="{y:.2f}" width="{max(x1 - x0, 0.5):.2f}" height="{row * 0.7:.2f}" fill="{colour}"/>\n'
        )
        parts.append(
            f'<text x="{MARGIN * 2 - 4}" y="{y + row * 0.5:.2f}" text-anchor="end" font-size="9">{escape(str(lab))}</text>\n'
        )
    return _frame(title, "".join(parts))
