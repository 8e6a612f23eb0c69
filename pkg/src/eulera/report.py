"""Small deterministic SVG line charts with log-log axes."""
from __future__ import annotations

import math

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
W, H, PAD = 640, 420, 60


def _ticks(lo, hi):
    return list(range(math.floor(lo), math.ceil(hi) + 1))


def loglog_svg(x, series, xlabel, title):
    """Polyline per series on base-10 log axes; non-positive values are skipped."""
    pts = {}
    for name, ys in series.items():
        pts[name] = [(math.log10(a), math.log10(b)) for a, b in zip(x, ys) if a > 0 and b > 0]
    allp = [p for v in pts.values() for p in v]
    if allp:
        x0, x1 = min(p[0] for p in allp), max(p[0] for p in allp)
        y0, y1 = min(p[1] for p in allp), max(p[1] for p in allp)
    else:
        x0 = y0 = 0.0
        x1 = y1 = 1.0
    x0, x1 = math.floor(x0 * 2) / 2, math.ceil(x1 * 2) / 2
    y0, y1 = math.floor(y0), math.ceil(y1)
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1

    def sx(v):
        return PAD + (v - x0) / (x1 - x0) * (W - 2 * PAD)

    def sy(v):
        return H - PAD - (v - y0) / (y1 - y0) * (H - 2 * PAD)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">',
        f'<text x="{W / 2:.1f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<rect x="{PAD}" y="{PAD}" width="{W - 2 * PAD}" height="{H - 2 * PAD}" fill="none" stroke="#000"/>',
    ]
    for t in _ticks(y0, y1):
        if y0 <= t <= y1:
            out.append(f'<text x="{PAD - 6}" y="{sy(t) + 4:.1f}" text-anchor="end">1e{t}</text>')
            out.append(f'<line x1="{PAD}" x2="{W - PAD}" y1="{sy(t):.1f}" y2="{sy(t):.1f}" stroke="#ddd"/>')
    for t in _ticks(x0, x1):
        if x0 <= t <= x1:
            out.append(f'<text x="{sx(t):.1f}" y="{H - PAD + 16}" text-anchor="middle">1e{t}</text>')
    out.append(f'<text x="{W / 2:.1f}" y="{H - 14}" text-anchor="middle">{xlabel}</text>')
    for i, (name, p) in enumerate(pts.items()):
        c = _COLORS[i % len(_COLORS)]
        if p:
            coords = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in p)
            out.append(f'<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{coords}"/>')
            for a, b in p:
                out.append(f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="2.5" fill="{c}"/>')
        out.append(f'<text x="{W - PAD + 4}" y="{PAD + 14 * (i + 1)}" fill="{c}" font-size="10">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
