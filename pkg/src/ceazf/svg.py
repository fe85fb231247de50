"""Minimal SVG line charts for the preset outputs."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

__all__ = ["line_chart"]

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")
DASHES = ("", "6,3", "2,2", "8,3,2,3")


def _ticks(lo, hi, log):
    if log:
        a, b = int(np.floor(lo)), int(np.ceil(hi))
        return [float(v) for v in range(a, b + 1)]
    step = 10 ** np.floor(np.log10(max(hi - lo, 1e-300)))
    for m in (1, 2, 5, 10):
        if (hi - lo) / (m * step) <= 8:
            step *= m
            break
    start = np.ceil(lo / step) * step
    return [float(v) for v in np.arange(start, hi + step / 2, step)]


def line_chart(path, series, title="", xlabel="", ylabel="", logx=False, logy=False, width=640, height=420, comment=""):
    """Write ``series`` (list of ``(label, x, y)``) as an SVG chart; non-finite points are skipped.

    ``comment`` is embedded verbatim as an XML comment (used for reproduction metadata).
    """
    left, right, top, bottom = 70, 170, 40, 55
    pw, ph = width - left - right, height - top - bottom
    tx = np.log10 if logx else (lambda v: np.asarray(v, dtype=float))
    ty = np.log10 if logy else (lambda v: np.asarray(v, dtype=float))
    clean = []
    for label, x, y in series:
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            X, Y = tx(x), ty(y)
        ok = np.isfinite(X) & np.isfinite(Y)
        clean.append((label, X[ok], Y[ok]))
    allx = np.concatenate([c[1] for c in clean]) if clean else np.array([0.0, 1.0])
    ally = np.concatenate([c[2] for c in clean]) if clean else np.array([0.0, 1.0])
    if allx.size == 0:
        allx, ally = np.array([0.0, 1.0]), np.array([0.0, 1.0])
    x0, x1 = allx.min(), allx.max()
    y0, y1 = ally.min(), ally.max()
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    sx = lambda v: left + (v - x0) / (x1 - x0) * pw
    sy = lambda v: top + ph - (v - y0) / (y1 - y0) * ph
    fmt = lambda v, log: f"1e{int(v)}" if log else f"{v:g}"

    out = []
    if comment:
        out.append("<!--\n" + comment.replace("--", "- -") + "\n-->")
    out += [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left + pw / 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for v in _ticks(x0, x1, logx):
        if x0 <= v <= x1:
            X = sx(v)
            out.append(f'<line x1="{X:.1f}" y1="{top}" x2="{X:.1f}" y2="{top + ph}" stroke="#ddd"/>')
            out.append(f'<text x="{X:.1f}" y="{top + ph + 15}" text-anchor="middle">{fmt(v, logx)}</text>')
    for v in _ticks(y0, y1, logy):
        if y0 <= v <= y1:
            Y = sy(v)
            out.append(f'<line x1="{left}" y1="{Y:.1f}" x2="{left + pw}" y2="{Y:.1f}" stroke="#ddd"/>')
            out.append(f'<text x="{left - 6}" y="{Y + 4:.1f}" text-anchor="end">{fmt(v, logy)}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="16" y="{top + ph / 2}" text-anchor="middle" transform="rotate(-90 16 {top + ph / 2})">{escape(ylabel)}</text>'
    )
    for k, (label, X, Y) in enumerate(clean):
        color = COLORS[k % len(COLORS)]
        dash = DASHES[(k // len(COLORS)) % len(DASHES)] or DASHES[k % 2]
        if len(X):
            pts = " ".join(f"{sx(a):.1f},{sy(b):.1f}" for a, b in zip(X, Y))
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.6" stroke-dasharray="{dash}"/>')
        ly = top + 14 + 16 * k
        out.append(f'<line x1="{left + pw + 10}" y1="{ly}" x2="{left + pw + 34}" y2="{ly}" stroke="{color}" stroke-dasharray="{dash}"/>')
        out.append(f'<text x="{left + pw + 38}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")
    return path
