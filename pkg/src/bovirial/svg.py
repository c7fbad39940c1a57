"""Minimal SVG 1.1 line plots: axes, ticks and one polyline."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 400
MARGIN = dict(left=80, right=20, top=40, bottom=50)


def _ticks(lo: float, hi: float, log: bool, n: int = 5) -> np.ndarray:
    if log:
        return np.geomspace(lo, hi, n)
    return np.linspace(lo, hi, n)


def _range(v: np.ndarray, log: bool) -> tuple[float, float]:
    lo, hi = float(v.min()), float(v.max())
    if log:
        return lo, hi if hi > lo else lo * 1.0001
    # keep flat series flat instead of magnifying round-off
    pad = max(1e-8 * max(abs(lo), abs(hi)), 1e-300)
    if hi - lo < 2 * pad:
        mid = 0.5 * (lo + hi)
        return mid - pad, mid + pad
    return lo, hi


def line_plot(x, y, title: str = "", xlabel: str = "t", ylabel: str = "",
              logx: bool = False, logy: bool = False) -> str:
    """Render ``y`` against ``x`` as a standalone SVG document."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size == 0 or x.shape != y.shape:
        raise ValueError("need matching non-empty x and y")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("plot data must be finite")
    if logx and np.any(x <= 0):
        raise ValueError("log x-axis needs positive data")
    if logy and np.any(y <= 0):
        logy = False

    x0, x1 = _range(x, logx)
    y0, y1 = _range(y, logy)
    fx = np.log10 if logx else (lambda v: v)
    fy = np.log10 if logy else (lambda v: v)
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(v):
        return MARGIN["left"] + pw * (fx(v) - fx(x0)) / (fx(x1) - fx(x0))

    def sy(v):
        return MARGIN["top"] + ph * (1 - (fy(v) - fy(y0)) / (fy(y1) - fy(y0)))

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="24" text-anchor="middle" font-size="16">{escape(title)}</text>',
    ]
    left, bottom = MARGIN["left"], HEIGHT - MARGIN["bottom"]
    out.append(f'<line x1="{left}" y1="{bottom}" x2="{WIDTH - MARGIN["right"]}" y2="{bottom}" stroke="black"/>')
    out.append(f'<line x1="{left}" y1="{MARGIN["top"]}" x2="{left}" y2="{bottom}" stroke="black"/>')
    for tx in _ticks(x0, x1, logx):
        px = sx(tx)
        out.append(f'<line x1="{px:.2f}" y1="{bottom}" x2="{px:.2f}" y2="{bottom + 5}" stroke="black"/>')
        out.append(f'<text class="xtick" x="{px:.2f}" y="{bottom + 20}" text-anchor="middle" '
                   f'font-size="11">{tx:.6g}</text>')
    for ty in _ticks(y0, y1, logy):
        py = sy(ty)
        out.append(f'<line x1="{left - 5}" y1="{py:.2f}" x2="{left}" y2="{py:.2f}" stroke="black"/>')
        out.append(f'<text class="ytick" x="{left - 8}" y="{py + 4:.2f}" text-anchor="end" '
                   f'font-size="11">{ty:.9g}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{HEIGHT - 10}" text-anchor="middle" font-size="13">'
               f'{escape(xlabel)}{" (log)" if logx else ""}</text>')
    out.append(f'<text x="16" y="{MARGIN["top"] + ph / 2}" text-anchor="middle" font-size="13" '
               f'transform="rotate(-90 16 {MARGIN["top"] + ph / 2})">{escape(ylabel)}{" (log)" if logy else ""}</text>')
    pts = " ".join(f"{sx(a):.3f},{sy(b):.3f}" for a, b in zip(x, y))
    out.append(f'<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{pts}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
