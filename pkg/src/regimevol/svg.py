"""Minimal deterministic SVG line charts."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 720, 360
MARGIN = (60, 20, 30, 40)  # left, right, top, bottom
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _x_numeric(x) -> tuple[np.ndarray, list[str]]:
    x = np.asarray(x)
    if np.issubdtype(x.dtype, np.datetime64):
        d = x.astype("datetime64[D]")
        return d.astype(np.int64).astype(float), [str(d[0]), str(d[-1])]
    x = x.astype(float)
    return x, [f"{x[0]:.4g}", f"{x[-1]:.4g}"]


def line_chart(
    path,
    x,
    lines: Mapping[str, Sequence[float]],
    *,
    title: str = "",
    bands: Mapping[str, tuple[Sequence[float], Sequence[float]]] | None = None,
    reference: float | None = None,
) -> Path:
    """Write one or more series against a shared x axis.

    ``bands`` maps a line name to lower and upper bounds drawn as a shaded
    area; ``reference`` draws a horizontal dashed line.
    """
    xs, xlabels = _x_numeric(x)
    arrays = {k: np.asarray(v, dtype=float) for k, v in lines.items()}
    pool = [a[np.isfinite(a)] for a in arrays.values()]
    for lo, hi in (bands or {}).values():
        pool += [np.asarray(lo, float), np.asarray(hi, float)]
    if reference is not None:
        pool.append(np.array([reference]))
    allv = np.concatenate([p[np.isfinite(p)] for p in pool]) if pool else np.zeros(1)
    if allv.size == 0:
        allv = np.zeros(1)
    ymin, ymax = float(allv.min()), float(allv.max())
    if ymax == ymin:
        ymin, ymax = ymin - 1.0, ymax + 1.0
    xmin, xmax = float(xs.min()), float(xs.max())
    if xmax == xmin:
        xmax = xmin + 1.0
    left, right, top, bottom = MARGIN
    pw, ph = WIDTH - left - right, HEIGHT - top - bottom

    def px(v):
        return left + (v - xmin) / (xmax - xmin) * pw

    def py(v):
        return top + (ymax - v) / (ymax - ymin) * ph

    def points(xv, yv):
        ok = np.isfinite(yv)
        return " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(xv[ok], yv[ok]))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="18" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
        f'<text x="{left - 4}" y="{top + 4}" text-anchor="end" font-size="11">{ymax:.4g}</text>',
        f'<text x="{left - 4}" y="{top + ph}" text-anchor="end" font-size="11">{ymin:.4g}</text>',
        f'<text x="{left}" y="{HEIGHT - 12}" font-size="11">{escape(xlabels[0])}</text>',
        f'<text x="{left + pw}" y="{HEIGHT - 12}" text-anchor="end" font-size="11">{escape(xlabels[1])}</text>',
    ]
    if reference is not None:
        y0 = py(reference)
        out.append(f'<line x1="{left}" y1="{y0:.2f}" x2="{left + pw}" y2="{y0:.2f}" stroke="grey" stroke-dasharray="4 3"/>')
    names = list(arrays)
    for k, name in enumerate(names):
        color = PALETTE[k % len(PALETTE)]
        if bands and name in bands:
            lo, hi = (np.asarray(b, dtype=float) for b in bands[name])
            ok = np.isfinite(lo) & np.isfinite(hi)
            poly = points(xs[ok], hi[ok]) + " " + points(xs[ok][::-1], lo[ok][::-1])
            out.append(f'<polygon points="{poly}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
        out.append(f'<polyline points="{points(xs, arrays[name])}" fill="none" stroke="{color}" stroke-width="1"/>')
        out.append(f'<text x="{left + pw - 4}" y="{top + 14 * (k + 1)}" text-anchor="end" font-size="11" fill="{color}">{escape(name)}</text>')
    out.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(out) + "\n")
    return path
