"""Minimal SVG 1.1 writers for heatmaps and histograms (no plotting stack)."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

# viridis sampled at 9 stops, linearly interpolated between them
_VIRIDIS = np.array([
    (68, 1, 84), (71, 44, 122), (59, 81, 139), (44, 113, 142), (33, 144, 141),
    (39, 173, 129), (92, 200, 99), (170, 220, 50), (253, 231, 37),
], dtype=float)


def colormap(t) -> np.ndarray:
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    pos = t * (len(_VIRIDIS) - 1)
    i = np.minimum(pos.astype(int), len(_VIRIDIS) - 2)
    frac = (pos - i)[..., None]
    return np.rint(_VIRIDIS[i] * (1 - frac) + _VIRIDIS[i + 1] * frac).astype(int)


def _header(width, height, metadata: str, title: str) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f"<title>{escape(title)}</title>",
        f"<metadata><![CDATA[\n{metadata.replace(']]>', ']] >')}]]></metadata>",
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def heatmap(xs, ys, values, *, title: str = "", metadata: str = "", xlabel: str = "Re beta",
            ylabel: str = "Im beta", cell: int = 6) -> str:
    """values[j, i] at (xs[i], ys[j]); y increases upwards."""
    values = np.asarray(values, dtype=float)
    ny, nx = values.shape
    left, top, bar = 60, 30, 40
    w = nx * cell
    h = ny * cell
    width = left + w + bar + 60
    height = top + h + 50
    vmax = float(values.max()) if values.size and values.max() > 0 else 1.0
    rgb = colormap(values / vmax)
    out = _header(width, height, metadata, title)
    out.append(f'<text x="{left}" y="18" font-size="13" font-family="sans-serif">{escape(title)}</text>')
    out.append('<g shape-rendering="crispEdges">')
    for j in range(ny):
        yp = top + (ny - 1 - j) * cell
        for i in range(nx):
            r, g, b = rgb[j, i]
            out.append(f'<rect x="{left + i * cell}" y="{yp}" width="{cell}" height="{cell}" '
                       f'fill="#{r:02x}{g:02x}{b:02x}"/>')
    out.append("</g>")
    out.append(f'<rect x="{left}" y="{top}" width="{w}" height="{h}" fill="none" stroke="black"/>')
    for frac, val in ((0.0, xs[0]), (0.5, 0.5 * (xs[0] + xs[-1])), (1.0, xs[-1])):
        out.append(f'<text x="{left + frac * w:.1f}" y="{top + h + 16}" font-size="11" '
                   f'text-anchor="middle" font-family="sans-serif">{_fmt(val)}</text>')
    for frac, val in ((0.0, ys[0]), (0.5, 0.5 * (ys[0] + ys[-1])), (1.0, ys[-1])):
        out.append(f'<text x="{left - 6}" y="{top + h - frac * h + 4:.1f}" font-size="11" '
                   f'text-anchor="end" font-family="sans-serif">{_fmt(val)}</text>')
    out.append(f'<text x="{left + w / 2:.1f}" y="{top + h + 36}" font-size="12" text-anchor="middle" '
               f'font-family="sans-serif">{escape(xlabel)}</text>')
    out.append(f'<text x="14" y="{top + h / 2:.1f}" font-size="12" text-anchor="middle" font-family="sans-serif" '
               f'transform="rotate(-90 14 {top + h / 2:.1f})">{escape(ylabel)}</text>')
    bx = left + w + 15
    steps = 32
    for s in range(steps):
        r, g, b = colormap((s + 0.5) / steps)
        yp = top + h - (s + 1) * h / steps
        out.append(f'<rect x="{bx}" y="{yp:.2f}" width="14" height="{h / steps + 0.5:.2f}" '
                   f'fill="#{r:02x}{g:02x}{b:02x}"/>')
    out.append(f'<text x="{bx + 18}" y="{top + 8}" font-size="10" font-family="sans-serif">{_fmt(vmax)}</text>')
    out.append(f'<text x="{bx + 18}" y="{top + h}" font-size="10" font-family="sans-serif">0</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def histogram_chart(edges, density, *, title: str = "", metadata: str = "", xlabel: str = "s",
                    x_max: float | None = None) -> str:
    edges = np.asarray(edges, dtype=float)
    density = np.asarray(density, dtype=float)
    if x_max is not None:
        keep = edges[:-1] < x_max
        density = density[keep]
        edges = edges[:keep.sum() + 1]
    left, top, w, h = 60, 30, 480, 260
    width, height = left + w + 30, top + h + 50
    x0, x1 = float(edges[0]), float(edges[-1])
    ymax = float(density.max()) if density.size and density.max() > 0 else 1.0
    sx = w / (x1 - x0)
    out = _header(width, height, metadata, title)
    out.append(f'<text x="{left}" y="18" font-size="13" font-family="sans-serif">{escape(title)}</text>')
    out.append('<g fill="#3b518b" shape-rendering="crispEdges">')
    for a, b, d in zip(edges[:-1], edges[1:], density):
        if d <= 0:
            continue
        bh = d / ymax * h
        out.append(f'<rect x="{left + (a - x0) * sx:.2f}" y="{top + h - bh:.2f}" '
                   f'width="{max((b - a) * sx, 0.5):.2f}" height="{bh:.2f}"/>')
    out.append("</g>")
    out.append(f'<rect x="{left}" y="{top}" width="{w}" height="{h}" fill="none" stroke="black"/>')
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        out.append(f'<text x="{left + frac * w:.1f}" y="{top + h + 16}" font-size="11" text-anchor="middle" '
                   f'font-family="sans-serif">{_fmt(x0 + frac * (x1 - x0))}</text>')
    out.append(f'<text x="{left - 6}" y="{top + 8}" font-size="11" text-anchor="end" '
               f'font-family="sans-serif">{_fmt(ymax)}</text>')
    out.append(f'<text x="{left + w / 2:.1f}" y="{top + h + 36}" font-size="12" text-anchor="middle" '
               f'font-family="sans-serif">{escape(xlabel)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
