"""Minimal SVG heatmap writer with a fixed [0, 1] color scale."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

# 8 stops sampled from a viridis-like ramp, low -> high
RAMP = (
    (0x44, 0x01, 0x54),
    (0x46, 0x33, 0x7E),
    (0x36, 0x5C, 0x8D),
    (0x27, 0x7F, 0x8E),
    (0x1F, 0xA1, 0x87),
    (0x4A, 0xC1, 0x6D),
    (0x9F, 0xDA, 0x3A),
    (0xFD, 0xE7, 0x25),
)


def color(value: float) -> str:
    v = min(max(float(value), 0.0), 1.0) * (len(RAMP) - 1)
    i = min(int(v), len(RAMP) - 2)
    f = v - i
    rgb = [round(a + (b - a) * f) for a, b in zip(RAMP[i], RAMP[i + 1])]
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def heatmap(matrix: np.ndarray, title: str = "", metadata: str = "", size: int = 400) -> str:
    M = np.asarray(matrix, dtype=np.float64)
    rows, cols = M.shape
    cell = max(1, size // max(rows, cols))
    width, height = cols * cell, rows * cell
    bar = 20
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width + bar + 50}" height="{height + 30}" '
        f'viewBox="0 0 {width + bar + 50} {height + 30}">'
    ]
    if metadata:
        out.append(f"<metadata>{escape(metadata)}</metadata>")
    if title:
        out.append(f'<title>{escape(title)}</title>')
    out.append('<g transform="translate(0,20)" shape-rendering="crispEdges">')
    for i in range(rows):
        for j in range(cols):
            out.append(f'<rect x="{j * cell}" y="{i * cell}" width="{cell}" height="{cell}" fill="{color(M[i, j])}"/>')
    # color bar, 1 at the top
    steps = 50
    h = height / steps
    for k in range(steps):
        out.append(
            f'<rect x="{width + 10}" y="{k * h:.4f}" width="{bar}" height="{h:.4f}" fill="{color(1 - (k + 0.5) / steps)}"/>'
        )
    out.append(f'<text x="{width + bar + 14}" y="10" font-size="10">1</text>')
    out.append(f'<text x="{width + bar + 14}" y="{height}" font-size="10">0</text>')
    out.append("</g>")
    if title:
        out.append(f'<text x="0" y="14" font-size="12">{escape(title)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
