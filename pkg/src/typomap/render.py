"""Static SVG rendering of a semantic map with per-label contours."""
from __future__ import annotations

from typing import Dict, Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .aligner import NOMATCH

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
           "#e377c2", "#17becf", "#bcbd22", "#393b79", "#637939", "#843c39"]
NOMATCH_COLOR = "#9e9e9e"


class RenderError(ValueError):
    pass


def legend_order(labels) -> list:
    """Lexified tokens alphabetically, then ngram_1..N, then NOMATCH."""
    def key(lab):
        if lab == NOMATCH:
            return (2, 0, "")
        if lab.startswith("ngram_") and lab[6:].isdigit():
            return (1, int(lab[6:]), lab)
        return (0, 0, lab)
    return sorted(set(labels), key=key)


def colors_for(labels) -> Dict[str, str]:
    out, k = {}, 0
    for lab in legend_order(labels):
        if lab == NOMATCH:
            out[lab] = NOMATCH_COLOR
        else:
            out[lab] = PALETTE[k % len(PALETTE)]
            k += 1
    return out


def render_svg(xy, labels: Sequence[str], contours: Optional[Dict[str, object]] = None,
               title: str = "", size: int = 640, margin: int = 40, legend_width: int = 160,
               radius: float = 3.5) -> str:
    """Scatter of usage points coloured by label, contour polylines and a legend.

    Output depends only on the inputs, so identical inputs give identical bytes.
    """
    xy = np.asarray(xy, float).reshape(-1, 2)
    if len(xy) == 0:
        raise RenderError("cannot render an empty map")
    if len(labels) != len(xy):
        raise RenderError("one label per point is required")
    contours = contours or {}
    xmin, ymin = xy.min(axis=0)
    xmax, ymax = xy.max(axis=0)
    for cs in contours.values():
        for lines in cs.lines.values():
            for line in lines:
                if line:
                    arr = np.asarray(line)
                    xmin, ymin = min(xmin, arr[:, 0].min()), min(ymin, arr[:, 1].min())
                    xmax, ymax = max(xmax, arr[:, 0].max()), max(ymax, arr[:, 1].max())
    span = max(xmax - xmin, ymax - ymin) or 1.0
    inner = size - 2 * margin

    def px(x, y):
        return (margin + (x - xmin) / span * inner, size - margin - (y - ymin) / span * inner)

    colors = colors_for(list(labels) + list(contours))
    width = size + legend_width
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{size}" viewBox="0 0 {width} {size}">',
        f'<rect x="0" y="0" width="{width}" height="{size}" fill="#ffffff"/>',
    ]
    if title:
        out.append(f'<text x="{margin}" y="{margin / 2:.1f}" font-family="sans-serif" font-size="14">{escape(title)}</text>')
    for lab in legend_order(contours):
        cs = contours[lab]
        out.append(f'<g class="contours" data-label="{escape(lab)}" fill="none" stroke="{colors[lab]}">')
        for level in sorted(cs.lines):
            opacity = 0.3 + 0.7 * min(1.0, max(0.0, (level - 0.8) / 0.2))
            for line in cs.lines[level]:
                if len(line) < 2:
                    continue
                pts = " ".join("%.2f,%.2f" % px(x, y) for x, y in line)
                out.append(f'<polyline points="{pts}" stroke-width="1.2" stroke-opacity="{opacity:.2f}"/>')
        out.append("</g>")
    out.append('<g class="points" stroke="#333333" stroke-width="0.4">')
    for (x, y), lab in zip(xy, labels):
        cx, cy = px(x, y)
        out.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{radius}" fill="{colors[lab]}"/>')
    out.append("</g>")
    out.append('<g class="legend" font-family="sans-serif" font-size="12">')
    for k, lab in enumerate(legend_order(list(labels) + list(contours))):
        y = margin + 18 * k
        out.append(f'<circle cx="{size + 10}" cy="{y}" r="5" fill="{colors[lab]}"/>')
        out.append(f'<text x="{size + 20}" y="{y + 4}">{escape(lab)}</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
