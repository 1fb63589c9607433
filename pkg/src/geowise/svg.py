"""Minimal SVG choropleths for grids and local statistics.

Flat documents, no scripting: the viewBox matches the data bounding box
with the y axis flipped for map orientation, a sequential light-to-dark
ramp colors the shapes, and a legend bar labels the value range.
"""

from __future__ import annotations

import math

import numpy as np

from geowise.data import format_number

_RAMP_LIGHT = (255, 255, 204)
_RAMP_DARK = (128, 0, 38)


def _ramp(t: float) -> str:
    t = min(max(t, 0.0), 1.0)
    rgb = tuple(
        round(lo + (hi - lo) * t) for lo, hi in zip(_RAMP_LIGHT, _RAMP_DARK)
    )
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def _normalize(values):
    finite = [v for v in values if not math.isnan(v)]
    vmin = min(finite)
    vmax = max(finite)
    if vmin == vmax:
        return vmin, vmax, lambda v: 0.5
    return vmin, vmax, lambda v: (v - vmin) / (vmax - vmin)


def _svg_open(xmin, ymin, xmax, ymax):
    width = xmax - xmin
    height = ymax - ymin
    # reserve a strip below the map for the legend
    pad = height * 0.18
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'viewBox="{format_number(xmin)} {format_number(-ymax)} '
        f'{format_number(width)} {format_number(height + pad)}">\n'
    ), pad


def _legend(xmin, ymin, xmax, ymax, pad, vmin, vmax):
    width = xmax - xmin
    bar_y = -ymin + pad * 0.25
    bar_h = pad * 0.3
    steps = 24
    parts = ['<g id="legend">\n']
    for s in range(steps):
        x0 = xmin + width * s / steps
        parts.append(
            f'<rect x="{format_number(x0)}" y="{format_number(bar_y)}" '
            f'width="{format_number(width / steps)}" height="{format_number(bar_h)}" '
            f'fill="{_ramp(s / (steps - 1))}"/>\n'
        )
    font = pad * 0.35
    parts.append(
        f'<text x="{format_number(xmin)}" y="{format_number(bar_y + bar_h + font)}" '
        f'font-size="{format_number(font)}">{format_number(vmin)}</text>\n'
    )
    parts.append(
        f'<text x="{format_number(xmax)}" y="{format_number(bar_y + bar_h + font)}" '
        f'font-size="{format_number(font)}" text-anchor="end">{format_number(vmax)}</text>\n'
    )
    parts.append("</g>\n")
    return "".join(parts)


def polygon_choropleth(polygons, values) -> str:
    """Color polygons by a value each; NaN-valued polygons are skipped.

    Emits exactly one polygon element per finite value.
    """
    drawable = [
        (poly, float(v)) for poly, v in zip(polygons, values) if not math.isnan(v)
    ]
    if not drawable:
        raise ValueError("no finite values to draw")
    bounds = np.array([poly.bounds() for poly, _ in drawable])
    xmin, ymin = bounds[:, 0].min(), bounds[:, 1].min()
    xmax, ymax = bounds[:, 2].max(), bounds[:, 3].max()
    vmin, vmax, scale = _normalize([v for _, v in drawable])

    head, pad = _svg_open(xmin, ymin, xmax, ymax)
    parts = [head]
    for poly, value in drawable:
        ring = poly.exterior
        points = " ".join(
            f"{format_number(px)},{format_number(-py)}" for px, py in ring[:-1]
        )
        parts.append(
            f'<polygon points="{points}" fill="{_ramp(scale(value))}" '
            f'stroke="#333333" stroke-width="{format_number((xmax - xmin) * 1e-3)}"/>\n'
        )
    parts.append(_legend(xmin, ymin, xmax, ymax, pad, vmin, vmax))
    parts.append("</svg>\n")
    return "".join(parts)


def grid_choropleth(cells) -> str:
    """Color grid cells by truth_mean - estimate_mean.

    One polygon element per cell where both counts are positive; empty
    or one-sided cells are skipped.
    """
    polygons = []
    values = []
    for cell in cells:
        if cell.truth_count > 0 and cell.estimate_count > 0:
            polygons.append(cell.polygon)
            values.append(cell.truth_mean - cell.estimate_mean)
    if not polygons:
        raise ValueError("no cells with both truth and estimate values to draw")
    return polygon_choropleth(polygons, values)


def point_choropleth(coords, values) -> str:
    """Color points by a per-observation statistic (NaN rows hollow)."""
    coords = np.asarray(coords, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if coords.shape[0] != values.shape[0]:
        raise ValueError("coords and values must align")
    if not np.isfinite(values).any():
        raise ValueError("no finite values to draw")
    xmin, ymin = coords.min(axis=0)
    xmax, ymax = coords.max(axis=0)
    if xmin == xmax:
        xmin, xmax = xmin - 0.5, xmax + 0.5
    if ymin == ymax:
        ymin, ymax = ymin - 0.5, ymax + 0.5
    vmin, vmax, scale = _normalize(values.tolist())
    radius = max(xmax - xmin, ymax - ymin) * 0.01

    head, pad = _svg_open(xmin, ymin, xmax, ymax)
    parts = [head]
    for (px, py), v in zip(coords, values):
        if math.isnan(v):
            fill = "none"
            extra = ' stroke="#999999"'
        else:
            fill = _ramp(scale(v))
            extra = ""
        parts.append(
            f'<circle cx="{format_number(px)}" cy="{format_number(-py)}" '
            f'r="{format_number(radius)}" fill="{fill}"{extra}/>\n'
        )
    parts.append(_legend(xmin, ymin, xmax, ymax, pad, vmin, vmax))
    parts.append("</svg>\n")
    return "".join(parts)
