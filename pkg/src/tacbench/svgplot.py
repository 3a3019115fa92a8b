"""Plain SVG emitters: sensitivity heatmap grid and per-theme radar polygons.

Data-faithful and dependency-free: every shape carries a ``data-value``
attribute with the underlying number, and output bytes are deterministic.
No styling guarantees beyond being viewable.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .radar import THEMES, RadarValue
from .spatial import SensitivityMap


def _f(x: float) -> str:
    return repr(round(float(x), 4))


def _gray(t: float) -> str:
    level = int(round(255 * (1.0 - 0.85 * min(max(t, 0.0), 1.0))))
    return f"rgb({level},{level},{level})"


def heatmap_svg(smap: SensitivityMap, size: float = 480.0) -> str:
    """One rect per occupied bin, shaded by mean sensitivity."""
    ny, nx = smap.grid.shape
    occupied = smap.occupancy > 0
    values = smap.grid[occupied]
    lo = float(values.min())
    hi = float(values.max())
    span = hi - lo if hi > lo else 1.0
    cell_w = size / nx
    cell_h = size / ny
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(size)}" '
        f'height="{_f(size)}" viewBox="0 0 {_f(size)} {_f(size)}">',
        f'<g id="heatmap" data-min="{repr(lo)}" data-max="{repr(hi)}">',
    ]
    for iy in range(ny):
        for ix in range(nx):
            if not occupied[iy, ix]:
                continue
            v = float(smap.grid[iy, ix])
            parts.append(
                f'<rect x="{_f(ix * cell_w)}" y="{_f((ny - 1 - iy) * cell_h)}" '
                f'width="{_f(cell_w)}" height="{_f(cell_h)}" '
                f'fill="{_gray((v - lo) / span)}" data-value="{repr(v)}" '
                f'data-count="{int(smap.occupancy[iy, ix])}"/>')
    parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def radar_svg(rows: list[RadarValue], size: float = 320.0) -> str:
    """One chart per theme; one polygon per sensor, vertices = axis count."""
    themes = [t for t in THEMES if any(r.theme == t for r in rows)]
    width = size * max(len(themes), 1)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(width)}" '
        f'height="{_f(size)}" viewBox="0 0 {_f(width)} {_f(size)}">',
    ]
    for t_idx, theme in enumerate(themes):
        axes = THEMES[theme]
        theme_rows = [r for r in rows if r.theme == theme]
        sensors = sorted({r.sensor for r in theme_rows})
        cx = size * (t_idx + 0.5)
        cy = size * 0.5
        radius = size * 0.4
        parts.append(f'<g id="radar-{theme}" data-axes="{len(axes)}">')
        for i, axis in enumerate(axes):
            angle = 2 * np.pi * i / len(axes) - np.pi / 2
            parts.append(
                f'<line x1="{_f(cx)}" y1="{_f(cy)}" '
                f'x2="{_f(cx + radius * np.cos(angle))}" '
                f'y2="{_f(cy + radius * np.sin(angle))}" '
                f'stroke="#999" data-axis="{axis}"/>')
        for s_idx, sensor in enumerate(sensors):
            points = []
            excluded_axes = []
            for i, axis in enumerate(axes):
                row = next(r for r in theme_rows if r.sensor == sensor and r.axis == axis)
                angle = 2 * np.pi * i / len(axes) - np.pi / 2
                rr = radius * row.normalized
                points.append(f"{_f(cx + rr * np.cos(angle))},{_f(cy + rr * np.sin(angle))}")
                if row.excluded:
                    excluded_axes.append(axis)
            hue = (s_idx * 137) % 360
            marker = f' data-excluded-axes="{";".join(excluded_axes)}"' if excluded_axes else ""
            parts.append(
                f'<polygon points="{" ".join(points)}" data-sensor="{sensor}" '
                f'fill="none" stroke="hsl({hue},60%,40%)"{marker}/>')
        parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def save_svg(content: str, path: str | Path) -> None:
    Path(path).write_text(content, encoding="utf-8")
