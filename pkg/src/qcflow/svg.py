"""Static SVG rendering of phase portraits and quasipolar rectification.

Hand-rolled SVG: polylines for trajectories, a marked unit circle, and the
side-by-side layout (curved trajectories on the left, their straightened
images on the right) for the quasipolar view.
"""

from __future__ import annotations

import math

import numpy as np


def _fmt(x: float) -> str:
    return format(x, ".6g")


class _Panel:
    """Maps plane coordinates into a square viewport."""

    def __init__(self, cx: float, cy: float, size: float, extent: float):
        self.cx = cx
        self.cy = cy
        self.scale = size / (2.0 * extent)

    def to_px(self, z: complex) -> tuple[float, float]:
        return (self.cx + z.real * self.scale, self.cy - z.imag * self.scale)

    def polyline(self, pts, color: str, width: float = 1.0) -> str:
        coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in (self.to_px(p) for p in pts))
        return (
            f'<polyline points="{coords}" fill="none" stroke="{color}" '
            f'stroke-width="{_fmt(width)}"/>'
        )

    def circle(self, radius: float, color: str, dashed: bool = False) -> str:
        dash = ' stroke-dasharray="4 3"' if dashed else ""
        return (
            f'<circle cx="{_fmt(self.cx)}" cy="{_fmt(self.cy)}" '
            f'r="{_fmt(radius * self.scale)}" fill="none" stroke="{color}"'
            f"{dash} stroke-width=\"1\"/>"
        )


def render_phase_portrait(curves, window=None, size: int = 480) -> str:
    """One panel with trajectory polylines and the unit circle marked."""
    extent = 2.0
    if window is not None:
        extent = 1.1 * window.R
    for pts in curves:
        if len(pts):
            extent = max(extent, 1.1 * float(np.max(np.abs(np.asarray(pts)))))
    panel = _Panel(size / 2, size / 2, size * 0.9, extent)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
        panel.circle(1.0, "#888888", dashed=True),
    ]
    if window is not None:
        parts.append(panel.circle(window.r, "#bbbbbb"))
        parts.append(panel.circle(window.R, "#bbbbbb"))
    for pts in curves:
        parts.append(panel.polyline(pts, "#1f6fb2"))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_rectification(curves_and_thetas, window, size: int = 480) -> str:
    """Side-by-side panels: trajectories left, straightened rays right."""
    extent = 1.1 * window.R
    left = _Panel(size / 2, size / 2, size * 0.9, extent)
    right = _Panel(size * 1.5, size / 2, size * 0.9, extent)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{2 * size}" height="{size}" '
        f'viewBox="0 0 {2 * size} {size}">',
        f'<rect width="{2 * size}" height="{size}" fill="white"/>',
        f'<line x1="{size}" y1="0" x2="{size}" y2="{size}" stroke="#dddddd"/>',
    ]
    for panel in (left, right):
        parts.append(panel.circle(1.0, "#888888", dashed=True))
        parts.append(panel.circle(window.r, "#bbbbbb"))
        parts.append(panel.circle(window.R, "#bbbbbb"))
    for pts, th in curves_and_thetas:
        parts.append(left.polyline(pts, "#1f6fb2"))
        ray = [window.r * complex(math.cos(th), math.sin(th)),
               window.R * complex(math.cos(th), math.sin(th))]
        parts.append(right.polyline(ray, "#b23a1f"))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
