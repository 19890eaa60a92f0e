"""SVG and raster renderings of a 2-DifViz coordinate sequence."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class SvgStyle:
    width: int = 256
    height: int = 256
    margin: float = 0.05
    stroke: str = "black"
    stroke_width: float = 3.0
    background: str = "white"


def _dedup(points: np.ndarray) -> np.ndarray:
    keep = np.ones(len(points), dtype=bool)
    keep[1:] = np.any(np.diff(points, axis=0) != 0, axis=1)
    return points[keep]


def _fit(points: np.ndarray, width: float, height: float, margin: float) -> np.ndarray:
    """Map canvas coordinates (y up) into a box with y down, aspect preserved."""
    lo = points.min(axis=0)
    extent = points.max(axis=0) - lo
    avail = np.array([width, height]) * (1.0 - 2.0 * margin)
    span = extent.max()
    scale = 1.0 if span == 0 else float(np.min(avail[extent > 0] / extent[extent > 0]))
    centred = (points - lo - extent / 2.0) * scale
    return np.column_stack([width / 2.0 + centred[:, 0], height / 2.0 - centred[:, 1]])


def catmull_rom_segments(points: np.ndarray) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Cubic Bezier (c1, c2, end) triples of a uniform Catmull-Rom spline."""
    padded = np.vstack([points[:1], points, points[-1:]])
    segs = []
    for i in range(1, len(padded) - 2):
        p0, p1, p2, p3 = padded[i - 1], padded[i], padded[i + 1], padded[i + 2]
        segs.append((p1 + (p2 - p0) / 6.0, p2 - (p3 - p1) / 6.0, p2))
    return segs


def render_svg(coords, style: SvgStyle = SvgStyle()) -> str:
    pts = np.asarray(coords, dtype=float).reshape(-1, 2)
    if len(pts) < 2:
        raise DomainError("need at least 2 points to draw a path")
    pts = _fit(_dedup(pts), style.width, style.height, style.margin)
    d = [f"M {pts[0, 0]:.2f} {pts[0, 1]:.2f}"]
    for c1, c2, end in catmull_rom_segments(pts):
        d.append(f"C {c1[0]:.2f} {c1[1]:.2f} {c2[0]:.2f} {c2[1]:.2f} {end[0]:.2f} {end[1]:.2f}")
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{style.width}" '
        f'height="{style.height}" viewBox="0 0 {style.width} {style.height}">\n'
        f'  <rect width="100%" height="100%" fill="{style.background}"/>\n'
        f'  <path d="{" ".join(d)}" fill="none" stroke="{style.stroke}" '
        f'stroke-width="{style.stroke_width}" stroke-linecap="round" stroke-linejoin="round"/>\n'
        "</svg>\n"
    )


@numba.njit(cache=True, nogil=True)
def _stroke(img, a, b, radius):
    """img = max(img, clip(radius - distance to segment a_i -> b_i, 0, 1)) over pixel centres.

    Only pixels inside each segment's bounding box widened by ``radius`` can
    be lit, so that box is all that gets visited.
    """
    size = img.shape[0]
    for s in range(a.shape[0]):
        ax, ay, bx, by = a[s, 0], a[s, 1], b[s, 0], b[s, 1]
        dx, dy = bx - ax, by - ay
        len2 = dx * dx + dy * dy
        i0 = max(0, int(np.floor(min(ay, by) - radius)))
        i1 = min(size - 1, int(np.ceil(max(ay, by) + radius)))
        j0 = max(0, int(np.floor(min(ax, bx) - radius)))
        j1 = min(size - 1, int(np.ceil(max(ax, bx) + radius)))
        for i in range(i0, i1 + 1):
            py = i + 0.5
            for j in range(j0, j1 + 1):
                px = j + 0.5
                u = 0.0
                if len2 > 0:
                    u = ((px - ax) * dx + (py - ay) * dy) / len2
                    u = min(max(u, 0.0), 1.0)
                ex = px - ax - u * dx
                ey = py - ay - u * dy
                v = radius - np.sqrt(ex * ex + ey * ey)
                v = min(max(v, 0.0), 1.0)
                if v > img[i, j]:
                    img[i, j] = v


def render_raster(coords, size: int = 64, line_width: float = 2.0, fill: float = 0.8) -> np.ndarray:
    """White-on-black anti-aliased stroke image, float64 in [0, 1], shape (size, size).

    The trajectory is scaled to fill ``fill`` of the canvas along its longer
    side, so the result does not depend on the input's absolute scale.
    """
    pts = np.asarray(coords, dtype=float).reshape(-1, 2)
    if len(pts) < 2:
        raise DomainError("need at least 2 points to rasterize")
    if size < 16:
        raise DomainError("raster size must be at least 16")
    pts = _dedup(pts)
    lo = pts.min(axis=0)
    extent = pts.max(axis=0) - lo
    span = extent.max()
    if span == 0:
        pts = np.full((1, 2), size / 2.0)
    else:
        unit = (pts - lo - extent / 2.0) / span
        pts = np.column_stack([size / 2.0 + unit[:, 0] * fill * size, size / 2.0 - unit[:, 1] * fill * size])
    if len(pts) == 1:
        a = b = pts
    else:
        a, b = pts[:-1], pts[1:]
    img = np.zeros((size, size))
    _stroke(img, np.ascontiguousarray(a), np.ascontiguousarray(b), line_width / 2.0 + 0.5)
    return img


def save_png(image: np.ndarray, path) -> None:
    from PIL import Image

    arr = np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(arr).save(path, format="PNG")


def save_rendering(coords, path, size: int = 256) -> None:
    """Write an SVG or PNG depending on the file extension."""
    suffix = Path(path).suffix.lower()
    if suffix == ".svg":
        Path(path).write_text(render_svg(coords, SvgStyle(width=size, height=size)), encoding="utf-8")
    elif suffix == ".png":
        save_png(render_raster(coords, size=size, line_width=max(2.0, size / 64.0)), path)
    else:
        raise DomainError(f"unknown output extension {suffix!r}; use .svg or .png")
