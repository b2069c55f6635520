"""Static objective-space scatter plots as standalone SVG documents.

The reference front is drawn in red and the population in blue.  For three
objectives the document holds two panels: an oblique (cabinet) projection
and a bird's-eye view of the first two objectives.  Output is plain text
built with fixed formatting, so identical inputs give identical bytes.

Pixel mapping (per panel): the data bounding box of front plus population
is padded by 5% per side, then mapped affinely onto the panel's plot
rectangle with the vertical axis flipped.  Degenerate ranges are padded by
0.5 on both sides.
"""

from __future__ import annotations

import numpy as np

from .errors import UnsupportedDimensionError

PANEL_W = 460.0
PANEL_H = 420.0
MARGIN_L = 64.0
MARGIN_R = 18.0
MARGIN_T = 22.0
MARGIN_B = 46.0
PAD_FRACTION = 0.05
DEPTH_FACTOR = 0.45  # cabinet-projection shear for the depth axis

FRONT_COLOR = "red"
POINT_COLOR = "blue"


def _padded_range(lo: float, hi: float) -> tuple[float, float]:
    if hi <= lo:
        return lo - 0.5, hi + 0.5
    pad = PAD_FRACTION * (hi - lo)
    return lo - pad, hi + pad


class _Axes2D:
    """Affine data-to-pixel mapping for one panel."""

    def __init__(self, data: np.ndarray, x_off: float):
        x0, x1 = _padded_range(float(data[:, 0].min()), float(data[:, 0].max()))
        y0, y1 = _padded_range(float(data[:, 1].min()), float(data[:, 1].max()))
        self.x0, self.x1, self.y0, self.y1 = x0, x1, y0, y1
        self.px0 = x_off + MARGIN_L
        self.px1 = x_off + PANEL_W - MARGIN_R
        self.py0 = MARGIN_T
        self.py1 = PANEL_H - MARGIN_B

    def px(self, x):
        return self.px0 + (np.asarray(x) - self.x0) / (self.x1 - self.x0) * (self.px1 - self.px0)

    def py(self, y):
        return self.py0 + (self.y1 - np.asarray(y)) / (self.y1 - self.y0) * (self.py1 - self.py0)


def _fmt(v: float) -> str:
    return "%.3f" % float(v)


def _axis_frame(ax: _Axes2D, xlabel: str, ylabel: str, parts: list[str]) -> None:
    parts.append(
        f'<rect x="{_fmt(ax.px0)}" y="{_fmt(ax.py0)}" '
        f'width="{_fmt(ax.px1 - ax.px0)}" height="{_fmt(ax.py1 - ax.py0)}" '
        'fill="none" stroke="#888" stroke-width="1"/>'
    )
    for t in np.linspace(ax.x0, ax.x1, 5):
        x = ax.px(t)
        parts.append(
            f'<line x1="{_fmt(x)}" y1="{_fmt(ax.py1)}" x2="{_fmt(x)}" y2="{_fmt(ax.py1 + 4)}" stroke="#888"/>'
        )
        parts.append(
            f'<text x="{_fmt(x)}" y="{_fmt(ax.py1 + 16)}" font-size="10" text-anchor="middle">{"%.3g" % t}</text>'
        )
    for t in np.linspace(ax.y0, ax.y1, 5):
        y = ax.py(t)
        parts.append(
            f'<line x1="{_fmt(ax.px0 - 4)}" y1="{_fmt(y)}" x2="{_fmt(ax.px0)}" y2="{_fmt(y)}" stroke="#888"/>'
        )
        parts.append(
            f'<text x="{_fmt(ax.px0 - 7)}" y="{_fmt(y + 3)}" font-size="10" text-anchor="end">{"%.3g" % t}</text>'
        )
    parts.append(
        f'<text x="{_fmt((ax.px0 + ax.px1) / 2)}" y="{_fmt(ax.py1 + 34)}" '
        f'font-size="12" text-anchor="middle">{xlabel}</text>'
    )
    parts.append(
        f'<text x="{_fmt(ax.px0 - 44)}" y="{_fmt((ax.py0 + ax.py1) / 2)}" font-size="12" '
        f'text-anchor="middle" transform="rotate(-90 {_fmt(ax.px0 - 44)} {_fmt((ax.py0 + ax.py1) / 2)})">{ylabel}</text>'
    )


def _front_polylines(ax: _Axes2D, points: np.ndarray, labels: np.ndarray, parts: list[str]) -> None:
    for seg in range(int(labels.max()) + 1 if len(labels) else 0):
        seg_pts = points[labels == seg]
        seg_pts = seg_pts[np.argsort(seg_pts[:, 0], kind="stable")]
        coords = " ".join(f"{_fmt(ax.px(p[0]))},{_fmt(ax.py(p[1]))}" for p in seg_pts)
        parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{FRONT_COLOR}" stroke-width="1.5"/>'
        )


def _dots(ax: _Axes2D, pts2: np.ndarray, color: str, radius: float, parts: list[str]) -> None:
    for p in pts2:
        parts.append(
            f'<circle cx="{_fmt(ax.px(p[0]))}" cy="{_fmt(ax.py(p[1]))}" r="{radius}" fill="{color}"/>'
        )


def _oblique(points3: np.ndarray, bbox: np.ndarray) -> np.ndarray:
    """Cabinet projection of normalized (f1, f2, f3) onto the page plane."""
    lo = bbox[0]
    span = np.where(bbox[1] > bbox[0], bbox[1] - bbox[0], 1.0)
    n = (points3 - lo) / span
    u = n[:, 0] + DEPTH_FACTOR * n[:, 1]
    v = n[:, 2] + DEPTH_FACTOR * n[:, 1]
    return np.stack([u, v], axis=1)


def render_scatter(snapshot, front, out=None) -> str:
    """Render a population snapshot against a reference front.

    ``snapshot`` may be a dynamics Snapshot or a bare (N, m) array of
    objective values; the population may be empty.  Returns the SVG text
    and writes it to ``out`` when given.
    """
    F = np.asarray(getattr(snapshot, "objectives", snapshot), dtype=float)
    front_pts = np.asarray(front.points, dtype=float)
    m = front_pts.shape[1]
    if F.size == 0:
        F = F.reshape(0, m)
    if F.shape[1] != m:
        raise ValueError("snapshot and front dimensions disagree")
    if m not in (2, 3):
        raise UnsupportedDimensionError(
            f"scatter plots support 2 or 3 objectives, got {m}; "
            "export the data and project pairs of objectives instead"
        )

    parts: list[str] = []
    if m == 2:
        width = PANEL_W
        everything = np.vstack([front_pts, F]) if len(F) else front_pts
        ax = _Axes2D(everything, 0.0)
        _axis_frame(ax, "f1", "f2", parts)
        _front_polylines(ax, front_pts, front.segment_labels, parts)
        _dots(ax, F, POINT_COLOR, 3.0, parts)
    else:
        width = 2 * PANEL_W
        all3 = np.vstack([front_pts, F]) if len(F) else front_pts
        bbox = np.stack([all3.min(axis=0), all3.max(axis=0)])
        proj_front = _oblique(front_pts, bbox)
        proj_pop = _oblique(F, bbox) if len(F) else F[:, :2]
        everything = np.vstack([proj_front, proj_pop]) if len(F) else proj_front
        ax1 = _Axes2D(everything, 0.0)
        _axis_frame(ax1, "f1 + depth(f2)", "f3 + depth(f2)", parts)
        _dots(ax1, proj_front, FRONT_COLOR, 1.2, parts)
        _dots(ax1, proj_pop, POINT_COLOR, 3.0, parts)
        birds = np.vstack([front_pts[:, :2], F[:, :2]]) if len(F) else front_pts[:, :2]
        ax2 = _Axes2D(birds, PANEL_W)
        _axis_frame(ax2, "f1", "f2", parts)
        _dots(ax2, front_pts[:, :2], FRONT_COLOR, 1.2, parts)
        _dots(ax2, F[:, :2], POINT_COLOR, 3.0, parts)

    svg = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{int(width)}" height="{int(PANEL_H)}" '
        f'viewBox="0 0 {int(width)} {int(PANEL_H)}">\n'
        f'<rect width="{int(width)}" height="{int(PANEL_H)}" fill="white"/>\n'
        + "\n".join(parts)
        + "\n</svg>\n"
    )
    if out is not None:
        with open(out, "w") as fh:
            fh.write(svg)
    return svg
