"""Hand-written SVG 1.1 figures: the ellipse family, orbits, and ``h``.

Output is a pure function of the inputs (fixed number formatting, no
timestamps), so files can be compared byte for byte.  Data-to-pixel maps are
recorded as ``data-*`` attributes on each panel for downstream inspection.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from .dynamics import Trajectory, h_function
from .foliation import CANONICAL, TWO_PI, axes

PANEL = 360.0
MARGIN = 20.0
STROKE = "#1f4e79"


def _num(v: float) -> str:
    return f"{v:.3f}".rstrip("0").rstrip(".") if v != 0 else "0"


def _points(xs, ys) -> str:
    return " ".join(f"{_num(x)},{_num(y)}" for x, y in zip(xs, ys))


def document(width: float, height: float, body: list[str], title: str) -> str:
    head = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_num(width)}" height="{_num(height)}" '
        f'viewBox="0 0 {_num(width)} {_num(height)}">\n'
        f"<title>{escape(title)}</title>\n"
        f'<rect x="0" y="0" width="{_num(width)}" height="{_num(height)}" fill="white"/>\n'
    )
    return head + "\n".join(body) + "\n</svg>\n"


@dataclass(frozen=True)
class Frame:
    """Affine map from a data square ``[-half, half]^2`` into a pixel panel."""

    left: float
    top: float
    size: float
    half: float

    def px(self, x):
        return self.left + self.size * (0.5 + 0.5 * np.asarray(x) / self.half)

    def py(self, y):
        return self.top + self.size * (0.5 - 0.5 * np.asarray(y) / self.half)

    def attrs(self) -> str:
        return (
            f'data-left="{_num(self.left)}" data-top="{_num(self.top)}" '
            f'data-size="{_num(self.size)}" data-half="{self.half!r}"'
        )


def _axes_lines(fr: Frame) -> list[str]:
    cx, cy = float(fr.px(0.0)), float(fr.py(0.0))
    r, b = fr.left + fr.size, fr.top + fr.size
    return [
        f'<line x1="{_num(fr.left)}" y1="{_num(cy)}" x2="{_num(r)}" y2="{_num(cy)}" stroke="#bbbbbb" stroke-width="0.5"/>',
        f'<line x1="{_num(cx)}" y1="{_num(fr.top)}" x2="{_num(cx)}" y2="{_num(b)}" stroke="#bbbbbb" stroke-width="0.5"/>',
    ]


# -- foliation ----------------------------------------------------------------


def foliation_svg(ts, n_points: int = 256) -> str:
    """Leaves ``E(t)`` for the given parameters, drawn as closed polygons."""
    ts = sorted(float(t) for t in ts)
    if not ts:
        raise ValueError("need at least one leaf")
    half = 1.05 * math.sqrt(2.0) * math.exp(ts[-1])
    fr = Frame(MARGIN, MARGIN, PANEL, half)
    theta = TWO_PI * np.arange(n_points) / n_points
    body = [f'<g id="foliation" {fr.attrs()}>'] + _axes_lines(fr)
    for t in ts:
        a, b, c, s = axes(CANONICAL, t)
        u, v = a * np.cos(theta), b * np.sin(theta)
        x, y = c * u - s * v, s * u + c * v
        body.append(
            f'<polygon class="leaf" data-t="{t!r}" fill="none" stroke="{STROKE}" stroke-width="1" '
            f'points="{_points(fr.px(x), fr.py(y))}"/>'
        )
    body.append("</g>")
    side = PANEL + 2 * MARGIN
    return document(side, side, body, "Rotating ellipse foliation")


# -- h ------------------------------------------------------------------------


def h_svg(n_points: int = 721) -> str:
    """Graph of ``h`` on ``[0, 2 pi]`` with its zeros marked."""
    theta = TWO_PI * np.arange(n_points) / (n_points - 1)
    h = np.asarray(h_function(theta))
    width, height = 2 * PANEL, PANEL
    y_span = 1.1 * float(np.max(np.abs(h)))
    px = MARGIN + width * theta / TWO_PI
    py = MARGIN + height * (0.5 - 0.5 * h / y_span)
    y0 = MARGIN + 0.5 * height
    body = [
        f'<g id="h-graph" data-x-scale="{width / TWO_PI!r}" data-y-scale="{height / (2 * y_span)!r}" '
        f'data-left="{_num(MARGIN)}" data-zero="{_num(y0)}">',
        f'<line class="zero" x1="{_num(MARGIN)}" y1="{_num(y0)}" x2="{_num(MARGIN + width)}" y2="{_num(y0)}" '
        'stroke="#bbbbbb" stroke-width="0.5"/>',
        f'<polyline class="curve" fill="none" stroke="{STROKE}" stroke-width="1.2" points="{_points(px, py)}"/>',
    ]
    for k in range(5):
        z = k * math.pi / 2
        body.append(
            f'<circle class="zero-mark" data-theta="{z!r}" cx="{_num(MARGIN + width * z / TWO_PI)}" '
            f'cy="{_num(y0)}" r="2.5" fill="#c0392b"/>'
        )
    body.append("</g>")
    return document(width + 2 * MARGIN, height + 2 * MARGIN, body, "Periodic factor of the rotation rate")


# -- orbits -------------------------------------------------------------------


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Maximal index ranges ``[i, j)`` where ``mask`` holds."""
    out, i, n = [], 0, len(mask)
    while i < n:
        if mask[i]:
            j = i
            while j < n and mask[j]:
                j += 1
            out.append((i, j))
            i = j
        else:
            i += 1
    return out


def orbit_svg(traj: Trajectory, zooms: int = 3, zoom_factor: float = 10.0) -> str:
    """Orbit polyline in a log-polar overview plus ``zooms`` linear windows.

    The overview keeps each sample's polar angle and maps the radius to
    ``log(norm / min norm)``, so the whole spiral fits in one panel and axis
    crossings are preserved.  Linear window ``k`` shows ``[-R_k, R_k]^2`` with
    ``R_k = max norm / zoom_factor**k``.
    """
    if len(traj) < 2:
        raise ValueError("need at least two samples to draw an orbit")
    if zooms < 0 or not zoom_factor > 1.0:
        raise ValueError("zooms must be >= 0 and zoom_factor > 1")
    x, y, norm = traj.x, traj.y, traj.norm
    body = []
    log_r = np.log(norm)
    rho = log_r - log_r.min()
    half = 1.05 * max(float(rho.max()), 1e-12)
    ang = np.arctan2(y, x)
    fr = Frame(MARGIN, MARGIN, PANEL, half)
    body.append(f'<g id="overview" class="panel" data-kind="log-polar" data-log-r0="{float(log_r.min())!r}" {fr.attrs()}>')
    body += _axes_lines(fr)
    body.append(
        f'<polyline class="orbit" fill="none" stroke="{STROKE}" stroke-width="1" '
        f'points="{_points(fr.px(rho * np.cos(ang)), fr.py(rho * np.sin(ang)))}"/>'
    )
    body.append("</g>")

    r_top = float(norm.max())
    for k in range(zooms):
        R = r_top / zoom_factor**k
        fr = Frame(MARGIN + (k + 1) * (PANEL + MARGIN), MARGIN, PANEL, 1.05 * R)
        body.append(
            f'<clipPath id="clip-{k}"><rect x="{_num(fr.left)}" y="{_num(fr.top)}" '
            f'width="{_num(fr.size)}" height="{_num(fr.size)}"/></clipPath>'
        )
        body.append(f'<g id="zoom-{k}" class="panel" data-kind="linear" clip-path="url(#clip-{k})" {fr.attrs()}>')
        body += _axes_lines(fr)
        for i, j in _runs(norm <= 2.0 * R):
            if j - i < 2:
                continue
            # keep one sample past each end so the curve leaves the window
            i0, j0 = max(i - 1, 0), min(j + 1, len(x))
            xs = np.clip(x[i0:j0], -3 * R, 3 * R)
            ys = np.clip(y[i0:j0], -3 * R, 3 * R)
            body.append(
                f'<polyline class="orbit" fill="none" stroke="{STROKE}" stroke-width="1" '
                f'points="{_points(fr.px(xs), fr.py(ys))}"/>'
            )
        body.append(
            f'<rect x="{_num(fr.left)}" y="{_num(fr.top)}" width="{_num(fr.size)}" height="{_num(fr.size)}" '
            'fill="none" stroke="#888888" stroke-width="0.5"/>'
        )
        body.append("</g>")
    width = (zooms + 1) * (PANEL + MARGIN) + MARGIN
    return document(width, PANEL + 2 * MARGIN, body, "Gradient orbit")
