"""Plain SVG markup for planar scenarios."""

from __future__ import annotations

import numpy as np

from .spaces import SEGMENTS, ThreeSegmentSpace

COLOURS = ("#7f8c8d", "#117a65", "#c0392b", "#2471a3")


def _frame(points: np.ndarray, size: int, pad: int = 20):
    lo = points.min(axis=0)
    span = max(float((points.max(axis=0) - lo).max()), 1e-12)
    scale = (size - 2 * pad) / span

    def xy(p):
        return pad + scale * (p[0] - lo[0]), size - pad - scale * (p[1] - lo[1])

    return xy


def scatter_svg(points, groups: dict[str, np.ndarray], size: int = 480) -> str:
    """Points coloured by named index groups; later groups draw on top."""
    points = np.asarray(points, dtype=float)[:, :2]
    xy = _frame(points, size)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}">']
    for n, (name, idx) in enumerate(groups.items()):
        colour = COLOURS[n % len(COLOURS)]
        out.append(f'<g id="{name}" fill="{colour}">')
        for i in np.atleast_1d(idx):
            cx, cy = xy(points[int(i)])
            out.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{2 + n}"/>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out)


def three_segment_svg(space: ThreeSegmentSpace, size: int = 480) -> str:
    """The three segments, the fibers over 6 and 7, and the demo points."""
    frame = np.array([[0.0, 0.0], [9.0, 9.0]])
    xy = _frame(frame, size)
    nx = space.named
    pts = space.fibration.total.points
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}">']
    for p, q in SEGMENTS:
        (x1, y1), (x2, y2) = xy(p), xy(q)
        out.append(f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
                   'stroke="black" stroke-width="1.5"/>')
    for label, colour in (("y", COLOURS[2]), ("z", COLOURS[3])):
        x1 = space.base_x1[nx[label]]
        (a, top), (_, bottom) = xy((x1, 9.0)), xy((x1, 0.0))
        out.append(f'<line x1="{a:.2f}" y1="{top:.2f}" x2="{a:.2f}" y2="{bottom:.2f}" '
                   f'stroke="{colour}" stroke-dasharray="4 3"/>')
        for i in space.fibration.fiber(nx[label]):
            cx, cy = xy(pts[i])
            out.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="3" fill="{colour}"/>')
    for key in ("f_x", "f_y", "f_z"):
        cx, cy = xy(pts[nx[key]])
        out.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="4" fill="{COLOURS[1]}"/>')
        out.append(f'<text x="{cx + 6:.2f}" y="{cy - 6:.2f}" font-size="12">{key}</text>')
    out.append("</svg>")
    return "\n".join(out)
