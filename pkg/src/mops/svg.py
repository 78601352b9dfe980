"""Minimal SVG emission for run artifacts.

Three renderers: image-space strokes for drawing runs, a top-down table
view for pushing runs, and best-cost-so-far curves. Plain string
assembly; no plotting dependency.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .push import TABLE_BOUNDS


def _svg(width: int, height: int, body: list[str]) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">'
    )
    return "\n".join([head, *body, "</svg>"]) + "\n"


def _write(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def render_strokes(strokes, path, width: int = 640, height: int = 480,
                   title: str | None = None) -> Path:
    """Projected strokes on the camera canvas; dots mark stroke starts."""
    body = [
        f'<rect x="0" y="0" width="{width}" height="{height}" '
        'fill="white" stroke="#888"/>'
    ]
    if title:
        body.append(f'<text x="8" y="18" font-size="14" fill="#444">{title}</text>')
    starts = np.asarray(strokes.starts, dtype=float)
    vecs = np.asarray(strokes.vecs, dtype=float)
    for i in range(starts.shape[0]):
        x0, y0 = starts[i]
        x1, y1 = starts[i] + vecs[i]
        body.append(
            f'<line x1="{x0:.2f}" y1="{y0:.2f}" x2="{x1:.2f}" y2="{y1:.2f}" '
            'stroke="#1450a0" stroke-width="2"/>')
        body.append(f'<circle cx="{x0:.2f}" cy="{y0:.2f}" r="3" fill="#c03020"/>')
    return _write(path, _svg(width, height, body))


def render_push(trace, scene, path, size: int = 520,
                title: str | None = None) -> Path:
    """Top-down table view: obstacles, target markers, block paths and
    final poses, pusher path."""
    (x_lo, x_hi), (y_lo, y_hi) = TABLE_BOUNDS
    pad = 10
    scale = (size - 2 * pad) / (x_hi - x_lo)

    def to_px(x, y):
        return (pad + (x - x_lo) * scale, size - pad - (y - y_lo) * scale)

    def rect_path(f) -> str:
        hx, hy = f.size[0] / 2.0, f.size[1] / 2.0
        c, s = math.cos(f.z_rot), math.sin(f.z_rot)
        pts = []
        for lx, ly in ((-hx, -hy), (hx, -hy), (hx, hy), (-hx, hy)):
            wx = f.x_pos + c * lx - s * ly
            wy = f.y_pos + s * lx + c * ly
            pts.append("%.2f,%.2f" % to_px(wx, wy))
        return " ".join(pts)

    body = [
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="#fbfbf8"/>',
        f'<rect x="{pad}" y="{pad}" width="{size - 2 * pad}" '
        f'height="{size - 2 * pad}" fill="white" stroke="#888"/>',
    ]
    if title:
        body.append(f'<text x="{pad + 4}" y="{pad + 16}" font-size="14" '
                    f'fill="#444">{title}</text>')
    final = trace.final_scene
    for f in scene.frames:
        if f.is_immovable():
            body.append(f'<polygon points="{rect_path(f)}" fill="#777" stroke="#444"/>')
        elif f.is_marker():
            body.append(f'<polygon points="{rect_path(f)}" fill="none" '
                        'stroke="#b09020" stroke-dasharray="6,4" stroke-width="2"/>')
    for name, rows in trace.blocks.items():
        pts = " ".join("%.2f,%.2f" % to_px(px, py) for px, py in rows)
        body.append(f'<polyline points="{pts}" fill="none" stroke="#bbb" '
                    'stroke-width="1"/>')
    for f in final.frames:
        if f.is_block():
            r, g, b = f.color
            body.append(f'<polygon points="{rect_path(f)}" '
                        f'fill="rgb({r},{g},{b})" fill-opacity="0.75" '
                        'stroke="#333"/>')
    pusher = np.asarray(trace.pusher, dtype=float)
    pts = " ".join("%.2f,%.2f" % to_px(px, py) for px, py in pusher)
    body.append(f'<polyline points="{pts}" fill="none" stroke="#c03020" '
                'stroke-width="1.5"/>')
    if pusher.shape[0]:
        cx, cy = to_px(*pusher[-1])
        body.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="4" fill="#c03020"/>')
    return _write(path, _svg(size, size, body))


def render_curve(history, path, width: int = 560, height: int = 360,
                 title: str | None = None) -> Path:
    """Best-cost-so-far polyline over evaluation index, log1p cost axis."""
    margin = 46
    body = [
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{margin}" y="{margin // 2}" width="{width - margin - 12}" '
        f'height="{height - margin - margin // 2}" fill="none" stroke="#999"/>',
    ]
    if title:
        body.append(f'<text x="{margin}" y="16" font-size="13" fill="#444">{title}</text>')
    pairs = [(int(i), float(c)) for i, c in history if np.isfinite(c)]
    if pairs:
        xs = np.array([p[0] for p in pairs], dtype=float)
        ys = np.log1p(np.maximum(0.0, np.array([p[1] for p in pairs])))
        x_lo, x_hi = xs.min(), max(xs.max(), xs.min() + 1.0)
        y_lo, y_hi = ys.min(), ys.max()
        if y_hi - y_lo < 1e-12:
            y_hi = y_lo + 1.0
        px = margin + (xs - x_lo) / (x_hi - x_lo) * (width - margin - 12)
        py = (height - margin) - (ys - y_lo) / (y_hi - y_lo) * (height - margin - margin // 2)
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
        body.append(f'<polyline points="{pts}" fill="none" stroke="#1450a0" '
                    'stroke-width="1.6"/>')
        body.append(f'<text x="{margin}" y="{height - 10}" font-size="11" '
                    f'fill="#666">evals {int(x_lo)}..{int(x_hi)}; '
                    f'log1p(best) {y_lo:.3g}..{y_hi:.3g}</text>')
    else:
        body.append(f'<text x="{margin}" y="{height // 2}" font-size="12" '
                    'fill="#888">no finite evaluations</text>')
    return _write(path, _svg(width, height, body))
