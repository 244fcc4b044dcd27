"""Decision-boundary rendering for 2-feature models as standalone SVG.

Cells of a regular grid are colored by the model's argmax class (runs of
equal class are merged per row, so files stay small); data points are
overlaid as circles. No imaging dependency: the output is plain XML.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import nn
from .nn import ModelParams

PALETTE = ("#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#b07aa1",
           "#edc948", "#76b7b2", "#ff9da7", "#9c755f", "#bab0ac")
CANVAS = 600.0


def class_color(cls: int) -> str:
    return PALETTE[cls % len(PALETTE)]


def boundary_grid(params: ModelParams, bounds: tuple[float, float, float, float],
                  resolution: int = 300) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Argmax class at the center of each grid cell.

    Returns (classes, xs, ys): classes[i, j] is the class at center
    (xs[j], ys[i]); row 0 is the bottom of the bounding box.
    """
    if params.n_features != 2:
        raise ValueError(f"boundary plots need a 2-feature model, got {params.n_features}")
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    xmin, xmax, ymin, ymax = bounds
    if not (xmax > xmin and ymax > ymin):
        raise ValueError("bounds must span a non-empty box")
    xs = xmin + (np.arange(resolution) + 0.5) * (xmax - xmin) / resolution
    ys = ymin + (np.arange(resolution) + 0.5) * (ymax - ymin) / resolution
    gx, gy = np.meshgrid(xs, ys)
    points = np.stack([gx.ravel(), gy.ravel()], axis=1)
    classes = nn.predict(params, points).reshape(resolution, resolution)
    return classes, xs, ys


def data_bounds(features: np.ndarray, margin: float = 0.5) -> tuple[float, float, float, float]:
    return (float(features[:, 0].min() - margin), float(features[:, 0].max() + margin),
            float(features[:, 1].min() - margin), float(features[:, 1].max() + margin))


def export_boundary_svg(path: str | Path, params: ModelParams,
                        bounds: tuple[float, float, float, float],
                        resolution: int = 300,
                        labeled: tuple[np.ndarray, np.ndarray] | None = None,
                        unlabeled: np.ndarray | None = None,
                        pseudo_labeled: tuple[np.ndarray, np.ndarray] | None = None,
                        title: str | None = None) -> None:
    """Write the argmax-class regions plus data overlays as one SVG document.

    labeled/pseudo_labeled are (points, classes) pairs; labeled points get a
    black outline, pseudo-labeled points are small class-colored dots, and
    unlabeled points are gray.
    """
    classes, _, _ = boundary_grid(params, bounds, resolution)
    xmin, xmax, ymin, ymax = bounds
    sx = CANVAS / (xmax - xmin)
    sy = CANVAS / (ymax - ymin)

    def px(x: float) -> float:
        return (x - xmin) * sx

    def py(y: float) -> float:
        return CANVAS - (y - ymin) * sy  # SVG y grows downward

    cell_w = CANVAS / resolution
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS:g}" height="{CANVAS:g}" '
        f'viewBox="0 0 {CANVAS:g} {CANVAS:g}">',
    ]
    if title:
        out.append(f'<title>{_escape(title)}</title>')

    for i in range(resolution):  # grid row i spans data-y [ymin + i*dy, ...)
        row = classes[i]
        top = CANVAS - (i + 1) * cell_w
        j = 0
        while j < resolution:
            k = j
            while k < resolution and row[k] == row[j]:
                k += 1
            out.append(
                f'<rect x="{j * cell_w:.2f}" y="{top:.2f}" width="{(k - j) * cell_w:.2f}" '
                f'height="{cell_w:.2f}" fill="{class_color(int(row[j]))}" fill-opacity="0.35"/>')
            j = k

    if unlabeled is not None:
        for x, y in np.asarray(unlabeled):
            out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="1.5" '
                       'fill="#888888" fill-opacity="0.6"/>')
    if pseudo_labeled is not None:
        points, pl_classes = pseudo_labeled
        for (x, y), c in zip(np.asarray(points), np.asarray(pl_classes)):
            out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="2.2" '
                       f'fill="{class_color(int(c))}"/>')
    if labeled is not None:
        points, lab_classes = labeled
        for (x, y), c in zip(np.asarray(points), np.asarray(lab_classes)):
            out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="5" '
                       f'fill="{class_color(int(c))}" stroke="#000000" stroke-width="1.5"/>')

    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def _escape(text: str) -> str:
    return (text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;"))
