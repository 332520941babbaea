"""Grad-CAM heatmaps for the classification subnetwork.

The attribution target is the pre-sigmoid logit of one pool method; the
feature maps are the post-squeeze-excite output of the third (last)
convolutional block of the classification branch. Channel weights are
the time-averaged gradients, and the weighted, rectified sum is min-max
normalized onto [0, 1] over the input timeline.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .errors import ShapeMismatch, UntrainedModel
from .network import MetaNetParams, forward, forward_graph
from .series import PreparedInput


@dataclass(frozen=True)
class Heatmap:
    values: np.ndarray
    method_index: int
    series_id: str = ""


def predict_labels(x: PreparedInput | np.ndarray, params: MetaNetParams,
                   threshold: float = 0.5) -> np.ndarray:
    """Binarize the classification probabilities; ties at the threshold count as 1."""
    return (forward(x, params).o_cls >= threshold).astype(np.int64)


def gradcam(x: PreparedInput | np.ndarray, params: MetaNetParams, method_index: int,
            series_id: str = "") -> Heatmap:
    """Importance of each input timestep for selecting one pool method.

    Returns an all-zero map when the rectified class signal vanishes
    (instead of failing normalization). The map has the input's length;
    with same-padded convolutions no resampling is needed, but the output
    is linearly interpolated if an architecture ever changes that.
    """
    if not params.trained:
        raise UntrainedModel("grad-cam requires trained parameters")
    if not 0 <= method_index < params.architecture.n_methods:
        raise ShapeMismatch(
            f"method index {method_index} out of range for {params.architecture.n_methods} methods"
        )
    data = x.data if isinstance(x, PreparedInput) else np.asarray(x, dtype=np.float64)
    graph = forward_graph(data[None, :], params)

    one_hot = np.zeros((1, params.architecture.n_methods))
    one_hot[0, method_index] = 1.0
    score = ad.sum_all(ad.mul(graph["cls_logits"], ad.tensor(one_hot)))
    ad.backward(score)

    feature_maps = graph["features_cls"].data[0]       # (L', C)
    grads = graph["features_cls"].grad[0]              # (L', C)
    channel_weights = grads.mean(axis=0)
    raw = np.maximum(feature_maps @ channel_weights, 0.0)

    length = data.size
    if raw.size != length:
        positions = np.linspace(0.0, raw.size - 1.0, length)
        raw = np.interp(positions, np.arange(raw.size), raw)
    peak = raw.max()
    values = raw / peak if peak > 0.0 else np.zeros_like(raw)
    return Heatmap(values=values, method_index=method_index, series_id=series_id)


def write_heatmap_csv(heatmaps: list[tuple[Heatmap, str]], path: str | Path) -> None:
    """Rows of ``series_id,method,timestep,value`` for all given heatmaps."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["series_id", "method", "timestep", "value"])
        for heatmap, method_name in heatmaps:
            for t, value in enumerate(heatmap.values):
                writer.writerow([heatmap.series_id, method_name, t, repr(float(value))])


def write_heatmap_svg(series: np.ndarray, heatmap: Heatmap, method_name: str,
                      path: str | Path, width: int = 720, height: int = 240) -> None:
    """Self-contained SVG overlaying the heatmap on the normalized series."""
    values = np.asarray(series, dtype=np.float64)
    n = values.size
    pad = 24
    lo, hi = values.min(), values.max()
    spread = hi - lo if hi > lo else 1.0
    xs = pad + (width - 2 * pad) * np.arange(n) / max(n - 1, 1)
    ys = height - pad - (height - 2 * pad) * (values - lo) / spread
    cell = (width - 2 * pad) / max(n, 1)

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{pad}" y="16" font-family="monospace" font-size="12">'
        f'{heatmap.series_id} / {method_name}</text>',
    ]
    for t, weight in enumerate(heatmap.values):
        if weight <= 0.0:
            continue
        x0 = pad + cell * t
        lines.append(
            f'<rect x="{x0:.2f}" y="{pad}" width="{cell:.2f}" height="{height - 2 * pad}" '
            f'fill="rgb(220,60,40)" fill-opacity="{0.6 * float(weight):.3f}"/>'
        )
    points = " ".join(f"{px:.2f},{py:.2f}" for px, py in zip(xs, ys))
    lines.append(f'<polyline points="{points}" fill="none" stroke="black" stroke-width="1.2"/>')
    lines.append("</svg>")
    Path(path).write_text("\n".join(lines) + "\n")
