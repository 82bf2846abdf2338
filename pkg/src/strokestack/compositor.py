"""Stroke stacking: the sequential over-operator, its expanded closed form, and
fast stroke stacking (per-pixel top-k selection followed by k over steps).

Frames are passed as stacked arrays: ``alpha`` is (N, H, W) and ``color`` is
either per-pixel (N, H, W, C) or constant per stroke (N, C).  Stroke indices
inside a selection are 1-based; index 0 is a virtual stroke with alpha 0 and
colour 0 that pads pixels covered by fewer than k strokes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import topk_from_alpha
from .core import StrokeFrame

MAX_K = 10


@dataclass(frozen=True)
class BinarizeConfig:
    threshold: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("binarisation threshold must lie in (0, 1)")


@dataclass
class TopKSelection:
    """Per-pixel top-k strokes.

    ``indices`` is (k, H, W), layer-major, ascending along the layer axis, with
    zero padding in the leading layers.  ``gathered_alpha`` (k, H, W) and
    ``gathered_color`` (k, H, W, C) are read from the original soft frames.
    """

    k: int
    indices: np.ndarray
    gathered_alpha: np.ndarray
    gathered_color: np.ndarray
    n_strokes: int

    @property
    def valid(self) -> np.ndarray:
        return self.indices > 0


def frames_to_arrays(frames: list[StrokeFrame]) -> tuple[np.ndarray, np.ndarray]:
    if not frames:
        raise ValueError("no frames")
    shape = frames[0].alpha.shape
    for f in frames:
        if f.alpha.shape != shape or f.color.shape[:2] != shape:
            raise ValueError("all frames must share the same H x W")
    return np.stack([f.alpha for f in frames]), np.stack([f.color for f in frames])


def _check(alpha: np.ndarray, color: np.ndarray) -> None:
    if alpha.ndim != 3:
        raise ValueError(f"alpha must be (N, H, W), got {alpha.shape}")
    n = alpha.shape[0]
    if color.ndim == 2:
        if color.shape[0] != n:
            raise ValueError(f"{n} alpha maps but {color.shape[0]} colours")
    elif color.ndim == 4:
        if color.shape[:3] != alpha.shape:
            raise ValueError(f"colour maps {color.shape} do not match alpha maps {alpha.shape}")
    else:
        raise ValueError(f"colour must be (N, C) or (N, H, W, C), got {color.shape}")


def stack_sequential(alpha: np.ndarray, color: np.ndarray, shape=None) -> np.ndarray:
    """Paint frames one by one onto a zero canvas: I <- I (1 - A) + A C.

    ``shape`` (H, W, C) is only needed for an empty stack.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    color = np.asarray(color, dtype=np.float64)
    if alpha.shape[0] == 0:
        if shape is None:
            if alpha.ndim == 3:
                shape = (*alpha.shape[1:], color.shape[-1] if color.ndim > 1 else 3)
            else:
                raise ValueError("empty stack needs an explicit canvas shape")
        return np.zeros(shape)
    _check(alpha, color)
    canvas = np.zeros((*alpha.shape[1:], color.shape[-1]))
    for a, c in zip(alpha, color):
        a = a[..., None]
        canvas = canvas * (1.0 - a) + a * c
    return canvas


def stack_expanded(alpha: np.ndarray, color: np.ndarray) -> np.ndarray:
    """Closed form: sum_k A_k C_k prod_{j>k} (1 - A_j); needs N >= 1."""
    alpha = np.asarray(alpha, dtype=np.float64)
    color = np.asarray(color, dtype=np.float64)
    if alpha.ndim != 3 or alpha.shape[0] == 0:
        raise ValueError("the expanded form needs at least one frame")
    _check(alpha, color)
    trans = 1.0 - alpha
    # after[k] = prod_{j > k} (1 - A_j); the last frame has an empty product
    after = np.ones_like(alpha)
    after[:-1] = np.cumprod(trans[:0:-1], axis=0)[::-1]
    weight = (alpha * after)[..., None]
    if color.ndim == 2:
        return np.einsum("nhwo,nc->hwc", weight, color)
    return (weight * color).sum(axis=0)


def _check_k(k: int) -> None:
    if not (isinstance(k, (int, np.integer)) and 1 <= k <= MAX_K):
        raise ValueError(f"k must be an integer in 1..{MAX_K}, got {k!r}")


def topk_indices(alpha: np.ndarray, k: int, threshold: float = 0.5) -> np.ndarray:
    """Top-k masked stroke indices per pixel, (k, H, W), ascending with leading zeros.

    Each pixel scans strokes from the top and keeps the first k whose alpha
    reaches ``threshold``; indices are distinct, so there are no ties.
    """
    _check_k(k)
    alpha = np.ascontiguousarray(alpha, dtype=np.float64)
    return topk_from_alpha(alpha, int(k), float(threshold))


def gather(values: np.ndarray, indices: np.ndarray) -> np.ndarray:
    """Pull per-stroke values at 1-based ``indices`` (k, H, W); index 0 yields zeros.

    ``values`` may be (N, H, W), (N, H, W, C), (N, C) or (N,).
    """
    valid = indices > 0
    src = np.maximum(indices - 1, 0)
    if values.ndim <= 2:
        out = values[src]
    elif values.ndim == 3:
        out = np.take_along_axis(values, src, axis=0)
    else:
        out = np.take_along_axis(values, src[..., None], axis=0)
    mask = valid if out.ndim == valid.ndim else valid[..., None]
    return out * mask


def build_topk(alpha: np.ndarray, color: np.ndarray, k: int = MAX_K,
               bin: BinarizeConfig = BinarizeConfig()) -> TopKSelection:
    alpha = np.asarray(alpha, dtype=np.float64)
    color = np.asarray(color, dtype=np.float64)
    _check(alpha, color)
    idx = topk_indices(alpha, k, bin.threshold)
    return TopKSelection(k, idx, gather(alpha, idx), gather(color, idx), alpha.shape[0])


def stack_selection(sel: TopKSelection) -> np.ndarray:
    """k over steps on the gathered layers, highest index painted last."""
    return stack_sequential(sel.gathered_alpha, sel.gathered_color)


def stack_fss(alpha: np.ndarray, color: np.ndarray, k: int = MAX_K,
              bin: BinarizeConfig = BinarizeConfig()) -> np.ndarray:
    return stack_selection(build_topk(alpha, color, k, bin))
