"""Pixel loss, edge-density map and the stroke-density loss.

The stroke-area image paints every selected stroke's normalised area (h * w)
with the same top-k layers and soft alphas used for the colour canvas, so
large strokes sitting on detailed regions are penalised.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .compositor import BinarizeConfig, TopKSelection, gather, stack_sequential
from .core import StrokeKind, StrokeSequence

GRAY_WEIGHTS = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class LossConfig:
    lambda_density: float = 0.1
    # None means H // 16
    density_pool_window: int | None = None
    bin: BinarizeConfig = field(default_factory=BinarizeConfig)

    def __post_init__(self):
        if self.lambda_density < 0:
            raise ValueError("lambda_density must be >= 0")
        if self.density_pool_window is not None and self.density_pool_window < 1:
            raise ValueError("density_pool_window must be >= 1")

    def window_for(self, h: int) -> int:
        if self.density_pool_window is not None:
            return self.density_pool_window
        return max(h // 16, 1)


@dataclass
class AreaMaps:
    """Stroke areas: per stroke (N,), gathered top-k layers (k, H, W), composed image (H, W).

    The dense per-stroke map is ``mask * stroke_area[:, None, None]``; see
    :func:`per_stroke_area_maps`.
    """

    stroke_area: np.ndarray
    gathered: np.ndarray
    composed: np.ndarray


@dataclass
class LossTerms:
    total: float
    l2: float
    density: float
    d_canvas: np.ndarray
    d_area: np.ndarray | None


def _same_shape(a, b):
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")


def l2_loss(a: np.ndarray, b: np.ndarray) -> float:
    """Mean over pixels and channels of (a - b)^2."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _same_shape(a, b)
    return float(np.mean((a - b) ** 2))


def to_gray(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    return img if img.ndim == 2 else img @ GRAY_WEIGHTS


def _block_mean(x: np.ndarray, win: int) -> np.ndarray:
    """Mean over win x win blocks with stride win; edge blocks average what is there."""
    h, w = x.shape
    rs, cs = np.arange(0, h, win), np.arange(0, w, win)
    sums = np.add.reduceat(np.add.reduceat(x, rs, axis=0), cs, axis=1)
    counts = np.outer(np.minimum(rs + win, h) - rs, np.minimum(cs + win, w) - cs)
    return sums / counts


def density_map(target: np.ndarray, cfg: LossConfig = LossConfig()) -> np.ndarray:
    """Sobel magnitude, block-mean pooled, upsampled back and max-normalised to [0, 1]."""
    gray = to_gray(target)
    h, w = gray.shape
    if h < 3 or w < 3:
        raise ValueError("density map needs an image of at least 3 x 3")
    gx = ndimage.sobel(gray, axis=1, mode="nearest")
    gy = ndimage.sobel(gray, axis=0, mode="nearest")
    mag = np.hypot(gx, gy)
    win = cfg.window_for(h)
    pooled = _block_mean(mag, win)
    up = np.repeat(np.repeat(pooled, win, axis=0), win, axis=1)[:h, :w]
    peak = up.max()
    # float noise on a flat image is not structure
    if peak <= 1e-12:
        return np.zeros((h, w))
    return up / peak


def stroke_area_image(seq: StrokeSequence, sel: TopKSelection) -> AreaMaps:
    """Compose per-stroke areas through the top-k layers.

    Selected entries are exactly the binarised-covering ones, so the gathered
    area of a selected stroke is its h * w.
    """
    if seq.kind is not StrokeKind.OIL:
        raise ValueError("stroke areas are only defined for oil strokes")
    if sel.n_strokes != len(seq):
        raise ValueError("selection does not belong to this sequence")
    area = seq.strokes[:, 2] * seq.strokes[:, 3]
    gathered = gather(area, sel.indices)
    composed = stack_sequential(sel.gathered_alpha, gathered[..., None])[..., 0]
    return AreaMaps(area, gathered, composed)


def per_stroke_area_maps(seq: StrokeSequence, alpha: np.ndarray,
                         bin: BinarizeConfig = BinarizeConfig()) -> np.ndarray:
    """Dense (N, H, W) stroke-area maps: binary mask times h * w."""
    area = seq.strokes[:, 2] * seq.strokes[:, 3]
    return (np.asarray(alpha) >= bin.threshold) * area[:, None, None]


def density_loss(area: AreaMaps | np.ndarray, density: np.ndarray) -> float:
    """Mean over pixels of composed area times density."""
    composed = area.composed if isinstance(area, AreaMaps) else np.asarray(area)
    _same_shape(composed, density)
    return float(np.mean(composed * density))


def total_loss(target: np.ndarray, canvas: np.ndarray, area: AreaMaps | None,
               density: np.ndarray | None, cfg: LossConfig = LossConfig()) -> LossTerms:
    """L2 + lambda * density loss, with adjoints for the canvas and the area image."""
    target = np.asarray(target, dtype=np.float64)
    _same_shape(target, canvas)
    diff = canvas - target
    l2 = float(np.mean(diff * diff))
    d_canvas = diff * (2.0 / diff.size)
    if cfg.lambda_density == 0 or area is None:
        return LossTerms(l2, l2, 0.0, d_canvas, None)
    den = density_loss(area, density)
    d_area = density * (cfg.lambda_density / density.size)
    return LossTerms(l2 + cfg.lambda_density * den, l2, den, d_canvas, d_area)
