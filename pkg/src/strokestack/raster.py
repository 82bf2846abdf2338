"""Analytic stroke rasteriser.

``soft`` mode is differentiable: rectangle and tube edges fall off with a
logistic of width ``softness_tau`` pixels.  ``hard`` mode is the exact
inference renderer and has no gradient.

Batched entry points work on an (N, P) parameter array and produce (N, H, W)
alpha stacks.  Colour maps are constant per stroke, so the batched path
carries colours as an (N, 3) array.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels as K
from .core import StrokeFrame, StrokeKind, StrokeParams

SOFT = "soft"
HARD = "hard"

_NO_TEXTURE = np.ones((1, 1))


class UnsupportedModeError(ValueError):
    pass


@dataclass(frozen=True)
class RasterConfig:
    h: int = 128
    w: int = 128
    softness_tau: float = 1.0
    bezier_samples: int = 32
    texture: np.ndarray | None = None

    def __post_init__(self):
        if not self.softness_tau > 0:
            raise ValueError("softness_tau must be > 0")
        if self.bezier_samples < 8:
            raise ValueError("bezier_samples must be >= 8")
        if self.h < 1 or self.w < 1:
            raise ValueError("canvas must be at least 1x1")
        if self.texture is not None:
            tex = np.ascontiguousarray(self.texture, dtype=np.float64)
            if tex.ndim != 2 or tex.min() < 0 or tex.max() > 1:
                raise ValueError("texture must be a 2-D array in [0, 1]")
            object.__setattr__(self, "texture", tex)

    def scaled(self, factor: int) -> "RasterConfig":
        return RasterConfig(self.h * factor, self.w * factor, self.softness_tau,
                            self.bezier_samples, self.texture)

    def with_size(self, h: int, w: int) -> "RasterConfig":
        return RasterConfig(h, w, self.softness_tau, self.bezier_samples, self.texture)

    @property
    def _tex(self):
        if self.texture is None:
            return _NO_TEXTURE, False
        return self.texture, True


def load_texture(path) -> np.ndarray:
    """Read an 8-bit grayscale brush texture as values in [0, 1]."""
    from PIL import Image

    with Image.open(Path(path)) as im:
        return np.asarray(im.convert("L"), dtype=np.float64) / 255.0


def _mode_flag(mode: str) -> bool:
    if mode not in (SOFT, HARD):
        raise UnsupportedModeError(f"unknown raster mode {mode!r}")
    return mode == HARD


def _as_params(kind, params) -> tuple[StrokeKind, np.ndarray]:
    kind = StrokeKind(kind)
    return kind, np.ascontiguousarray(params, dtype=np.float64).reshape(-1, kind.arity)


def render_alpha(kind, params, cfg: RasterConfig, mode: str = SOFT) -> np.ndarray:
    """Alpha maps (N, H, W) for an (N, P) parameter array."""
    hard = _mode_flag(mode)
    kind, params = _as_params(kind, params)
    if kind is StrokeKind.OIL:
        tex, has_tex = cfg._tex
        return K.oil_alpha(params, cfg.h, cfg.w, cfg.softness_tau, tex, has_tex, hard)
    # the brush texture is an oil-stroke feature; Bezier alpha is the transparency field
    return K.bez_alpha(params, cfg.h, cfg.w, cfg.softness_tau, cfg.bezier_samples, hard)


def alpha_vjp(kind, params, cfg: RasterConfig, d_alpha: np.ndarray) -> np.ndarray:
    """Vector-Jacobian product of the soft alpha maps; colour columns stay zero."""
    kind, params = _as_params(kind, params)
    d_alpha = np.ascontiguousarray(d_alpha, dtype=np.float64)
    if d_alpha.shape != (params.shape[0], cfg.h, cfg.w):
        raise ValueError(f"alpha adjoint {d_alpha.shape} does not match {params.shape[0]} strokes")
    if kind is StrokeKind.OIL:
        tex, has_tex = cfg._tex
        return K.oil_vjp_dense(params, cfg.h, cfg.w, cfg.softness_tau, tex, has_tex, d_alpha)
    return K.bez_vjp_dense(params, cfg.h, cfg.w, cfg.softness_tau, cfg.bezier_samples, d_alpha)


def alpha_vjp_entries(kind, params, cfg: RasterConfig, stroke, rows, cols, g) -> np.ndarray:
    """Sparse VJP: adjoint ``g[e]`` sits at alpha[stroke[e], rows[e], cols[e]] (0-based stroke)."""
    kind, params = _as_params(kind, params)
    args = (np.ascontiguousarray(stroke, dtype=np.int64), np.ascontiguousarray(rows, dtype=np.int64),
            np.ascontiguousarray(cols, dtype=np.int64), np.ascontiguousarray(g, dtype=np.float64))
    if kind is StrokeKind.OIL:
        tex, has_tex = cfg._tex
        return K.oil_vjp_entries(params, cfg.h, cfg.w, cfg.softness_tau, tex, has_tex, *args)
    return K.bez_vjp_entries(params, cfg.h, cfg.w, cfg.softness_tau, cfg.bezier_samples, *args)


def select_topk(kind, params, cfg: RasterConfig, k: int, threshold: float = 0.5):
    """Top-k indices (k, H, W) and gathered soft alphas straight from parameters.

    Equivalent to soft-rendering every stroke and selecting from the alpha
    stack, but only visits pixels where a stroke can pass the threshold.
    """
    kind, params = _as_params(kind, params)
    if kind is StrokeKind.OIL:
        tex, has_tex = cfg._tex
        return K.oil_topk(params, cfg.h, cfg.w, cfg.softness_tau, tex, has_tex, k, threshold)
    return K.bez_topk(params, cfg.h, cfg.w, cfg.softness_tau, cfg.bezier_samples, k, threshold)


def params_vjp(kind, params, cfg, d_alpha, d_color) -> np.ndarray:
    """Full parameter gradient given alpha adjoints (N, H, W) and colour adjoints.

    ``d_color`` may be per-pixel (N, H, W, 3) or already summed per stroke (N, 3).
    """
    grad = alpha_vjp(kind, params, cfg, d_alpha)
    d_color = np.asarray(d_color, dtype=np.float64)
    if d_color.ndim == 4:
        d_color = d_color.sum(axis=(1, 2))
    grad[:, -3:] += d_color
    return grad


def raster_stroke(stroke: StrokeParams, cfg: RasterConfig, mode: str = SOFT) -> StrokeFrame:
    alpha = render_alpha(stroke.kind, stroke.as_array(), cfg, mode)[0]
    color = np.broadcast_to(np.asarray(stroke.color), (cfg.h, cfg.w, 3)).copy()
    return StrokeFrame(alpha, color)


def raster_oil(stroke: StrokeParams, cfg: RasterConfig, mode: str = SOFT) -> StrokeFrame:
    if StrokeKind(stroke.kind) is not StrokeKind.OIL:
        raise ValueError("raster_oil needs an oil stroke")
    return raster_stroke(stroke, cfg, mode)


def raster_bezier(stroke: StrokeParams, cfg: RasterConfig, mode: str = SOFT) -> StrokeFrame:
    if StrokeKind(stroke.kind) is not StrokeKind.BEZIER:
        raise ValueError("raster_bezier needs a bezier stroke")
    return raster_stroke(stroke, cfg, mode)


def raster_grad(stroke: StrokeParams, cfg: RasterConfig, upstream: StrokeFrame,
                mode: str = SOFT) -> np.ndarray:
    """Gradient of sum(upstream.alpha * alpha) + sum(upstream.color * color) w.r.t. the stroke."""
    if mode != SOFT:
        raise UnsupportedModeError("gradients exist only for the soft rasteriser")
    return params_vjp(stroke.kind, stroke.as_array()[None], cfg,
                      np.asarray(upstream.alpha)[None], np.asarray(upstream.color)[None])[0]


def stroke_bbox(kind, p, cfg: RasterConfig) -> tuple[int, int, int, int]:
    """Row/column range (r0, r1, c0, c1) containing every pixel a hard stroke can touch."""
    kind, p = _as_params(kind, p)
    if kind is StrokeKind.OIL:
        return K.oil_box(p[0], cfg.h, cfg.w)
    return K.bez_box(p[0], cfg.h, cfg.w, 0.0)


def render_hard_cropped(kind, p, cfg: RasterConfig):
    """Hard-mode alpha restricted to the stroke's bounding box.

    Returns ``(alpha_crop, (r0, r1, c0, c1))``.  Pixels outside the box have
    alpha exactly 0 in the full-canvas render; inside, values are identical.
    """
    kind, p = _as_params(kind, p)
    r0, r1, c0, c1 = stroke_bbox(kind, p, cfg)
    if kind is StrokeKind.OIL:
        tex, has_tex = cfg._tex
        alpha = K.oil_alpha_box(p[0], cfg.h, cfg.w, r0, r1, c0, c1, cfg.softness_tau,
                                tex, has_tex, True)
    else:
        alpha = K.bez_alpha_box(p[0], cfg.h, cfg.w, r0, r1, c0, c1, cfg.softness_tau,
                                cfg.bezier_samples, True)
    return alpha, (r0, r1, c0, c1)
