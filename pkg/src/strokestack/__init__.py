"""Stroke-based painting with fast stroke stacking and a stroke-density loss."""
from .compositor import BinarizeConfig, build_topk, stack_expanded, stack_fss, stack_sequential
from .core import StrokeKind, StrokeParams, StrokeSequence, load_sequence, save_sequence, validate
from .losses import LossConfig
from .metrics import mse, ssim
from .painter import PaintConfig, optimize, paint_tiled, render_sequence
from .raster import RasterConfig, render_alpha

__all__ = [
    "BinarizeConfig", "LossConfig", "PaintConfig", "RasterConfig", "StrokeKind", "StrokeParams",
    "StrokeSequence", "build_topk", "load_sequence", "mse", "optimize", "paint_tiled",
    "render_alpha", "render_sequence", "save_sequence", "ssim", "stack_expanded", "stack_fss",
    "stack_sequential", "validate",
]
