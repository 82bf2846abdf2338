"""Image-quality metrics: mean squared error and SSIM."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .losses import l2_loss

mse = l2_loss

WIN = 11
SIGMA = 1.5
K1, K2 = 0.01, 0.03


@dataclass
class MetricReport:
    l2: float
    ssim: float

    def lines(self) -> list[str]:
        return [f"l2={self.l2:.6f}", f"ssim={self.ssim:.6f}"]


def _gauss_window(win: int = WIN, sigma: float = SIGMA) -> np.ndarray:
    x = np.arange(win) - (win - 1) / 2
    g = np.exp(-(x**2) / (2 * sigma**2))
    return g / g.sum()


def _filter_valid(x: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Separable weighted window mean over every fully-inside window position."""
    x = sliding_window_view(x, g.size, axis=0) @ g
    return sliding_window_view(x, g.size, axis=1) @ g


def _ssim_channel(x: np.ndarray, y: np.ndarray, g: np.ndarray, data_range: float) -> float:
    c1 = (K1 * data_range) ** 2
    c2 = (K2 * data_range) ** 2
    mx, my = _filter_valid(x, g), _filter_valid(y, g)
    sxx = _filter_valid(x * x, g) - mx * mx
    syy = _filter_valid(y * y, g) - my * my
    sxy = _filter_valid(x * y, g) - mx * my
    num = (2 * mx * my + c1) * (2 * sxy + c2)
    den = (mx * mx + my * my + c1) * (sxx + syy + c2)
    return float(np.mean(num / den))


def ssim(a: np.ndarray, b: np.ndarray, data_range: float = 1.0) -> float:
    """Gaussian-window SSIM (11 x 11, sigma 1.5), per channel then averaged."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if min(a.shape[:2]) < WIN:
        raise ValueError(f"SSIM needs images of at least {WIN} x {WIN}")
    g = _gauss_window()
    if a.ndim == 2:
        return _ssim_channel(a, b, g, data_range)
    return float(np.mean([_ssim_channel(a[..., c], b[..., c], g, data_range)
                          for c in range(a.shape[-1])]))


def report(a: np.ndarray, b: np.ndarray) -> MetricReport:
    return MetricReport(mse(a, b), ssim(a, b))
