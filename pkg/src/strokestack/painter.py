"""Joint gradient-descent painting.

All N stroke parameters of a tile live in one vector and are updated together
through the same raster -> stack -> loss graph (no stroke-by-stroke outer
loop).  Large images are split into tiles that are painted independently and
stitched back into one global stroke sequence.
"""
from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from PIL import Image

from .core import StrokeKind, StrokeSequence
from .grad import backward, forward
from .losses import LossConfig, LossTerms, density_map, stroke_area_image, total_loss
from .raster import RasterConfig, render_hard_cropped

logger = logging.getLogger(__name__)

TILE = 128


class NonFiniteLossError(FloatingPointError):
    def __init__(self, step: int, detail: str):
        super().__init__(f"non-finite loss at step {step}: {detail}")
        self.step = step
        self.detail = detail


@dataclass(frozen=True)
class PaintConfig:
    n_strokes: int = 256
    steps: int = 500
    learning_rate: float = 0.02
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    use_fss: bool = True
    k: int = 10
    loss: LossConfig = field(default_factory=LossConfig)
    kind: StrokeKind = StrokeKind.OIL
    tile_size: int = TILE
    tiles: tuple[int, int] = (1, 1)
    softness_tau: float = 1.0
    bezier_samples: int = 32
    texture: np.ndarray | None = field(default=None, repr=False, compare=False)
    # cosine decay of the step size; "constant" keeps it fixed
    lr_schedule: str = "cosine"
    # softness is annealed geometrically from softness_tau to final_tau; None keeps it fixed
    final_tau: float | None = 0.25
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", StrokeKind(self.kind))
        object.__setattr__(self, "tiles", tuple(int(t) for t in self.tiles))
        if self.n_strokes < 1:
            raise ValueError("n_strokes must be >= 1")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if len(self.tiles) != 2 or min(self.tiles) < 1:
            raise ValueError("tiles must be (rows, cols) with both >= 1")
        if self.lr_schedule not in ("cosine", "constant"):
            raise ValueError("lr_schedule must be 'cosine' or 'constant'")
        if self.final_tau is not None and not self.final_tau > 0:
            raise ValueError("final_tau must be > 0")

    def raster(self, h: int | None = None, w: int | None = None) -> RasterConfig:
        return RasterConfig(h or self.tile_size, w or self.tile_size, self.softness_tau,
                            self.bezier_samples, self.texture)

    def describe(self) -> dict:
        """Every resolved setting as flat key/value pairs."""
        return {
            "stroke_type": self.kind.value,
            "strokes": self.n_strokes,
            "steps": self.steps,
            "lr": self.learning_rate,
            "adam_betas": f"{self.beta1},{self.beta2}",
            "adam_eps": self.eps,
            "seed": self.seed,
            "fss": self.use_fss,
            "k": self.k,
            "lambda_density": self.loss.lambda_density,
            "density_pool_window": self.loss.window_for(self.tile_size),
            "binarize_threshold": self.loss.bin.threshold,
            "tile_size": self.tile_size,
            "tiles": f"{self.tiles[0]}x{self.tiles[1]}",
            "softness_tau": self.softness_tau,
            "final_tau": self.final_tau,
            "lr_schedule": self.lr_schedule,
            "bezier_samples": self.bezier_samples,
            "texture": self.texture is not None,
        }


@dataclass
class PaintResult:
    sequence: StrokeSequence
    canvas: np.ndarray
    loss_trace: np.ndarray
    best_loss: float
    wall_time: float
    tile_results: list["PaintResult"] = field(default_factory=list, repr=False)


# ---------------------------------------------------------------- images


def resize(img: np.ndarray, h: int, w: int) -> np.ndarray:
    """Resize a float image; box filter when shrinking, bilinear when growing."""
    img = np.asarray(img, dtype=np.float64)
    if img.shape[:2] == (h, w):
        return img.copy()
    shrink = h <= img.shape[0] and w <= img.shape[1]
    method = Image.Resampling.BOX if shrink else Image.Resampling.BILINEAR
    chans = [np.asarray(Image.fromarray(img[..., c].astype(np.float32), mode="F")
                        .resize((w, h), method), dtype=np.float64)
             for c in range(img.shape[2])]
    return np.clip(np.stack(chans, axis=-1), 0.0, 1.0)


def render_sequence(seq: StrokeSequence, cfg: RasterConfig | None = None, scale: int = 1) -> np.ndarray:
    """Hard-mode render of a whole sequence, stacked in paint order.

    Each stroke only touches its bounding box; outside it alpha is exactly
    zero, so the result equals full-frame sequential stacking bit for bit.
    """
    h, w = seq.canvas_h * scale, seq.canvas_w * scale
    cfg = (cfg or RasterConfig()).with_size(h, w)
    canvas = np.zeros((h, w, 3))
    for p in seq.strokes:
        alpha, (r0, r1, c0, c1) = render_hard_cropped(seq.kind, p, cfg)
        if alpha.size == 0:
            continue
        region = canvas[r0:r1, c0:c1]
        a = alpha[..., None]
        canvas[r0:r1, c0:c1] = region * (1.0 - a) + a * p[-3:]
    return canvas


def area_image(seq: StrokeSequence, cfg: RasterConfig | None = None) -> np.ndarray:
    """Per-pixel area (h * w) of the visible stroke in the hard render, composed in paint order."""
    if seq.kind is not StrokeKind.OIL:
        raise ValueError("stroke areas are only defined for oil strokes")
    cfg = (cfg or RasterConfig()).with_size(seq.canvas_h, seq.canvas_w)
    out = np.zeros((seq.canvas_h, seq.canvas_w))
    for p in seq.strokes:
        alpha, (r0, r1, c0, c1) = render_hard_cropped(seq.kind, p, cfg)
        if alpha.size:
            out[r0:r1, c0:c1] = out[r0:r1, c0:c1] * (1.0 - alpha) + alpha * (p[2] * p[3])
    return out


# ---------------------------------------------------------------- optimisation


def init_strokes(target: np.ndarray, n: int, kind=StrokeKind.OIL, seed: int = 0) -> StrokeSequence:
    """Jittered-grid initialisation with colours sampled under each stroke centre."""
    if n < 1:
        raise ValueError("need at least one stroke")
    kind = StrokeKind(kind)
    target = np.asarray(target, dtype=np.float64)
    h, w = target.shape[:2]
    rng = np.random.default_rng(seed)
    g = math.ceil(math.sqrt(n))
    cells = np.arange(g * g) if n == g * g else np.sort(rng.choice(g * g, n, replace=False))
    row, col = np.divmod(cells, g)
    jitter = rng.uniform(-0.25, 0.25, (n, 2)) / g
    x = np.clip((col + 0.5) / g + jitter[:, 0], 0.0, 1.0)
    y = np.clip((row + 0.5) / g + jitter[:, 1], 0.0, 1.0)
    color = target[np.minimum((y * h).astype(int), h - 1), np.minimum((x * w).astype(int), w - 1)]
    if kind is StrokeKind.OIL:
        size = np.full(n, min(max(1.2 / g, 0.05), 1.0))
        theta = rng.uniform(0.0, 1.0, n)
        strokes = np.column_stack([x, y, size, size, theta, color])
    else:
        ctrl = np.clip(np.column_stack([x, y] * 3) + rng.uniform(-0.5, 0.5, (n, 6)) / g, 0.0, 1.0)
        ends = np.tile([0.1, 1.0, 0.1, 1.0], (n, 1))
        strokes = np.column_stack([ctrl, ends, color])
    return StrokeSequence(kind, np.clip(strokes, 0.0, 1.0), h, w)


def loss_and_grad(seq: StrokeSequence, target: np.ndarray, cfg: PaintConfig,
                  density: np.ndarray | None = None) -> tuple[LossTerms, np.ndarray]:
    """Soft forward + backward of L2 + lambda * density loss for one tile."""
    use_density = cfg.loss.lambda_density > 0 and seq.kind is StrokeKind.OIL
    raster = cfg.raster(seq.canvas_h, seq.canvas_w)
    state = forward(seq, raster, cfg.use_fss, cfg.k, cfg.loss.bin, need_selection=use_density)
    if not use_density:
        terms = total_loss(target, state.canvas, None, None, replace(cfg.loss, lambda_density=0.0))
        return terms, backward(state, terms.d_canvas)
    area = stroke_area_image(seq, state.selection)
    terms = total_loss(target, state.canvas, area, density, cfg.loss)
    return terms, backward(state, terms.d_canvas, terms.d_area, area.gathered)


def _non_finite_detail(params: np.ndarray, grad: np.ndarray) -> str:
    for name, arr in (("gradient", grad), ("parameter", params)):
        bad = np.argwhere(~np.isfinite(arr))
        if bad.size:
            i, j = bad[0]
            return f"{name} [{i}, {j}] = {arr[i, j]}"
    return "loss is not finite"


def optimize(target: np.ndarray, cfg: PaintConfig = PaintConfig(),
             init: StrokeSequence | None = None, on_step=None) -> PaintResult:
    """Adam with projection onto [0, 1] on every stroke parameter at once.

    Returns the best parameters seen, rendered in hard mode.  ``on_step``,
    if given, is called as ``on_step(step, loss, params)`` after each update.
    """
    t0 = time.perf_counter()
    target = np.asarray(target, dtype=np.float64)
    if target.shape[:2] != (cfg.tile_size, cfg.tile_size):
        target = resize(target, cfg.tile_size, cfg.tile_size)
    seq = init if init is not None else init_strokes(target, cfg.n_strokes, cfg.kind, cfg.seed)
    density = None
    if cfg.loss.lambda_density > 0 and seq.kind is StrokeKind.OIL:
        density = density_map(target, cfg.loss)

    params = np.array(seq.strokes)
    m = np.zeros_like(params)
    v = np.zeros_like(params)
    trace = np.empty(cfg.steps)
    best_loss, best = math.inf, params.copy()
    for step in range(cfg.steps):
        step_cfg = cfg
        if cfg.final_tau is not None:
            frac = step / max(cfg.steps - 1, 1)
            tau = cfg.softness_tau * (cfg.final_tau / cfg.softness_tau) ** frac
            step_cfg = replace(cfg, softness_tau=tau)
        terms, grad = loss_and_grad(seq.with_strokes(params), target, step_cfg, density)
        if not (math.isfinite(terms.total) and np.isfinite(grad).all()):
            raise NonFiniteLossError(step, _non_finite_detail(params, grad))
        trace[step] = terms.total
        if terms.total < best_loss:
            best_loss, best = terms.total, params.copy()
        m = cfg.beta1 * m + (1 - cfg.beta1) * grad
        v = cfg.beta2 * v + (1 - cfg.beta2) * grad * grad
        m_hat = m / (1 - cfg.beta1 ** (step + 1))
        v_hat = v / (1 - cfg.beta2 ** (step + 1))
        lr = cfg.learning_rate
        if cfg.lr_schedule == "cosine":
            lr *= 0.5 * (1 + math.cos(math.pi * step / cfg.steps))
        params = np.clip(params - lr * m_hat / (np.sqrt(v_hat) + cfg.eps), 0.0, 1.0)
        if on_step is not None:
            on_step(step, terms.total, params)
        if step % 100 == 0:
            logger.debug("step %d loss %.6f", step, terms.total)

    final = seq.with_strokes(best)
    canvas = render_sequence(final, cfg.raster())
    return PaintResult(final, canvas, trace, best_loss, time.perf_counter() - t0)


# ---------------------------------------------------------------- tiling


def _tile_job(args):
    tile, cfg, seed = args
    return optimize(tile, replace(cfg, seed=seed, tiles=(1, 1)))


def remap_tile(seq: StrokeSequence, row: int, col: int, rows: int, cols: int,
               scale_y: float, scale_x: float, min_tile_px: float, min_canvas_px: float) -> np.ndarray:
    """Map tile-local strokes into global normalised coordinates.

    ``scale_y``/``scale_x`` stretch padded space onto the original image
    (1 when the image divides evenly); positions that land in the padding
    are clamped onto the image border.
    """
    p = np.array(seq.strokes)

    def gx(v):
        return np.clip((col + v) / cols * scale_x, 0.0, 1.0)

    def gy(v):
        return np.clip((row + v) / rows * scale_y, 0.0, 1.0)

    if seq.kind is StrokeKind.OIL:
        p[:, 0], p[:, 1] = gx(p[:, 0]), gy(p[:, 1])
        p[:, 2] = np.clip(p[:, 2] / rows * scale_y, 0.0, 1.0)
        p[:, 3] = np.clip(p[:, 3] / cols * scale_x, 0.0, 1.0)
    else:
        for j in range(3):
            p[:, 2 * j], p[:, 2 * j + 1] = gx(p[:, 2 * j]), gy(p[:, 2 * j + 1])
        p[:, [6, 8]] = np.clip(p[:, [6, 8]] * min_tile_px / min_canvas_px, 0.0, 1.0)
    return p


def paint_tiled(target: np.ndarray, cfg: PaintConfig = PaintConfig()) -> PaintResult:
    """Paint each tile independently and stitch the strokes into one global sequence.

    Tiles are painted at ``cfg.tile_size`` and concatenated tile-major; the
    full image is then rendered in hard mode at the target's resolution.
    """
    t0 = time.perf_counter()
    target = np.asarray(target, dtype=np.float64)
    h, w = target.shape[:2]
    rows, cols = cfg.tiles
    th, tw = math.ceil(h / rows), math.ceil(w / cols)
    padded = np.pad(target, ((0, rows * th - h), (0, cols * tw - w), (0, 0)), mode="edge")
    jobs = []
    for r in range(rows):
        for c in range(cols):
            tile = padded[r * th:(r + 1) * th, c * tw:(c + 1) * tw]
            jobs.append((resize(tile, cfg.tile_size, cfg.tile_size), cfg, cfg.seed + len(jobs)))
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_tile_job, jobs))
    else:
        results = [_tile_job(j) for j in jobs]

    parts = []
    for i, res in enumerate(results):
        r, c = divmod(i, cols)
        parts.append(remap_tile(res.sequence, r, c, rows, cols, rows * th / h, cols * tw / w,
                                min(th, tw), min(h, w)))
    seq = StrokeSequence(cfg.kind, np.concatenate(parts), h, w)
    canvas = render_sequence(seq, cfg.raster(h, w))
    trace = np.mean([res.loss_trace for res in results], axis=0)
    if len(results) == 1:
        trace = results[0].loss_trace
    return PaintResult(seq, canvas, trace, float(trace.min()), time.perf_counter() - t0, results)
