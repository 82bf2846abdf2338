"""Reverse-mode gradients for the fixed pipeline params -> raster -> stack -> loss.

The sequential path stores every intermediate canvas and sweeps backwards,
O(N) per pixel.  The fast-stacking path runs the same sweep over the k
gathered layers and scatters the layer adjoints back to their source strokes.
Selections (binarised masks, top-k indices, nearest Bezier samples) are
constants in the backward pass.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .compositor import (BinarizeConfig, TopKSelection, _check, _check_k, gather,
                         stack_sequential)
from .core import StrokeKind, StrokeSequence
from .raster import (SOFT, RasterConfig, UnsupportedModeError, alpha_vjp_entries, params_vjp,
                     render_alpha, select_topk)


@dataclass
class CompositeAdjoint:
    """Loss gradients w.r.t. each frame's alpha (N, H, W) and colour (shape of the colour input)."""

    d_alpha: np.ndarray
    d_color: np.ndarray


def backward_layers(alpha: np.ndarray, color: np.ndarray, d_out: np.ndarray):
    """Adjoint of the over recursion for one stack of layers.

    Returns ``(d_alpha, d_color)``; ``d_color`` matches the shape of ``color``,
    so per-stroke colours (L, C) receive gradients summed over pixels.
    """
    n = alpha.shape[0]
    per_stroke = color.ndim == 2
    # before[i] is the canvas just before layer i is painted
    before = np.empty((n, *d_out.shape))
    canvas = np.zeros(d_out.shape)
    for i in range(n):
        before[i] = canvas
        a = alpha[i][..., None]
        canvas = canvas * (1.0 - a) + a * color[i]
    d_alpha = np.empty_like(alpha)
    d_color = np.empty_like(color)
    g = np.array(d_out, dtype=np.float64)
    for i in range(n - 1, -1, -1):
        a = alpha[i]
        if per_stroke:
            d_color[i] = np.einsum("hw,hwc->c", a, g)
        else:
            d_color[i] = a[..., None] * g
        d_alpha[i] = ((color[i] - before[i]) * g).sum(axis=-1)
        g = g * (1.0 - a)[..., None]
    return d_alpha, d_color


def backward_sequential(alpha, color, d_canvas) -> CompositeAdjoint:
    alpha = np.asarray(alpha, dtype=np.float64)
    color = np.asarray(color, dtype=np.float64)
    d_canvas = np.asarray(d_canvas, dtype=np.float64)
    _check(alpha, color)
    if d_canvas.shape != (*alpha.shape[1:], color.shape[-1]):
        raise ValueError(f"canvas adjoint {d_canvas.shape} does not match frames {alpha.shape}")
    return CompositeAdjoint(*backward_layers(alpha, color, d_canvas))


def scatter_layers(sel: TopKSelection, d_layer: np.ndarray, n: int, out_tail=()) -> np.ndarray:
    """Write per-layer adjoints (k, H, W, *tail) back to (n, H, W, *tail); padding is dropped."""
    k, h, w = sel.indices.shape
    out = np.zeros((n, h, w, *out_tail))
    layer, row, col = np.nonzero(sel.indices)
    # indices are distinct per pixel, so plain assignment is a deterministic scatter-add
    out[sel.indices[layer, row, col] - 1, row, col] = d_layer[layer, row, col]
    return out


def sum_by_stroke(sel: TopKSelection, d_layer: np.ndarray, n: int) -> np.ndarray:
    """Sum per-layer adjoints into per-stroke totals, (n,) or (n, C)."""
    valid = sel.indices > 0
    idx = sel.indices[valid] - 1
    vals = d_layer[valid]
    if vals.ndim == 1:
        return np.bincount(idx, weights=vals, minlength=n)
    return np.stack([np.bincount(idx, weights=vals[:, c], minlength=n)
                     for c in range(vals.shape[1])], axis=1)


def _check_selection(alpha, sel: TopKSelection) -> None:
    if sel.n_strokes != alpha.shape[0] or sel.indices.shape[1:] != alpha.shape[1:]:
        raise ValueError(
            f"selection for {sel.n_strokes} strokes of {sel.indices.shape[1:]} "
            f"does not match frames {alpha.shape}")


def backward_fss(alpha, color, sel: TopKSelection, d_canvas) -> CompositeAdjoint:
    alpha = np.asarray(alpha, dtype=np.float64)
    color = np.asarray(color, dtype=np.float64)
    _check(alpha, color)
    _check_selection(alpha, sel)
    d_canvas = np.asarray(d_canvas, dtype=np.float64)
    if d_canvas.shape != (*alpha.shape[1:], color.shape[-1]):
        raise ValueError(f"canvas adjoint {d_canvas.shape} does not match frames {alpha.shape}")
    d_ga, d_gc = backward_layers(sel.gathered_alpha, sel.gathered_color, d_canvas)
    n = alpha.shape[0]
    d_alpha = scatter_layers(sel, d_ga, n)
    if color.ndim == 2:
        d_color = sum_by_stroke(sel, d_gc, n)
    else:
        d_color = scatter_layers(sel, d_gc, n, (color.shape[-1],))
    return CompositeAdjoint(d_alpha, d_color)


# ---------------------------------------------------------------- full pipeline


@dataclass
class ForwardState:
    """Everything the backward pass needs from one forward evaluation.

    On the fast-stacking path ``alpha`` is None: only the selected
    (stroke, pixel) alphas are ever evaluated.
    """

    seq: StrokeSequence
    cfg: RasterConfig
    colors: np.ndarray
    canvas: np.ndarray
    selection: TopKSelection | None
    use_fss: bool
    alpha: np.ndarray | None = None


def forward(seq: StrokeSequence, cfg: RasterConfig, use_fss: bool = True, k: int = 10,
            bin: BinarizeConfig = BinarizeConfig(), need_selection: bool = False) -> ForwardState:
    """Soft-render the strokes and stack them.

    With ``use_fss`` false every alpha map is rendered and stacked
    sequentially; a selection is still built when ``need_selection`` is set
    (the stroke-area image is defined through it).
    """
    _check_k(k)
    colors = np.array(seq.colors)
    n = len(seq)
    sel = alpha = None
    if use_fss or need_selection:
        idx, galpha = select_topk(seq.kind, seq.strokes, cfg, k, bin.threshold)
        sel = TopKSelection(k, idx, galpha, gather(colors, idx), n)
    if use_fss:
        canvas = stack_sequential(sel.gathered_alpha, sel.gathered_color)
    else:
        alpha = render_alpha(seq.kind, seq.strokes, cfg, SOFT)
        canvas = stack_sequential(alpha, colors, shape=(cfg.h, cfg.w, 3))
    return ForwardState(seq, cfg, colors, canvas, sel, use_fss, alpha)


def _selected_entries(sel: TopKSelection, d_layer: np.ndarray):
    layer, row, col = np.nonzero(sel.indices)
    return sel.indices[layer, row, col] - 1, row, col, d_layer[layer, row, col]


def backward(state: ForwardState, d_canvas: np.ndarray, d_area: np.ndarray | None = None,
             gathered_area: np.ndarray | None = None) -> np.ndarray:
    """Parameter gradient (N, P) for canvas adjoint ``d_canvas`` and an optional area-image adjoint.

    ``gathered_area`` (k, H, W) is the stroke-area layer stack the area image
    was composed from; it is required when ``d_area`` is given.
    """
    seq, cfg, n = state.seq, state.cfg, len(state.seq)
    if n == 0:
        return np.zeros((0, seq.kind.arity))
    sel = state.selection
    grad = np.zeros((n, seq.kind.arity))
    d_sel_alpha = None
    if state.use_fss:
        d_sel_alpha, d_gc = backward_layers(sel.gathered_alpha, sel.gathered_color, d_canvas)
        grad[:, -3:] += sum_by_stroke(sel, d_gc, n)
    else:
        adj = backward_sequential(state.alpha, state.colors, d_canvas)
        grad += params_vjp(seq.kind, seq.strokes, cfg, adj.d_alpha, adj.d_color)
    if d_area is not None:
        if seq.kind is not StrokeKind.OIL:
            raise ValueError("the area image is defined for oil strokes only")
        d_ga, d_garea = backward_layers(sel.gathered_alpha, gathered_area[..., None],
                                        d_area[..., None])
        d_sel_alpha = d_ga if d_sel_alpha is None else d_sel_alpha + d_ga
        # selected entries are covering, so their mask is 1 and the value is h * w
        d_hw = sum_by_stroke(sel, d_garea[..., 0], n)
        grad[:, 2] += d_hw * seq.strokes[:, 3]
        grad[:, 3] += d_hw * seq.strokes[:, 2]
    if d_sel_alpha is not None:
        grad += alpha_vjp_entries(seq.kind, seq.strokes, cfg, *_selected_entries(sel, d_sel_alpha))
    return grad


def param_backward(seq: StrokeSequence, cfg: RasterConfig, d_canvas: np.ndarray,
                   use_fss: bool = True, k: int = 10, bin: BinarizeConfig = BinarizeConfig(),
                   mode: str = SOFT) -> np.ndarray:
    """Gradient of sum(d_canvas * canvas) w.r.t. every stroke parameter, (N, P)."""
    if mode != SOFT:
        raise UnsupportedModeError("parameter gradients need the soft rasteriser")
    return backward(forward(seq, cfg, use_fss, k, bin), d_canvas)


def finite_diff(loss_fn: Callable[[np.ndarray], float], params: np.ndarray,
                step: float = 1e-4) -> np.ndarray:
    """Central differences (f(x + h) - f(x - h)) / 2h for every coordinate."""
    if not step > 0:
        raise ValueError("step must be positive")
    x = np.array(params, dtype=np.float64)
    grad = np.zeros_like(x)
    flat, gflat = x.reshape(-1), grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        up = loss_fn(x.copy())
        flat[i] = orig - step
        down = loss_fn(x.copy())
        flat[i] = orig
        gflat[i] = (up - down) / (2 * step)
    return grad
