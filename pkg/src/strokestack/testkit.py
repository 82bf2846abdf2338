"""Reference oracles, random instances and bundled images for the test suite.

Everything here is written independently of the production modules: plain
Python loops and direct closed forms, no shared helpers.  These routes are
slow (the gradient oracle is cubic in N) and are never imported by library
code.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources

import numpy as np
from PIL import Image

from .compositor import TopKSelection
from .core import StrokeKind, StrokeSequence

FIXTURES = ("flat", "step", "photo", "photo512")

MAX_ORACLE_GRAD_N = 32


def load_fixture(name: str) -> np.ndarray:
    """Bundled 8-bit RGB test image as float values v / 255."""
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; have {FIXTURES}")
    ref = resources.files("strokestack") / "data" / f"{name}.png"
    with resources.as_file(ref) as path, Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0


# ---------------------------------------------------------------- instances


@dataclass(frozen=True)
class RandomInstance:
    """A reproducible random stack of frames.

    Alphas are axis-aligned rectangles; ``style="binary"`` gives {0, 1} masks
    and ``style="soft"`` gives logistic edges of width ``tau`` pixels.
    """

    seed: int
    n: int
    h: int = 16
    w: int = 16
    kind: StrokeKind = StrokeKind.OIL
    style: str = "soft"
    tau: float = 1.0
    color_maps: bool = False

    def frames(self) -> tuple[np.ndarray, np.ndarray]:
        rng = np.random.default_rng(self.seed)
        cy = rng.uniform(0, self.h, self.n)
        cx = rng.uniform(0, self.w, self.n)
        hh = rng.uniform(1, self.h / 2, self.n)
        hw = rng.uniform(1, self.w / 2, self.n)
        ys = np.arange(self.h) + 0.5
        xs = np.arange(self.w) + 0.5
        dy = hh[:, None] - np.abs(ys[None, :] - cy[:, None])
        dx = hw[:, None] - np.abs(xs[None, :] - cx[:, None])
        if self.style == "binary":
            alpha = ((dy >= 0)[:, :, None] & (dx >= 0)[:, None, :]).astype(np.float64)
        elif self.style == "soft":
            sy = 1 / (1 + np.exp(-dy / self.tau))
            sx = 1 / (1 + np.exp(-dx / self.tau))
            alpha = sy[:, :, None] * sx[:, None, :]
        else:
            raise ValueError(f"unknown alpha style {self.style!r}")
        if self.color_maps:
            color = rng.uniform(0, 1, (self.n, self.h, self.w, 3))
        else:
            color = rng.uniform(0, 1, (self.n, 3))
        return alpha, color

    def sequence(self, min_size: float = 0.1, max_size: float = 0.5) -> StrokeSequence:
        """Random stroke parameters of ``kind`` on an h x w canvas."""
        rng = np.random.default_rng(self.seed)
        kind = StrokeKind(self.kind)
        p = rng.uniform(0, 1, (self.n, kind.arity))
        if kind is StrokeKind.OIL:
            p[:, 2:4] = rng.uniform(min_size, max_size, (self.n, 2))
        else:
            p[:, [6, 8]] = rng.uniform(min_size / 2, max_size / 2, (self.n, 2))
        return StrokeSequence(kind, p, self.h, self.w)


# ---------------------------------------------------------------- compositing oracles


def _color_at(color, i, y, x):
    return color[i] if color.ndim == 2 else color[i, y, x]


def oracle_expand(alpha: np.ndarray, color: np.ndarray) -> np.ndarray:
    """Direct closed-form sum over strokes of A_i C_i prod_{j > i} (1 - A_j), pixel by pixel."""
    n, h, w = alpha.shape
    if n == 0:
        raise ValueError("the closed form needs at least one frame")
    out = np.zeros((h, w, color.shape[-1]))
    for y in range(h):
        for x in range(w):
            for i in range(n):
                weight = alpha[i, y, x]
                for j in range(i + 1, n):
                    weight *= 1.0 - alpha[j, y, x]
                out[y, x] += weight * _color_at(color, i, y, x)
    return out


def oracle_grads(alpha: np.ndarray, color: np.ndarray, d_canvas: np.ndarray | None = None):
    """Closed-form derivatives of the final canvas, contracted with ``d_canvas`` (ones by default).

    d/dC_m = A_m prod_{j>m}(1 - A_j); d/dA_m = (C_m - canvas before m) prod_{j>m}(1 - A_j),
    with the canvas before m itself evaluated from its own closed form.
    Returns ``(d_alpha (N, H, W), d_color (N, H, W, C))``.
    """
    n, h, w = alpha.shape
    if n > MAX_ORACLE_GRAD_N:
        raise ValueError(f"closed-form gradients are cubic in N; refusing N = {n} > {MAX_ORACLE_GRAD_N}")
    nc = color.shape[-1]
    if d_canvas is None:
        d_canvas = np.ones((h, w, nc))
    d_alpha = np.zeros((n, h, w))
    d_color = np.zeros((n, h, w, nc))
    for y in range(h):
        for x in range(w):
            a = alpha[:, y, x]
            up = d_canvas[y, x]
            for m in range(n):
                after = 1.0
                for j in range(m + 1, n):
                    after *= 1.0 - a[j]
                before = np.zeros(nc)
                for i in range(m):
                    weight = a[i]
                    for j in range(i + 1, m):
                        weight *= 1.0 - a[j]
                    before += weight * _color_at(color, i, y, x)
                d_color[m, y, x] = a[m] * after * up
                d_alpha[m, y, x] = float(np.dot((_color_at(color, m, y, x) - before) * after, up))
    return d_alpha, d_color


def oracle_topk(alpha: np.ndarray, color: np.ndarray, k: int, threshold: float = 0.5) -> TopKSelection:
    """Per-pixel scan: collect covering 1-based indices in paint order, keep the last k."""
    n, h, w = alpha.shape
    nc = color.shape[-1]
    idx = np.zeros((k, h, w), dtype=np.int64)
    ga = np.zeros((k, h, w))
    gc = np.zeros((k, h, w, nc))
    for y in range(h):
        for x in range(w):
            covering = [i + 1 for i in range(n) if alpha[i, y, x] >= threshold]
            chosen = covering[-k:]
            pad = k - len(chosen)
            for slot, s in enumerate(chosen, start=pad):
                idx[slot, y, x] = s
                ga[slot, y, x] = alpha[s - 1, y, x]
                gc[slot, y, x] = _color_at(color, s - 1, y, x)
    return TopKSelection(k, idx, ga, gc, n)


def oracle_sequential(alpha: np.ndarray, color: np.ndarray) -> np.ndarray:
    """Pixel-by-pixel over recursion on a zero canvas."""
    n, h, w = alpha.shape
    out = np.zeros((h, w, color.shape[-1]))
    for y in range(h):
        for x in range(w):
            c = np.zeros(color.shape[-1])
            for i in range(n):
                c = c * (1 - alpha[i, y, x]) + alpha[i, y, x] * _color_at(color, i, y, x)
            out[y, x] = c
    return out


# ---------------------------------------------------------------- loss oracles


def naive_l2(a: np.ndarray, b: np.ndarray) -> float:
    total = 0.0
    count = 0
    for va, vb in zip(np.ravel(a), np.ravel(b)):
        total += (float(va) - float(vb)) ** 2
        count += 1
    return total / count


def oracle_density(img: np.ndarray, window: int) -> np.ndarray:
    """Straight-line Sobel magnitude with replicated borders, block mean, nearest upsample, max-normalise."""
    img = np.asarray(img, dtype=np.float64)
    gray = 0.299 * img[..., 0] + 0.587 * img[..., 1] + 0.114 * img[..., 2]
    h, w = gray.shape

    def px(y, x):
        return gray[min(max(y, 0), h - 1), min(max(x, 0), w - 1)]

    mag = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            gx = (px(y - 1, x + 1) + 2 * px(y, x + 1) + px(y + 1, x + 1)
                  - px(y - 1, x - 1) - 2 * px(y, x - 1) - px(y + 1, x - 1))
            gy = (px(y + 1, x - 1) + 2 * px(y + 1, x) + px(y + 1, x + 1)
                  - px(y - 1, x - 1) - 2 * px(y - 1, x) - px(y - 1, x + 1))
            mag[y, x] = math.sqrt(gx * gx + gy * gy)
    out = np.zeros((h, w))
    for by in range(0, h, window):
        for bx in range(0, w, window):
            block = mag[by:by + window, bx:bx + window]
            out[by:by + window, bx:bx + window] = block.sum() / block.size
    peak = out.max()
    return out / peak if peak > 1e-12 else out


# ---------------------------------------------------------------- raster oracle


def _logistic(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _texture_lookup(tex, tu, tv):
    th, tw = tex.shape
    fu = np.clip(tu, 0, 1) * (tw - 1)
    fv = np.clip(tv, 0, 1) * (th - 1)
    iu = np.minimum(np.floor(fu).astype(int), max(tw - 2, 0))
    iv = np.minimum(np.floor(fv).astype(int), max(th - 2, 0))
    au, av = fu - iu, fv - iv
    iu1, iv1 = np.minimum(iu + 1, tw - 1), np.minimum(iv + 1, th - 1)
    top = tex[iv, iu] * (1 - au) + tex[iv, iu1] * au
    bot = tex[iv1, iu] * (1 - au) + tex[iv1, iu1] * au
    return top * (1 - av) + bot * av


def reference_alpha(kind, p, h: int, w: int, tau: float = 1.0, hard: bool = False,
                    samples: int = 32, texture: np.ndarray | None = None) -> np.ndarray:
    """One stroke's alpha map (H, W) evaluated with whole-array numpy."""
    kind = StrokeKind(kind)
    p = np.asarray(p, dtype=np.float64)
    py = (np.arange(h) + 0.5)[:, None]
    px = (np.arange(w) + 0.5)[None, :]
    if kind is StrokeKind.OIL:
        ang = p[4] * math.pi
        dx, dy = px - p[0] * w, py - p[1] * h
        ux = math.cos(ang) * dx + math.sin(ang) * dy
        uy = -math.sin(ang) * dx + math.cos(ang) * dy
        half_w, half_h = p[3] * w / 2, p[2] * h / 2
        tex = 1.0
        if texture is not None:
            tu = ux / max(2 * half_w, 1e-12) + 0.5
            tv = uy / max(2 * half_h, 1e-12) + 0.5
            tex = _texture_lookup(texture, tu, tv)
        if hard:
            inside = (np.abs(ux) <= half_w) & (np.abs(uy) <= half_h)
            if texture is not None:
                inside &= tex >= 0.5
            return inside.astype(np.float64)
        return _logistic((half_w - np.abs(ux)) / tau) * _logistic((half_h - np.abs(uy)) / tau) * tex
    s = np.linspace(0, 1, samples)
    ctrl = p[:6].reshape(3, 2) * [w, h]
    curve = ((1 - s) ** 2)[:, None] * ctrl[0] + (2 * s * (1 - s))[:, None] * ctrl[1] \
        + (s**2)[:, None] * ctrl[2]
    d2 = (px[..., None] - curve[:, 0]) ** 2 + (py[..., None] - curve[:, 1]) ** 2
    j = d2.argmin(axis=-1)
    d = np.sqrt(np.take_along_axis(d2, j[..., None], -1)[..., 0])
    sj = s[j]
    rad = ((1 - sj) * p[6] + sj * p[8]) * min(h, w) / 2
    op = (1 - sj) * p[7] + sj * p[9]
    if hard:
        return op * (d <= rad)
    return op * _logistic((rad - d) / tau)
