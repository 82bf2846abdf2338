"""Compiled per-pixel loops for the oil and Bezier rasterisers and top-k selection.

Pixel centres sit at (col + 0.5, row + 0.5).  Every kernel evaluates the same
scalar per-pixel functions, so dense, cropped and sparse evaluations agree
bit for bit.
"""
import math

import numpy as np
from numba import njit

_EPS = 1e-12


@njit(cache=True, inline="always")
def _logistic(z):
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


@njit(cache=True)
def _tex_sample(tex, tu, tv):
    """Bilinear texture lookup with clamped coordinates; returns (value, d/dtu, d/dtv)."""
    th, tw = tex.shape
    inside_u = 0.0 < tu < 1.0
    inside_v = 0.0 < tv < 1.0
    fu = min(max(tu, 0.0), 1.0) * (tw - 1)
    fv = min(max(tv, 0.0), 1.0) * (th - 1)
    iu = min(int(math.floor(fu)), max(tw - 2, 0))
    iv = min(int(math.floor(fv)), max(th - 2, 0))
    au = fu - iu
    av = fv - iv
    iu1 = min(iu + 1, tw - 1)
    iv1 = min(iv + 1, th - 1)
    t00 = tex[iv, iu]
    t01 = tex[iv, iu1]
    t10 = tex[iv1, iu]
    t11 = tex[iv1, iu1]
    top = t00 + au * (t01 - t00)
    bot = t10 + au * (t11 - t10)
    val = top + av * (bot - top)
    d_tu = ((1 - av) * (t01 - t00) + av * (t11 - t10)) * (tw - 1) if inside_u else 0.0
    d_tv = (bot - top) * (th - 1) if inside_v else 0.0
    return val, d_tu, d_tv


# ---------------------------------------------------------------- oil


@njit(cache=True)
def _oil_setup(p, h, w):
    cx = p[0] * w
    cy = p[1] * h
    half_h = p[2] * h / 2
    half_w = p[3] * w / 2
    ang = p[4] * math.pi
    return cx, cy, half_h, half_w, math.cos(ang), math.sin(ang)


@njit(cache=True)
def _oil_px(cx, cy, half_h, half_w, c, s, row, col, tau, tex, has_tex, hard):
    dx = col + 0.5 - cx
    dy = row + 0.5 - cy
    ux = c * dx + s * dy
    uy = c * dy - s * dx
    t = 1.0
    if has_tex:
        tu = ux / max(2 * half_w, _EPS) + 0.5
        tv = uy / max(2 * half_h, _EPS) + 0.5
        t = _tex_sample(tex, tu, tv)[0]
    if hard:
        if abs(ux) <= half_w and abs(uy) <= half_h and t >= 0.5:
            return 1.0
        return 0.0
    return _logistic((half_w - abs(ux)) / tau) * _logistic((half_h - abs(uy)) / tau) * t


@njit(cache=True)
def _oil_px_grad(cx, cy, half_h, half_w, c, s, row, col, tau, tex, has_tex, g, acc):
    """Accumulate g * d alpha / d (cx, cy, half_h, half_w, angle) into acc[0:5]."""
    dx = col + 0.5 - cx
    dy = row + 0.5 - cy
    ux = c * dx + s * dy
    uy = c * dy - s * dx
    ax = _logistic((half_w - abs(ux)) / tau)
    ay = _logistic((half_h - abs(uy)) / tau)
    t = 1.0
    d_tu = 0.0
    d_tv = 0.0
    den_w = max(2 * half_w, _EPS)
    den_h = max(2 * half_h, _EPS)
    if has_tex:
        t, d_tu, d_tv = _tex_sample(tex, ux / den_w + 0.5, uy / den_h + 0.5)
    zx = g * ay * t * ax * (1 - ax) / tau
    zy = g * ax * t * ay * (1 - ay) / tau
    g_half_w = zx
    g_half_h = zy
    sx = 1.0 if ux > 0 else (-1.0 if ux < 0 else 0.0)
    sy = 1.0 if uy > 0 else (-1.0 if uy < 0 else 0.0)
    g_ux = -sx * zx
    g_uy = -sy * zy
    if has_tex:
        g_t = g * ax * ay
        g_ux += g_t * d_tu / den_w
        g_uy += g_t * d_tv / den_h
        if 2 * half_w > _EPS:
            g_half_w -= g_t * d_tu * ux * 2 / (den_w * den_w)
        if 2 * half_h > _EPS:
            g_half_h -= g_t * d_tv * uy * 2 / (den_h * den_h)
    acc[0] -= c * g_ux - s * g_uy
    acc[1] -= s * g_ux + c * g_uy
    acc[2] += g_half_h
    acc[3] += g_half_w
    acc[4] += g_ux * uy - g_uy * ux


@njit(cache=True)
def _oil_finish(acc, h, w, out_row):
    out_row[0] += acc[0] * w
    out_row[1] += acc[1] * h
    out_row[2] += acc[2] * h / 2
    out_row[3] += acc[3] * w / 2
    out_row[4] += acc[4] * math.pi


@njit(cache=True)
def oil_alpha(params, h, w, tau, tex, has_tex, hard):
    n = params.shape[0]
    out = np.empty((n, h, w))
    for i in range(n):
        cx, cy, hh, hw, c, s = _oil_setup(params[i], h, w)
        for r in range(h):
            for q in range(w):
                out[i, r, q] = _oil_px(cx, cy, hh, hw, c, s, r, q, tau, tex, has_tex, hard)
    return out


@njit(cache=True)
def oil_alpha_box(p, h, w, r0, r1, c0, c1, tau, tex, has_tex, hard):
    out = np.empty((r1 - r0, c1 - c0))
    cx, cy, hh, hw, c, s = _oil_setup(p, h, w)
    for r in range(r0, r1):
        for q in range(c0, c1):
            out[r - r0, q - c0] = _oil_px(cx, cy, hh, hw, c, s, r, q, tau, tex, has_tex, hard)
    return out


@njit(cache=True)
def oil_vjp_dense(params, h, w, tau, tex, has_tex, d_alpha):
    n = params.shape[0]
    out = np.zeros((n, params.shape[1]))
    acc = np.zeros(5)
    for i in range(n):
        cx, cy, hh, hw, c, s = _oil_setup(params[i], h, w)
        acc[:] = 0.0
        for r in range(h):
            for q in range(w):
                g = d_alpha[i, r, q]
                if g != 0.0:
                    _oil_px_grad(cx, cy, hh, hw, c, s, r, q, tau, tex, has_tex, g, acc)
        _oil_finish(acc, h, w, out[i])
    return out


@njit(cache=True)
def oil_vjp_entries(params, h, w, tau, tex, has_tex, stroke, rows, cols, g):
    """Sparse VJP over (stroke, row, col, adjoint) entries, accumulated in entry order."""
    n = params.shape[0]
    acc = np.zeros((n, 5))
    setup = np.empty((n, 6))
    for i in range(n):
        cx, cy, hh, hw, c, s = _oil_setup(params[i], h, w)
        setup[i, 0] = cx
        setup[i, 1] = cy
        setup[i, 2] = hh
        setup[i, 3] = hw
        setup[i, 4] = c
        setup[i, 5] = s
    for e in range(stroke.shape[0]):
        i = stroke[e]
        if g[e] != 0.0:
            _oil_px_grad(setup[i, 0], setup[i, 1], setup[i, 2], setup[i, 3], setup[i, 4],
                         setup[i, 5], rows[e], cols[e], tau, tex, has_tex, g[e], acc[i])
    out = np.zeros((n, params.shape[1]))
    for i in range(n):
        _oil_finish(acc[i], h, w, out[i])
    return out


@njit(cache=True)
def oil_box(p, h, w):
    """Pixel box (r0, r1, c0, c1) holding every pixel whose hard alpha can be nonzero."""
    cx, cy, hh, hw, c, s = _oil_setup(p, h, w)
    ex = abs(c) * hw + abs(s) * hh
    ey = abs(s) * hw + abs(c) * hh
    # one pixel of slack absorbs rounding in the rotated centre test
    r0 = max(int(math.floor(cy - ey - 0.5)) - 1, 0)
    r1 = min(int(math.ceil(cy + ey + 0.5)) + 1, h)
    c0 = max(int(math.floor(cx - ex - 0.5)) - 1, 0)
    c1 = min(int(math.ceil(cx + ex + 0.5)) + 1, w)
    return r0, max(r1, r0), c0, max(c1, c0)


@njit(cache=True)
def oil_topk(params, h, w, tau, tex, has_tex, k, threshold):
    """Top-k selection straight from oil parameters.

    Soft alpha >= threshold needs both edge factors >= threshold, which bounds
    |u| by the half extent plus tau * log((1 - t) / t).  Only that box is
    visited.  Strokes are scanned from the top and a pixel stops accepting
    once it holds k strokes.
    """
    n = params.shape[0]
    idx = np.zeros((k, h, w), dtype=np.int64)
    galpha = np.zeros((k, h, w))
    count = np.zeros((h, w), dtype=np.int64)
    # grow the box when the threshold admits pixels beyond the footprint edge
    grow = 0.0
    if threshold < 0.5:
        grow = tau * math.log((1 - threshold) / threshold)
    for i in range(n - 1, -1, -1):
        cx, cy, hh, hw, c, s = _oil_setup(params[i], h, w)
        ex = abs(c) * (hw + grow) + abs(s) * (hh + grow)
        ey = abs(s) * (hw + grow) + abs(c) * (hh + grow)
        r0 = max(int(math.floor(cy - ey - 0.5)) - 1, 0)
        r1 = min(int(math.ceil(cy + ey + 0.5)) + 1, h)
        c0 = max(int(math.floor(cx - ex - 0.5)) - 1, 0)
        c1 = min(int(math.ceil(cx + ex + 0.5)) + 1, w)
        for r in range(r0, r1):
            for q in range(c0, c1):
                m = count[r, q]
                if m >= k:
                    continue
                a = _oil_px(cx, cy, hh, hw, c, s, r, q, tau, tex, has_tex, False)
                if a >= threshold:
                    idx[k - 1 - m, r, q] = i + 1
                    galpha[k - 1 - m, r, q] = a
                    count[r, q] = m + 1
    return idx, galpha


# ---------------------------------------------------------------- bezier


@njit(cache=True)
def _bez_curve(p, h, w, m):
    pts = np.empty((m, 2))
    for j in range(m):
        s = j / (m - 1)
        b0 = (1 - s) * (1 - s)
        b1 = 2 * s * (1 - s)
        b2 = s * s
        pts[j, 0] = (b0 * p[0] + b1 * p[2] + b2 * p[4]) * w
        pts[j, 1] = (b0 * p[1] + b1 * p[3] + b2 * p[5]) * h
    return pts


@njit(cache=True)
def _bez_nearest(pts, row, col):
    px = col + 0.5
    py = row + 0.5
    best = 0
    bd = np.inf
    for j in range(pts.shape[0]):
        ex = px - pts[j, 0]
        ey = py - pts[j, 1]
        d2 = ex * ex + ey * ey
        if d2 < bd:
            bd = d2
            best = j
    return best, math.sqrt(bd)


@njit(cache=True)
def _bez_px(p, pts, rscale, row, col, tau, hard):
    m = pts.shape[0]
    j, d = _bez_nearest(pts, row, col)
    s = j / (m - 1)
    rad = ((1 - s) * p[6] + s * p[8]) * rscale
    op = (1 - s) * p[7] + s * p[9]
    if hard:
        return op if d <= rad else 0.0
    return op * _logistic((rad - d) / tau)


@njit(cache=True)
def _bez_px_grad(p, pts, rscale, row, col, tau, h, w, g, out_row):
    m = pts.shape[0]
    j, d = _bez_nearest(pts, row, col)
    s = j / (m - 1)
    rad = ((1 - s) * p[6] + s * p[8]) * rscale
    op = (1 - s) * p[7] + s * p[9]
    sig = _logistic((rad - d) / tau)
    g_op = g * sig
    gz = g * op * sig * (1 - sig) / tau
    g_rad = gz * rscale
    out_row[6] += g_rad * (1 - s)
    out_row[8] += g_rad * s
    out_row[7] += g_op * (1 - s)
    out_row[9] += g_op * s
    if d > 0:
        # d = |pixel - B(s_j)| with the nearest-sample index held fixed
        g_bx = gz * (col + 0.5 - pts[j, 0]) / d
        g_by = gz * (row + 0.5 - pts[j, 1]) / d
        b0 = (1 - s) * (1 - s)
        b1 = 2 * s * (1 - s)
        b2 = s * s
        out_row[0] += g_bx * b0 * w
        out_row[1] += g_by * b0 * h
        out_row[2] += g_bx * b1 * w
        out_row[3] += g_by * b1 * h
        out_row[4] += g_bx * b2 * w
        out_row[5] += g_by * b2 * h


@njit(cache=True)
def bez_alpha(params, h, w, tau, m, hard):
    n = params.shape[0]
    out = np.empty((n, h, w))
    rscale = min(h, w) / 2
    for i in range(n):
        pts = _bez_curve(params[i], h, w, m)
        for r in range(h):
            for q in range(w):
                out[i, r, q] = _bez_px(params[i], pts, rscale, r, q, tau, hard)
    return out


@njit(cache=True)
def bez_alpha_box(p, h, w, r0, r1, c0, c1, tau, m, hard):
    out = np.empty((r1 - r0, c1 - c0))
    rscale = min(h, w) / 2
    pts = _bez_curve(p, h, w, m)
    for r in range(r0, r1):
        for q in range(c0, c1):
            out[r - r0, q - c0] = _bez_px(p, pts, rscale, r, q, tau, hard)
    return out


@njit(cache=True)
def bez_vjp_dense(params, h, w, tau, m, d_alpha):
    n = params.shape[0]
    out = np.zeros((n, params.shape[1]))
    rscale = min(h, w) / 2
    for i in range(n):
        pts = _bez_curve(params[i], h, w, m)
        for r in range(h):
            for q in range(w):
                g = d_alpha[i, r, q]
                if g != 0.0:
                    _bez_px_grad(params[i], pts, rscale, r, q, tau, h, w, g, out[i])
    return out


@njit(cache=True)
def bez_vjp_entries(params, h, w, tau, m, stroke, rows, cols, g):
    n = params.shape[0]
    out = np.zeros((n, params.shape[1]))
    rscale = min(h, w) / 2
    curves = np.empty((n, m, 2))
    for i in range(n):
        curves[i] = _bez_curve(params[i], h, w, m)
    for e in range(stroke.shape[0]):
        i = stroke[e]
        if g[e] != 0.0:
            _bez_px_grad(params[i], curves[i], rscale, rows[e], cols[e], tau, h, w, g[e], out[i])
    return out


@njit(cache=True)
def bez_box(p, h, w, grow):
    rad = max(p[6], p[8]) * min(h, w) / 2 + grow
    xmin = min(p[0], min(p[2], p[4])) * w - rad
    xmax = max(p[0], max(p[2], p[4])) * w + rad
    ymin = min(p[1], min(p[3], p[5])) * h - rad
    ymax = max(p[1], max(p[3], p[5])) * h + rad
    r0 = max(int(math.floor(ymin - 0.5)) - 1, 0)
    r1 = min(int(math.ceil(ymax + 0.5)) + 1, h)
    c0 = max(int(math.floor(xmin - 0.5)) - 1, 0)
    c1 = min(int(math.ceil(xmax + 0.5)) + 1, w)
    return r0, max(r1, r0), c0, max(c1, c0)


@njit(cache=True)
def bez_topk(params, h, w, tau, m, k, threshold):
    n = params.shape[0]
    idx = np.zeros((k, h, w), dtype=np.int64)
    galpha = np.zeros((k, h, w))
    count = np.zeros((h, w), dtype=np.int64)
    rscale = min(h, w) / 2
    grow = 0.0
    if threshold < 0.5:
        grow = tau * math.log((1 - threshold) / threshold)
    for i in range(n - 1, -1, -1):
        p = params[i]
        pts = _bez_curve(p, h, w, m)
        r0, r1, c0, c1 = bez_box(p, h, w, grow)
        for r in range(r0, r1):
            for q in range(c0, c1):
                cnt = count[r, q]
                if cnt >= k:
                    continue
                a = _bez_px(p, pts, rscale, r, q, tau, False)
                if a >= threshold:
                    idx[k - 1 - cnt, r, q] = i + 1
                    galpha[k - 1 - cnt, r, q] = a
                    count[r, q] = cnt + 1
    return idx, galpha


# ---------------------------------------------------------------- selection


@njit(cache=True)
def topk_from_alpha(alpha, k, threshold):
    """Per pixel, the k highest 1-based indices with alpha >= threshold, ascending."""
    n, h, w = alpha.shape
    idx = np.zeros((k, h, w), dtype=np.int64)
    for r in range(h):
        for q in range(w):
            slot = k - 1
            for i in range(n - 1, -1, -1):
                if alpha[i, r, q] >= threshold:
                    idx[slot, r, q] = i + 1
                    slot -= 1
                    if slot < 0:
                        break
    return idx

