"""Forward/backward timing of sequential stacking against fast stroke stacking.

Both modes receive the same random soft frames and call the same library
functions the rest of the package uses.  Each timing is the median of
``repeats`` runs after one warm-up run.
"""
from __future__ import annotations

import csv
import hashlib
import logging
import statistics
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .compositor import build_topk, stack_selection, stack_sequential
from .core import StrokeKind
from .grad import backward_fss, backward_sequential
from .raster import SOFT, RasterConfig, render_alpha

logger = logging.getLogger(__name__)

CSV_HEADER = ("n_strokes", "mode", "k", "canvas", "repeats", "forward_ms", "backward_ms", "total_ms")
SEQUENTIAL = "sequential"
FSS = "fss"


@dataclass
class BenchRecord:
    n_strokes: int
    mode: str
    k: int  # 0 for sequential stacking, which has no k
    canvas: int
    repeats: int
    forward_ms: float
    backward_ms: float
    total_ms: float
    # digest of the stacked canvas, to check runs compute the same thing
    digest: str = ""
    error: str | None = None

    def row(self) -> list[str]:
        return [str(self.n_strokes), self.mode, str(self.k), str(self.canvas), str(self.repeats),
                f"{self.forward_ms:.3f}", f"{self.backward_ms:.3f}", f"{self.total_ms:.3f}"]


def random_frames(n: int, canvas: int, seed: int, tau: float = 1.0):
    """Soft oil strokes of mixed sizes with flat random colours: alpha (N, H, W), colour (N, 3)."""
    rng = np.random.default_rng(seed)
    p = rng.uniform(0.0, 1.0, (n, StrokeKind.OIL.arity))
    p[:, 2:4] = rng.uniform(0.03, 0.2, (n, 2))
    alpha = render_alpha(StrokeKind.OIL, p, RasterConfig(canvas, canvas, tau), SOFT)
    return alpha, p[:, 5:8].copy()


def _median_ms(fn: Callable[[], object], repeats: int) -> tuple[float, object]:
    out = fn()  # warm-up, also compiles any jitted kernels
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append((time.perf_counter() - t0) * 1e3)
    return statistics.median(times), out


def _digest(canvas: np.ndarray) -> str:
    return hashlib.sha1(np.ascontiguousarray(canvas).tobytes()).hexdigest()[:16]


def time_mode(alpha, color, mode: str, k: int, repeats: int) -> BenchRecord:
    n, h, _ = alpha.shape
    d_canvas = np.ones((h, h, 3)) / (h * h * 3)
    if mode == SEQUENTIAL:
        fwd, canvas = _median_ms(lambda: stack_sequential(alpha, color), repeats)
        bwd, _ = _median_ms(lambda: backward_sequential(alpha, color, d_canvas), repeats)
        k = 0
    elif mode == FSS:
        def forward():
            sel = build_topk(alpha, color, k)
            return sel, stack_selection(sel)

        fwd, (sel, canvas) = _median_ms(forward, repeats)
        bwd, _ = _median_ms(lambda: backward_fss(alpha, color, sel, d_canvas), repeats)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return BenchRecord(n, mode, k, h, repeats, fwd, bwd, fwd + bwd, _digest(canvas))


def run_benchmark(stroke_counts: Iterable[int], k_values: Iterable[int] = (10,), canvas: int = 128,
                  repeats: int = 3, seed: int = 0) -> list[BenchRecord]:
    """One sequential record and one FSS record per k for every stroke count."""
    counts = [int(n) for n in stroke_counts]
    k_values = [int(k) for k in k_values]
    if not counts or min(counts) < 1:
        raise ValueError("stroke counts must be >= 1")
    if repeats < 3:
        raise ValueError("repeats must be >= 3")
    records = []
    for n in counts:
        plan = [(SEQUENTIAL, 0)] + [(FSS, k) for k in k_values]
        try:
            alpha, color = random_frames(n, canvas, seed)
        except MemoryError as exc:
            records += [_failed(n, mode, k, canvas, repeats, exc) for mode, k in plan]
            continue
        for mode, k in plan:
            try:
                rec = time_mode(alpha, color, mode, k, repeats)
            except MemoryError as exc:
                rec = _failed(n, mode, k, canvas, repeats, exc)
            logger.info("N=%d %s k=%d total %.3f ms", n, mode, rec.k, rec.total_ms)
            records.append(rec)
        del alpha, color
    return records


def _failed(n, mode, k, canvas, repeats, exc) -> BenchRecord:
    logger.warning("N=%d %s k=%d failed: %s", n, mode, k, exc)
    nan = float("nan")
    return BenchRecord(n, mode, k, canvas, repeats, nan, nan, nan, error=f"out of memory: {exc}")


def write_csv(records: list[BenchRecord], path) -> None:
    with open(Path(path), "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(CSV_HEADER)
        for r in records:
            writer.writerow(r.row())


def read_csv(path) -> list[dict]:
    with open(Path(path), newline="") as f:
        return list(csv.DictReader(f))


def speedups(records: list[BenchRecord], k: int = 10, column: str = "total_ms") -> dict[int, float]:
    """Sequential time over FSS time per stroke count, for one k."""
    seq = {r.n_strokes: getattr(r, column) for r in records if r.mode == SEQUENTIAL}
    fss = {r.n_strokes: getattr(r, column) for r in records if r.mode == FSS and r.k == k}
    return {n: seq[n] / fss[n] for n in sorted(seq) if n in fss}
