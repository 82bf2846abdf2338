import math
import time

import numpy as np
import pytest

from strokestack import bench
from strokestack.compositor import build_topk
from strokestack.grad import backward_fss, backward_sequential


def test_records_and_csv(tmp_path):
    recs = bench.run_benchmark([8, 16], [1, 5], canvas=32, repeats=3)
    assert [(r.n_strokes, r.mode, r.k) for r in recs] == [
        (8, "sequential", 0), (8, "fss", 1), (8, "fss", 5),
        (16, "sequential", 0), (16, "fss", 1), (16, "fss", 5)]
    assert all(r.forward_ms > 0 and r.backward_ms > 0 for r in recs)
    assert all(math.isclose(r.total_ms, r.forward_ms + r.backward_ms) for r in recs)
    bench.write_csv(recs, tmp_path / "b.csv")
    lines = (tmp_path / "b.csv").read_text().splitlines()
    assert lines[0] == ",".join(bench.CSV_HEADER)
    rows = bench.read_csv(tmp_path / "b.csv")
    assert len(rows) == 6
    for row in rows:
        for col in ("forward_ms", "backward_ms", "total_ms"):
            assert len(row[col].split(".")[1]) == 3


def test_same_seed_same_canvas():
    a = bench.run_benchmark([12], [3], canvas=24, repeats=3, seed=4)
    b = bench.run_benchmark([12], [3], canvas=24, repeats=3, seed=4)
    assert [r.digest for r in a] == [r.digest for r in b]


def test_argument_checks():
    with pytest.raises(ValueError):
        bench.run_benchmark([0], [10])
    with pytest.raises(ValueError):
        bench.run_benchmark([8], [10], repeats=2)


def test_out_of_memory_is_reported_per_record(monkeypatch):
    real = bench.time_mode

    def flaky(alpha, color, mode, k, repeats):
        if alpha.shape[0] == 16 and mode == "fss":
            raise MemoryError("simulated")
        return real(alpha, color, mode, k, repeats)

    monkeypatch.setattr(bench, "time_mode", flaky)
    recs = bench.run_benchmark([8, 16, 4], [2], canvas=16, repeats=3)
    assert len(recs) == 6
    failed = [r for r in recs if r.error]
    assert len(failed) == 1 and failed[0].n_strokes == 16 and math.isnan(failed[0].total_ms)


def test_speedups_recompute_from_columns():
    recs = bench.run_benchmark([8], [2], canvas=16, repeats=3)
    s = bench.speedups(recs, 2)
    assert s[8] == pytest.approx(recs[0].total_ms / recs[1].total_ms)


def _median_time(fn, repeats=5):
    fn()
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


@pytest.mark.slow
def test_backward_cost_model():
    d = np.ones((128, 128, 3))
    fss, seq = {}, {}
    for n in (256, 1024):
        alpha, color = bench.random_frames(n, 128, 0)
        sel = build_topk(alpha, color, 10)
        fss[n] = _median_time(lambda: backward_fss(alpha, color, sel, d))
        seq[n] = _median_time(lambda: backward_sequential(alpha, color, d), 3)
    print(f"backward_fss {fss}  backward_sequential {seq}")
    assert fss[1024] < 2 * fss[256]
    assert seq[1024] >= 4 * seq[256] * 0.9
