import numpy as np
import pytest

from strokestack.compositor import stack_sequential
from strokestack.losses import LossConfig
from strokestack.painter import (NonFiniteLossError, PaintConfig, init_strokes, optimize, paint_tiled,
                                 render_sequence, resize)
from strokestack.raster import HARD, RasterConfig, render_alpha
from strokestack.testkit import load_fixture

FAST = dict(n_strokes=16, steps=30)


def test_config_invariants():
    for bad in (dict(n_strokes=0), dict(steps=0), dict(learning_rate=0), dict(tiles=(0, 1)),
                dict(lr_schedule="step"), dict(final_tau=0)):
        with pytest.raises(ValueError):
            PaintConfig(**bad)


def test_single_stroke_init(photo):
    seq = init_strokes(photo, 1, "oil", seed=3)
    x, y = seq.strokes[0, :2]
    assert abs(x - 0.5) <= 0.25 and abs(y - 0.5) <= 0.25
    assert np.allclose(seq.colors[0], photo[int(y * 128), int(x * 128)])
    assert np.isclose(seq.strokes[0, 2], 1.0)


def test_init_is_seeded(photo):
    a = init_strokes(photo, 50, "oil", 1)
    assert np.array_equal(a.strokes, init_strokes(photo, 50, "oil", 1).strokes)
    assert not np.array_equal(a.strokes[:, :2], init_strokes(photo, 50, "oil", 2).strokes[:, :2])


def test_init_on_flat_target_copies_its_color(flat):
    for kind in ("oil", "bezier"):
        seq = init_strokes(flat, 256, kind, 0)
        assert np.all(seq.colors == flat[0, 0])
        assert not seq.violations()


def test_init_sizes(photo):
    seq = init_strokes(photo, 256, "oil", 0)
    assert np.allclose(seq.strokes[:, 2:4], 1.2 / 16)
    assert np.allclose(init_strokes(photo, 10000, "oil", 0).strokes[:, 2], 0.05)


def test_flat_target_converges(flat):
    res = optimize(flat, PaintConfig(n_strokes=16, steps=200))
    assert np.mean((res.canvas - flat) ** 2) <= 1e-3


def test_trace_and_projection(photo):
    seen = []
    res = optimize(photo, PaintConfig(**FAST), on_step=lambda s, loss, p: seen.append((p.min(), p.max())))
    assert len(seen) == 30 and all(lo >= 0 and hi <= 1 for lo, hi in seen)
    assert res.best_loss == res.loss_trace.min()
    best_so_far = np.minimum.accumulate(res.loss_trace)
    assert np.all(np.diff(best_so_far) <= 0)


def test_output_is_hard_sequential_render(photo):
    res = optimize(photo, PaintConfig(**FAST))
    cfg = RasterConfig(128, 128)
    alpha = render_alpha("oil", res.sequence.strokes, cfg, HARD)
    assert np.array_equal(res.canvas, stack_sequential(alpha, res.sequence.colors))


def test_deterministic(photo):
    cfg = PaintConfig(**FAST, seed=5)
    a, b = optimize(photo, cfg), optimize(photo, cfg)
    assert np.array_equal(a.sequence.strokes, b.sequence.strokes)
    assert np.array_equal(a.loss_trace, b.loss_trace)


def test_non_finite_loss_aborts(photo):
    bad = photo.copy()
    bad[3, 4, 1] = np.nan
    with pytest.raises(NonFiniteLossError) as err:
        optimize(bad, PaintConfig(**FAST))
    assert err.value.step == 0


def test_bezier_painting_improves(photo):
    res = optimize(photo, PaintConfig(n_strokes=32, steps=60, kind="bezier"))
    assert res.loss_trace[-1] < res.loss_trace[0]
    assert not res.sequence.violations()


def test_one_by_one_tiling_is_plain_optimize(photo):
    cfg = PaintConfig(**FAST)
    tiled = paint_tiled(photo, cfg)
    plain = optimize(photo, cfg)
    assert np.array_equal(tiled.sequence.strokes, plain.sequence.strokes)
    assert np.array_equal(tiled.canvas, plain.canvas)


def test_two_by_two_tiling_bounds():
    img = resize(np.random.default_rng(0).uniform(size=(32, 32, 3)), 256, 256)
    res = paint_tiled(img, PaintConfig(n_strokes=8, steps=5, tiles=(2, 2)))
    assert len(res.sequence) == 32
    assert res.sequence.strokes.min() >= 0 and res.sequence.strokes.max() <= 1
    assert res.canvas.shape == (256, 256, 3)
    # tile-major order: the first 8 strokes live in the top-left quadrant
    assert np.all(res.sequence.strokes[:8, :2] <= 0.5)


def test_ragged_tiling_crops_padding():
    img = np.random.default_rng(1).uniform(size=(100, 70, 3))
    res = paint_tiled(img, PaintConfig(n_strokes=8, steps=3, tiles=(3, 2)))
    assert res.canvas.shape == (100, 70, 3)
    assert len(res.sequence) == 48 and not res.sequence.violations()


def test_parallel_tiles_match_serial():
    img = np.random.default_rng(2).uniform(size=(64, 64, 3))
    cfg = PaintConfig(n_strokes=8, steps=5, tiles=(2, 1))
    serial = paint_tiled(img, cfg)
    parallel = paint_tiled(img, PaintConfig(n_strokes=8, steps=5, tiles=(2, 1), workers=2))
    assert np.array_equal(serial.sequence.strokes, parallel.sequence.strokes)


def test_render_scale_keeps_stroke_centroids(photo):
    res = optimize(photo, PaintConfig(n_strokes=16, steps=10))
    for p in res.sequence.strokes[:8]:
        lo = render_alpha("oil", p, RasterConfig(128, 128), HARD)[0]
        hi = render_alpha("oil", p, RasterConfig(512, 512), HARD)[0]
        if lo.sum() == 0:
            continue
        ys, xs = np.nonzero(lo)
        yh, xh = np.nonzero(hi)
        c_lo = np.array([ys.mean(), xs.mean()]) + 0.5
        c_hi = (np.array([yh.mean(), xh.mean()]) + 0.5) / 4
        assert np.abs(c_lo - c_hi).max() <= 0.5
    assert render_sequence(res.sequence, scale=4).shape == (512, 512, 3)


@pytest.mark.slow
def test_fss_and_sequential_training_reach_similar_loss():
    # default scale (256 strokes, 128x128, 500 steps); the sequential run takes several minutes
    img = load_fixture("photo")
    base = dict(loss=LossConfig(lambda_density=0))
    fss = optimize(img, PaintConfig(**base, use_fss=True))
    seq = optimize(img, PaintConfig(**base, use_fss=False))
    l_fss = np.mean((fss.canvas - img) ** 2)
    l_seq = np.mean((seq.canvas - img) ** 2)
    print(f"fss L2 {l_fss:.5f} sequential L2 {l_seq:.5f}")
    assert abs(l_fss - l_seq) <= 0.1 * l_seq
