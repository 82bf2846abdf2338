import json
from importlib import resources

import numpy as np
import pytest
from PIL import Image

from strokestack import cli
from strokestack.core import StrokeSequence, save_sequence
from strokestack.metrics import mse, ssim
from strokestack.testkit import load_fixture

DATA = resources.files("strokestack") / "data"
PHOTO = str(DATA / "photo.png")
PHOTO512 = str(DATA / "photo512.png")


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def kv(text):
    return dict(line.split("=", 1) for line in text.splitlines() if "=" in line)


def test_paint_then_render_replays_exactly(tmp_path, capsys):
    out, strokes = tmp_path / "o.png", tmp_path / "s.json"
    code, text, _ = run(capsys, "paint", PHOTO, "--strokes", 32, "--steps", 20, "--out", out,
                        "--save-strokes", strokes)
    assert code == 0 and out.exists() and strokes.exists()
    summary = kv(text)
    for key in ("strokes", "steps", "lr", "seed", "fss", "k", "lambda_density", "tiles", "l2", "ssim",
                "wall_time", "softness_tau", "final_tau"):
        assert key in summary
    code, _, _ = run(capsys, "render", strokes, "--out", tmp_path / "r.png")
    assert code == 0
    assert (tmp_path / "r.png").read_bytes() == out.read_bytes()


def test_same_seed_same_stroke_file(tmp_path, capsys):
    for name in ("a", "b"):
        run(capsys, "paint", PHOTO, "--strokes", 16, "--steps", 10, "--seed", 7,
            "--out", tmp_path / f"{name}.png", "--save-strokes", tmp_path / f"{name}.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_missing_input(tmp_path, capsys):
    code, _, err = run(capsys, "paint", tmp_path / "nope.png", "--out", tmp_path / "o.png")
    assert code == 2 and "nope.png" in err


@pytest.mark.parametrize("argv", [
    ["paint"],
    ["paint", PHOTO, "--out", "x.png", "--tiles", "4by4"],
    ["paint", PHOTO, "--out", "x.png", "--k", "11"],
    ["paint", PHOTO, "--out", "x.png", "--strokes", "0"],
    ["frobnicate"],
    [],
])
def test_bad_flags_exit_1(argv, capsys):
    assert cli.main(argv) == 1


def test_render_empty_file_is_black(tmp_path, capsys):
    save_sequence(StrokeSequence("oil", np.zeros((0, 8)), 16, 24), tmp_path / "e.json")
    code, _, _ = run(capsys, "render", tmp_path / "e.json", "--out", tmp_path / "e.png")
    img = np.asarray(Image.open(tmp_path / "e.png"))
    assert code == 0 and img.shape == (16, 24, 3) and not img.any()


def test_render_bad_file(tmp_path, capsys):
    (tmp_path / "bad.json").write_text("[1, 2")
    assert run(capsys, "render", tmp_path / "bad.json", "--out", tmp_path / "x.png")[0] == 2


def test_render_scale(tmp_path, capsys):
    save_sequence(StrokeSequence("oil", [[0.3, 0.6, 0.2, 0.3, 0.1, 1, 0, 0]], 32, 32), tmp_path / "s.json")
    run(capsys, "render", tmp_path / "s.json", "--out", tmp_path / "x1.png")
    run(capsys, "render", tmp_path / "s.json", "--out", tmp_path / "x4.png", "--scale", 4)
    lo = np.asarray(Image.open(tmp_path / "x1.png"))[..., 0] > 0
    hi = np.asarray(Image.open(tmp_path / "x4.png"))[..., 0] > 0
    assert hi.shape == (128, 128)
    c_lo = np.array(np.nonzero(lo)).mean(axis=1) + 0.5
    c_hi = (np.array(np.nonzero(hi)).mean(axis=1) + 0.5) / 4
    assert np.abs(c_lo - c_hi).max() <= 0.5


def test_metrics_identical(capsys):
    code, text, _ = run(capsys, "metrics", PHOTO, PHOTO)
    assert code == 0
    assert text.splitlines() == ["l2=0.000000", "ssim=1.000000"]


def test_metrics_match_library(tmp_path, capsys):
    img = load_fixture("photo")
    noisy = np.clip(img + np.random.default_rng(0).normal(scale=0.1, size=img.shape), 0, 1)
    Image.fromarray(cli.to_uint8(noisy)).save(tmp_path / "n.png")
    noisy8 = cli.to_uint8(noisy) / 255.0
    _, text, _ = run(capsys, "metrics", PHOTO, tmp_path / "n.png")
    vals = kv(text)
    assert abs(float(vals["l2"]) - mse(img, noisy8)) <= 1e-6
    assert abs(float(vals["ssim"]) - ssim(img, noisy8)) <= 1e-6
    # the printed six decimals are the only rounding between the two
    assert vals["l2"] == f"{mse(img, noisy8):.6f}" and vals["ssim"] == f"{ssim(img, noisy8):.6f}"


def test_metrics_size_mismatch(capsys):
    assert run(capsys, "metrics", PHOTO, PHOTO512)[0] == 1


def test_metrics_missing_file(tmp_path, capsys):
    assert run(capsys, "metrics", PHOTO, tmp_path / "none.png")[0] == 2


def test_bench_rows(tmp_path, capsys):
    code, text, _ = run(capsys, "bench", "--stroke-counts", "8,16", "--canvas", 32, "--out", tmp_path / "b.csv")
    assert code == 0
    rows = (tmp_path / "b.csv").read_text().splitlines()
    assert len(rows) == 5
    parsed = [dict(zip(rows[0].split(","), r.split(","))) for r in rows[1:]]
    for n in ("8", "16"):
        seq = next(float(r["total_ms"]) for r in parsed if r["n_strokes"] == n and r["mode"] == "sequential")
        fss = next(float(r["total_ms"]) for r in parsed if r["n_strokes"] == n and r["mode"] == "fss")
        assert abs(float(kv(text)[f"speedup_n{n}_k10"]) - seq / fss) <= 0.01 * seq / fss + 0.01


def test_bench_bad_counts(tmp_path, capsys):
    assert run(capsys, "bench", "--stroke-counts", "64,abc", "--out", tmp_path / "b.csv")[0] == 1


def test_bench_unwritable(tmp_path, capsys):
    assert run(capsys, "bench", "--stroke-counts", "4", "--canvas", 16,
               "--out", tmp_path / "missing" / "b.csv")[0] == 2


def test_non_finite_exit_code(tmp_path, capsys, monkeypatch):
    from strokestack.painter import NonFiniteLossError

    def boom(target, cfg):
        raise NonFiniteLossError(3, "parameter [0, 1] = nan")

    monkeypatch.setattr(cli, "paint_tiled", boom)
    code, _, err = run(capsys, "paint", PHOTO, "--out", tmp_path / "o.png")
    assert code == 3 and "step 3" in err


def test_tiled_paint_stroke_file(tmp_path, capsys):
    code, _, _ = run(capsys, "paint", PHOTO512, "--tiles", "4x4", "--strokes", 8, "--steps", 2,
                     "--out", tmp_path / "o.png", "--save-strokes", tmp_path / "s.json")
    doc = json.loads((tmp_path / "s.json").read_text())
    strokes = np.array(doc["strokes"])
    assert code == 0 and strokes.shape == (16 * 8, 8)
    assert strokes.min() >= 0 and strokes.max() <= 1
    assert doc["canvas"] == {"h": 512, "w": 512}
