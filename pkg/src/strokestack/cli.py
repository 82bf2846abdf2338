"""Command-line entry point: ``strokestack {paint,render,metrics,bench}``.

Exit codes: 0 success, 1 usage error, 2 I/O failure, 3 non-finite loss.
Every run prints its resolved settings and results as ``key=value`` lines.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from . import bench
from .compositor import BinarizeConfig
from .core import StrokeFileError, load_sequence, save_sequence
from .losses import LossConfig
from .metrics import report
from .painter import NonFiniteLossError, PaintConfig, paint_tiled, render_sequence
from .raster import RasterConfig, load_texture

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; the CLI contract reserves 2 for I/O
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def read_image(path) -> np.ndarray:
    with Image.open(Path(path)) as im:
        return np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0


def to_uint8(img: np.ndarray) -> np.ndarray:
    # np.rint rounds halves to even
    return np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)


def write_image(img: np.ndarray, path) -> None:
    Image.fromarray(to_uint8(img), mode="RGB").save(Path(path), format="PNG")


def _emit(pairs: dict, prefix: str = "") -> None:
    for key, value in pairs.items():
        print(f"{prefix}{key}={value}")


def _tiles(text: str) -> tuple[int, int]:
    try:
        rows, cols = (int(t) for t in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"tiles must look like RxC, got {text!r}") from None
    if rows < 1 or cols < 1:
        raise argparse.ArgumentTypeError("tile counts must be >= 1")
    return rows, cols


def _int_list(text: str) -> list[int]:
    try:
        values = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("values must be positive integers")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="strokestack", description="Stroke-based painting with fast stroke stacking.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("paint", help="fit strokes to an image")
    p.add_argument("input", help="target image (PNG or any format Pillow reads)")
    p.add_argument("--strokes", type=int, default=256, help="strokes per tile")
    p.add_argument("--stroke-type", choices=("oil", "bezier"), default="oil")
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--lr", type=float, default=0.02)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fss", action=argparse.BooleanOptionalAction, default=True,
                   help="use fast stroke stacking (default) or full sequential stacking")
    p.add_argument("--k", type=int, default=10, help="strokes kept per pixel by fast stacking")
    p.add_argument("--lambda-density", type=float, default=0.1)
    p.add_argument("--tiles", type=_tiles, default=(1, 1), help="RxC tiling, e.g. 4x4")
    p.add_argument("--workers", type=int, default=1, help="tiles painted in parallel")
    p.add_argument("--texture", help="grayscale brush texture for oil strokes")
    p.add_argument("--out", required=True, help="output PNG")
    p.add_argument("--save-strokes", help="write the stroke sequence as JSON")

    r = sub.add_parser("render", help="render a saved stroke file")
    r.add_argument("strokes", help="stroke-sequence JSON")
    r.add_argument("--out", required=True)
    r.add_argument("--scale", type=int, default=1, help="integer resolution multiplier")
    r.add_argument("--texture")

    m = sub.add_parser("metrics", help="compare two images")
    m.add_argument("a")
    m.add_argument("b")

    b = sub.add_parser("bench", help="time sequential vs. fast stacking")
    b.add_argument("--stroke-counts", type=_int_list, default=[64, 256, 1024])
    b.add_argument("--k", type=_int_list, default=[10], help="comma-separated k values")
    b.add_argument("--canvas", type=int, default=128)
    b.add_argument("--repeats", type=int, default=3)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", required=True, help="CSV path")
    return parser


def _paint_config(args, texture) -> PaintConfig:
    try:
        loss = LossConfig(lambda_density=args.lambda_density, bin=BinarizeConfig())
        if not 1 <= args.k <= 10:
            raise ValueError("k must be in 1..10")
        return PaintConfig(n_strokes=args.strokes, steps=args.steps, learning_rate=args.lr,
                           seed=args.seed, use_fss=args.fss, k=args.k, loss=loss,
                           kind=args.stroke_type, tiles=args.tiles, texture=texture,
                           workers=args.workers)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_paint(args) -> int:
    texture = load_texture(args.texture) if args.texture else None
    target = read_image(args.input)
    cfg = _paint_config(args, texture)
    _emit({"command": "paint", "input": args.input, **cfg.describe()})
    result = paint_tiled(target, cfg)
    write_image(result.canvas, args.out)
    if args.save_strokes:
        save_sequence(result.sequence, args.save_strokes)
    metrics = report(to_uint8(result.canvas) / 255.0, target)
    _emit({"out": args.out, "strokes_file": args.save_strokes or "", "n_strokes_total": len(result.sequence),
           "best_loss": f"{result.best_loss:.6f}", "l2": f"{metrics.l2:.6f}",
           "ssim": f"{metrics.ssim:.6f}", "wall_time": f"{result.wall_time:.2f}"})
    return EXIT_OK


def cmd_render(args) -> int:
    if args.scale < 1:
        raise UsageError("--scale must be >= 1")
    texture = load_texture(args.texture) if args.texture else None
    seq = load_sequence(args.strokes)
    cfg = RasterConfig(texture=texture)
    _emit({"command": "render", "strokes": args.strokes, "stroke_type": seq.kind.value,
           "n_strokes": len(seq), "canvas": f"{seq.canvas_h}x{seq.canvas_w}", "scale": args.scale,
           "texture": texture is not None})
    write_image(render_sequence(seq, cfg, args.scale), args.out)
    _emit({"out": args.out})
    return EXIT_OK


def cmd_metrics(args) -> int:
    a, b = read_image(args.a), read_image(args.b)
    if a.shape != b.shape:
        raise UsageError(f"image sizes differ: {a.shape[:2]} vs {b.shape[:2]}")
    try:
        rep = report(a, b)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    for line in rep.lines():
        print(line)
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.repeats < 3:
        raise UsageError("--repeats must be >= 3")
    if max(args.k) > 10:
        raise UsageError("k must be in 1..10")
    _emit({"command": "bench", "stroke_counts": ",".join(map(str, args.stroke_counts)),
           "k": ",".join(map(str, args.k)), "canvas": args.canvas, "repeats": args.repeats,
           "seed": args.seed, "out": args.out})
    records = bench.run_benchmark(args.stroke_counts, args.k, args.canvas, args.repeats, args.seed)
    bench.write_csv(records, args.out)
    for k in args.k:
        for n, s in bench.speedups(records, k).items():
            print(f"speedup_n{n}_k{k}={s:.2f}")
    return EXIT_OK


COMMANDS = {"paint": cmd_paint, "render": cmd_render, "metrics": cmd_metrics, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NonFiniteLossError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, UnidentifiedImageError, StrokeFileError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
