"""Compare 1x1 against RxC tiling on the bundled 512x512 photo at a fixed per-tile stroke count."""
import argparse

from strokestack.metrics import mse, ssim
from strokestack.painter import PaintConfig, paint_tiled
from strokestack.testkit import load_fixture


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--tiles", type=int, nargs="+", default=[1, 2, 4], help="square tilings to try")
    ap.add_argument("--strokes", type=int, default=256, help="strokes per tile")
    ap.add_argument("--steps", type=int, default=500)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    img = load_fixture("photo512")
    print("tiles,strokes_total,l2,ssim,wall_time")
    for t in args.tiles:
        res = paint_tiled(img, PaintConfig(n_strokes=args.strokes, steps=args.steps, tiles=(t, t), workers=args.workers))
        print(f"{t}x{t},{len(res.sequence)},{mse(res.canvas, img):.5f},{ssim(res.canvas, img):.4f},"
              f"{res.wall_time:.1f}", flush=True)


if __name__ == "__main__":
    main()
