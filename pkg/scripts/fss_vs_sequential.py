"""Train the same painter with fast stroke stacking and with full sequential stacking."""
import argparse

from strokestack.losses import LossConfig
from strokestack.metrics import mse
from strokestack.painter import PaintConfig, optimize, resize
from strokestack.testkit import load_fixture


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--strokes", type=int, default=256)
    ap.add_argument("--size", type=int, default=128)
    ap.add_argument("--steps", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    img = resize(load_fixture("photo"), args.size, args.size)
    print("use_fss,l2,best_loss,wall_time")
    for use_fss in (True, False):
        cfg = PaintConfig(n_strokes=args.strokes, steps=args.steps, seed=args.seed, tile_size=args.size,
                          use_fss=use_fss, loss=LossConfig(lambda_density=0))
        res = optimize(img, cfg)
        print(f"{use_fss},{mse(res.canvas, img):.5f},{res.best_loss:.5f},{res.wall_time:.1f}", flush=True)


if __name__ == "__main__":
    main()
