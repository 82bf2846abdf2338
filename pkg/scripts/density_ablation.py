"""Paint the bundled photo with and without the density loss over several seeds.

Prints hard-output L2 and the mean composed stroke area on the top-decile
density pixels for each (lambda, seed) pair, then the per-lambda means.
"""
import argparse

import numpy as np

from strokestack.losses import LossConfig, density_map
from strokestack.metrics import mse
from strokestack.painter import PaintConfig, area_image, optimize
from strokestack.testkit import load_fixture


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lambdas", type=float, nargs="+", default=[0.0, 0.1])
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--steps", type=int, default=500)
    args = ap.parse_args()

    photo = load_fixture("photo")
    dens = density_map(photo)
    top = dens >= np.quantile(dens, 0.9)
    print("lambda,seed,l2,top_decile_area")
    summary = {}
    for lam in args.lambdas:
        for seed in range(args.seeds):
            res = optimize(photo, PaintConfig(seed=seed, steps=args.steps, loss=LossConfig(lambda_density=lam)))
            l2, area = mse(res.canvas, photo), float(area_image(res.sequence)[top].mean())
            summary.setdefault(lam, []).append((l2, area))
            print(f"{lam},{seed},{l2:.5f},{area:.5f}", flush=True)
    for lam, rows in summary.items():
        l2, area = np.mean(rows, axis=0)
        print(f"mean lambda={lam}: l2={l2:.5f} top_decile_area={area:.5f}")


if __name__ == "__main__":
    main()
