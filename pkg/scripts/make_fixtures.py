"""Regenerate the bundled test images under src/strokestack/data/.

Needs scikit-image for the sample photograph (NASA astronaut portrait,
public domain).
"""
from pathlib import Path

import numpy as np
from PIL import Image
from skimage import data

OUT = Path(__file__).resolve().parents[1] / "src" / "strokestack" / "data"


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    flat = np.empty((128, 128, 3), dtype=np.uint8)
    flat[:] = (51, 128, 179)
    Image.fromarray(flat).save(OUT / "flat.png")

    step = np.zeros((128, 128, 3), dtype=np.uint8)
    step[:, :64] = (30, 30, 30)
    step[:, 64:] = (220, 220, 220)
    Image.fromarray(step).save(OUT / "step.png")

    photo = Image.fromarray(data.astronaut())
    photo.save(OUT / "photo512.png")
    photo.resize((128, 128), Image.Resampling.BOX).save(OUT / "photo.png")


if __name__ == "__main__":
    main()
