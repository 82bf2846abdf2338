"""Paint the bundled photo, save the painting, the stroke file and a 4x re-render."""
import argparse
from pathlib import Path

from strokestack import cli
from strokestack.testkit import load_fixture


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="demo_out")
    ap.add_argument("--steps", default="500")
    args = ap.parse_args()

    out = Path(args.outdir)
    out.mkdir(exist_ok=True)
    cli.write_image(load_fixture("photo"), out / "target.png")
    cli.main(["paint", str(out / "target.png"), "--steps", args.steps,
              "--out", str(out / "painting.png"), "--save-strokes", str(out / "strokes.json")])
    cli.main(["render", str(out / "strokes.json"), "--scale", "4", "--out", str(out / "painting_x4.png")])


if __name__ == "__main__":
    main()
