"""Run the stacking benchmark and print the speedup table (same as `strokestack bench`)."""
import sys

from strokestack.cli import main

if __name__ == "__main__":
    sys.exit(main(["bench", *(sys.argv[1:] or ["--out", "bench.csv"])]))
