"""Optimized Bell parameter versus gamma for qubits and qutrits.

Writes sweep_bell.csv per dimension under ``results/sweep_d{2,3}`` and prints
the maximum of each curve.

    python scripts/bell_sweep.py [--points 41] [--seed 0]
"""
import argparse
import csv
import os
import sys

from qudit_bell.cli import main as cli

LAMBDA = {2: 0.927, 3: 0.849}  # white-noise mixing values used for the scaled column


def run(d: int, points: int, seed: int, root: str) -> None:
    out = os.path.join(root, f"sweep_d{d}")
    code = cli(["sweep-bell", "--dim", str(d), "--gamma-grid", f"0:1:{points}",
                "--lambda", str(LAMBDA[d]), "--seed", str(seed), "--out", out])
    with open(os.path.join(out, "sweep_bell.csv")) as fh:
        fh.readline()
        rows = list(csv.DictReader(fh))
    best = max(rows, key=lambda r: float(r["i_full"]))
    print(f"d={d}: max I = {float(best['i_full']):.6f} at gamma = {float(best['gamma']):.3f} "
          f"(exit {code}); scaled max {max(float(r['i_scaled']) for r in rows):.4f}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=41)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()
    for d in (2, 3):
        run(d, args.points, args.seed, args.out)
    sys.exit(0)
