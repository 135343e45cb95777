"""Check the sqrt(6/t) decay of the bracket norm over random initial data."""

import argparse
import math

import numpy as np

from bachflow.flow import integrate_reduced
from bachflow.nilalg import TriBracket
from bachflow.verification import sample_orbit


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=20)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--t-end", type=float, default=100.0)
    args = ap.parse_args()

    worst = -np.inf
    for a, b, c in sample_orbit(args.count, args.seed):
        tr = integrate_reduced(TriBracket(a, b, c), args.t_end)
        m = tr.t >= 1
        gap = float((tr.monitors["norm2"][m] - math.sqrt(6) / np.sqrt(tr.t[m])).max())
        worst = max(worst, gap)
        print(f"({a:.3f}, {b:+.3f}, {c:.3f})  final |mu|^2 {tr.monitors['norm2'][-1]:.4e}  max excess {gap:+.3e}")
    print(f"worst excess over sqrt(6/t): {worst:+.3e}")


if __name__ == "__main__":
    main()
