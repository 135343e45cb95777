"""Run the norm-preserving flow from seeded starts and report the distance to (sqrt2, 0, sqrt2)."""

import argparse
import math

from bachflow.nilalg import TriBracket
from bachflow.verification import sample_orbit
from bachflow.flow import integrate_normalized


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=10)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--t-end", type=float, default=500.0)
    args = ap.parse_args()

    s2 = math.sqrt(2)
    print(f"{'a0':>9} {'b0':>9} {'c0':>9} {'distance':>10} {'tau_end':>12}")
    for a, b, c in sample_orbit(args.count, args.seed, radius=2.0):
        tr = integrate_normalized(TriBracket(a, b, c), args.t_end)
        fa, fb, fc = tr.states[-1, :3]
        dist = abs(fa - s2) + abs(fb) + abs(fc - s2)
        print(f"{a:9.4f} {b:9.4f} {c:9.4f} {dist:10.2e} {tr.monitors['tau'][-1]:12.4e}")


if __name__ == "__main__":
    main()
