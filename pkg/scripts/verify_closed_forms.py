"""Compare the closed-form Bach operator with the generic curvature route on a seeded grid."""

import argparse

import numpy as np

from bachflow.bachforms import closed_form_bach
from bachflow.curvature import bach_oracle
from bachflow.nilalg import TriBracket
from bachflow.verification import sample_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--grid", type=int, default=10)
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()

    devs, traces = [], []
    for a, b, c in sample_grid(args.grid, args.seed):
        p = TriBracket(a, b, c)
        _, E = bach_oracle(p.embed())
        devs.append(np.abs(E - closed_form_bach(p).matrix()).max())
        traces.append(abs(np.trace(E)))
    devs = np.array(devs)
    print(f"points        {len(devs)}")
    print(f"max deviation {devs.max():.3e}")
    print(f"p99 deviation {np.quantile(devs, 0.99):.3e}")
    print(f"max |trace|   {max(traces):.3e}")


if __name__ == "__main__":
    main()
