"""Multistart search for algebraic solitons on the orbit slice, plus the a/c scan."""

import argparse
import json

from bachflow.soliton import solve_soliton


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--starts", type=int, default=400)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", action="store_true", help="dump the full report")
    args = ap.parse_args()

    rep = solve_soliton(starts=args.starts, seed=args.seed)
    if args.json:
        print(json.dumps(rep.to_json(), indent=2))
        return
    print(rep.table())
    scan = rep.slice_scan
    print(f"slice scan: min residual {scan['min_residual']:.2e} at a/c = {scan['argmin_a_over_c']:.4f}")
    print(f"            min away from a = c: {scan['min_residual_away_from_a_eq_c']:.4f}")


if __name__ == "__main__":
    main()
