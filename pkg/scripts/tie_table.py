"""Exact favorite-tie law at T_D(x, h) next to walk frequencies.

    python3 scripts/tie_table.py --h 2 --xs=-3,-2,-1,0,1,2 --replicas 200000
"""
import argparse

import numpy as np

from favdown.oracle import tie_distribution
from favdown.walk import sample_tie_outcomes


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--h", type=int, default=2)
    ap.add_argument("--xs", default="-3,-2,-1,0,1,2")
    ap.add_argument("--replicas", type=int, default=200_000)
    ap.add_argument("--seed", type=int, default=5)
    args = ap.parse_args()
    for x in (int(v) for v in args.xs.split(",")):
        d = tie_distribution(x, args.h, r_max=8)
        out = sample_tie_outcomes(x, args.h, args.replicas, args.seed)
        ok = out >= 0
        print(f"x={x:3d}  not favorite: exact {d.p_not_favorite:.5f} walk {np.mean(out[ok] == 0):.5f}")
        for r in range(1, 5):
            print(f"        r={r}: exact {d.ties[r]:.5f} walk {np.mean(out[ok] == r):.5f}")


if __name__ == "__main__":
    main()
