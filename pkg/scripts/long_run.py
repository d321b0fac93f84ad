"""Favorite-downcrossing event counts over several long independent walks.

    python3 scripts/long_run.py --steps 100000000 --replicas 8
"""
import argparse

import numpy as np

from favdown.walk import count_f_events


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=10**8)
    ap.add_argument("--replicas", type=int, default=4)
    ap.add_argument("--seed", type=int, default=20240101)
    args = ap.parse_args()
    table = []
    for r in range(args.replicas):
        s = count_f_events(args.steps, args.seed, replica=r)
        table.append([s.f(k) for k in range(1, 6)])
        print(f"replica {r}: f(1..5) = {table[-1]}  d(x) = {s.d_counts}  violations = {s.prop12_violations}")
    t = np.array(table)
    print("mean f(1..5):", t.mean(axis=0).round(2).tolist())
    print("replicas with an f(4) event:", int((t[:, 3] > 0).sum()), "of", args.replicas)


if __name__ == "__main__":
    main()
