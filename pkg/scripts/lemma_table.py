"""Exact lemma quantities on a dyadic h grid, with log-log slopes.

    python3 scripts/lemma_table.py --h-max 1024 --csv lemmas.csv
"""
import argparse

from favdown import io as fio
from favdown.cli import lemma_table
from favdown.stats import loglog_slope


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--h-max", type=int, default=1024)
    ap.add_argument("--csv")
    args = ap.parse_args()
    grid = [2 ** k for k in range(2, args.h_max.bit_length()) if 2 ** k <= args.h_max]
    rows, info = lemma_table(grid)
    table = info["table"]
    names = [n for n in table if n != "optional_stopping_gap"]
    print("h".rjust(6) + "".join(n[:18].rjust(20) for n in names))
    for h in grid:
        print(str(h).rjust(6) + "".join(f"{table[n][h]:20.6g}" for n in names))
    print("slope".rjust(6) + "".join(f"{loglog_slope(table[n]).slope:20.4f}" for n in names))
    print(f"max mass defect {info['max_mass_defect']:.2e}")
    if args.csv:
        fio.write_lemma_csv(rows, args.csv)


if __name__ == "__main__":
    main()
