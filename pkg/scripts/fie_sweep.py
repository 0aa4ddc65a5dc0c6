"""Randomized FIE sweep: peak load against sigma + 2c per setting, written as CSV.

    python scripts/fie_sweep.py --patterns 50 --rounds 10000 --out sweep.csv
"""
import argparse
import csv
import sys

from aqtree.acceptance import fie_sweep
from aqtree.policies import DEFAULT_PRIORITY, INVERTED_PRIORITY


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--patterns", type=int, default=10)
    ap.add_argument("--rounds", type=int, default=2000)
    ap.add_argument("--inverted", action="store_true", help="use the inverted path priority (mutant)")
    ap.add_argument("--out", help="CSV path (default: stdout)")
    args = ap.parse_args()
    rows = fie_sweep(args.patterns, args.rounds, INVERTED_PRIORITY if args.inverted else DEFAULT_PRIORITY)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
