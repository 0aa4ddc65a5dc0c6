"""LOCAL-DOWNHILL on a line fed at v1: f(k), its gaps, and k^2 - k + 1 side by side."""
import argparse
import math

from aqtree.adversary import constant_at_node
from aqtree.analysis import DownhillSequenceLog, downhill_metrics
from aqtree.engine import simulate
from aqtree.policies import LocalDownhill
from aqtree.topology import build_line


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rounds", type=int, default=871)
    ap.add_argument("-n", type=int, default=None, help="line length (default: enough for the horizon)")
    args = ap.parse_args()
    n = args.n or math.isqrt(args.rounds) + 5
    log = DownhillSequenceLog()
    simulate(build_line(n, 1), LocalDownhill(), constant_at_node(0, 1), args.rounds, [log], record=False)
    rep = downhill_metrics(log.states)
    print(f"status: {rep.status} ({len(rep.problems)} problems)")
    print(f"{'k':>3} {'f(k)':>6} {'k^2-k+1':>8} {'Delta_k':>8}")
    for k in sorted(rep.f):
        print(f"{k:>3} {rep.f[k]:>6} {k * k - k + 1:>8} {rep.delta.get(k, ''):>8}")


if __name__ == "__main__":
    main()
