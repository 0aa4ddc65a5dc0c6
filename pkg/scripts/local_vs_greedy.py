"""Peak loads of every policy under the two-phase pattern and under one packet a round at v1."""
import argparse

from aqtree.adversary import constant_at_node, two_phase
from aqtree.engine import simulate
from aqtree.policies import POLICIES
from aqtree.topology import build_line


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[8, 20, 50])
    args = ap.parse_args()
    names = [p for p in POLICIES if p != "fie-inverted"]
    print(f"{'pattern':14} {'n':>4} " + " ".join(f"{p:>15}" for p in names))
    for n in args.sizes:
        for label, pat, rounds in (("two_phase", lambda: two_phase(n), 2 * n), ("constant(v1)", lambda: constant_at_node(0), 4 * n)):
            peaks = [simulate(build_line(n, 1), POLICIES[p](), pat(), rounds, record=False).global_peak for p in names]
            print(f"{label:14} {n:>4} " + " ".join(f"{x:>15}" for x in peaks))


if __name__ == "__main__":
    main()
