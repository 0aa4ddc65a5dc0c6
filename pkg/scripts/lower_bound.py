"""Adaptive max-load adversary: rounds until the burst and the load it forces, per (policy, c, sigma)."""
from aqtree.acceptance import max_load_runs


def main():
    print(f"{'policy':8} {'c':>2} {'sigma':>5} {'burst':>5} {'peak':>4} {'sigma+2c':>8} compliant")
    for r in max_load_runs():
        print(f"{r['policy']:8} {r['c']:>2} {r['sigma']:>5} {r['burst_round']:>5} {r['peak']:>4} "
              f"{r['target']:>8} {r['compliant']}")


if __name__ == "__main__":
    main()
