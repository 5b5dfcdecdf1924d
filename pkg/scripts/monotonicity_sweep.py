"""Monotonicity ratios as the separation d grows: the sup over the smooth
truncation ladder and the untruncated pairing, both against the Poisson bound.

    python3 scripts/monotonicity_sweep.py
"""

import argparse

from twoweight.constants import monotonicity_check
from twoweight.measure import Interval, Weight


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ds", type=float, nargs="+", default=[16, 32, 64, 128, 256, 512, 1024])
    args = ap.parse_args()
    J = Interval(0.0, 1.0)
    w = Weight.from_atoms([0.2, 0.7], [1.0, 1.0])
    print(f"{'d':>8} {'sup ratio':>10} {'canonical':>10}")
    for d in args.ds:
        mu = Weight.from_atoms([d], [1.0])
        r = monotonicity_check(J, Interval(-d / 2 + 1, d / 2 + 1), mu, w, [1.0])
        print(f"{d:8g} {r.ratio:10.5f} {r.canonical / r.rhs:10.5f}")


if __name__ == "__main__":
    main()
