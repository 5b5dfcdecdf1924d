"""Cantor example tables across depths: A2 and testing suprema, gap ratios,
divergence of the primed sums and the pivotal increments.

    python3 scripts/cantor_tables.py --depths 4 5 6 7 8 --out reports
"""

import argparse
from pathlib import Path

import numpy as np

from twoweight.cantor import example_report
from twoweight.report import write_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--depths", type=int, nargs="+", default=[4, 5, 6, 7, 8])
    ap.add_argument("--out", default="reports")
    args = ap.parse_args()
    rows = []
    for n in args.depths:
        r = example_report(n)
        row = {
            "depth": n,
            "a2_full_sup": r["a2_full_sup"],
            "a2_simple_sup": r["a2_simple_sup"],
            "gap_ratio": r["gap_simple_ratio"]["max"],
            "testing_forward": r["testing_forward"],
            "testing_dual": r["testing_dual"],
            "testing_dual_prime": r["testing_dual_prime"],
            "divergence_prime_last": r["divergence_prime"][-1] if r["divergence_prime"] else 0.0,
            "min_pivotal_increment": float(np.min(np.diff(r["pivotal_dual"])[1:]))
            if n >= 3 else float("nan"),
            "max_closeness": r["max_closeness"],
            "derivative_ratio_min": r["derivative_ratio_min"],
        }
        rows.append(row)
        print(" ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in row.items()),
              flush=True)
    print("written", write_csv(rows, Path(args.out) / "cantor_tables.csv"))


if __name__ == "__main__":
    main()
