"""Vanishing diagnostics for the two compactness examples.

    python3 scripts/compactness_tables.py --out reports
"""

import argparse
import math
from pathlib import Path

from twoweight.cli import builtin_pair
from twoweight.constants import compactness_diagnostics, small_scale_half_poisson
from twoweight.report import write_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="reports")
    args = ap.parse_args()
    s, d0, _ = builtin_pair("compact-log", 0)
    lim = small_scale_half_poisson(s, d0, 0)
    print(f"half-Poisson limit {lim.limit:.12f} (fit spread {lim.limit_error:.1e}); "
          f"1/ln 3 = {1 / math.log(3):.12f}; raw at 1e-300: {lim.values[-1]:.6f}")
    for name, Lams, lams in [("compact-log", [1.0], [1e-2, 1e-3, 1e-4, 1e-6, 1e-8]),
                             ("compact-half-line", [10.0, 100.0], [1e-1, 1e-2, 1e-3])]:
        sigma, w, _ = builtin_pair(name, 0)
        tab = compactness_diagnostics(sigma, w, Lams, lams)
        print(name, "vanishing:", tab.vanishing)
        write_csv(tab.rows, Path(args.out) / f"{name}.csv")


if __name__ == "__main__":
    main()
