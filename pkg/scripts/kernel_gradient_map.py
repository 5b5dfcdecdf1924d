"""Distribution of the kernel gradient constant C by distance band.

    python3 scripts/kernel_gradient_map.py --samples 10000
"""

import argparse

import numpy as np

from twoweight.acceptance import admissible_triples
from twoweight.transforms import kernel_gradient_check


def band(x, xp, y, spec):
    u, up = abs(y - x), abs(y - xp)
    if u < 2 * spec.alpha:
        return "near alpha"
    if max(u, up) <= spec.beta:
        return "below beta"
    return "beta band"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=19)
    args = ap.parse_args()
    by = {}
    for x, xp, y, spec in admissible_triples(np.random.default_rng(args.seed), args.samples):
        by.setdefault(band(x, xp, y, spec), []).append(kernel_gradient_check(x, xp, y, spec).C)
    for k, v in sorted(by.items()):
        v = np.array(v)
        print(f"{k:>11}: n={len(v):5d} min={v.min():.4g} max={v.max():.4g} "
              f"outside (0,1]={int(np.sum((v <= 0) | (v > 1 + 1e-12)))}")


if __name__ == "__main__":
    main()
