"""Run the acceptance criteria and write a versioned report.

    python3 scripts/run_acceptance.py --out reports [--only 1 5 14]
"""

import argparse

from twoweight.acceptance import run_all
from twoweight.report import build_report, write_report


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="reports")
    ap.add_argument("--only", type=int, nargs="+")
    args = ap.parse_args()
    results = run_all(args.only)
    for r in results:
        print(r.line(), flush=True)
    rep = build_report("acceptance", {"only": args.only},
                       {"criteria": [r.__dict__ for r in results]},
                       {f"criterion_{r.number}": r.passed for r in results})
    print("written", write_report(rep, args.out))
    print(f"{sum(r.passed for r in results)}/{len(results)} criteria pass")


if __name__ == "__main__":
    main()
