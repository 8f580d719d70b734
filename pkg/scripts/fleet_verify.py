#!/usr/bin/env python3
"""Run composition-law and oracle checks over the random model fleet.

Prints one line per check and a summary count; exits 1 if anything fails.
"""

import argparse
import sys
import time

from dysonprop.reporting import summary_lines
from dysonprop.suite import fleet, fleet_verification


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=2026)
    parser.add_argument("--count", type=int, default=20,
                        help="number of fleet models (default 20)")
    parser.add_argument("--tuples", type=int, default=10,
                        help="random time tuples per composition law")
    parser.add_argument("--tol", type=float, default=1e-7)
    parser.add_argument("--series-tol", type=float, default=1e-10)
    parser.add_argument("--quiet", action="store_true",
                        help="print only the summary line")
    args = parser.parse_args(argv)

    models = fleet(seed=args.seed, count=args.count)
    start = time.perf_counter()
    reports = fleet_verification(
        models, seed=args.seed, tuples=args.tuples, tol=args.tol,
        series_tol=args.series_tol,
    )
    elapsed = time.perf_counter() - start

    if not args.quiet:
        for line in summary_lines(reports):
            print(line)
    failed = sum(not r.passed for r in reports)
    print(f"{len(reports)} checks over {len(models)} models, "
          f"{failed} failed, {elapsed:.1f}s")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
