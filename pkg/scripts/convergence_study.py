#!/usr/bin/env python3
"""Tabulate weighted-norm convergence of the truncated series.

For the stock photon/electron model (or a random graded model with
--random DIM) the partial sums phi_n are compared against the deepest
computed one in the (grade+1)^(alpha/2)-weighted sup norm, next to the
certified tail bounds.  Writes CSV to stdout with --csv.
"""

import argparse
import dataclasses
import sys

from dysonprop.qed import build_model, default_toy_config
from dysonprop.reporting import convergence_rows
from dysonprop.suite import appendix_convergence, random_graded_model


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--alphas", type=float, nargs="+", default=[0.0, 1.0, 2.0])
    parser.add_argument("--n-max", type=int, default=6)
    parser.add_argument("--t-end", type=float, default=1.0)
    parser.add_argument("--coupling", type=float, default=None)
    parser.add_argument("--random", type=int, metavar="DIM", default=None,
                        help="use a random graded model of this dimension "
                             "instead of the stock one")
    parser.add_argument("--seed", type=int, default=6)
    parser.add_argument("--csv", action="store_true")
    args = parser.parse_args(argv)

    if args.random is not None:
        model = random_graded_model(seed=args.seed, dim=args.random)
        h_free, h_int = model.h_free, model.h_int
        xi = model.space.dim * [0.0]
        xi[0] = 1.0
        label = model.name
    else:
        config = default_toy_config()
        if args.coupling is not None:
            config = dataclasses.replace(config, coupling=args.coupling)
        model = build_model(config)
        h_free, h_int = model.h_free, model.h_int
        xi = model.basis.vacuum()
        label = f"stock model, coupling {config.coupling}"

    table = appendix_convergence(
        h_free, h_int, xi, alphas=tuple(args.alphas), n_max=args.n_max,
        t_end=args.t_end,
    )
    header, rows = convergence_rows(table)
    if args.csv:
        print(",".join(header))
        for row in rows:
            print(",".join(f"{v}" for v in row))
        return 0

    print(label)
    print("  ".join(f"{h:>14}" for h in header))
    for row in rows:
        cells = [f"{row[0]:>14}"] + [f"{v:>14.6e}" for v in row[1:]]
        print("  ".join(cells))
    onsets = [table.onset(a) for a in range(len(table.alphas))]
    ok, worst = table.dominated()
    print(f"onsets per alpha: {onsets}; worst norm/tail ratio {worst:.4f} "
          f"({'dominated' if ok else 'NOT dominated'})")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
