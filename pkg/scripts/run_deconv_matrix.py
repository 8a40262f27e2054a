#!/usr/bin/env python3
"""Run the deconvolution sandwich over a body x parameter matrix.

Each row of the output records one (body, parameter set) verification: the
gate verdict, the hypothesis deviation, and the worst sandwich margins.
Example:

    python scripts/run_deconv_matrix.py --out matrix.csv
"""

import argparse
import csv
import sys

from projclt.deconvolution import BODIES_1D, DeconvParams, verify_sandwich

# (n, alpha, beta, epsilon, R): the first four pass the gate, the last two
# exercise the inadmissible paths (alpha too large / epsilon out of window).
DEFAULT_MATRIX = [
    (2, 1e-24, 0.5, 0.005, 3.0),
    (8, 1e-28, 0.5, 0.001, 10.0),
    (2, 1e-30, 1.0, 0.008, 4.0),
    (3, 1e-26, 0.5, 0.002, 5.0),
    (2, 1e-3, 0.5, 0.005, 3.0),
    (2, 1e-24, 0.5, 0.5, 3.0),
]


def parse_args(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--grid-points", type=int, default=2001)
    p.add_argument("--out", required=True, help="CSV destination")
    return p.parse_args(argv)


def main(argv=None):
    args = parse_args(argv)
    columns = ["body", "n", "alpha", "beta", "epsilon", "R", "status",
               "hypothesis_sup", "lower_margin_min", "upper_margin_min"]
    with open(args.out, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(columns)
        for n, alpha, beta, epsilon, radius in DEFAULT_MATRIX:
            params = DeconvParams(n=n, alpha=alpha, beta=beta, epsilon=epsilon,
                                  hypothesis_radius=radius)
            for body in BODIES_1D:
                report = verify_sandwich(body, params, grid_points=args.grid_points)
                writer.writerow([
                    body, n, repr(alpha), repr(beta), repr(epsilon), repr(radius),
                    report.status,
                    "" if report.hypothesis_sup is None else repr(report.hypothesis_sup),
                    "" if report.lower_margin_min is None else repr(report.lower_margin_min),
                    "" if report.upper_margin_min is None else repr(report.upper_margin_min),
                ])
                print(f"n={n:2d} alpha={alpha:8.1e} eps={epsilon:7.4g} {body:18s} {report.status}")
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
