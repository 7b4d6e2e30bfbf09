#!/usr/bin/env python3
"""Mass-radius curve along a family of liquid stars, with the fold marked.

For gamma < 2(d-1)/d the (R, M) curve develops extrema as rho0 grows; the
smallest eigenvalue changes sign in the same region.  The CSV juxtaposes the
geometry and the verdict so the correlation can be read off directly.
"""

import argparse
import sys

from lanemden import RunSpec, run_sweep


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--d", type=int, default=3)
    parser.add_argument("--gamma", type=float, default=1.25)
    parser.add_argument("--rho0-min", type=float, default=1.05)
    parser.add_argument("--rho0-max", type=float, default=1e4)
    parser.add_argument("--points", type=int, default=48)
    parser.add_argument("--mesh", type=int, default=1024)
    args = parser.parse_args()

    spec = RunSpec(
        d=args.d,
        gamma=args.gamma,
        rho0_min=args.rho0_min,
        rho0_max=args.rho0_max,
        points=args.points,
        mesh=args.mesh,
    )
    rows = run_sweep(spec)
    sys.stdout.write("rho0,R,M,mu_star,verdict,mass_slope\n")
    for i, row in enumerate(rows):
        if 0 < i < len(rows) - 1:
            slope = "+" if rows[i + 1].M_total > rows[i - 1].M_total else "-"
        else:
            slope = "."
        sys.stdout.write(
            f"{row.rho0:.17g},{row.R:.17g},{row.M_total:.17g},"
            f"{row.mu_star:.17g},{row.verdict},{slope}\n"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
