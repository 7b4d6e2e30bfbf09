#!/usr/bin/env python3
"""Reproduce the three-regime stability table over (gamma, rho0) for d = 3.

Emits one CSV block per gamma with columns rho0,R,M,mu_star,verdict, showing
stability everywhere for gamma >= 4/3 and, below 4/3, the transition from
stable (near rho0 = 1) to unstable (large rho0).
"""

import argparse
import sys

from lanemden import RunSpec, run_sweep, write_sweep_csv
from lanemden.config import stability_threshold


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--d", type=int, default=3)
    parser.add_argument("--points", type=int, default=12)
    parser.add_argument("--mesh", type=int, default=1024)
    parser.add_argument("--rho0-max", type=float, default=1e6)
    args = parser.parse_args()

    threshold = stability_threshold(args.d)
    gammas = [1.05, 1.2, 1.25, 1.3, threshold, min(threshold + 0.1, 2.0), 1.6]
    for gamma in gammas:
        spec = RunSpec(
            d=args.d,
            gamma=gamma,
            rho0_min=1.01,
            rho0_max=args.rho0_max,
            points=args.points,
            mesh=args.mesh,
        )
        rows = run_sweep(spec)
        regime = "always stable" if gamma >= threshold else "density-dependent"
        sys.stdout.write(f"# gamma={gamma:.6g} ({regime})\n")
        write_sweep_csv(rows, sys.stdout)
        sys.stdout.write("\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
