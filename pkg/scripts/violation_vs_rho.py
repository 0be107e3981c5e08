"""Violation bound at fixed d versus utilization, for several mean service times."""
import argparse
import csv
from pathlib import Path

import numpy as np

from peakaoi.checks import frange, violation_vs_rho
from peakaoi.plot import write_svg


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--d", type=float, default=3.0)
    ap.add_argument("--mu", type=float, nargs="+", default=[0.5, 1.0, 2.0])
    ap.add_argument("--out", type=Path, default=Path("results"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    grid = frange(0.01, 0.99, 0.01)

    for template in ("mm1", "dm1"):
        series = {}
        path = args.out / f"violation_vs_rho_{template}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["mu", "rho", "bound"])
            for mu in args.mu:
                vals = violation_vs_rho(template, mu, args.d, grid)
                w.writerows([mu, r, f"{v:.17g}"] for r, v in zip(grid, vals))
                series[f"mu={mu:g}"] = (grid, vals)
                print(f"{template} mu={mu:g}: argmin rho = {grid[int(np.argmin(vals))]:.2f}")
        write_svg(args.out / f"violation_vs_rho_{template}.svg", series, "rho",
                  f"Pr{{P > {args.d:g}}} bound", title=template)


if __name__ == "__main__":
    main()
