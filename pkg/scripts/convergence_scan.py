"""Sup-norm error of the scaled finite-n kernel against the limit, for a range of n.

    python scripts/convergence_scan.py --n 50,100,200,400,800 --svg scan.svg
"""

import argparse

from pearcey.cli import plot_svg, write_csv
from pearcey.finite_n import convergence_scan


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", default="50,100,200,400,800")
    ap.add_argument("--tau", type=float, default=0.0)
    ap.add_argument("--half-width", type=float, default=2.0)
    ap.add_argument("--grid", type=int, default=9)
    ap.add_argument("--dx", type=int, default=0)
    ap.add_argument("-o", "--output")
    ap.add_argument("--svg")
    args = ap.parse_args()

    ns = [int(v) for v in args.n.split(",")]
    box = (-args.half_width, args.half_width)
    scan = convergence_scan(ns, box, (args.tau,), dx=args.dx, grid_points=args.grid)
    write_csv(("n", "sup_error", "slope"), [(n, e, scan.slope) for n, e in zip(scan.n_values, scan.errors)],
              args.output)
    if args.svg:
        plot_svg(args.svg, [(f"dx={args.dx}", scan.n_values, scan.errors)], "n", "sup error", loglog=True)


if __name__ == "__main__":
    main()
