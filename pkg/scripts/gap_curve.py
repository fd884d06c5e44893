"""Gap probability det(I - K chi_[-a,a]) as the half-width a grows.

    python scripts/gap_curve.py --tau 0 --max-width 3 --points 31 --svg gap.svg
"""

import argparse

import numpy as np

from pearcey.cli import plot_svg, write_csv
from pearcey.fredholm import RegionFamily, discretize, gap_probability
from pearcey.kernels import PearceyKernel


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--tau", type=float, default=0.0)
    ap.add_argument("--max-width", type=float, default=3.0)
    ap.add_argument("--points", type=int, default=31)
    ap.add_argument("--nodes", type=int, default=32)
    ap.add_argument("-o", "--output")
    ap.add_argument("--svg")
    args = ap.parse_args()

    kernel = PearceyKernel((args.tau,))
    widths = np.linspace(0.0, args.max_width, args.points)
    dets = []
    for a in widths:
        if a == 0:
            dets.append(1.0)
            continue
        dets.append(gap_probability(discretize(kernel, RegionFamily([[(-a, a)]]), args.nodes)))
    write_csv(("half_width", "det"), zip(widths, dets), args.output)
    if args.svg:
        plot_svg(args.svg, [(f"tau={args.tau}", widths, dets)], "half-width a", "P(no point in [-a, a])")


if __name__ == "__main__":
    main()
