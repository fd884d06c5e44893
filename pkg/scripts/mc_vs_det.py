"""Monte Carlo avoidance frequency next to the finite-n determinant, over seeds.

    python scripts/mc_vs_det.py --seeds 0,1,2 --budget 20000
"""

import argparse

from pearcey.cli import write_csv
from pearcey.finite_n import FiniteNKernel, PathModel
from pearcey.fredholm import RegionFamily, discretize, gap_probability
from pearcey.simulator import McConfig, sample_avoidance


def _floats(text):
    return tuple(float(v) for v in text.split(","))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--starts", type=_floats, default=(-1.0, 0.0, 1.0))
    ap.add_argument("--ends", type=_floats, default=(-1.5, 0.0, 1.5))
    ap.add_argument("--time", type=float, default=0.5)
    ap.add_argument("--interval", type=_floats, default=(1.2, 2.0))
    ap.add_argument("--seeds", default="0,1,2")
    ap.add_argument("--budget", type=int, default=20_000)
    ap.add_argument("--steps", type=int, default=32)
    ap.add_argument("-o", "--output")
    args = ap.parse_args()

    model = PathModel(args.starts, args.ends, (args.time,))
    regions = RegionFamily([[args.interval]])
    det = gap_probability(discretize(FiniteNKernel(model, "general"), regions, 32))
    rows = []
    for seed in (int(s) for s in args.seeds.split(",")):
        cfg = McConfig(args.starts, args.ends, steps=args.steps, budget=args.budget, seed=seed)
        mc = sample_avoidance(cfg, regions, (args.time,))
        rows.append((seed, mc.estimate, mc.stderr, det, (mc.estimate - det) / mc.stderr))
    write_csv(("seed", "estimate", "stderr", "determinant", "z"), rows, args.output)


if __name__ == "__main__":
    main()
