"""Command-line front end.

Every subcommand writes CSV (to ``--output`` or stdout) with a fixed header
and floats printed to 17 significant digits.  Exit status: 0 on success,
1 when ``selftest`` finds a failing check, 2 on invalid input, 3 on a
numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .contours import QuadSettings
from .errors import NumericalError, PearceyError, ValidationError
from .finite_n import FiniteNKernel, PathModel, convergence_scan
from .fredholm import RegionFamily, discretize, gap_probability
from .higher_order import MAX_ORDER, singularity_roots
from .kernels import PearceyKernel
from .pde_system import EQUATIONS, closure_identities, differential_residuals
from .simulator import McConfig, sample_avoidance
from .special_functions import PearceyParams, phi, psi

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors already; keep it, but route
    through one place so the message format is consistent."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(_usage_exit(f"{self.prog}: error: {message}"))


def _usage_exit(message: str) -> int:
    print(message, file=sys.stderr)
    return EXIT_USAGE


# ---------------------------------------------------------------- parsing helpers

def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _grid(text: str) -> np.ndarray:
    """``lo,hi,count`` or a plain list of values."""
    vals = _floats(text)
    if len(vals) == 3 and float(vals[2]).is_integer() and vals[2] >= 2 and vals[1] > vals[0]:
        return np.linspace(vals[0], vals[1], int(vals[2]))
    if not vals:
        raise argparse.ArgumentTypeError("empty grid")
    return np.asarray(vals)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(header, rows, path=None) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    if path is None:
        sys.stdout.write(buf.getvalue())
    else:
        Path(path).write_text(buf.getvalue())


def plot_svg(path, series, xlabel, ylabel, loglog=False):
    try:
        import matplotlib
    except ImportError:
        raise ValidationError("SVG output needs matplotlib (pip install 'artifact[plot]')") from None
    matplotlib.use("Agg")
    from matplotlib import pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for label, xs, ys in series:
        ax.plot(xs, ys, marker="o" if loglog else None, label=label)
    if loglog:
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


# ---------------------------------------------------------------- scenarios

def scenario_schema() -> dict:
    return json.loads(resources.files("pearcey").joinpath("scenario.schema.json").read_text())


@dataclass(frozen=True)
class Scenario:
    kernel: object
    regions: RegionFamily | None
    model: PathModel | None
    nodes_per_interval: int
    pde: dict
    simulation: dict
    csv_path: str | None


def load_scenario(path) -> Scenario:
    """Read, schema-check and construct every object a scenario names."""
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ValidationError(f"cannot read scenario {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"scenario {path} is not valid JSON: {exc}") from None
    try:
        jsonschema.validate(raw, scenario_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ValidationError(f"scenario {path}: {where}: {exc.message}") from None

    quad = QuadSettings(**raw["quadrature"]) if "quadrature" in raw else None
    model = None
    if "model" in raw:
        entry = raw["model"]
        starts = entry.get("starts", [0.0] * len(entry["ends"]))
        model = PathModel(starts, entry["ends"], entry["times"])
    if "kernel" in raw:
        entry = raw["kernel"]
        kernel = PearceyKernel(entry["taus"], entry.get("order_R", 1), entry.get("normalization", "auto"), quad)
    elif model is not None:
        kernel = FiniteNKernel(model, raw["model"].get("method", "auto"))
    else:
        kernel = PearceyKernel((0.0,), 1, "auto", quad)

    regions = None
    if "regions" in raw:
        rows = raw["regions"]
        regions = RegionFamily.empty(kernel.m) if rows == [] else RegionFamily(rows)
        if regions.m != kernel.m:
            raise ValidationError(f"regions give {regions.m} time slices but the kernel has {kernel.m}")
    out = raw.get("output", {})
    return Scenario(kernel, regions, model, raw.get("nodes_per_interval", 32), raw.get("pde", {}),
                    raw.get("simulation", {}), out.get("csv"))


def _output(args, scenario: Scenario | None = None):
    if getattr(args, "output", None):
        return args.output
    return scenario.csv_path if scenario else None


# ---------------------------------------------------------------- subcommands

def cmd_fn(args) -> int:
    params = PearceyParams(args.tau, args.order, args.norm)
    x = args.x
    rows = zip(x, phi(x, params, args.deriv), psi(x, params, args.deriv))
    write_csv(("x", "tau", "deriv", "phi", "psi"),
              [(xv, args.tau, args.deriv, f, g) for xv, f, g in rows], _output(args))
    if args.svg:
        plot_svg(args.svg, [("phi", x, phi(x, params, args.deriv)), ("psi", x, psi(x, params, args.deriv))],
                   "x", f"derivative {args.deriv}")
    return EXIT_OK


def cmd_kernel(args) -> int:
    kernel = PearceyKernel(args.taus, args.order, args.norm)
    part = {"k": kernel.k, "h": kernel.h, "e": kernel.e}[args.part]
    x = args.x
    y = args.y if args.y is not None else x
    if (args.i is None) != (args.j is None):
        raise ValidationError("--i and --j go together")
    blocks = [(args.i, args.j)] if args.i is not None else [(i, j) for i in range(kernel.m) for j in range(kernel.m)]
    rows = []
    for i, j in blocks:
        vals = part(i, j, x, y, args.dx, args.dy)
        rows.extend((i, j, xv, yv, vals[a, b]) for a, xv in enumerate(x) for b, yv in enumerate(y))
    write_csv(("i", "j", "x", "y", "value"), rows, _output(args))
    return EXIT_OK


def cmd_gap(args) -> int:
    sc = load_scenario(args.scenario)
    if sc.regions is None:
        raise ValidationError("the scenario has no regions")
    nodes = args.nodes or sc.nodes_per_interval
    if sc.regions.is_empty:
        det = 1.0
        size = 0
    else:
        system = discretize(sc.kernel, sc.regions, nodes)
        det = gap_probability(system)
        size = system.size
    write_csv(("m", "intervals", "nodes_per_interval", "size", "det"),
              [(sc.regions.m, sum(len(r) for r in sc.regions.intervals), nodes, size, det)], _output(args, sc))
    return EXIT_OK


def cmd_converge(args) -> int:
    if any(n < 1 for n in args.n):
        raise ValidationError("n values must be positive")
    if len(args.box) != 2:
        raise ValidationError("--box takes lo,hi")
    scans = [convergence_scan(args.n, tuple(args.box), (args.tau,), dx=0, grid_points=args.grid)]
    if args.derivative:
        scans.append(convergence_scan(args.n, tuple(args.box), (args.tau,), dx=1, grid_points=args.grid))
    rows = [(n, s.dx, s.dy, err, s.slope, s.strictly_decreasing)
            for s in scans for n, err in zip(s.n_values, s.errors)]
    write_csv(("n", "dx", "dy", "sup_error", "slope", "decreasing"), rows, _output(args))
    if args.svg:
        plot_svg(args.svg, [(f"dx={s.dx}", s.n_values, s.errors) for s in scans], "n", "sup error", loglog=True)
    return EXIT_OK


def cmd_pde_check(args) -> int:
    sc = load_scenario(args.scenario)
    if sc.regions is None or sc.regions.is_empty:
        raise ValidationError("the PDE check needs at least one interval")
    h = args.h if args.h is not None else sc.pde.get("h", 1e-3)
    rep = differential_residuals(sc.kernel, sc.regions, h, sc.nodes_per_interval, sc.pde.get("richardson", True))
    rows = [("differential", eq, rep.central[eq], rep.richardson.get(eq, float("nan"))) for eq in EQUATIONS]
    ids = closure_identities(sc.kernel, sc.regions, nodes_per_interval=sc.nodes_per_interval)
    rows += [("closure", name, val, float("nan")) for name, val in ids.residuals.items()]
    write_csv(("kind", "name", "residual", "richardson"), rows, _output(args, sc))
    return EXIT_OK


def cmd_roots(args) -> int:
    if not 1 <= args.max_order <= MAX_ORDER:
        raise ValidationError(f"--max-order must lie in [1, {MAX_ORDER}]")
    rows = []
    for R in range(1, args.max_order + 1):
        system = singularity_roots(R)
        worst = float(np.max(system.power_sum_residuals()))
        rows.extend((R, k, z.real, z.imag, worst) for k, z in enumerate(system.roots))
    write_csv(("R", "index", "root_re", "root_im", "power_sum_residual"), rows, _output(args))
    return EXIT_OK


def cmd_simulate(args) -> int:
    sc = load_scenario(args.scenario)
    if sc.model is None or sc.regions is None:
        raise ValidationError("simulate needs 'model' and 'regions'")
    sim = dict(sc.simulation)
    if args.budget is not None:
        sim["budget"] = args.budget
    if args.seed is not None:
        sim["seed"] = args.seed
    config = McConfig(sc.model.starts, sc.model.ends, **sim)
    mc = sample_avoidance(config, sc.regions, sc.model.times, threads=args.threads)
    kernel = FiniteNKernel(sc.model, "general")
    det = 1.0 if sc.regions.is_empty else gap_probability(discretize(kernel, sc.regions, sc.nodes_per_interval))
    z = (mc.estimate - det) / mc.stderr if mc.stderr > 0 else float("nan")
    write_csv(("estimate", "stderr", "determinant", "z", "accepted", "proposals", "acceptance_rate", "steps", "seed"),
              [(mc.estimate, mc.stderr, det, z, mc.accepted, mc.proposals, mc.acceptance_rate, mc.steps,
                config.seed)], _output(args, sc))
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .acceptance import CHECKS, run_checks

    numbers = args.only or sorted(CHECKS)
    unknown = [n for n in numbers if n not in CHECKS]
    if unknown:
        raise ValidationError(f"unknown check numbers {unknown}")
    results = run_checks(numbers, echo=lambda line: print(line, file=sys.stderr))
    # timings go to stderr only, so the CSV stays reproducible
    write_csv(("criterion", "title", "passed"), [(r.number, r.title, r.passed) for r in results], _output(args))
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED


# ---------------------------------------------------------------- wiring

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pearcey", description="Extended Pearcey kernel toolkit.")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: $PEARCEY_THREADS, else CPU count)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_text, output=True):
        p = sub.add_parser(name, help=help_text, description=help_text)
        if output:
            p.add_argument("-o", "--output", help="CSV path (default: stdout, or the scenario's output.csv)")
        p.set_defaults(func=fn)
        return p

    p = add("fn", cmd_fn, "Tabulate phi and psi.")
    p.add_argument("--x", type=_grid, default=np.linspace(-3, 3, 13), help="lo,hi,count or a value list")
    p.add_argument("--tau", type=float, default=0.0)
    p.add_argument("--order", type=int, default=1)
    p.add_argument("--norm", choices=("auto", "canonical", "limit"), default="auto")
    p.add_argument("--deriv", type=int, default=0)
    p.add_argument("--svg")

    p = add("kernel", cmd_kernel, "Evaluate kernel blocks on a grid.")
    p.add_argument("--taus", type=_floats, default=(0.0,))
    p.add_argument("--order", type=int, default=1)
    p.add_argument("--norm", choices=("auto", "canonical", "limit"), default="auto")
    p.add_argument("--x", type=_grid, default=np.linspace(-2, 2, 5))
    p.add_argument("--y", type=_grid, default=None)
    p.add_argument("--i", type=int)
    p.add_argument("--j", type=int)
    p.add_argument("--dx", type=int, default=0, choices=range(4))
    p.add_argument("--dy", type=int, default=0, choices=range(4))
    p.add_argument("--part", choices=("k", "h", "e"), default="k")

    p = add("gap", cmd_gap, "Gap probability det(I - K chi) for a scenario.")
    p.add_argument("scenario")
    p.add_argument("--nodes", type=int, default=None, help="Gauss nodes per interval")

    p = add("converge", cmd_converge, "Sup-norm distance between the scaled finite-n and limiting kernels.")
    p.add_argument("--n", type=_ints, default=(50, 200, 800))
    p.add_argument("--box", type=_floats, default=(-2.0, 2.0))
    p.add_argument("--tau", type=float, default=0.0)
    p.add_argument("--grid", type=int, default=9)
    p.add_argument("--derivative", action="store_true", help="also scan the x-derivative")
    p.add_argument("--svg")

    p = add("pde-check", cmd_pde_check, "Residuals of the endpoint differential system and closure identities.")
    p.add_argument("scenario")
    p.add_argument("--h", type=float, default=None)

    p = add("roots", cmd_roots, "Roots and power-sum residuals of the order-R root polynomials.")
    p.add_argument("--max-order", type=int, default=6)

    p = add("simulate", cmd_simulate, "Monte Carlo avoidance probability next to the determinant.")
    p.add_argument("scenario")
    p.add_argument("--budget", type=int)
    p.add_argument("--seed", type=int)

    p = add("selftest", cmd_selftest, "Run the acceptance checks.")
    p.add_argument("--only", type=_ints, default=None, help="comma-separated check numbers")
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValidationError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except PearceyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
