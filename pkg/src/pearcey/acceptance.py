"""The eleven acceptance checks as plain functions.

Each check returns a :class:`CheckResult`; ``run_checks`` runs a selection and
is what both the test suite and ``pearcey selftest`` call.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .finite_n import (
    FiniteNKernel,
    PathModel,
    calibrate_constant,
    convergence_scan,
    heat_p,
    trace_integral,
)
from .fredholm import RegionFamily, discretize, gap_probability, log_det_gradient
from .higher_order import higher_order_kernel, singularity_roots
from .kernels import PearceyKernel, h_entry, integrable_entry, limit_from_canonical
from .pde_system import closure_identities, differential_residuals
from .simulator import McConfig, sample_avoidance
from .special_functions import PearceyParams, ode_residual_phi, ode_residual_psi

__all__ = ["CheckResult", "CHECKS", "run_checks"]


@dataclass
class CheckResult:
    number: int
    title: str
    passed: bool
    metrics: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        shown = ", ".join(f"{k}={_fmt(v)}" for k, v in self.metrics.items())
        return f"[{status}] criterion {self.number:2d} {self.title} ({self.seconds:.1f}s): {shown}"


def _fmt(v):
    if isinstance(v, bool):
        return str(v)
    if isinstance(v, float):
        return f"{v:.3g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(u) for u in v) + "]"
    return str(v)


def ode_identities() -> tuple[bool, dict]:
    xs = np.linspace(-2.0, 2.0, 5)
    worst = 0.0
    for tau in np.linspace(-1.0, 1.0, 5):
        p = PearceyParams(float(tau))
        worst = max(worst, float(np.max(ode_residual_phi(xs, p))), float(np.max(ode_residual_psi(xs, p))))
    p2 = PearceyParams(0.2, 2, "limit")
    second = max(float(np.max(ode_residual_phi(xs, p2.with_tau(t)))) for t in (-0.5, 0.2, 0.5))
    second = max(second, max(float(np.max(ode_residual_psi(xs, p2.with_tau(t)))) for t in (-0.5, 0.2, 0.5)))
    return worst < 1e-8 and second < 1e-7, {"order1_max": worst, "order2_max": second}


def integrable_form() -> tuple[bool, dict]:
    rng = np.random.default_rng(11)
    pts = [(0.3, -0.2, 0.0), (1.0, 1.0, 1.0), (0.0, 0.0, 0.0), (0.5, 0.5 + 5e-5, -0.4)]
    pts += [(*rng.uniform(-2, 2, 2), rng.uniform(-1, 1)) for _ in range(6)]
    worst = 0.0
    for x, y, tau in pts:
        direct = h_entry(PearceyKernel((float(tau),)), 0, 0, float(x), float(y))
        worst = max(worst, abs(direct - integrable_entry(float(x), float(y), float(tau))))
    return worst < 1e-8, {"points": len(pts), "max_diff": worst}


def first_commutator() -> tuple[bool, dict]:
    K = PearceyKernel((-0.3, 0.4))
    rng = np.random.default_rng(12)
    worst = 0.0
    for _ in range(10):
        i, j = (int(v) for v in rng.integers(0, 2, 2))
        x, y = rng.uniform(-2, 2, 2)
        lhs = K.k(i, j, [x], [y], 1, 0) + K.k(i, j, [x], [y], 0, 1)
        worst = max(worst, abs(float(lhs[0, 0]) + float(K.phi(i, x)[0] * K.psi(j, y)[0])))
    return worst < 1e-7, {"points": 10, "max_residual": worst}


def finite_n_forms() -> tuple[bool, dict]:
    rng = np.random.default_rng(13)
    cross = 0.0
    for n in (2, 4, 6):
        b = np.sort(rng.uniform(-2, 2, n))
        while np.min(np.diff(b)) < 0.2:
            b = np.sort(rng.uniform(-2, 2, n))
        model = PathModel.zero_start(b, (0.3, 0.6))
        ks, kc = FiniteNKernel(model, "sum"), FiniteNKernel(model, "contour")
        x, y = rng.uniform(-1.5, 1.5, 3), rng.uniform(-1.5, 1.5, 3)
        for k in range(2):
            for l in range(2):
                cross = max(cross, float(np.max(np.abs(ks.h(k, l, x, y) - kc.h(k, l, x, y)))))
    bridge = FiniteNKernel(PathModel((0.0,), (1.0,), (0.5,)), "general")
    xs = np.linspace(-2, 3, 11)
    dens = heat_p(0.0, xs, 0.5) * heat_p(xs, 1.0, 0.5) / heat_p(0.0, 1.0, 1.0)
    bridge_err = float(np.max(np.abs(np.diag(bridge.k(0, 0, xs, xs)) - dens)))
    model = PathModel.zero_start((-1.3, 0.2, 1.1), (0.35, 0.7))
    const = calibrate_constant(model)
    calibrated = FiniteNKernel(model, constant=const)
    traces = [trace_integral(calibrated, k) for k in range(model.m)]
    trace_err = max(abs(t - model.n) for t in traces)
    ok = cross < 1e-8 and bridge_err < 1e-12 and trace_err < 1e-8
    return ok, {"sum_vs_contour": cross, "bridge": bridge_err, "trace_err": trace_err,
                "calibrated_c": const.c, "c_minus_sqrt_pi": const.c - math.sqrt(math.pi)}


def scaling_limit() -> tuple[bool, dict]:
    ns = (50, 200, 800)
    plain = convergence_scan(ns)
    deriv = convergence_scan(ns, dx=1)
    ok = all(s.strictly_decreasing and -0.8 <= s.slope <= -0.3 for s in (plain, deriv))
    return ok, {"errors": list(plain.errors), "slope": plain.slope,
                "dx_errors": list(deriv.errors), "dx_slope": deriv.slope}


def fredholm_layer() -> tuple[bool, dict]:
    K = PearceyKernel((0.0,))
    empty = gap_probability(discretize(K, RegionFamily.empty(1)))
    delta = 1e-3
    small = gap_probability(discretize(K, RegionFamily.single(-delta, delta), 8))
    g = np.polynomial.legendre.leggauss(16)
    nodes, w = delta * g[0], delta * g[1]
    trace = float(np.sum(w * np.diag(K.k(0, 0, nodes, nodes))))
    small_err = abs(small - (1 - trace))
    families = [
        [RegionFamily.single(-r, r) for r in (0.25, 0.5, 1.0, 2.0)],
        [RegionFamily.single(0.0, r) for r in (0.5, 1.0, 1.5)],
        [RegionFamily((((-1.0, -0.5),),)), RegionFamily((((-1.0, -0.5), (0.5, 1.0)),)),
         RegionFamily((((-1.5, 1.5),),))],
    ]
    K2 = PearceyKernel((-0.3, 0.4))
    families.append([RegionFamily((((-0.5, 0.5),), ())), RegionFamily((((-0.5, 0.5),), ((0.0, 0.5),))),
                     RegionFamily((((-1.0, 0.5),), ((0.0, 1.0),)))])
    families.append([RegionFamily(((), ((-0.2, 0.2),))), RegionFamily((((1.0, 1.2),), ((-0.4, 0.4),))),
                     RegionFamily((((0.5, 1.5),), ((-1.0, 1.0),)))])
    nested = True
    for fam in families:
        kern = K if fam[0].m == 1 else K2
        dets = [gap_probability(discretize(kern, r)) for r in fam]
        nested &= all(b <= a for a, b in zip(dets, dets[1:]))
    region = RegionFamily.single(-1.0, 1.0)
    doubling = abs(gap_probability(discretize(K, region, 32)) - gap_probability(discretize(K, region, 64)))
    ok = empty == 1.0 and small_err < 10 * delta**2 and nested and doubling < 1e-8
    return ok, {"empty_det": empty, "small_set_err": small_err, "nested_families": len(families),
                "nesting_holds": nested, "node_doubling": doubling}


def _gradient_error(kernel, regions, h=1e-4):
    grad = log_det_gradient(discretize(kernel, regions))
    worst = 0.0
    for index, ep in enumerate(regions.endpoints()):
        up = gap_probability(discretize(kernel, regions.with_endpoint(index, ep.xi + h)), False)
        down = gap_probability(discretize(kernel, regions.with_endpoint(index, ep.xi - h)), False)
        fd = (math.log(up) - math.log(down)) / (2 * h)
        worst = max(worst, abs(fd - grad[index]))
    return worst


def gradient_identity() -> tuple[bool, dict]:
    one = _gradient_error(PearceyKernel((0.0,)), RegionFamily.single(-1.0, 1.0))
    two = _gradient_error(PearceyKernel((-0.3, 0.4)), RegionFamily((((-1.0, 0.5),), ((0.0, 1.0),))))
    return max(one, two) < 1e-5, {"m1": one, "m2": two}


PDE_CONFIGS = (
    ((0.0,), (((-1.0, 1.0),),)),
    ((-0.3, 0.4), (((-1.0, 0.5),), ((0.0, 1.0),))),
)


def pde_system_check() -> tuple[bool, dict]:
    ok = True
    metrics = {}
    for label, (taus, ivs) in zip(("m1", "m2"), PDE_CONFIGS):
        rep = differential_residuals(PearceyKernel(taus), RegionFamily(ivs), h=1e-3)
        ok &= rep.max_central < 5e-5 and rep.max_richardson < 5e-5
        metrics[f"{label}_central"] = rep.max_central
        metrics[f"{label}_richardson"] = rep.max_richardson
    return ok, metrics


CLOSURE_TOL = {"first": 1e-7, "cubic": 1e-5, "third": 1e-5, "known_combination": 1e-5,
               "second_left": 1e-6, "second_right": 1e-6, "tau_commutator": 1e-5, "q_triple": 1e-6}


def closure_check() -> tuple[bool, dict]:
    ok = True
    metrics = {}
    for label, (taus, ivs) in zip(("m1", "m2"), PDE_CONFIGS):
        rep = closure_identities(PearceyKernel(taus), RegionFamily(ivs))
        for key in ("first", "cubic", "third", "known_combination"):
            metrics[f"{label}_{key}"] = rep[key]
        ok &= all(rep[k] < tol for k, tol in CLOSURE_TOL.items())
    return ok, metrics


def monte_carlo() -> tuple[bool, dict]:
    starts, ends, times = (-0.2, 0.2), (-1.0, 1.0), (0.5,)
    regions = RegionFamily.single(-0.1, 0.1)
    det = gap_probability(discretize(FiniteNKernel(PathModel(starts, ends, times), "general"), regions))
    mc = sample_avoidance(McConfig(starts, ends, budget=100_000, seed=2024), regions, times)
    z = (mc.estimate - det) / mc.stderr
    return abs(z) < 3, {"determinant": det, "estimate": mc.estimate, "stderr": mc.stderr, "z": z,
                        "accepted": mc.accepted}


def roots_check() -> tuple[bool, dict]:
    worst = max(float(np.max(singularity_roots(R).power_sum_residuals())) for R in range(1, 7))
    r2 = np.asarray(singularity_roots(2).roots)
    root_err = float(np.max(np.abs(np.sort_complex(r2) - np.array([0.5 - 0.5j, 0.5 + 0.5j]))))
    taus = (-0.2, 0.3)
    g = np.linspace(-1.0, 1.0, 5)
    general = higher_order_kernel(1, taus)
    pearcey = PearceyKernel(taus, 1, "limit")
    identical = all(np.array_equal(general.k(i, j, g, g), pearcey.k(i, j, g, g)) for i in range(2) for j in range(2))
    lam = 2**0.25 / 4
    canon = PearceyKernel(tuple(8 * t / math.sqrt(2) for t in taus))
    conv = max(abs(limit_from_canonical(h_entry(canon, 0, 1, x / lam, y / lam)) - h_entry(pearcey, 0, 1, x, y))
               for x, y in ((0.3, -0.2), (-0.5, 0.4)))
    ok = worst < 1e-12 and root_err < 1e-12 and identical and conv < 1e-9
    return ok, {"power_sum_max": worst, "r2_root_err": root_err, "r1_identical": identical,
                "r1_vs_canonical": conv}


CHECKS = {
    1: ("ODE identities", ode_identities),
    2: ("integrable form", integrable_form),
    3: ("first commutator", first_commutator),
    4: ("finite-n forms", finite_n_forms),
    5: ("scaling-limit convergence", scaling_limit),
    6: ("Fredholm layer", fredholm_layer),
    7: ("log-det gradient", gradient_identity),
    8: ("PDE system", pde_system_check),
    9: ("closure identities", closure_check),
    10: ("Monte Carlo vs determinant", monte_carlo),
    11: ("higher-order roots", roots_check),
}


def run_check(number: int) -> CheckResult:
    title, fn = CHECKS[number]
    start = time.perf_counter()
    passed, metrics = fn()
    return CheckResult(number, title, bool(passed), metrics, time.perf_counter() - start)


def run_checks(numbers=None, echo=None) -> list[CheckResult]:
    out = []
    for number in numbers or sorted(CHECKS):
        res = run_check(number)
        if echo is not None:
            echo(res.line())
        out.append(res)
    return out
