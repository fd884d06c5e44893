"""Finite-n nonintersecting Brownian bridges and their scaling to the Pearcey kernel.

n paths start at a_i at time 0 and end at b_j at time 1; the transition
density is the heat kernel P(x, y, sigma) = (pi sigma)^(-1/2) exp(-(x - y)^2 / sigma),
so each path diffuses with variance sigma / 2 over a time step sigma.  The
extended kernel is K = H - E with E_kl = P(x, y, tau_l - tau_k) for k < l.

Three evaluations of H are provided:

* ``general``: distinct starts, H = c P_x(b) A^{-1} P_y(a) with A_ij = exp(-(a_i - b_j)^2)
* ``sum``: all starts at zero, Lagrange coefficients times derivatives in the start point
* ``contour``: all starts at zero, a double contour integral with the product
  prod_r (s - b_r)/(t - b_r)

The scaled kernel near the cusp (2n paths, ends at +-sqrt(n), times
1/2 + tau / sqrt(n), space scaled by n^(-1/4)) converges to the Pearcey kernel
in its ``limit`` normalization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.polynomial import hermite

from .contours import QuadSettings, t_rule, s_rule
from .errors import ConditioningError, ConvergenceError, DegeneracyError, ValidationError
from .kernels import PearceyKernel, gaussian_block
from .special_functions import DEFAULT_QUAD

__all__ = [
    "heat_p",
    "PathModel",
    "NormalizationConstant",
    "DEFAULT_CONSTANT",
    "calibrate_constant",
    "FiniteNKernel",
    "h_general_a",
    "h_zero_start",
    "trace_integral",
    "karlin_mcgregor_density",
    "kernel_block_determinant",
    "ScaledKernel",
    "scaled_kernel",
    "ScanResult",
    "convergence_scan",
]

MAX_SUM_N = 12
# the finite-n t-integrand oscillates at moderate |t| once n is large, so the
# scaled kernel uses more, less strongly graded panels than the limit kernel
SCALED_QUAD = QuadSettings(panels=16, nodes_per_panel=32, grading=0.75)


def heat_p(x, y, sigma):
    """P(x, y, sigma) = (pi sigma)^(-1/2) exp(-(x - y)^2 / sigma), broadcasting."""
    if np.any(np.asarray(sigma) <= 0):
        raise ValidationError("sigma must be positive")
    x, y, sigma = (np.asarray(v, float) for v in (x, y, sigma))
    out = np.exp(-((x - y) ** 2) / sigma) / np.sqrt(np.pi * sigma)
    return float(out) if out.ndim == 0 else out


def _heat_grid(x, y, sigma, dx=0, dy=0):
    # P has variance sigma / 2
    return gaussian_block(np.atleast_1d(x), np.atleast_1d(y), sigma, 0.5, dx, dy)


@dataclass(frozen=True)
class PathModel:
    """n bridges from ``starts`` to ``ends`` observed at ``times`` in (0, 1)."""

    starts: tuple[float, ...]
    ends: tuple[float, ...]
    times: tuple[float, ...]

    def __post_init__(self):
        a = tuple(float(v) for v in np.atleast_1d(self.starts))
        b = tuple(float(v) for v in np.atleast_1d(self.ends))
        t = tuple(float(v) for v in np.atleast_1d(self.times))
        if len(a) != len(b) or not b:
            raise ValidationError("need the same positive number of starts and ends")
        if len(set(b)) != len(b):
            raise ValidationError("end points must be pairwise distinct")
        if not t or any(not 0 < v < 1 for v in t):
            raise ValidationError("times must lie in (0, 1)")
        if any(v <= u for u, v in zip(t, t[1:])):
            raise ValidationError("times must be strictly increasing")
        object.__setattr__(self, "starts", a)
        object.__setattr__(self, "ends", b)
        object.__setattr__(self, "times", t)

    @classmethod
    def zero_start(cls, ends, times) -> "PathModel":
        ends = tuple(np.atleast_1d(ends))
        return cls((0.0,) * len(ends), ends, times)

    @property
    def n(self) -> int:
        return len(self.ends)

    @property
    def m(self) -> int:
        return len(self.times)

    @property
    def sigmas(self) -> tuple[float, ...]:
        """Gaps tau_{k+1} - tau_k with tau_0 = 0 and tau_{m+1} = 1."""
        t = (0.0,) + self.times + (1.0,)
        return tuple(v - u for u, v in zip(t, t[1:]))

    @property
    def all_zero_start(self) -> bool:
        return all(v == 0.0 for v in self.starts)


@dataclass(frozen=True)
class NormalizationConstant:
    """The constant c multiplying every H formula.

    The biorthogonality pairing of heat kernels gives c = sqrt(pi); the
    value can be re-derived from the trace identity with
    :func:`calibrate_constant`.
    """

    c: float = math.sqrt(math.pi)

    def __post_init__(self):
        if not self.c > 0:
            raise ValidationError("normalization constant must be positive")


DEFAULT_CONSTANT = NormalizationConstant()


def _lagrange_coefficients(b) -> np.ndarray:
    """L[i, j] = coefficient of s^j in prod_{r != i} (s - b_r)/(b_i - b_r)."""
    b = np.asarray(b, float)
    n = len(b)
    L = np.empty((n, n))
    for i in range(n):
        others = np.delete(b, i)
        # np.poly gives highest degree first
        L[i] = np.atleast_1d(np.poly(others))[::-1] / np.prod(b[i] - others)
    return L


def _start_derivatives(y, tau, n):
    """d[j, :] = 2^-j d^j/da^j [exp(a^2) P(y, a, tau)] at a = 0 for j < n."""
    y = np.atleast_1d(np.asarray(y, float))
    alpha = 1.0 - 1.0 / tau
    beta = 2.0 * y / tau
    g = np.empty((n, len(y)))
    g[0] = 1.0
    if n > 1:
        g[1] = beta
    for j in range(1, n - 1):
        g[j + 1] = beta * g[j] + 2 * alpha * j * g[j - 1]
    base = np.exp(-(y**2) / tau) / math.sqrt(math.pi * tau)
    return g * base * 2.0 ** -np.arange(n)[:, None]


@dataclass(frozen=True)
class FiniteNKernel:
    """Extended kernel of a :class:`PathModel` with grid evaluation.

    ``method`` is ``general`` (distinct starts), ``sum`` or ``contour``
    (all starts at zero), or ``auto``.
    """

    model: PathModel
    method: str = "auto"
    constant: NormalizationConstant = DEFAULT_CONSTANT
    contour_points: int = 64

    def __post_init__(self):
        if self.method not in ("auto", "general", "sum", "contour"):
            raise ValidationError(f"unknown method {self.method!r}")
        if self.resolved_method in ("sum", "contour") and not self.model.all_zero_start:
            raise ValidationError(f"method {self.method!r} needs all starts at zero")
        if self.resolved_method == "sum" and self.model.n > MAX_SUM_N:
            raise ConditioningError(
                f"the Lagrange sum is ill-conditioned for n = {self.model.n} > {MAX_SUM_N}; use method='contour'"
            )

    @property
    def resolved_method(self) -> str:
        if self.method != "auto":
            return self.method
        return "sum" if self.model.all_zero_start else "general"

    @property
    def m(self) -> int:
        return self.model.m

    @property
    def taus(self):
        return self.model.times

    @cached_property
    def _start_solve(self):
        a = np.asarray(self.model.starts)
        b = np.asarray(self.model.ends)
        A = np.exp(-np.subtract.outer(a, b) ** 2)
        cond = np.linalg.cond(A)
        if not np.isfinite(cond) or cond > 1e13:
            raise DegeneracyError(
                f"start matrix is numerically singular (cond {cond:.2e}); coincident starts need h_zero_start",
                residual=float(cond),
            )
        return A

    def h(self, k, l, x, y, dx=0, dy=0):
        self._check(k, l)
        method = self.resolved_method
        if method == "general":
            return self._h_general(k, l, x, y, dx, dy)
        if method == "sum":
            return self._h_sum(k, l, x, y, dx, dy)
        return self._h_contour(k, l, x, y, dx, dy)

    def e(self, k, l, x, y, dx=0, dy=0):
        self._check(k, l)
        x, y = np.atleast_1d(x), np.atleast_1d(y)
        if k >= l:
            return np.zeros((len(x), len(y)))
        return _heat_grid(x, y, self.taus[l] - self.taus[k], dx, dy)

    def k(self, k, l, x, y, dx=0, dy=0):
        return self.h(k, l, x, y, dx, dy) - self.e(k, l, x, y, dx, dy)

    def _check(self, k, l):
        if not (0 <= k < self.m and 0 <= l < self.m):
            raise ValidationError(f"block index ({k}, {l}) out of range for m = {self.m}")

    def _h_general(self, k, l, x, y, dx, dy):
        A = self._start_solve
        a = np.asarray(self.model.starts)
        b = np.asarray(self.model.ends)
        px = _heat_grid(x, b, 1 - self.taus[k], dx, 0)
        py = _heat_grid(a, y, self.taus[l], 0, dy)
        return self.constant.c * px @ np.linalg.solve(A, py)

    def _h_sum(self, k, l, x, y, dx, dy):
        if dy:
            raise ValidationError("the Lagrange-sum form supports y-derivatives only via method='contour'")
        b = np.asarray(self.model.ends)
        px = _heat_grid(x, b, 1 - self.taus[k], dx, 0) * np.exp(b**2)
        L = _lagrange_coefficients(b)
        d = _start_derivatives(y, self.taus[l], self.model.n)
        return self.constant.c * px @ (L @ d)

    def _h_contour(self, k, l, x, y, dx, dy):
        """Small circles around each end point for t, a vertical line for s.

        The s-line Re s = c0 runs through a gap of the end points, chosen per y
        to keep the integrand small on it (see ``_line_positions``).  Summing
        over circles is the residue sum, so it does not matter on which side of
        the line each end point lies.
        """
        x = np.atleast_1d(np.asarray(x, float))
        y = np.atleast_1d(np.asarray(y, float))
        tl = self.taus[l]
        c0s = _line_positions(self.model.ends, y, tl / (1 - tl))
        out = np.empty((x.size, y.size))
        for c0 in np.unique(c0s):
            cols = c0s == c0
            out[:, cols] = self._h_contour_line(c0, k, l, x, y[cols], dx, dy)
        return out

    def _h_contour_line(self, c0, k, l, x, y, dx, dy):
        b = np.asarray(self.model.ends)
        tk, tl = self.taus[k], self.taus[l]
        uk, ul = 1 - tk, 1 - tl
        t, wt = _circles(b, c0, self.contour_points)
        gap = float(np.min(np.abs(t.real - c0)))
        width = math.sqrt((40 * math.log(10) + _log_growth(b, c0)) * ul / tl + c0**2) + 2.0
        step = min(0.05, 0.05 * math.sqrt(ul / tl), gap / 8)
        sig = np.arange(-width, width + step / 2, step)
        s = c0 + 1j * sig
        ws = 1j * step * np.ones_like(sig)
        prod = np.prod(np.subtract.outer(s, b), axis=1)[None, :] / np.prod(np.subtract.outer(t, b), axis=1)[:, None]
        cauchy = prod * (wt[:, None] * ws[None, :]) / (s[None, :] - t[:, None])
        # x-dependence: exp(-x^2/uk + 2 x t/uk), y-dependence: exp(y^2/ul - 2 s y/ul)
        F = _gauss_factor(x, -1.0 / uk, 2.0 * t / uk, dx) * np.exp(-tk * t**2 / uk)[None, :]
        G = (_gauss_factor(y, 1.0 / ul, -2.0 * s / ul, dy) * np.exp(tl * s**2 / ul)[None, :]).T
        val = F @ (cauchy @ G)
        pref = -self.constant.c / (2 * math.pi**2.5 * math.sqrt(uk * ul))
        scale = np.abs(F) @ (np.abs(cauchy) @ np.abs(G))
        worst = float(np.max(np.abs(val.imag) / np.maximum(scale, 1.0)))
        if worst > 1e-10:
            raise ConvergenceError(f"contour form: imaginary residue {worst:.3e}", residual=worst)
        return pref * val.real


def _line_positions(b, y, ratio) -> np.ndarray:
    """Real part of the s-line for each y.

    On Re s = c the s-integrand peaks at about exp(ratio c^2 - 2 (1 + ratio) c y),
    with ratio = tau / (1 - tau), which is smallest at c = y / tau.  A large
    peak would be cancelled away in rounding, so each y gets the admissible c
    closest to that: left of all end points, right of all of them, or inside
    a gap, always keeping clear of the circles.  Positions snap to a 0.25 grid
    so that nearby y share a line.
    """
    bs = np.sort(np.asarray(b, float))
    y = np.asarray(y, float)
    best = np.round(y * (1 + ratio) / ratio * 4) / 4
    ranges = [(-np.inf, bs[0] - 0.5), (bs[-1] + 0.5, np.inf)]
    for lo, hi in zip(bs[:-1], bs[1:]):
        if hi - lo >= 0.5:
            ranges.append((lo + 0.25, hi - 0.25))
        else:
            ranges.append((0.5 * (lo + hi),) * 2)
    cands = np.stack([np.clip(best, lo, hi) for lo, hi in ranges], axis=1)
    growth = np.sum(np.log1p(np.abs(cands[..., None] - bs)), axis=-1)
    cost = ratio * cands**2 - 2 * (1 + ratio) * y[:, None] * cands + growth
    return cands[np.arange(y.size), np.argmin(cost, axis=1)]


def _circles(b, c0, points):
    """Positively oriented circles around each b_r avoiding the line and each other."""
    b = np.asarray(b, float)
    theta = 2 * np.pi * np.arange(points) / points
    nodes, weights = [], []
    for i, bi in enumerate(b):
        others = np.delete(b, i)
        near = min([abs(bi - c0)] + [abs(bi - o) for o in others])
        rho = min(0.5 * near, 0.5)
        z = rho * np.exp(1j * theta)
        nodes.append(bi + z)
        weights.append(1j * z * (2 * np.pi / points))
    return np.concatenate(nodes), np.concatenate(weights)


def _log_growth(b, c0) -> float:
    """Rough log-size of prod |s - b_r| near the s-line, used to pad its length."""
    return float(np.sum(np.log1p(np.abs(c0 - np.asarray(b)))))


def _gauss_factor(x, quad_coef, lin_coef, deriv):
    """d^deriv/dx^deriv exp(quad_coef x^2 + lin_coef x) on an x-by-node grid.

    ``lin_coef`` may be an array over nodes; uses
    g_{k+1} = (2 A x + B) g_k + 2 A k g_{k-1}.
    """
    x = np.asarray(x, float)[:, None]
    B = np.asarray(lin_coef)[None, :]
    base = np.exp(quad_coef * x**2 + B * x)
    if deriv == 0:
        return base
    lin = 2 * quad_coef * x + B
    prev, cur = np.ones_like(base), lin * np.ones_like(base)
    for j in range(1, deriv):
        prev, cur = cur, lin * cur + 2 * quad_coef * j * prev
    return cur * base


def h_general_a(model: PathModel, k, l, x, y, constant: NormalizationConstant = DEFAULT_CONSTANT) -> float:
    return float(FiniteNKernel(model, "general", constant).h(k, l, [x], [y])[0, 0])


def h_zero_start(model: PathModel, k, l, x, y, method: str = "sum",
                 constant: NormalizationConstant = DEFAULT_CONSTANT) -> float:
    if method not in ("sum", "contour"):
        raise ValidationError("method must be 'sum' or 'contour'")
    return float(FiniteNKernel(model, method, constant).h(k, l, [x], [y])[0, 0])


def trace_integral(kernel: FiniteNKernel, k: int, nodes: int = 400, margin: float = 9.0) -> float:
    """Integral of K_kk(x, x) over the line by Gauss-Legendre on a padded interval."""
    pts = np.asarray(kernel.model.starts + kernel.model.ends)
    lo, hi = pts.min() - margin, pts.max() + margin
    u, w = np.polynomial.legendre.leggauss(nodes)
    x = 0.5 * (hi - lo) * u + 0.5 * (hi + lo)
    w = 0.5 * (hi - lo) * w
    diag = np.array([kernel.k(k, k, [xi], [xi])[0, 0] for xi in x])
    return float(np.sum(w * diag))


def calibrate_constant(model: PathModel, method: str = "auto", k: int = 0) -> NormalizationConstant:
    """Constant c making the trace of K_kk equal to the number of paths."""
    raw = trace_integral(FiniteNKernel(model, method, NormalizationConstant(1.0)), k)
    return NormalizationConstant(model.n / raw)


def _start_matrix(points, starts, sigma):
    """Rows indexed by start, columns by point; confluent when all starts are 0.

    For coincident zero starts the rows are d^j/da^j P(point, a, sigma) at 0,
    the common factor prod j! cancelling in every ratio used here.
    """
    starts = np.asarray(starts, float)
    points = np.asarray(points, float)
    if np.all(starts == 0.0):
        u = points / math.sqrt(sigma)
        rows = []
        for j in range(len(starts)):
            coef = np.zeros(j + 1)
            coef[j] = 1.0
            # d^j/da^j exp(-(x - a)^2/sigma) at a = 0 is sigma^(-j/2) H_j(x/sqrt sigma) exp(-x^2/sigma)
            rows.append(sigma ** (-j / 2) * hermite.hermval(u, coef) * heat_p(points, 0.0, sigma))
        return np.array(rows)
    return heat_p(starts[:, None], points[None, :], sigma)


def karlin_mcgregor_density(model: PathModel, positions) -> float:
    """Density of the paths being at ``positions[k]`` (n values) at each time,
    conditioned on the start and end points; positions are labelled by path
    order, so this is the density of the ordered configuration.
    """
    pos = [np.asarray(p, float) for p in positions]
    if len(pos) != model.m or any(len(p) != model.n for p in pos):
        raise ValidationError("need n positions at each of the m times")
    sig = model.sigmas
    num = np.linalg.det(_start_matrix(pos[0], model.starts, sig[0]))
    for k in range(model.m - 1):
        num *= np.linalg.det(heat_p(pos[k][:, None], pos[k + 1][None, :], sig[k + 1]))
    num *= np.linalg.det(heat_p(pos[-1][:, None], np.asarray(model.ends)[None, :], sig[-1]))
    den = np.linalg.det(_start_matrix(model.ends, model.starts, 1.0))
    return float(num / den)


def kernel_block_determinant(kernel, positions) -> float:
    """det(K_kl(x_ki, x_lj)) over all times and particles."""
    pos = [np.atleast_1d(np.asarray(p, float)) for p in positions]
    blocks = [[kernel.k(k, l, pos[k], pos[l]) for l in range(len(pos))] for k in range(len(pos))]
    return float(np.linalg.det(np.block(blocks)))


@dataclass(frozen=True)
class ScaledKernel:
    """H_n near the cusp, evaluated on the rotated contour.

    ``n`` counts half the paths (n at +sqrt(n), n at -sqrt(n)).
    """

    n: int
    taus: tuple[float, ...]
    rotation: float = 0.2
    quad: QuadSettings = SCALED_QUAD

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValidationError("n must be a positive integer")
        taus = tuple(float(v) for v in np.atleast_1d(self.taus))
        if any(v <= u for u, v in zip(taus, taus[1:])):
            raise ValidationError("times must be strictly increasing")
        rn = math.sqrt(self.n)
        if any(abs(2 * t) >= rn for t in taus):
            raise ValidationError("|tau| must be below sqrt(n)/2 so the scaled times stay in (0, 1)")
        if self.n ** 0.25 <= self.quad.vertex_shift:
            raise ValidationError("n too small for the shifted contour")
        object.__setattr__(self, "taus", taus)

    @property
    def m(self) -> int:
        return len(self.taus)

    @cached_property
    def _rules(self):
        tr = t_rule(self.quad, 1, self.rotation, shifted=True)
        sr = s_rule(self.quad)
        cauchy = (tr.weights[:, None] * sr.weights[None, :]) / (sr.nodes[None, :] - tr.nodes[:, None])
        return tr, sr, cauchy

    def h(self, i, j, x, y, dx=0, dy=0):
        tr, sr, cauchy = self._rules
        rn = math.sqrt(self.n)
        ti, tj = self.taus[i], self.taus[j]
        ui, vi = 1 - 2 * ti / rn, 1 + 2 * ti / rn
        uj, vj = 1 - 2 * tj / rn, 1 + 2 * tj / rn
        t, s = tr.nodes, sr.nodes
        t_log = -rn * (vi / ui) * t**2 - self.n * np.log1p(-(t**2) / rn)
        s_log = rn * (vj / uj) * s**2 + self.n * np.log1p(-(s**2) / rn)
        F = _gauss_factor(np.atleast_1d(x), -2.0 / (rn - 2 * ti), 4.0 * t / ui, dx) * np.exp(t_log)[None, :]
        G = (_gauss_factor(np.atleast_1d(y), 2.0 / (rn - 2 * tj), -4.0 * s / uj, dy) * np.exp(s_log)[None, :]).T
        val = F @ (cauchy @ G)
        scale = np.abs(F) @ (np.abs(cauchy) @ np.abs(G))
        worst = float(np.max(np.abs(val.imag) / np.maximum(scale, 1.0)))
        if worst > 1e-10:
            raise ConvergenceError(f"scaled kernel: imaginary residue {worst:.3e}", residual=worst)
        return -val.real / (math.pi**2 * math.sqrt(ui * uj))

    def e(self, i, j, x, y, dx=0, dy=0):
        x, y = np.atleast_1d(x), np.atleast_1d(y)
        if i >= j:
            return np.zeros((len(x), len(y)))
        return _heat_grid(x, y, self.taus[j] - self.taus[i], dx, dy)

    def k(self, i, j, x, y, dx=0, dy=0):
        return self.h(i, j, x, y, dx, dy) - self.e(i, j, x, y, dx, dy)

    def limit(self) -> PearceyKernel:
        return PearceyKernel(self.taus, 1, "limit")


def scaled_kernel(n, taus, i, j, x, y, dx=0, dy=0, rotation=0.2, quad: QuadSettings = SCALED_QUAD) -> float:
    return float(ScaledKernel(n, taus, rotation, quad).h(i, j, [x], [y], dx, dy)[0, 0])


@dataclass(frozen=True)
class ScanResult:
    n_values: tuple[int, ...]
    errors: tuple[float, ...]
    slope: float
    dx: int = 0
    dy: int = 0

    @property
    def strictly_decreasing(self) -> bool:
        return all(b < a for a, b in zip(self.errors, self.errors[1:]))


def convergence_scan(n_list, box=(-2.0, 2.0), taus=(0.0,), i=0, j=0, dx=0, dy=0,
                     grid_points=9, quad: QuadSettings = SCALED_QUAD) -> ScanResult:
    """Sup-norm of H_n - H over a square grid for each n, with the log-log slope."""
    lo, hi = box
    if not (np.isfinite(lo) and np.isfinite(hi) and hi > lo):
        raise ValidationError("box must be a bounded interval")
    g = np.linspace(lo, hi, grid_points)
    ref = PearceyKernel(taus, 1, "limit").h(i, j, g, g, dx, dy)
    errors = []
    for n in n_list:
        approx = ScaledKernel(int(n), taus, quad=quad).h(i, j, g, g, dx, dy)
        errors.append(float(np.max(np.abs(approx - ref))))
    ns = np.asarray(n_list, float)
    slope = float(np.polyfit(np.log(ns), np.log(errors), 1)[0]) if len(ns) > 1 else float("nan")
    return ScanResult(tuple(int(v) for v in n_list), tuple(errors), slope, dx, dy)
