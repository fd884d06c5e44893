"""The extended Pearcey matrix kernel K = H - E and its order-R relatives.

H_ij(x, y) = pref * int_C int_{-i inf}^{i inf} exp(S_j(s) - beta y s + T_i(t) + beta x t) ds dt / (s - t)

with the exponents, ``beta`` and ``pref`` of :class:`PearceyParams`.  The
double integral is evaluated as F W G, where F and G hold the t- and s-
integrands at the nodes and W is the weighted Cauchy matrix 1/(s - t).  The
t-contour used here has its two vertices moved off the origin (to +-shift),
so s and t never meet and no grading trick is needed at the crossing.

Indices i, j are 0-based throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.polynomial import hermite_e

from .contours import QuadSettings, order_quad, s_rule, t_rule
from .errors import ConvergenceError, ValidationError
from .special_functions import DEFAULT_QUAD, PearceyParams, phi, psi

__all__ = [
    "TauGrid",
    "PearceyKernel",
    "h_entry",
    "e_entry",
    "k_entry",
    "integrable_entry",
    "limit_from_canonical",
    "gaussian_block",
]

IMAG_TOL = 1e-11


@dataclass(frozen=True)
class TauGrid:
    taus: tuple[float, ...]

    def __post_init__(self):
        taus = tuple(float(t) for t in np.atleast_1d(self.taus))
        if len(taus) == 0:
            raise ValidationError("need at least one time")
        if any(b <= a for a, b in zip(taus, taus[1:])):
            raise ValidationError(f"times must be strictly increasing, got {taus}")
        object.__setattr__(self, "taus", taus)

    def __len__(self):
        return len(self.taus)

    def __getitem__(self, i):
        return self.taus[i]


def gaussian_block(x, y, delta: float, variance_scale: float, dx: int = 0, dy: int = 0):
    """d^dx/dx d^dy/dy of the centred Gaussian in x - y with variance
    ``variance_scale * delta``; returns the len(x) by len(y) grid."""
    v = variance_scale * delta
    z = np.subtract.outer(np.asarray(x, float), np.asarray(y, float))
    u = z / math.sqrt(v)
    g = np.exp(-0.5 * u**2) / math.sqrt(2 * math.pi * v)
    n = dx + dy
    if n == 0:
        return g
    coeffs = np.zeros(n + 1)
    coeffs[n] = 1.0
    # d^n/dz^n g = (-1)^n v^(-n/2) He_n(z/sqrt v) g, and d/dy = -d/dz
    return (-1) ** dx * v ** (-n / 2) * hermite_e.hermeval(u, coeffs) * g


@dataclass(frozen=True)
class PearceyKernel:
    """Matrix kernel for times ``taus``.

    ``normalization`` is ``canonical`` (order 1, t^4/4 form) or ``limit``
    (the form produced by the Brownian scaling limit, any order).
    """

    taus: TauGrid
    order_R: int = 1
    normalization: str = "auto"
    quad: QuadSettings | None = None

    def __post_init__(self):
        if not isinstance(self.taus, TauGrid):
            object.__setattr__(self, "taus", TauGrid(self.taus))
        self.params(0)  # validates order/normalization
        if self.quad is None:
            object.__setattr__(self, "quad", order_quad(self.order_R, self.norm))

    @property
    def m(self) -> int:
        return len(self.taus)

    def params(self, i: int) -> PearceyParams:
        return PearceyParams(self.taus[i], self.order_R, self.normalization)

    @property
    def norm(self) -> str:
        return self.params(0).norm

    @property
    def variance_scale(self) -> float:
        # E is the heat kernel for the diffusion implied by the tau coefficients
        return 1.0 if self.norm == "canonical" else 0.5

    @cached_property
    def _rules(self):
        tr = t_rule(self.quad, self.order_R, 0.0, shifted=True)
        sr = s_rule(self.quad)
        cauchy = (tr.weights[:, None] * sr.weights[None, :]) / (sr.nodes[None, :] - tr.nodes[:, None])
        return tr, sr, cauchy

    def _check(self, i, j):
        if not (0 <= i < self.m and 0 <= j < self.m):
            raise ValidationError(f"block index ({i}, {j}) out of range for m = {self.m}")

    def left_factor(self, i, x, dx=0):
        tr, _, _ = self._rules
        p = self.params(i)
        t = tr.nodes
        x = np.atleast_1d(np.asarray(x, float))
        return np.exp(p.t_exponent(t)[None, :] + p.beta * x[:, None] * t[None, :]) * (p.beta * t) ** dx

    def right_factor(self, j, y, dy=0):
        _, sr, _ = self._rules
        p = self.params(j)
        s = sr.nodes
        y = np.atleast_1d(np.asarray(y, float))
        return np.exp(p.s_exponent(s)[:, None] - p.beta * s[:, None] * y[None, :]) * (-p.beta * s[:, None]) ** dy

    def h(self, i, j, x, y, dx=0, dy=0):
        """Grid of d^dx/dx d^dy/dy H_ij over x (rows) and y (columns)."""
        self._check(i, j)
        _, _, cauchy = self._rules
        F = self.left_factor(i, x, dx)
        G = self.right_factor(j, y, dy)
        val = F @ (cauchy @ G)
        scale = np.abs(F) @ (np.abs(cauchy) @ np.abs(G))
        pref = self.params(i).kernel_prefactor
        worst = np.max(np.abs(val.imag) / np.maximum(scale, 1.0))
        if worst > IMAG_TOL:
            raise ConvergenceError(f"H_{i}{j}: imaginary residue {worst:.3e} of scale", residual=float(worst))
        return pref * val.real

    def e(self, i, j, x, y, dx=0, dy=0):
        self._check(i, j)
        x = np.atleast_1d(np.asarray(x, float))
        y = np.atleast_1d(np.asarray(y, float))
        if i >= j:
            return np.zeros((len(x), len(y)))
        return gaussian_block(x, y, self.taus[j] - self.taus[i], self.variance_scale, dx, dy)

    def k(self, i, j, x, y, dx=0, dy=0):
        return self.h(i, j, x, y, dx, dy) - self.e(i, j, x, y, dx, dy)

    def phi(self, i, x, deriv=0):
        return phi(np.atleast_1d(np.asarray(x, float)), self.params(i), deriv, self.quad)

    def psi(self, j, y, deriv=0):
        return psi(np.atleast_1d(np.asarray(y, float)), self.params(j), deriv, self.quad)

    def refined(self) -> "PearceyKernel":
        return PearceyKernel(self.taus, self.order_R, self.normalization, self.quad.refined())

    def commutator_coefficient(self) -> float:
        """c in (d/dx + d/dy) K = -c phi(x) psi(y)."""
        return 1.0 if self.norm == "canonical" else 4.0


def _point(kernel, fn, i, j, x, y, dx, dy):
    grid = fn(i, j, [x], [y], dx, dy)
    return float(grid[0, 0])


def h_entry(kernel: PearceyKernel, i, j, x, y, dx=0, dy=0) -> float:
    return _point(kernel, kernel.h, i, j, x, y, dx, dy)


def e_entry(kernel: PearceyKernel, i, j, x, y, dx=0, dy=0) -> float:
    return _point(kernel, kernel.e, i, j, x, y, dx, dy)


def k_entry(kernel: PearceyKernel, i, j, x, y, dx=0, dy=0) -> float:
    return _point(kernel, kernel.k, i, j, x, y, dx, dy)


def integrable_entry(x, y, tau: float, quad: QuadSettings = DEFAULT_QUAD, near: float = 1e-4):
    """Equal-time canonical kernel from Pearcey functions alone:

    K(x, y) = [phi''(x) psi(y) - phi'(x) psi'(y) + phi(x) psi''(y) - tau phi(x) psi(y)] / (x - y).

    For |x - y| < ``near`` the numerator is expanded about the midpoint,
    which gives the removable-singularity value with O((x - y)^2) error.
    """
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    shape = x.shape
    x, y = x.ravel(), y.ravel()
    p = PearceyParams(tau)
    out = np.empty_like(x)
    d = x - y
    far = np.abs(d) >= near
    if np.any(far):
        xf, yf = x[far], y[far]
        f = [phi(xf, p, k, quad) for k in range(3)]
        g = [psi(yf, p, k, quad) for k in range(3)]
        num = f[2] * g[0] - f[1] * g[1] + f[0] * g[2] - tau * f[0] * g[0]
        out[far] = num / d[far]
    if np.any(~far):
        c = 0.5 * (x[~far] + y[~far])
        dd = d[~far]
        f = [phi(c, p, k, quad) for k in range(5)]
        g = [psi(c, p, k, quad) for k in range(5)]
        # N(x,y) = f2 g0 - f1 g1 + f0 g2 - tau f0 g0; along the diagonal N = 0
        n_x = f[3] * g[0] - f[2] * g[1] + f[1] * g[2] - tau * f[1] * g[0]
        n_xx = f[4] * g[0] - f[3] * g[1] + f[2] * g[2] - tau * f[2] * g[0]
        n_xy = f[3] * g[1] - f[2] * g[2] + f[1] * g[3] - tau * f[1] * g[1]
        n_yy = f[2] * g[2] - f[1] * g[3] + f[0] * g[4] - tau * f[0] * g[2]
        out[~far] = n_x + dd * (n_xx - 2 * n_xy + n_yy) / 8
    return float(out[0]) if shape == () else out.reshape(shape)


def limit_from_canonical(canonical_value: float, dx: int = 0, dy: int = 0) -> float:
    """Convert a canonical kernel value at (x, y, tau) into the limit
    normalization at (x', y', tau') = (2^(1/4) x / 4, 2^(1/4) y / 4, sqrt(2) tau / 8).

    The two kernels are related by K_lim(x', y') dy' = K_can(x, y) dy, so
    values scale by 4 / 2^(1/4) and each derivative adds another factor.
    """
    lam = 4 / 2**0.25
    return canonical_value * lam ** (1 + dx + dy)
