"""Pearcey functions phi, psi and their higher-order analogues.

Two normalizations are supported:

``canonical`` (order 1 only)
    phi(x) = 1/(2 pi i) int_C exp(t^4/4 - tau t^2/2 + x t) dt
    psi(y) = 1/(2 pi i) int_{-i inf}^{i inf} exp(-s^4/4 + tau s^2/2 - y s) ds

``limit`` (any order R)
    phi(x) = 1/(pi i) int_C exp((-1)^(R+1) t^(2R+2)/(R+1)! - 4 tau t^2 + 4 x t) dt
    psi(y) = 1/(pi i) int exp((-1)^R s^(2R+2)/(R+1)! + 4 tau s^2 - 4 y s) ds

The ``limit`` form at R = 1 is the one produced by the n -> infinity scaling
of the Brownian model.  Derivatives are taken by inserting (beta t)^k or
(-beta s)^k into the integrand, with beta = 1 or 4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .contours import QuadSettings, QuadratureRule, s_rule, t_rule
from .errors import ConvergenceError, ValidationError

__all__ = [
    "PearceyParams",
    "phi",
    "psi",
    "ode_residual_phi",
    "ode_residual_psi",
    "c_R",
]

DEFAULT_QUAD = QuadSettings()
IMAG_TOL = 1e-12


def c_R(order_R: int) -> float:
    """2 (-1)^(R+1) / (4^(2R+1) R!), formed exactly then rounded."""
    return float(Fraction(2 * (-1) ** (order_R + 1), 4 ** (2 * order_R + 1) * math.factorial(order_R)))


@dataclass(frozen=True)
class PearceyParams:
    tau: float = 0.0
    order_R: int = 1
    normalization: str = "auto"

    def __post_init__(self):
        if int(self.order_R) != self.order_R or self.order_R < 1:
            raise ValidationError(f"order_R must be an integer >= 1, got {self.order_R}")
        if self.normalization not in ("auto", "canonical", "limit"):
            raise ValidationError(f"unknown normalization {self.normalization!r}")
        if self.norm == "canonical" and self.order_R != 1:
            raise ValidationError("the canonical normalization exists only for order 1")

    @property
    def norm(self) -> str:
        if self.normalization == "auto":
            return "canonical" if self.order_R == 1 else "limit"
        return self.normalization

    @property
    def c_R(self) -> float:
        return c_R(self.order_R)

    @property
    def beta(self) -> float:
        """Coefficient of x t (and of y s) in the exponent."""
        return 1.0 if self.norm == "canonical" else 4.0

    @property
    def function_prefactor(self) -> complex:
        return 1 / (2j * math.pi) if self.norm == "canonical" else 1 / (1j * math.pi)

    @property
    def kernel_prefactor(self) -> float:
        return -1 / (4 * math.pi**2) if self.norm == "canonical" else -1 / math.pi**2

    def t_exponent(self, t, tau=None):
        """x-independent part of the t exponent."""
        tau = self.tau if tau is None else tau
        if self.norm == "canonical":
            return t**4 / 4 - tau * t**2 / 2
        R = self.order_R
        return (-1) ** (R + 1) * t ** (2 * R + 2) / math.factorial(R + 1) - 4 * tau * t**2

    def s_exponent(self, s, tau=None):
        """y-independent part of the s exponent."""
        tau = self.tau if tau is None else tau
        if self.norm == "canonical":
            return -(s**4) / 4 + tau * s**2 / 2
        R = self.order_R
        return (-1) ** R * s ** (2 * R + 2) / math.factorial(R + 1) + 4 * tau * s**2

    def with_tau(self, tau: float) -> "PearceyParams":
        return PearceyParams(tau, self.order_R, self.normalization)


def _as_array(x):
    return np.atleast_1d(np.asarray(x, dtype=float))


def _finish(values: np.ndarray, scale: np.ndarray, scalar: bool, what: str):
    bad = np.abs(values.imag) > IMAG_TOL * np.maximum(scale, 1.0)
    if np.any(bad):
        worst = float(np.max(np.abs(values.imag)))
        raise ConvergenceError(f"{what}: imaginary residue {worst:.3e} exceeds tolerance", residual=worst)
    out = values.real
    return float(out[0]) if scalar else out


def _contour_sum(rule: QuadratureRule, base, arg, beta, sign, deriv):
    # rows: evaluation points, columns: nodes
    z = rule.nodes
    e = np.exp(base[None, :] + sign * beta * arg[:, None] * z[None, :])
    mono = (sign * beta * z) ** deriv
    terms = e * (rule.weights * mono)[None, :]
    return terms.sum(axis=1), np.abs(terms).sum(axis=1)


def phi(x, params: PearceyParams = PearceyParams(), deriv: int = 0, quad: QuadSettings = DEFAULT_QUAD,
        rotation: float = 0.0, verify: bool = False):
    """deriv-th x-derivative of the Pearcey function phi; vectorized in x."""
    if deriv < 0:
        raise ValidationError("deriv must be non-negative")
    scalar = np.ndim(x) == 0
    xs = _as_array(x)
    rule = t_rule(quad, params.order_R, rotation)
    base = params.t_exponent(rule.nodes)
    total, scale = _contour_sum(rule, base, xs, params.beta, 1.0, deriv)
    pref = params.function_prefactor
    out = _finish(total * pref, scale * abs(pref), scalar, "phi")
    if verify:
        ref = phi(x, params, deriv, quad.refined(), rotation)
        _check_refinement(out, ref, "phi")
    return out


def psi(y, params: PearceyParams = PearceyParams(), deriv: int = 0, quad: QuadSettings = DEFAULT_QUAD,
        verify: bool = False):
    """deriv-th y-derivative of the Pearcey function psi; vectorized in y."""
    if deriv < 0:
        raise ValidationError("deriv must be non-negative")
    scalar = np.ndim(y) == 0
    ys = _as_array(y)
    rule = s_rule(quad)
    base = params.s_exponent(rule.nodes)
    total, scale = _contour_sum(rule, base, ys, params.beta, -1.0, deriv)
    pref = params.function_prefactor
    out = _finish(total * pref, scale * abs(pref), scalar, "psi")
    if verify:
        ref = psi(y, params, deriv, quad.refined())
        _check_refinement(out, ref, "psi")
    return out


def _check_refinement(value, ref, what, tol=1e-10):
    err = float(np.max(np.abs(np.asarray(value) - np.asarray(ref))))
    if err > tol:
        raise ConvergenceError(f"{what}: refinement changed the value by {err:.3e}", residual=err)


def ode_residual_phi(x, params: PearceyParams = PearceyParams(), quad: QuadSettings = DEFAULT_QUAD):
    """|phi''' - tau phi' + x phi| (canonical) or
    |c_R phi^(2R+1) - 2 tau phi' + 4 x phi| (limit normalization)."""
    tau = params.tau
    if params.norm == "canonical":
        lhs = phi(x, params, 3, quad) - tau * phi(x, params, 1, quad) + np.asarray(x) * phi(x, params, 0, quad)
    else:
        top = 2 * params.order_R + 1
        lhs = (params.c_R * phi(x, params, top, quad) - 2 * tau * phi(x, params, 1, quad)
               + 4 * np.asarray(x) * phi(x, params, 0, quad))
    return np.abs(lhs)


def ode_residual_psi(y, params: PearceyParams = PearceyParams(), quad: QuadSettings = DEFAULT_QUAD):
    """|psi''' - tau psi' - y psi| (canonical) or
    |c_R psi^(2R+1) - 2 tau psi' - 4 y psi| (limit normalization)."""
    tau = params.tau
    if params.norm == "canonical":
        lhs = psi(y, params, 3, quad) - tau * psi(y, params, 1, quad) - np.asarray(y) * psi(y, params, 0, quad)
    else:
        top = 2 * params.order_R + 1
        lhs = (params.c_R * psi(y, params, top, quad) - 2 * tau * psi(y, params, 1, quad)
               - 4 * np.asarray(y) * psi(y, params, 0, quad))
    return np.abs(lhs)
