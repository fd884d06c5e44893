"""Root data and product factors for the order-R singularity kernels.

The order-R model sends n paths to each of R complex end points b_r with
b_r^2 = 1/a_r, where the a_r are the roots of

    a^R - a^(R-1) + a^(R-2)/2! - ... + (-1)^R / R! = 0,

whose power sums are p_1 = 1, p_k = 0 for 2 <= k <= R and
p_(R+1) = (-1)^(R+1) / R!.  The kernels themselves are
:class:`pearcey.kernels.PearceyKernel` with ``order_R`` set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ConvergenceError, DegeneracyError, ValidationError
from .kernels import PearceyKernel, h_entry

__all__ = [
    "RootSystem",
    "root_polynomial",
    "singularity_roots",
    "expected_power_sums",
    "higher_finite_n_product",
    "log_product_series",
    "higher_order_kernel",
    "heat_flow_ratio",
]

MAX_ORDER = 8
POWER_SUM_TOL = 1e-12


def root_polynomial(order_R: int) -> list[Fraction]:
    """Exact coefficients, highest degree first: (-1)^k / k! for a^(R-k)."""
    return [Fraction((-1) ** k, math.factorial(k)) for k in range(order_R + 1)]


def expected_power_sums(order_R: int) -> list[Fraction]:
    """p_1 .. p_(R+1)."""
    sums = [Fraction(1)] + [Fraction(0)] * (order_R - 1)
    sums.append(Fraction((-1) ** (order_R + 1), math.factorial(order_R)))
    return sums


@dataclass(frozen=True)
class RootSystem:
    order_R: int
    roots: tuple[complex, ...]

    @property
    def delta(self) -> float:
        """Scaling exponent R / (R + 1)."""
        return self.order_R / (self.order_R + 1)

    @property
    def ends_squared(self) -> np.ndarray:
        """b_r^2 = 1 / a_r."""
        return 1.0 / np.asarray(self.roots)

    def power_sum(self, k: int) -> complex:
        return complex(np.sum(np.asarray(self.roots) ** k))

    def power_sum_residuals(self) -> np.ndarray:
        exp = expected_power_sums(self.order_R)
        return np.array([abs(self.power_sum(k + 1) - float(e)) for k, e in enumerate(exp)])


def _newton_polish(coeffs, z, iters=8):
    p = np.poly1d(coeffs)
    dp = p.deriv()
    for _ in range(iters):
        d = dp(z)
        if d == 0:
            break
        step = p(z) / d
        z = z - step
        if abs(step) < 1e-17 * max(1.0, abs(z)):
            break
    return z


def singularity_roots(order_R: int) -> RootSystem:
    """All R roots via companion eigenvalues, Newton-polished and certified
    by their power sums."""
    if int(order_R) != order_R or not 1 <= order_R <= MAX_ORDER:
        raise ValidationError(f"order_R must be an integer in [1, {MAX_ORDER}]")
    coeffs = [float(c) for c in root_polynomial(order_R)]
    raw = np.roots(coeffs) if order_R > 1 else np.array([1.0 + 0j])
    roots = np.array([_newton_polish(coeffs, complex(z)) for z in raw])
    # conjugate pairs exactly: the polynomial is real
    roots = roots[np.lexsort((roots.imag, roots.real))]
    system = RootSystem(order_R, tuple(complex(z) for z in roots))
    worst = float(np.max(system.power_sum_residuals()))
    if worst > POWER_SUM_TOL:
        raise ConvergenceError(f"root power sums off by {worst:.2e}", residual=worst)
    return system


def higher_finite_n_product(roots: RootSystem, s, t, n: int, pole_tol: float = 1e-12) -> complex:
    """prod_r ((b_r^2 - s^2/n) / (b_r^2 - t^2/n))^n, evaluated through logarithms."""
    if n < 1:
        raise ValidationError("n must be positive")
    b2 = roots.ends_squared
    s, t = complex(s), complex(t)
    den = b2 - t * t / n
    if np.min(np.abs(den)) < pole_tol:
        raise DegeneracyError("t lies at a pole of the product", residual=float(np.min(np.abs(den))))
    a = np.asarray(roots.roots)
    # (b^2 - s^2/n)/(b^2 - t^2/n) = (1 - a s^2/n)/(1 - a t^2/n), and z^n = exp(n log z) for integer n
    logs = n * np.sum(np.log1p(-a * s * s / n) - np.log1p(-a * t * t / n))
    return complex(np.exp(logs))


def log_product_series(roots: RootSystem, s, t, n: int, terms: int | None = None) -> complex:
    """sum_k p_k n^(1-k) (t^(2k) - s^(2k)) / k, the large-n expansion of the log-product."""
    terms = roots.order_R + 1 if terms is None else terms
    s, t = complex(s), complex(t)
    return sum(roots.power_sum(k) * n ** (1 - k) * (t ** (2 * k) - s ** (2 * k)) / k for k in range(1, terms + 1))


def higher_order_kernel(order_R: int, taus, **kwargs) -> PearceyKernel:
    return PearceyKernel(taus, order_R, "limit", **kwargs)


def heat_flow_ratio(kernel: PearceyKernel, i: int, j: int, x: float, y: float, h: float = 1e-3) -> float:
    """(d/d tau_j H_ij) / (d^2/dy^2 H_ij), the tau derivative by a centred difference.

    Only tau_j moves, so i and j must differ or the diagonal time moves both.
    """
    taus = list(kernel.taus)

    def shifted(delta):
        moved = taus.copy()
        moved[j] += delta
        return PearceyKernel(moved, kernel.order_R, kernel.normalization, kernel.quad)

    if i == j:
        raise ValidationError("use distinct i and j so that only one time moves")
    dtau = (h_entry(shifted(h), i, j, x, y) - h_entry(shifted(-h), i, j, x, y)) / (2 * h)
    return dtau / h_entry(kernel, i, j, x, y, 0, 2)
