"""Fredholm determinants det(I - K chi), resolvents and the Q, P vectors.

A matrix kernel is anything with ``m`` and ``k(i, j, x, y, dx=0, dy=0)``
returning a len(x) by len(y) grid.  Kernels that also provide ``phi`` and
``psi`` (the Pearcey kernels) support :func:`qp_vectors`.

Discretization is Gauss-Legendre Nystrom: with nodes u_a and weights w_a on
every interval of every time slice, M_ab = K(u_a, u_b) w_b and

    det(I - K chi) ~ det(I - M)
    R(x, y)        = K(x, y) + k_x^T W (I - M)^{-1} k_y
    Q(x)           = phi(x)  + k_x^T W (I - M)^{-1} phi_nodes
    P(y)           = psi(y)  + psi_nodes^T W (I - M)^{-1} k_y

where k_x = (K(x, u_a))_a and k_y = (K(u_a, y))_a.  Derivatives in x or y
fall on k_x, k_y, phi or psi only, so every partial is spectrally accurate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import OutOfRangeError, SingularSystemError, ValidationError

__all__ = [
    "RegionFamily",
    "Endpoint",
    "NystromSystem",
    "discretize",
    "gap_probability",
    "resolvent",
    "qp_vectors",
    "correlation_density",
    "TransposedKernel",
    "log_det_gradient",
]

RANGE_SLACK = 1e-8


@dataclass(frozen=True)
class Endpoint:
    """Endpoint w (0-based) of the intervals at slice k."""

    k: int
    w: int
    xi: float

    @property
    def sign(self) -> int:
        # left ends (w = 0, 2, ...) count +1, right ends -1
        return 1 if self.w % 2 == 0 else -1


@dataclass(frozen=True)
class RegionFamily:
    """For each time slice, a sorted list of closed intervals.

    Neighbouring intervals may touch (the right end of one equal to the left
    end of the next), which leaves the indicator function unchanged.
    """

    intervals: tuple[tuple[tuple[float, float], ...], ...]

    def __post_init__(self):
        cleaned = []
        for k, ivs in enumerate(self.intervals):
            row = []
            prev_hi = -math.inf
            for iv in ivs:
                if len(iv) != 2:
                    raise ValidationError(f"slice {k}: interval {iv!r} must have two endpoints")
                lo, hi = float(iv[0]), float(iv[1])
                if not (math.isfinite(lo) and math.isfinite(hi)):
                    raise ValidationError(f"slice {k}: intervals must be bounded")
                if not lo < hi:
                    raise ValidationError(f"slice {k}: interval [{lo}, {hi}] is empty or reversed")
                if lo < prev_hi:
                    raise ValidationError(f"slice {k}: intervals overlap or are out of order")
                row.append((lo, hi))
                prev_hi = hi
            cleaned.append(tuple(row))
        object.__setattr__(self, "intervals", tuple(cleaned))

    @classmethod
    def single(cls, lo: float, hi: float) -> "RegionFamily":
        return cls((((lo, hi),),))

    @classmethod
    def empty(cls, m: int) -> "RegionFamily":
        return cls(((),) * m)

    @property
    def m(self) -> int:
        return len(self.intervals)

    @property
    def is_empty(self) -> bool:
        return all(len(ivs) == 0 for ivs in self.intervals)

    def endpoints(self) -> list[Endpoint]:
        out = []
        for k, ivs in enumerate(self.intervals):
            flat = [v for iv in ivs for v in iv]
            out.extend(Endpoint(k, w, xi) for w, xi in enumerate(flat))
        return out

    def with_endpoint(self, index: int, value: float) -> "RegionFamily":
        """Copy with the index-th endpoint (in :meth:`endpoints` order) moved."""
        ep = self.endpoints()[index]
        rows = [list(map(list, ivs)) for ivs in self.intervals]
        rows[ep.k][ep.w // 2][ep.w % 2] = value
        return RegionFamily(tuple(tuple(tuple(iv) for iv in row) for row in rows))

    def split(self, k: int, index: int, at: float) -> "RegionFamily":
        """Split interval ``index`` of slice k into two touching halves at ``at``."""
        rows = [list(ivs) for ivs in self.intervals]
        lo, hi = rows[k][index]
        if not lo < at < hi:
            raise ValidationError("split point must lie inside the interval")
        rows[k][index:index + 1] = [(lo, at), (at, hi)]
        return RegionFamily(tuple(tuple(row) for row in rows))

    def contains(self, k: int, x: float) -> bool:
        return any(lo <= x <= hi for lo, hi in self.intervals[k])


@dataclass(frozen=True)
class NystromSystem:
    kernel: object
    regions: RegionFamily
    nodes_per_interval: int
    nodes: np.ndarray
    weights: np.ndarray
    slice_of: np.ndarray
    matrix: np.ndarray

    @property
    def size(self) -> int:
        return len(self.nodes)

    @cached_property
    def _lu(self):
        if self.size == 0:
            return None
        return lu_factor(np.eye(self.size) - self.matrix, check_finite=True)

    @cached_property
    def determinant(self) -> float:
        if self.size == 0:
            return 1.0
        lu, piv = self._lu
        swaps = int(np.sum(piv != np.arange(len(piv))))
        diag = np.diag(lu)
        sign = (-1) ** swaps * np.prod(np.sign(diag))
        logabs = float(np.sum(np.log(np.abs(diag))))
        if logabs < math.log(1e-300):
            raise SingularSystemError(f"I - K chi is numerically singular (log|det| = {logabs:.1f})",
                                      residual=logabs)
        return float(sign * math.exp(logabs))

    def _slice_nodes(self, k):
        mask = self.slice_of == k
        return self.nodes[mask], mask

    @cached_property
    def _vector_cache(self) -> dict:
        return {}

    def _memo(self, key, fn):
        cache = self._vector_cache
        if key not in cache:
            if len(cache) > 4096:
                cache.clear()
            cache[key] = fn()
        return cache[key]

    def kx(self, i, x, dx=0):
        """K_{i, slice(a)}(x, u_a) for every node a, shape (len(x), N)."""
        x = np.atleast_1d(np.asarray(x, float))
        return self._memo(("kx", i, dx, x.tobytes()), lambda: self._kx(i, x, dx))

    def ky(self, j, y, dy=0):
        """K_{slice(a), j}(u_a, y) for every node a, shape (N, len(y))."""
        y = np.atleast_1d(np.asarray(y, float))
        return self._memo(("ky", j, dy, y.tobytes()), lambda: self._ky(j, y, dy))

    def _kx(self, i, x, dx):
        out = np.zeros((len(x), self.size))
        for k in range(self.regions.m):
            u, mask = self._slice_nodes(k)
            if len(u):
                out[:, mask] = self.kernel.k(i, k, x, u, dx, 0)
        return out

    def _ky(self, j, y, dy):
        out = np.zeros((self.size, len(y)))
        for k in range(self.regions.m):
            u, mask = self._slice_nodes(k)
            if len(u):
                out[mask, :] = self.kernel.k(k, j, u, y, 0, dy)
        return out

    def solve(self, rhs):
        if self.size == 0:
            return np.zeros_like(rhs)
        return lu_solve(self._lu, rhs)

    def resolvent(self, i, x, j, y, dx=0, dy=0):
        """Grid of d^dx/dx d^dy/dy R_ij(x, y)."""
        base = self.kernel.k(i, j, np.atleast_1d(x), np.atleast_1d(y), dx, dy)
        if self.size == 0:
            return base
        left = self.kx(i, x, dx) * self.weights[None, :]
        return base + left @ self.solve(self.ky(j, y, dy))

    def _phi_nodes(self):
        out = np.empty(self.size)
        for k in range(self.regions.m):
            u, mask = self._slice_nodes(k)
            if len(u):
                out[mask] = self.kernel.phi(k, u, 0)
        return out

    def _psi_nodes(self):
        out = np.empty(self.size)
        for k in range(self.regions.m):
            u, mask = self._slice_nodes(k)
            if len(u):
                out[mask] = self.kernel.psi(k, u, 0)
        return out

    @cached_property
    def _q_nodes(self):
        return self.solve(self._phi_nodes())

    @cached_property
    def _p_weighted(self):
        # psi^T W (I - M)^{-1}, via the transposed factorization
        if self.size == 0:
            return np.zeros(0)
        lu_piv = self._lu
        return lu_solve(lu_piv, self.weights * self._psi_nodes(), trans=1)

    def q(self, i, x, deriv=0):
        x = np.atleast_1d(np.asarray(x, float))
        val = self.kernel.phi(i, x, deriv)
        if self.size:
            val = val + (self.kx(i, x, deriv) * self.weights[None, :]) @ self._q_nodes
        return val

    def p(self, j, y, deriv=0):
        y = np.atleast_1d(np.asarray(y, float))
        val = self.kernel.psi(j, y, deriv)
        if self.size:
            val = val + self._p_weighted @ self.ky(j, y, deriv)
        return val


def discretize(kernel, regions: RegionFamily, nodes_per_interval: int = 32) -> NystromSystem:
    if nodes_per_interval < 4:
        raise ValidationError("nodes_per_interval must be at least 4")
    if regions.m != kernel.m:
        raise ValidationError(f"region family has {regions.m} slices but the kernel has {kernel.m}")
    gx, gw = np.polynomial.legendre.leggauss(nodes_per_interval)
    nodes, weights, slice_of = [], [], []
    for k, ivs in enumerate(regions.intervals):
        for lo, hi in ivs:
            nodes.append(0.5 * (hi - lo) * gx + 0.5 * (hi + lo))
            weights.append(0.5 * (hi - lo) * gw)
            slice_of.append(np.full(nodes_per_interval, k))
    if nodes:
        nodes, weights, slice_of = map(np.concatenate, (nodes, weights, slice_of))
    else:
        nodes, weights, slice_of = np.zeros(0), np.zeros(0), np.zeros(0, int)
    size = len(nodes)
    matrix = np.zeros((size, size))
    for k in range(regions.m):
        rk = slice_of == k
        if not rk.any():
            continue
        for l in range(regions.m):
            cl = slice_of == l
            if not cl.any():
                continue
            block = kernel.k(k, l, nodes[rk], nodes[cl])
            matrix[np.ix_(rk, cl)] = block * weights[cl][None, :]
    for arr in (nodes, weights, slice_of, matrix):
        arr.setflags(write=False)
    system = NystromSystem(kernel, regions, nodes_per_interval, nodes, weights, slice_of, matrix)
    system.determinant  # factor now so singular systems fail early
    return system


def gap_probability(system: NystromSystem, check_range: bool = True) -> float:
    """det(I - K chi); values outside [-1e-8, 1 + 1e-8] raise OutOfRangeError."""
    det = system.determinant
    if check_range and not (-RANGE_SLACK <= det <= 1 + RANGE_SLACK):
        raise OutOfRangeError(f"gap probability {det!r} lies outside [0, 1]", value=det)
    return det


def resolvent(system: NystromSystem, i, x, j, y, dx=0, dy=0) -> float:
    return float(system.resolvent(i, [x], j, [y], dx, dy)[0, 0])


def qp_vectors(system: NystromSystem, i, x, deriv=0) -> tuple[float, float]:
    """(d^deriv Q_i(x), d^deriv P_i(x))."""
    if not (hasattr(system.kernel, "phi") and hasattr(system.kernel, "psi")):
        raise ValidationError("this kernel has no phi/psi functions")
    return float(system.q(i, [x], deriv)[0]), float(system.p(i, [x], deriv)[0])


def correlation_density(kernel, points) -> float:
    """det(K_{k_a k_b}(x_a, x_b)) for points [(k, x), ...]."""
    pts = [(int(k), float(x)) for k, x in points]
    if len(set(pts)) != len(pts):
        raise ValidationError("points must be distinct")
    n = len(pts)
    mat = np.empty((n, n))
    for a, (ka, xa) in enumerate(pts):
        for b, (kb, xb) in enumerate(pts):
            mat[a, b] = kernel.k(ka, kb, [xa], [xb])[0, 0]
    return float(np.linalg.det(mat)) if n else 1.0


@dataclass(frozen=True)
class TransposedKernel:
    """K^T_ij(x, y) = K_ji(y, x), with the roles of phi and psi exchanged."""

    base: object

    @property
    def m(self) -> int:
        return self.base.m

    @property
    def taus(self):
        return self.base.taus

    def k(self, i, j, x, y, dx=0, dy=0):
        return self.base.k(j, i, y, x, dy, dx).T

    def phi(self, i, x, deriv=0):
        return self.base.psi(i, x, deriv)

    def psi(self, j, y, deriv=0):
        return self.base.phi(j, y, deriv)


def log_det_gradient(system: NystromSystem) -> np.ndarray:
    """d log det(I - K chi) / d xi for every endpoint: sign * R_kk(xi, xi)."""
    eps = system.regions.endpoints()
    return np.array([e.sign * system.resolvent(e.k, [e.xi], e.k, [e.xi])[0, 0] for e in eps])
