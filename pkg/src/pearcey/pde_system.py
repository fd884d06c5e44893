"""Endpoint unknowns of the gap-probability PDE system and their numerical checks.

For regions with endpoints xi_e (e running over all (k, w) pairs) the unknowns
are the vectors q, q', q'' (Q_k and derivatives at xi_e), p, p', p'' and the
matrices r, r_x, r_y with r[e, f] = R_{k_e k_f}(xi_e, xi_f).  Moving one
endpoint xi_e changes them according to

    dr   = -r s E r + E r_x + r_y E
    dr_x = -r_x s E r + E r_xx + r_xy E
    dr_y = -r s E r_y + E r_xy + r_yy E
    dq   = E q' - r s E q
    dp   = p' E - p E s r
    dq'  = E q'' - r_x s E q
    dp'  = p'' E - p E s r_y
    dq'' = E (tau q' - xi q + r s q'' - r_y s q' + r_yy s q - r tau s q) - r_xx s E q
    dp'' = (p' tau + p xi + p'' s r - p' s r_x + p s r_xx - p s tau r) E - p E s r_yy

with E the unit diagonal matrix selecting e, s = diag(+1 left, -1 right) and
tau = diag(tau_{k_e}).  These hold for the canonical Pearcey kernel, whose
phi and psi satisfy phi''' - tau phi' + x phi = 0 and psi''' - tau psi' - y psi = 0.

Operator products follow one convention throughout: for kernels A and B,
(A delta B)(x, y) = sum_e s_e A(x, xi_e) B(xi_e, y).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .fredholm import NystromSystem, RegionFamily, discretize

__all__ = [
    "PdeState",
    "assemble_state",
    "EQUATIONS",
    "ResidualReport",
    "predicted_differentials",
    "differential_residuals",
    "IdentityReport",
    "closure_identities",
]

EQUATIONS = ("dr", "dr_x", "dr_y", "dq", "dp", "dq'", "dp'", "dq''", "dp''")
_UNKNOWNS = ("r", "rx", "ry", "q", "p", "q1", "p1", "q2", "p2")


@dataclass(frozen=True)
class PdeState:
    xi: np.ndarray
    s: np.ndarray
    tau: np.ndarray
    slices: np.ndarray
    q: np.ndarray
    q1: np.ndarray
    q2: np.ndarray
    p: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    r: np.ndarray
    rx: np.ndarray
    ry: np.ndarray
    rxx: np.ndarray = field(repr=False)
    rxy: np.ndarray = field(repr=False)
    ryy: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.xi)

    def vector(self, name: str) -> np.ndarray:
        return getattr(self, name)


def _check_kernel(kernel):
    if getattr(kernel, "norm", None) != "canonical":
        raise ValidationError("the PDE system is stated for the canonical order-1 Pearcey kernel")


def _endpoint_matrix(system: NystromSystem, eps, dx, dy):
    n = len(eps)
    out = np.empty((n, n))
    by_slice = {}
    for idx, e in enumerate(eps):
        by_slice.setdefault(e.k, []).append(idx)
    for k, rows in by_slice.items():
        xr = [eps[i].xi for i in rows]
        for l, cols in by_slice.items():
            yc = [eps[j].xi for j in cols]
            out[np.ix_(rows, cols)] = system.resolvent(k, xr, l, yc, dx, dy)
    return out


def _endpoint_vectors(system: NystromSystem, eps, which, deriv):
    out = np.empty(len(eps))
    fn = system.q if which == "q" else system.p
    for idx, e in enumerate(eps):
        out[idx] = fn(e.k, [e.xi], deriv)[0]
    return out


def assemble_state(kernel, regions: RegionFamily, nodes_per_interval: int = 32) -> PdeState:
    _check_kernel(kernel)
    if regions.is_empty:
        raise ValidationError("regions must contain at least one interval")
    system = discretize(kernel, regions, nodes_per_interval)
    eps = regions.endpoints()
    taus = kernel.taus
    mats = {name: _endpoint_matrix(system, eps, dx, dy)
            for name, (dx, dy) in {"r": (0, 0), "rx": (1, 0), "ry": (0, 1),
                                   "rxx": (2, 0), "rxy": (1, 1), "ryy": (0, 2)}.items()}
    vecs = {f"{w}{'' if d == 0 else d}": _endpoint_vectors(system, eps, w, d) for w in ("q", "p") for d in range(3)}
    return PdeState(
        xi=np.array([e.xi for e in eps]),
        s=np.array([e.sign for e in eps], float),
        tau=np.array([taus[e.k] for e in eps]),
        slices=np.array([e.k for e in eps]),
        **vecs,
        **mats,
    )


def predicted_differentials(st: PdeState, index: int) -> dict[str, np.ndarray]:
    """Right-hand sides of the nine equations for a unit move of endpoint ``index``."""
    n = st.size
    E = np.zeros((n, n))
    E[index, index] = 1.0
    S = np.diag(st.s)
    T = np.diag(st.tau)
    X = np.diag(st.xi)
    r, rx, ry, rxx, rxy, ryy = st.r, st.rx, st.ry, st.rxx, st.rxy, st.ryy
    q, q1, q2, p, p1, p2 = st.q, st.q1, st.q2, st.p, st.p1, st.p2
    return {
        "dr": -r @ S @ E @ r + E @ rx + ry @ E,
        "dr_x": -rx @ S @ E @ r + E @ rxx + rxy @ E,
        "dr_y": -r @ S @ E @ ry + E @ rxy + ryy @ E,
        "dq": E @ q1 - r @ S @ E @ q,
        "dp": p1 @ E - p @ E @ S @ r,
        "dq'": E @ q2 - rx @ S @ E @ q,
        "dp'": p2 @ E - p @ E @ S @ ry,
        "dq''": E @ (T @ q1 - X @ q + r @ S @ q2 - ry @ S @ q1 + ryy @ S @ q - r @ T @ S @ q) - rxx @ S @ E @ q,
        "dp''": (p1 @ T + p @ X + p2 @ S @ r - p1 @ S @ rx + p @ S @ rxx - p @ S @ T @ r) @ E - p @ E @ S @ ryy,
    }


def _difference(kernel, regions, index, h, nodes):
    xi = regions.endpoints()[index].xi
    plus = assemble_state(kernel, regions.with_endpoint(index, xi + h), nodes)
    minus = assemble_state(kernel, regions.with_endpoint(index, xi - h), nodes)
    return {eq: (plus.vector(u) - minus.vector(u)) / (2 * h) for eq, u in zip(EQUATIONS, _UNKNOWNS)}


@dataclass(frozen=True)
class ResidualReport:
    h: float
    central: dict[str, float]
    richardson: dict[str, float]

    @property
    def max_central(self) -> float:
        return max(self.central.values())

    @property
    def max_richardson(self) -> float:
        return max(self.richardson.values())


def differential_residuals(kernel, regions: RegionFamily, h: float = 1e-3, nodes_per_interval: int = 32,
                           richardson: bool = True) -> ResidualReport:
    """Max |finite difference - predicted differential| per equation.

    Central differences with step h; with ``richardson`` the h/2 differences
    are combined as (4 D_{h/2} - D_h) / 3 and reported separately.
    """
    if not 1e-6 <= h <= 1e-2:
        raise ValidationError("h must lie in [1e-6, 1e-2]")
    base = assemble_state(kernel, regions, nodes_per_interval)
    central = dict.fromkeys(EQUATIONS, 0.0)
    extrap = dict.fromkeys(EQUATIONS, 0.0)
    for index in range(base.size):
        pred = predicted_differentials(base, index)
        d1 = _difference(kernel, regions, index, h, nodes_per_interval)
        d2 = _difference(kernel, regions, index, h / 2, nodes_per_interval) if richardson else None
        for eq in EQUATIONS:
            central[eq] = max(central[eq], float(np.max(np.abs(d1[eq] - pred[eq]))))
            if richardson:
                rich = (4 * d2[eq] - d1[eq]) / 3
                extrap[eq] = max(extrap[eq], float(np.max(np.abs(rich - pred[eq]))))
    return ResidualReport(h, central, extrap if richardson else {})


class _Evaluator:
    """Cached access to R, Q, P derivatives on one Nystrom system."""

    def __init__(self, system: NystromSystem):
        self.system = system
        self.eps = system.regions.endpoints()
        self._memo = {}

    def _cached(self, key, fn):
        if key not in self._memo:
            self._memo[key] = fn()
        return self._memo[key]

    def R(self, i, x, j, y, dx=0, dy=0):
        return self._cached(("R", i, x, j, y, dx, dy),
                            lambda: self.system.resolvent(i, [x], j, [y], dx, dy)[0, 0])

    def Q(self, i, x, d=0):
        return self._cached(("Q", i, x, d), lambda: self.system.q(i, [x], d)[0])

    def P(self, j, y, d=0):
        return self._cached(("P", j, y, d), lambda: self.system.p(j, [y], d)[0])

    def delta(self, i, x, j, y, terms):
        """sum_e s_e sum_(c, a, b) c A(x, xi_e) B(xi_e, y) with A, B given as
        (dx, dy) derivative orders of R; c may depend on tau_k via a callable."""
        total = 0.0
        for e in self.eps:
            for coef, a, b in terms:
                c = coef(e.k) if callable(coef) else coef
                total += e.sign * c * self.R(i, x, e.k, e.xi, *a) * self.R(e.k, e.xi, j, y, *b)
        return total


@dataclass(frozen=True)
class IdentityReport:
    residuals: dict[str, float]
    points: int

    def __getitem__(self, key):
        return self.residuals[key]


def _probe_points(regions: RegionFamily, m: int, extra):
    eps = regions.endpoints()
    pts = [(e.k, f.k, e.xi, f.xi) for e in eps for f in eps]
    if extra is None:
        rng = np.random.default_rng(20240601)
        extra = [(int(rng.integers(m)), int(rng.integers(m)), *rng.uniform(-1.5, 1.5, 2)) for _ in range(5)]
    return pts + [tuple(p) for p in extra]


def closure_identities(kernel, regions: RegionFamily, probes=None, nodes_per_interval: int = 32) -> IdentityReport:
    """Max residuals of the commutator-derived identities.

    Keys: ``first`` (R_x + R_y = -QP + R delta R), ``second_left``,
    ``second_right``, ``third`` ([D^3, R]), ``cubic`` ([D^3 - tau D + M, R]),
    ``tau_commutator`` ([tau D - M, R]), ``known_combination``
    (tau_i R_xx + tau_j R_xy), ``q_triple`` (the ODE for Q).
    Probes are (i, j, x, y); all endpoint pairs are always included.
    """
    _check_kernel(kernel)
    system = discretize(kernel, regions, nodes_per_interval)
    ev = _Evaluator(system)
    taus = kernel.taus
    pts = _probe_points(regions, kernel.m, probes)
    res = dict.fromkeys(("first", "second_left", "second_right", "third", "cubic", "tau_commutator",
                         "known_combination", "q_triple"), 0.0)
    tk = lambda k: taus[k]  # noqa: E731
    neg_tk = lambda k: -taus[k]  # noqa: E731
    for i, j, x, y in pts:
        R = lambda dx, dy: ev.R(i, x, j, y, dx, dy)  # noqa: E731
        Q = [ev.Q(i, x, d) for d in range(4)]
        P = [ev.P(j, y, d) for d in range(3)]
        ti, tj = taus[i], taus[j]
        dl = lambda terms: ev.delta(i, x, j, y, terms)  # noqa: E731
        checks = {
            "first": (R(1, 0) + R(0, 1), -Q[0] * P[0] + dl([(1, (0, 0), (0, 0))])),
            "second_left": (R(2, 0) + R(1, 1), -Q[1] * P[0] + dl([(1, (1, 0), (0, 0))])),
            "second_right": (R(1, 1) + R(0, 2), -Q[0] * P[1] + dl([(1, (0, 0), (0, 1))])),
            "third": (
                R(3, 0) + R(0, 3),
                -Q[2] * P[0] + Q[1] * P[1] - Q[0] * P[2]
                + dl([(1, (2, 0), (0, 0)), (-1, (1, 0), (0, 1)), (1, (0, 0), (0, 2))]),
            ),
            "cubic": (
                R(3, 0) + R(0, 3) - ti * R(1, 0) - tj * R(0, 1) + (x - y) * R(0, 0),
                dl([(-1, (0, 1), (1, 0)), (1, (0, 2), (0, 0)), (1, (0, 0), (2, 0)), (neg_tk, (0, 0), (0, 0))]),
            ),
            "tau_commutator": (
                ti * R(1, 0) + tj * R(0, 1) - (x - y) * R(0, 0),
                -Q[2] * P[0] + Q[1] * P[1] - Q[0] * P[2]
                + dl([(1, (2, 0), (0, 0)), (-1, (1, 0), (0, 1)), (1, (0, 0), (0, 2)),
                      (1, (0, 1), (1, 0)), (-1, (0, 2), (0, 0)), (-1, (0, 0), (2, 0)), (tk, (0, 0), (0, 0))]),
            ),
            "known_combination": (
                ti * R(2, 0) + tj * R(1, 1),
                R(0, 0) + (x - y) * R(1, 0) - Q[3] * P[0] + Q[2] * P[1] - Q[1] * P[2]
                + dl([(1, (3, 0), (0, 0)), (-1, (2, 0), (0, 1)), (1, (1, 0), (0, 2)), (1, (1, 1), (1, 0)),
                      (-1, (1, 2), (0, 0)), (-1, (1, 0), (2, 0)), (tk, (1, 0), (0, 0))]),
            ),
        }
        for name, (lhs, rhs) in checks.items():
            res[name] = max(res[name], abs(lhs - rhs))
        # Q''' - tau Q' + x Q = -R_y delta Q' + R_yy delta Q + R delta Q'' - R tau delta Q
        lhs = Q[3] - ti * Q[1] + x * Q[0]
        rhs = 0.0
        for e in ev.eps:
            qe = [ev.Q(e.k, e.xi, d) for d in range(3)]
            rhs += e.sign * (-ev.R(i, x, e.k, e.xi, 0, 1) * qe[1] + ev.R(i, x, e.k, e.xi, 0, 2) * qe[0]
                             + ev.R(i, x, e.k, e.xi, 0, 0) * (qe[2] - taus[e.k] * qe[0]))
        res["q_triple"] = max(res["q_triple"], abs(lhs - rhs))
    return IdentityReport(res, len(pts))
