"""Oriented piecewise-ray contours and graded Gauss rules on them.

All contour integrals in the package go through :func:`build_rule`. Infinite
rays are truncated at a finite radius (never mapped to a finite interval), and
Gauss-Legendre panels are graded geometrically toward the anchored end of each
segment, which is where the double integrals have their near-singular
behaviour.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ValidationError

__all__ = [
    "Segment",
    "ContourPath",
    "QuadratureRule",
    "pearcey_t_contour",
    "imaginary_axis_contour",
    "higher_order_t_contour",
    "build_rule",
    "integrate",
    "QuadSettings",
    "t_rule",
    "s_rule",
]

TAIL_TOL = 1e-18


@dataclass(frozen=True)
class Segment:
    """A straight piece of a contour.

    ``anchor`` is the finite end.  ``direction`` is the unit direction of
    travel.  When ``incoming`` is true the segment arrives at ``anchor`` from
    ``anchor - length * direction``; otherwise it leaves ``anchor``.
    """

    anchor: complex
    direction: complex
    length: float = math.inf
    incoming: bool = False

    def __post_init__(self):
        if abs(abs(self.direction) - 1.0) > 1e-14:
            raise ValidationError(f"segment direction must have unit modulus, got {self.direction!r}")
        if not self.length > 0:
            raise ValidationError("segment length must be positive")

    @property
    def start(self) -> complex:
        if self.incoming:
            return self.anchor - self.length * self.direction
        return self.anchor

    @property
    def ray_argument(self) -> float:
        """Argument of the ray measured outward from the anchor."""
        out = -self.direction if self.incoming else self.direction
        return math.atan2(out.imag, out.real)


@dataclass(frozen=True)
class ContourPath:
    segments: tuple[Segment, ...]

    def ray_arguments(self) -> list[float]:
        return [s.ray_argument for s in self.segments]


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    truncation_radius: float
    panel_grading: float
    nodes_per_panel: int
    panels: int = 0
    # segment index of each node; lets callers split a rule by piece
    piece: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        for arr in (self.nodes, self.weights, self.piece):
            if arr is not None:
                arr.setflags(write=False)

    def __len__(self) -> int:
        return len(self.nodes)

    def integrate(self, values) -> complex:
        return integrate(self, values)


def _unit(angle: float) -> complex:
    return complex(math.cos(angle), math.sin(angle))


def _four_rays(theta: float, vertex_shift: float) -> ContourPath:
    # in from inf*e^{i theta}, out to inf*e^{-i theta}  (right piece)
    # in from -inf*e^{i theta}, out to -inf*e^{-i theta} (left piece)
    e_in, e_out = _unit(theta), _unit(-theta)
    right = complex(vertex_shift, 0.0)
    left = complex(-vertex_shift, 0.0)
    return ContourPath(
        (
            Segment(right, -e_in, incoming=True),
            Segment(right, e_out),
            Segment(left, e_in, incoming=True),
            Segment(left, -e_out),
        )
    )


def pearcey_t_contour(rotation: float = 0.0, vertex_shift: float = 0.0) -> ContourPath:
    """The X-shaped t-contour of the Pearcey integrals.

    ``rotation`` turns every ray toward the real axis by that angle (a
    positive value gives Re t^2 > 0 and still Re t^4 < 0).  ``vertex_shift``
    moves the right pair of rays to meet at +shift and the left pair at
    -shift; the integrands used here are analytic between the two
    placements, so the integral over the shifted path is unchanged while the
    distance to the imaginary s-axis becomes positive.
    """
    if not 0.0 <= rotation < math.pi / 8:
        raise ValidationError(f"rotation must lie in [0, pi/8), got {rotation}")
    if vertex_shift < 0:
        raise ValidationError("vertex_shift must be non-negative")
    return _four_rays(math.pi / 4 - rotation, vertex_shift)


def higher_order_t_contour(order_R: int, rotation: float = 0.0, vertex_shift: float = 0.0) -> ContourPath:
    """Four rays at arguments +-R pi/(2R+2) and pi -+ R pi/(2R+2).

    On each ray (-1)^(R+1) t^(2R+2) is negative real.  ``order_R = 1``
    reproduces :func:`pearcey_t_contour`.
    """
    if int(order_R) != order_R or order_R < 1:
        raise ValidationError(f"order_R must be an integer >= 1, got {order_R}")
    theta = order_R * math.pi / (2 * order_R + 2)
    if not 0.0 <= rotation < math.pi / (4 * order_R + 4):
        raise ValidationError("rotation too large for this order")
    if vertex_shift < 0:
        raise ValidationError("vertex_shift must be non-negative")
    return _four_rays(theta - rotation, vertex_shift)


def imaginary_axis_contour() -> ContourPath:
    """-i inf -> 0 -> +i inf, as two rays anchored at the origin."""
    return ContourPath((Segment(0j, 1j, incoming=True), Segment(0j, 1j)))


@lru_cache(maxsize=None)
def _gauss_legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _panel_edges(length: float, panels: int, grading: float) -> np.ndarray:
    # distances from the anchor: 0, L g^(P-1), ..., L g, L
    inner = length * grading ** np.arange(panels - 1, -1, -1, dtype=float)
    return np.concatenate(([0.0], inner))


def build_rule(
    path: ContourPath,
    truncation_radius: float = 8.0,
    panels: int = 8,
    nodes_per_panel: int = 24,
    grading: float = 0.5,
) -> QuadratureRule:
    """Gauss rule along ``path``.

    Each segment is cut at ``min(length, truncation_radius)`` and split into
    ``panels`` panels whose lengths shrink by ``grading`` toward the anchor.
    Weights include the direction factor, so ``sum(w * f(t))`` approximates
    the oriented contour integral.
    """
    if not truncation_radius > 0:
        raise ValidationError("truncation_radius must be positive")
    if panels < 2 or nodes_per_panel < 1:
        raise ValidationError("need panels >= 2 and nodes_per_panel >= 1")
    if not 0.0 < grading < 1.0:
        raise ValidationError("grading must lie in (0, 1)")
    x, w = _gauss_legendre(nodes_per_panel)
    nodes, weights, piece = [], [], []
    for k, seg in enumerate(path.segments):
        length = min(seg.length, truncation_radius)
        edges = _panel_edges(length, panels, grading)
        lo, hi = edges[:-1, None], edges[1:, None]
        r = (0.5 * (hi - lo) * x + 0.5 * (hi + lo)).ravel()
        wr = (0.5 * (hi - lo) * w).ravel()
        if seg.incoming:
            # parametrize by distance to the anchor; travel is toward it
            t = seg.anchor - r * seg.direction
        else:
            t = seg.anchor + r * seg.direction
        nodes.append(t)
        weights.append(wr * seg.direction)
        piece.append(np.full(r.shape, k))
    return QuadratureRule(
        nodes=np.concatenate(nodes),
        weights=np.concatenate(weights),
        truncation_radius=truncation_radius,
        panel_grading=grading,
        nodes_per_panel=nodes_per_panel,
        panels=panels,
        piece=np.concatenate(piece),
    )


def integrate(rule: QuadratureRule, values) -> complex:
    """Sum ``w * f`` in node order (numpy pairwise summation)."""
    values = values(rule.nodes) if callable(values) else np.asarray(values)
    return complex(np.sum(rule.weights * values))


@dataclass(frozen=True)
class QuadSettings:
    """Rule parameters shared by every contour integral of one computation.

    ``vertex_shift`` only affects double integrals (see
    :func:`pearcey_t_contour`); single Pearcey integrals use the unshifted
    contour.
    """

    truncation_radius: float = 8.0
    panels: int = 8
    nodes_per_panel: int = 24
    grading: float = 0.5
    vertex_shift: float = 0.5

    def refined(self) -> "QuadSettings":
        """Twice the panels and twice the nodes per panel."""
        return QuadSettings(
            self.truncation_radius,
            2 * self.panels,
            2 * self.nodes_per_panel,
            self.grading ** 0.5,
            self.vertex_shift,
        )


def order_quad(order_R: int, normalization: str = "canonical") -> QuadSettings:
    """Default rule for the order-R double integrals.

    Canonical order 1 uses the plain defaults; the limit form stretches x by
    about 3.4 and needs more nodes per panel.  For higher orders the integrand grows
    like exp(r^(2R+2)/(R+1)!) just off the real axis, so the vertices move in
    by 1/R, the truncation follows the decay scale and the panels double.
    """
    if order_R == 1:
        return QuadSettings() if normalization == "canonical" else QuadSettings(nodes_per_panel=48)
    radius = (150.0 * math.factorial(order_R + 1)) ** (1.0 / (2 * order_R + 2)) + 1.5
    return QuadSettings(radius, 16, 48, 0.5, 0.3 / order_R)


@lru_cache(maxsize=64)
def t_rule(settings: QuadSettings, order_R: int = 1, rotation: float = 0.0, shifted: bool = False) -> QuadratureRule:
    shift = settings.vertex_shift if shifted else 0.0
    path = higher_order_t_contour(order_R, rotation, shift)
    return build_rule(path, settings.truncation_radius, settings.panels, settings.nodes_per_panel, settings.grading)


@lru_cache(maxsize=16)
def s_rule(settings: QuadSettings) -> QuadratureRule:
    path = imaginary_axis_contour()
    return build_rule(path, settings.truncation_radius, settings.panels, settings.nodes_per_panel, settings.grading)
