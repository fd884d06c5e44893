import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import gamma

from pearcey.contours import (
    QuadSettings,
    Segment,
    build_rule,
    higher_order_t_contour,
    imaginary_axis_contour,
    integrate,
    order_quad,
    pearcey_t_contour,
)
from pearcey.errors import ValidationError

QUARTIC_RAY = 4 ** (-0.75) * gamma(0.25)  # int_0^inf exp(-r^4/4) dr


def test_pearcey_rays_and_orientation():
    path = pearcey_t_contour()
    args = sorted(round(a / math.pi, 12) for a in path.ray_arguments())
    assert args == [-0.75, -0.25, 0.25, 0.75]
    def rounded(z):
        return complex(round(z.real, 12), round(z.imag, 12))

    incoming = {rounded(s.direction) for s in path.segments if s.incoming}
    outgoing = {rounded(s.direction) for s in path.segments if not s.incoming}
    e = np.exp
    assert incoming == {rounded(-e(1j * math.pi / 4)), rounded(-e(-3j * math.pi / 4))}
    assert outgoing == {rounded(e(-1j * math.pi / 4)), rounded(e(3j * math.pi / 4))}


def test_rotation_bounds():
    with pytest.raises(ValidationError):
        pearcey_t_contour(math.pi / 8)
    with pytest.raises(ValidationError):
        pearcey_t_contour(-0.01)


def test_rotated_rule_nodes_are_in_decay_sector():
    rule = build_rule(pearcey_t_contour(0.2))
    t = rule.nodes
    assert np.all((t**2).real > 0)
    assert np.all((t**4).real < 0)


def test_quartic_phase_cancellation():
    rule = build_rule(pearcey_t_contour())
    assert abs(integrate(rule, lambda t: np.exp(t**4 / 4))) < 1e-13


def test_imaginary_axis_integrals():
    rule = build_rule(imaginary_axis_contour())
    val = integrate(rule, lambda s: np.exp(-(s**4) / 4))
    assert abs(val - 2j * QUARTIC_RAY) < 1e-12
    assert abs(integrate(rule, lambda s: s * np.exp(-(s**4) / 4))) < 1e-13


def test_imaginary_axis_orientation():
    T = 3.0
    rule = build_rule(imaginary_axis_contour(), truncation_radius=T, panels=3, nodes_per_panel=4)
    assert abs(np.sum(rule.weights) - 2j * T) < 1e-13


def test_unit_segment_weights():
    d = complex(math.cos(0.3), math.sin(0.3))
    from pearcey.contours import ContourPath

    rule = build_rule(ContourPath((Segment(0j, d, length=1.0),)), 10.0, 4, 6)
    assert abs(np.sum(rule.weights) - d) < 1e-13
    assert np.all(rule.nodes != 0)


def test_real_ray_quartic():
    from pearcey.contours import ContourPath

    rule = build_rule(ContourPath((Segment(0j, 1 + 0j),)))
    assert abs(integrate(rule, lambda r: np.exp(-(r**4) / 4)) - QUARTIC_RAY) < 1e-10
    finer = build_rule(ContourPath((Segment(0j, 1 + 0j),)), nodes_per_panel=48)
    assert abs(integrate(finer, lambda r: np.exp(-(r**4) / 4)) - integrate(rule, lambda r: np.exp(-(r**4) / 4))) < 1e-12


@pytest.mark.parametrize("R", [1, 2, 3, 4, 5, 6])
def test_higher_order_rays_decay(R):
    path = higher_order_t_contour(R)
    theta = R * math.pi / (2 * R + 2)
    args = sorted(path.ray_arguments())
    assert np.allclose(args, sorted([theta, -theta, math.pi - theta, -(math.pi - theta)]))
    rule = build_rule(path, 3.0, 4, 8)
    vals = (-1) ** (R + 1) * rule.nodes ** (2 * R + 2)
    assert np.all(np.abs(vals.imag) <= 1e-9 * np.abs(vals))
    assert np.all(vals.real < 0)


def test_order_one_matches_pearcey_contour():
    assert higher_order_t_contour(1) == pearcey_t_contour()


def test_order_two_angles():
    assert np.allclose(sorted(higher_order_t_contour(2).ray_arguments()),
                       sorted([math.pi / 3, -math.pi / 3, 2 * math.pi / 3, -2 * math.pi / 3]))


def test_bad_rule_sizes():
    with pytest.raises(ValidationError):
        build_rule(imaginary_axis_contour(), truncation_radius=0)
    with pytest.raises(ValidationError):
        build_rule(imaginary_axis_contour(), panels=1)
    with pytest.raises(ValidationError):
        higher_order_t_contour(0)
    with pytest.raises(ValidationError):
        Segment(0j, 2 + 0j)


def test_rule_arrays_are_read_only():
    rule = build_rule(imaginary_axis_contour())
    with pytest.raises(ValueError):
        rule.nodes[0] = 0


def test_order_quad_defaults():
    assert order_quad(1) == QuadSettings()
    q = order_quad(3)
    assert q.vertex_shift < QuadSettings().vertex_shift
    assert q.truncation_radius < QuadSettings().truncation_radius


@given(st.floats(-2, 2), st.floats(-1, 1))
def test_conjugation_gives_imaginary_integral(x, tau):
    # f(conj t) = conj f(t) and the contour maps to its reverse: the integral is imaginary
    rule = build_rule(pearcey_t_contour())
    terms = rule.weights * np.exp(rule.nodes**4 / 4 - tau * rule.nodes**2 / 2 + x * rule.nodes)
    val = np.sum(terms)
    assert abs(val.real) < 1e-12 * max(1.0, np.sum(np.abs(terms)))


@given(st.floats(-2, 2))
def test_refinement_stability_on_shifted_exponential(x):
    coarse = build_rule(pearcey_t_contour())
    fine = build_rule(pearcey_t_contour(), 8.0, 16, 48, 0.5**0.5)

    def f(t):
        return np.exp(t**4 / 4 + x * t)

    assert abs(integrate(coarse, f) - integrate(fine, f)) < 1e-10
