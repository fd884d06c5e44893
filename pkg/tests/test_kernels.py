import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pearcey.errors import ValidationError
from pearcey.kernels import (
    PearceyKernel,
    TauGrid,
    e_entry,
    gaussian_block,
    h_entry,
    integrable_entry,
    k_entry,
    limit_from_canonical,
)

K1 = PearceyKernel((0.0,))
K2 = PearceyKernel((-0.3, 0.4))


def test_point_reflection_symmetry():
    g = np.array([-1.0, 0.2, 1.5])
    H = K1.h(0, 0, g, g)
    assert np.max(np.abs(H - K1.h(0, 0, -g, -g))) < 1e-10


@pytest.mark.parametrize("x,y,tau", [(0.0, 0.0, 0.0), (0.3, -0.2, 0.0), (1.0, 1.0, 1.0), (-1.1, 0.6, -0.7)])
def test_integrable_form_matches_double_integral(x, y, tau):
    assert abs(h_entry(PearceyKernel((tau,)), 0, 0, x, y) - integrable_entry(x, y, tau)) < 1e-8


def test_integrable_form_removable_singularity():
    on = integrable_entry(0.4, 0.4, 0.2)
    off = integrable_entry(0.4 + 1e-3, 0.4, 0.2)
    assert abs(on - off) < 1e-3  # the kernel itself moves by O(1e-3)
    assert abs(on - h_entry(PearceyKernel((0.2,)), 0, 0, 0.4, 0.4)) < 1e-8
    assert abs(off - h_entry(PearceyKernel((0.2,)), 0, 0, 0.401, 0.4)) < 1e-6


def test_integrable_form_is_vectorized():
    out = integrable_entry(np.array([0.1, 0.5]), np.array([0.1, -0.5]), 0.0)
    assert out.shape == (2,)


@pytest.mark.parametrize("i,j", [(0, 1), (1, 0), (0, 0)])
def test_heat_flow(i, j):
    x, y, h = 0.3, -0.4, 1e-3
    taus = list(K2.taus)

    def moved(k, d):
        t = taus.copy()
        t[k] += d
        return PearceyKernel(t)

    d_tj = (h_entry(moved(j, h), i, j, x, y) - h_entry(moved(j, -h), i, j, x, y)) / (2 * h)
    d_ti = (h_entry(moved(i, h), i, j, x, y) - h_entry(moved(i, -h), i, j, x, y)) / (2 * h)
    if i != j:
        assert abs(d_tj - 0.5 * h_entry(K2, i, j, x, y, 0, 2)) < 1e-5
        assert abs(d_ti + 0.5 * h_entry(K2, i, j, x, y, 2, 0)) < 1e-5
    else:
        both = 0.5 * (h_entry(K2, i, j, x, y, 0, 2) - h_entry(K2, i, j, x, y, 2, 0))
        assert abs(d_tj - both) < 1e-5


def test_gaussian_part():
    K = PearceyKernel((0.0, 0.5))
    assert abs(e_entry(K, 0, 1, 0.3, 0.3) - 1 / math.sqrt(math.pi)) < 1e-15
    assert e_entry(K, 1, 0, 0.3, 0.3) == 0.0
    assert e_entry(K, 1, 1, 0.3, 0.3) == 0.0


def test_gaussian_semigroup():
    K = PearceyKernel((-0.5, 0.1, 0.6))
    z, w = np.polynomial.legendre.leggauss(200)
    z, w = 12 * z, 12 * w
    x, y = 0.4, -0.3
    conv = np.sum(w * K.e(0, 1, [x], z)[0] * K.e(1, 2, z, [y])[:, 0])
    assert abs(conv - e_entry(K, 0, 2, x, y)) < 1e-10


def test_gaussian_derivatives_match_differences():
    h = 1e-4
    for dx, dy in ((1, 0), (0, 1), (2, 1)):
        exact = gaussian_block([0.3], [-0.2], 0.7, 1.0, dx, dy)[0, 0]
        if dx:
            num = (gaussian_block([0.3 + h], [-0.2], 0.7, 1.0, dx - 1, dy) - gaussian_block([0.3 - h], [-0.2], 0.7, 1.0, dx - 1, dy))[0, 0] / (2 * h)
        else:
            num = (gaussian_block([0.3], [-0.2 + h], 0.7, 1.0, dx, dy - 1) - gaussian_block([0.3], [-0.2 - h], 0.7, 1.0, dx, dy - 1))[0, 0] / (2 * h)
        assert abs(exact - num) < 1e-6


def test_single_time_kernel_has_no_gaussian_part():
    g = np.linspace(-1, 1, 4)
    assert np.array_equal(K1.k(0, 0, g, g), K1.h(0, 0, g, g))


@given(st.integers(0, 1), st.integers(0, 1), st.floats(-2, 2), st.floats(-2, 2))
def test_first_commutator(i, j, x, y):
    lhs = k_entry(K2, i, j, x, y, 1, 0) + k_entry(K2, i, j, x, y, 0, 1)
    assert abs(lhs + K2.phi(i, x)[0] * K2.psi(j, y)[0]) < 1e-7


def test_off_diagonal_block_refines():
    K = PearceyKernel((-0.5, 0.5))
    assert abs(k_entry(K, 0, 1, 0.0, 0.0) - k_entry(K.refined(), 0, 1, 0.0, 0.0)) < 1e-9


@given(st.floats(-2, 2), st.floats(-2, 2), st.integers(0, 2), st.integers(0, 2))
def test_double_integral_refines(x, y, dx, dy):
    assert abs(h_entry(K2, 0, 1, x, y, dx, dy) - h_entry(K2.refined(), 0, 1, x, y, dx, dy)) < 1e-10


def test_one_point_density_is_nonnegative():
    xs = np.linspace(-4, 4, 33)
    for tau in (-1.0, 0.0, 1.0):
        K = PearceyKernel((tau,))
        assert np.min(np.diag(K.k(0, 0, xs, xs))) >= -1e-9


def test_limit_form_is_a_rescaling_of_canonical():
    lam = 2**0.25 / 4
    tau_lim = (-0.1, 0.2)
    can = PearceyKernel(tuple(8 * t / math.sqrt(2) for t in tau_lim))
    lim = PearceyKernel(tau_lim, 1, "limit")
    for (x, y), (dx, dy) in zip(((0.2, -0.3), (-0.5, 0.1)), ((0, 0), (1, 0))):
        expect = limit_from_canonical(h_entry(can, 0, 1, x / lam, y / lam, dx, dy), dx, dy)
        assert abs(expect - h_entry(lim, 0, 1, x, y, dx, dy)) < 1e-9 * max(1, abs(expect))


@pytest.mark.parametrize("R", [2, 3, 4, 5, 6])
def test_higher_order_commutator_and_refinement(R):
    K = PearceyKernel((-0.2, 0.3), R)
    x, y = np.array([-1.2, 0.4]), np.array([0.9, -0.6])
    for i in range(2):
        for j in range(2):
            com = K.k(i, j, x, y, 1, 0) + K.k(i, j, x, y, 0, 1) + 4 * np.outer(K.phi(i, x), K.psi(j, y))
            assert np.max(np.abs(com)) < 1e-7
    assert np.max(np.abs(K.h(0, 1, x, y) - K.refined().h(0, 1, x, y))) < 1e-9


def test_tau_grid_validation():
    with pytest.raises(ValidationError):
        TauGrid((0.2, 0.2))
    with pytest.raises(ValidationError):
        TauGrid(())
    with pytest.raises(ValidationError):
        K2.h(2, 0, [0.0], [0.0])
    assert len(TauGrid((0.0, 1.0))) == 2
