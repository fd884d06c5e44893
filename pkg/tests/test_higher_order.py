import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pearcey.errors import DegeneracyError, ValidationError
from pearcey.higher_order import (
    expected_power_sums,
    heat_flow_ratio,
    higher_finite_n_product,
    higher_order_kernel,
    log_product_series,
    root_polynomial,
    singularity_roots,
)
from pearcey.kernels import PearceyKernel


@pytest.mark.parametrize("R", range(1, 9))
def test_power_sums(R):
    system = singularity_roots(R)
    assert len(system.roots) == R
    assert np.max(system.power_sum_residuals()) < 1e-12
    assert system.delta == R / (R + 1)


def test_low_order_roots():
    assert singularity_roots(1).roots == (1 + 0j,)
    r2 = np.sort_complex(np.asarray(singularity_roots(2).roots))
    assert np.max(np.abs(r2 - np.array([0.5 - 0.5j, 0.5 + 0.5j]))) < 1e-12


def test_exact_coefficients():
    assert root_polynomial(3) == [Fraction(1), Fraction(-1), Fraction(1, 2), Fraction(-1, 6)]
    assert expected_power_sums(2) == [1, 0, Fraction(-1, 2)]


def test_order_bounds():
    for bad in (0, 9, 2.5):
        with pytest.raises(ValidationError):
            singularity_roots(bad)


@given(st.integers(1, 4), st.complex_numbers(max_magnitude=1.5), st.integers(5, 200))
def test_product_is_one_on_the_diagonal(R, s, n):
    assert abs(higher_finite_n_product(singularity_roots(R), s, s, n) - 1) < 1e-10


@pytest.mark.parametrize("R", [1, 2, 3])
def test_product_tends_to_series(R):
    roots = singularity_roots(R)
    s, t = 0.3 + 0.4j, -0.5 + 0.2j
    errs = [abs(np.log(higher_finite_n_product(roots, s, t, n)) - log_product_series(roots, s, t, n)) for n in (100, 1000)]
    # the neglected terms are O(n^-(R+1))
    assert errs[1] < errs[0] / 10
    first = abs(np.log(higher_finite_n_product(roots, s, t, 10_000)) - (t**2 - s**2))
    assert first < 1e-3


def test_order_one_product_is_the_cusp_factor():
    s, t, n = 0.3j, 0.2 + 0.1j, 50
    expect = ((1 - s * s / n) / (1 - t * t / n)) ** n
    assert abs(higher_finite_n_product(singularity_roots(1), s, t, n) - expect) < 1e-12 * abs(expect)


def test_product_pole():
    roots = singularity_roots(1)
    with pytest.raises(DegeneracyError):
        higher_finite_n_product(roots, 0.0, math.sqrt(10), 10)
    with pytest.raises(ValidationError):
        higher_finite_n_product(roots, 0.0, 0.0, 0)


def test_order_one_kernel_is_the_limit_kernel():
    g = np.linspace(-1, 1, 4)
    a, b = higher_order_kernel(1, (-0.1, 0.2)), PearceyKernel((-0.1, 0.2), 1, "limit")
    assert np.array_equal(a.k(0, 1, g, g), b.k(0, 1, g, g))


@pytest.mark.parametrize("R", [1, 2, 3])
def test_heat_flow_constant(R):
    K = higher_order_kernel(R, (-0.2, 0.3))
    assert abs(heat_flow_ratio(K, 0, 1, 0.3, -0.4) - 0.25) < 1e-5


def test_heat_flow_constant_canonical():
    assert abs(heat_flow_ratio(PearceyKernel((-0.2, 0.3)), 0, 1, 0.3, -0.4) - 0.5) < 1e-5
    with pytest.raises(ValidationError):
        heat_flow_ratio(PearceyKernel((-0.2, 0.3)), 1, 1, 0.3, -0.4)
