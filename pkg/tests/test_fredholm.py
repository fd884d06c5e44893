import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pearcey.errors import OutOfRangeError, ValidationError
from pearcey.fredholm import (
    RegionFamily,
    TransposedKernel,
    correlation_density,
    discretize,
    gap_probability,
    log_det_gradient,
    qp_vectors,
    resolvent,
)
from pearcey.kernels import PearceyKernel, k_entry

K1 = PearceyKernel((0.0,))
K2 = PearceyKernel((-0.3, 0.4))
X1 = RegionFamily.single(-1.0, 1.0)
X2 = RegionFamily((((-1.0, 0.5),), ((0.0, 1.0),)))


class ConstantKernel:
    m = 1
    taus = (0.0,)

    def __init__(self, value):
        self.value = value

    def k(self, i, j, x, y, dx=0, dy=0):
        return np.full((len(np.atleast_1d(x)), len(np.atleast_1d(y))), self.value if dx == dy == 0 else 0.0)


def test_empty_region():
    system = discretize(K1, RegionFamily.empty(1))
    assert system.size == 0
    assert gap_probability(system) == 1.0
    assert qp_vectors(system, 0, 0.3) == (K1.phi(0, 0.3)[0], K1.psi(0, 0.3)[0])


def test_node_doubling():
    assert abs(gap_probability(discretize(K1, X1, 32)) - gap_probability(discretize(K1, X1, 64))) < 1e-8


def test_frozen_gap_values():
    assert abs(gap_probability(discretize(K1, X1)) - 0.63591042804404) < 1e-12
    assert abs(gap_probability(discretize(K2, X2)) - 0.61332128797839) < 1e-12


def test_block_structure():
    system = discretize(K2, RegionFamily((((-1.0, 1.0),), ((-0.5, 0.5),))), 8)
    assert system.matrix.shape == (16, 16)
    u0, u1 = system.nodes[:8], system.nodes[8:]
    block = K2.k(0, 1, u0, u1) * system.weights[8:][None, :]
    assert np.array_equal(system.matrix[:8, 8:], block)
    assert not np.allclose(block, K2.h(0, 1, u0, u1) * system.weights[8:][None, :])


def test_small_set_expansion():
    for delta in (1e-2, 1e-3):
        det = gap_probability(discretize(K1, RegionFamily.single(-delta, delta), 8))
        x, w = np.polynomial.legendre.leggauss(8)
        trace = np.sum(delta * w * np.diag(K1.k(0, 0, delta * x, delta * x)))
        assert abs(det - (1 - trace)) < 10 * delta**2


@given(st.floats(-1.5, 0.0), st.floats(0.1, 1.5), st.floats(0.05, 1.0), st.floats(0.05, 1.0))
def test_nesting_monotone(lo, hi, grow_lo, grow_hi):
    inner = gap_probability(discretize(K1, RegionFamily.single(lo, hi), 24))
    outer = gap_probability(discretize(K1, RegionFamily.single(lo - grow_lo, hi + grow_hi), 24))
    assert outer <= inner + 1e-12


@given(st.floats(0.05, 0.95))
def test_split_invariance(frac):
    at = -1.0 + 2.0 * frac
    whole = gap_probability(discretize(K1, X1))
    split = gap_probability(discretize(K1, X1.split(0, 0, at)))
    assert abs(whole - split) < 1e-9


def test_tiny_region_resolvent_is_kernel():
    system = discretize(K1, RegionFamily.single(-1e-4, 1e-4), 8)
    assert abs(resolvent(system, 0, 0.3, 0, -0.2) - k_entry(K1, 0, 0, 0.3, -0.2)) < 1e-4


def test_resolvent_defining_relation():
    system = discretize(K2, X2)
    x, y = 0.37, -0.61
    r_nodes = np.concatenate([system.resolvent(k, system.nodes[system.slice_of == k], 1, [y])[:, 0] for k in range(2)])
    rhs = k_entry(K2, 0, 1, x, y) + np.sum(system.kx(0, [x])[0] * system.weights * r_nodes)
    assert abs(resolvent(system, 0, x, 1, y) - rhs) < 1e-10


def test_first_order_identity():
    system = discretize(K1, X1)
    x, y = 0.1, -0.2
    lhs = resolvent(system, 0, x, 0, y, 1, 0) + resolvent(system, 0, x, 0, y, 0, 1)
    q, _ = qp_vectors(system, 0, x)
    _, p = qp_vectors(system, 0, y)
    delta = sum(e.sign * resolvent(system, 0, x, 0, e.xi) * resolvent(system, 0, e.xi, 0, y) for e in X1.endpoints())
    assert abs(lhs - (-q * p + delta)) < 1e-7


def test_transpose_duality():
    system = discretize(K2, X2)
    dual = discretize(TransposedKernel(K2), X2)
    for j, y in ((0, -0.4), (1, 0.2), (1, 1.3)):
        for d in (0, 1):
            assert abs(system.p(j, [y], d)[0] - dual.q(j, [y], d)[0]) < 1e-10


def test_correlation_density():
    assert correlation_density(K1, [(0, 0.4)]) == k_entry(K1, 0, 0, 0.4, 0.4)
    two = correlation_density(K1, [(0, 0.4), (0, -0.3)])
    expect = k_entry(K1, 0, 0, 0.4, 0.4) * k_entry(K1, 0, 0, -0.3, -0.3) - k_entry(K1, 0, 0, 0.4, -0.3) * k_entry(K1, 0, 0, -0.3, 0.4)
    assert abs(two - expect) < 1e-14
    assert correlation_density(K1, []) == 1.0
    with pytest.raises(ValidationError):
        correlation_density(K1, [(0, 0.4), (0, 0.4)])


@pytest.mark.parametrize("kernel,regions", [(K1, X1), (K2, X2)])
def test_log_det_gradient(kernel, regions):
    grad = log_det_gradient(discretize(kernel, regions))
    h = 1e-4
    for index, ep in enumerate(regions.endpoints()):
        up = gap_probability(discretize(kernel, regions.with_endpoint(index, ep.xi + h)))
        down = gap_probability(discretize(kernel, regions.with_endpoint(index, ep.xi - h)))
        assert abs((np.log(up) - np.log(down)) / (2 * h) - grad[index]) < 1e-5
        # shrinking the set raises the probability
        assert np.sign(grad[index]) == ep.sign


def test_out_of_range_is_flagged():
    system = discretize(ConstantKernel(3.0), RegionFamily.single(0.0, 1.0), 4)
    with pytest.raises(OutOfRangeError) as info:
        gap_probability(system)
    assert info.value.value == pytest.approx(-2.0)
    assert gap_probability(system, check_range=False) == pytest.approx(-2.0)


def test_region_validation():
    with pytest.raises(ValidationError):
        RegionFamily((((0.0, 1.0), (0.5, 2.0)),))
    with pytest.raises(ValidationError):
        RegionFamily((((1.0, 0.0),),))
    with pytest.raises(ValidationError):
        RegionFamily((((0.0, float("inf")),),))
    with pytest.raises(ValidationError):
        discretize(K1, X1, 3)
    with pytest.raises(ValidationError):
        discretize(K2, X1)
    with pytest.raises(ValidationError):
        X1.split(0, 0, 2.0)


def test_touching_intervals_and_signs():
    fam = RegionFamily((((-1.0, 0.0), (0.0, 1.0)),))
    assert [e.sign for e in fam.endpoints()] == [1, -1, 1, -1]
    assert fam.contains(0, 0.0) and not fam.contains(0, 1.5)
    assert RegionFamily.empty(2).is_empty
