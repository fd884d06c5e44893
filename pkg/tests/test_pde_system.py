import numpy as np
import pytest

from pearcey.errors import ValidationError
from pearcey.fredholm import RegionFamily, TransposedKernel, discretize, gap_probability, log_det_gradient
from pearcey.kernels import PearceyKernel
from pearcey.pde_system import EQUATIONS, assemble_state, closure_identities, differential_residuals

K1 = PearceyKernel((0.0,))
K2 = PearceyKernel((-0.3, 0.4))
X1 = RegionFamily.single(-1.0, 1.0)
X2 = RegionFamily((((-1.0, 0.5),), ((0.0, 1.0),)))


def test_state_shape_and_signs():
    st = assemble_state(K1, X1)
    assert st.size == 2
    assert list(st.s) == [1.0, -1.0]
    assert st.r.shape == (2, 2)
    st2 = assemble_state(K2, X2)
    assert list(st2.tau) == [-0.3, -0.3, 0.4, 0.4]


def test_shrinking_interval_gives_kernel_values():
    errs = []
    for delta in (1e-2, 1e-3):
        st = assemble_state(K1, RegionFamily.single(-delta, delta), 8)
        errs.append(np.max(np.abs(st.r - K1.k(0, 0, st.xi, st.xi))))
    assert errs[1] < errs[0] / 5
    assert errs[1] < 1e-2


def test_p_vectors_are_dual_q_vectors():
    st = assemble_state(K2, X2)
    dual = discretize(TransposedKernel(K2), X2)
    for idx, e in enumerate(X2.endpoints()):
        assert abs(st.p[idx] - dual.q(e.k, [e.xi])[0]) < 1e-9
        assert abs(st.p1[idx] - dual.q(e.k, [e.xi], 1)[0]) < 1e-9


@pytest.mark.parametrize("kernel,regions", [(K1, X1), (K2, X2)])
def test_differential_system(kernel, regions):
    rep = differential_residuals(kernel, regions, h=1e-3)
    assert set(rep.central) == set(EQUATIONS)
    assert rep.max_central < 5e-5
    # extrapolation removes the O(h^2) term, confirming the residual is truncation error
    assert rep.max_richardson < rep.max_central / 10


def test_shared_endpoint_is_a_phantom():
    # moving the common end of two touching intervals leaves chi, and the determinant, unchanged
    split = X1.split(0, 0, 0.2)
    base = gap_probability(discretize(K1, split))
    moved = split.with_endpoint(2, 0.25).with_endpoint(1, 0.25)
    assert abs(gap_probability(discretize(K1, moved)) - base) < 1e-9
    grad = log_det_gradient(discretize(K1, split))
    assert abs(grad[1] + grad[2]) < 1e-10


def test_gradient_integrates_to_determinant_change():
    eta = 0.02
    sys0 = discretize(K1, X1)
    moved = X1.with_endpoint(1, 1.0 + eta)
    sys1 = discretize(K1, moved)
    trapezoid = 0.5 * eta * (log_det_gradient(sys0)[1] + log_det_gradient(sys1)[1])
    change = np.log(gap_probability(sys1)) - np.log(gap_probability(sys0))
    assert abs(trapezoid - change) < eta**2


@pytest.mark.parametrize("kernel,regions", [(K1, X1), (K2, X2)])
def test_closure_identities(kernel, regions):
    rep = closure_identities(kernel, regions)
    assert rep["first"] < 1e-7
    assert rep["second_left"] < 1e-7 and rep["second_right"] < 1e-7
    assert rep["third"] < 1e-5
    assert rep["cubic"] < 1e-5
    assert rep["tau_commutator"] < 1e-5
    assert rep["known_combination"] < 1e-5
    assert rep["q_triple"] < 1e-6
    assert rep.points == len(regions.endpoints()) ** 2 + 5


def test_closure_with_explicit_probes():
    rep = closure_identities(K2, X2, probes=[(0, 1, 0.3, -0.7), (1, 0, 1.2, 0.1)])
    assert rep.points == 18
    assert max(rep.residuals.values()) < 1e-5


def test_validation():
    with pytest.raises(ValidationError):
        assemble_state(K1, RegionFamily.empty(1))
    with pytest.raises(ValidationError):
        assemble_state(PearceyKernel((0.0,), 1, "limit"), X1)
    with pytest.raises(ValidationError):
        differential_residuals(K1, X1, h=0.1)
