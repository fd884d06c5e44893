import math

import numpy as np
import pytest

from pearcey.errors import FeasibilityError, ValidationError
from pearcey.finite_n import heat_p
from pearcey.fredholm import RegionFamily
from pearcey.simulator import McConfig, crossing_probability, refinement_pair, sample_avoidance


def test_crossing_probability():
    assert abs(crossing_probability(1.0, 1.0, 1.0) - math.exp(-2)) < 1e-15
    assert crossing_probability(-0.1, 1.0, 1.0) == 1.0
    assert np.allclose(crossing_probability([1.0, 2.0], [1.0, 0.5], 2.0), [math.exp(-1), math.exp(-1)])


def test_single_bridge_matches_density():
    region = RegionFamily.single(0.5, 1.0)
    res = sample_avoidance(McConfig((0.0,), (1.0,), budget=20_000, seed=5), region, (0.5,))
    x, w = np.polynomial.legendre.leggauss(40)
    x, w = 0.75 + 0.25 * x, 0.25 * w
    inside = np.sum(w * heat_p(0.0, x, 0.5) * heat_p(x, 1.0, 0.5)) / heat_p(0.0, 1.0, 1.0)
    assert abs(res.estimate - (1 - inside)) < 3 * res.stderr
    assert res.acceptance_rate == 1.0


def test_grid_refinement_within_one_stderr():
    config = McConfig((-0.2, 0.2), (-1.0, 1.0), steps=32, budget=100_000, seed=9)
    coarse, fine = refinement_pair(config, RegionFamily.single(-0.1, 0.1), (0.5,))
    assert fine.steps == 64
    assert abs(coarse.estimate - fine.estimate) < coarse.stderr


def test_reproducible_and_thread_independent():
    config = McConfig((-0.3, 0.3), (-0.8, 0.9), budget=5_000, seed=17, chunk_size=2_000)
    region = RegionFamily.single(-0.2, 0.1)
    one = sample_avoidance(config, region, (0.5,), threads=1)
    again = sample_avoidance(config, region, (0.5,), threads=1)
    three = sample_avoidance(config, region, (0.5,), threads=3)
    assert one == again == three
    assert one.accepted == 5_000


def test_two_time_regions():
    config = McConfig((-0.3, 0.3), (-0.8, 0.9), budget=2_000, seed=1)
    res = sample_avoidance(config, RegionFamily((((-0.1, 0.1),), ((0.0, 0.2),))), (0.25, 0.75))
    assert 0 < res.estimate < 1


def test_infeasible_configuration():
    config = McConfig((-1e-3, 1e-3), (-1e-3, 1e-3), budget=1_000, chunk_size=2_000)
    with pytest.raises(FeasibilityError):
        sample_avoidance(config, RegionFamily.single(-0.1, 0.1), (0.5,))


def test_validation():
    with pytest.raises(ValidationError):
        McConfig((0.0,), (1.0,), budget=999)
    with pytest.raises(ValidationError):
        McConfig((0.2, 0.1), (0.0, 1.0))
    with pytest.raises(ValidationError):
        McConfig((0.0, 0.1), (1.0,))
    config = McConfig((0.0,), (1.0,), budget=1_000)
    with pytest.raises(ValidationError):
        sample_avoidance(config, RegionFamily.single(0.0, 1.0), (0.3,))  # not on the 1/64 grid
    with pytest.raises(ValidationError):
        sample_avoidance(config, RegionFamily.single(0.0, 1.0), (0.25, 0.5))
    with pytest.raises(ValidationError):
        sample_avoidance(config, RegionFamily.single(0.0, 1.0), (0.5,), threads=0)
