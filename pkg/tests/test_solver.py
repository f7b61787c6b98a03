import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genfrechet.costs import CostFunction, ScalarFunction, empirical_objective
from genfrechet.distributions import discrete, point_mass, vmf
from genfrechet.domains import DomainSpec
from genfrechet.metricspaces import DescriptorSpace
from genfrechet.setmetrics import one_sided_hausdorff
from genfrechet.solver import (
    SLACK,
    SolverError,
    empirical_mean_set,
    eps_argmin_finite,
    population_mean_set,
)

CIRCLE = DescriptorSpace.circle()
S2 = DescriptorSpace.sphere(2)
FULL = DomainSpec.full()


def test_eps_argmin_examples():
    assert eps_argmin_finite([("a", 0.0), ("b", 1.0), ("c", 2.0)], 1.0).points == ["a", "b"]
    assert eps_argmin_finite([("a", 3.0), ("b", 3.0)], 0.0).points == ["a", "b"]
    single = eps_argmin_finite([("a", 0.5), ("b", 0.2), ("c", 0.9)], 0.0)
    assert single.points == ["b"] and single.value == 0.2
    with pytest.raises(SolverError):
        eps_argmin_finite([], 0.0)


@settings(max_examples=150, deadline=None)
@given(
    vals=st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=40),
    e1=st.floats(0, 100),
    e2=st.floats(0, 100),
)
def test_eps_argmin_nesting(vals, e1, e2):
    lo, hi = sorted((e1, e2))
    pairs = list(enumerate(vals))
    small = set(eps_argmin_finite(pairs, lo).points)
    large = set(eps_argmin_finite(pairs, hi).points)
    assert small <= large
    best = min(vals)
    assert small == {i for i, v in pairs if v <= best + lo + SLACK}
    assert eps_argmin_finite(pairs, lo).value == best


def test_euclidean_mean_closed_form():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(50, 3)) + np.array([1.0, -2.0, 0.5])
    space = DescriptorSpace.euclidean(3)
    ms = empirical_mean_set(CostFunction.lp(space, 2), x, FULL)
    assert len(ms) == 1
    np.testing.assert_allclose(ms.points[0], x.mean(axis=0), atol=1e-9)
    assert ms.value == pytest.approx(np.mean(np.sum((x - x.mean(axis=0)) ** 2, axis=1)), rel=1e-12)


def test_projection_onto_axis():
    space = DescriptorSpace.euclidean(2)
    x = np.array([[0.0, 0.0], [2.0, 2.0], [1.5, 0.5], [0.5, 1.5]])
    axis = DomainSpec.affine([[1.0, 0.0]], [0.0, 0.0])
    ms = empirical_mean_set(CostFunction.lp(space, 2), x, axis)
    np.testing.assert_allclose(ms.points, [[1.0, 0.0]], atol=1e-9)


def test_line_median_interval_brute_force():
    space = DescriptorSpace.euclidean(1, [(0, 10)])
    x = np.array([1.0, 2.0, 4.0, 7.0])
    ms = empirical_mean_set(CostFunction.lp(space, 1), x, FULL, method="brute_force", resolution=1001)
    assert ms.points.min() == pytest.approx(2.0) and ms.points.max() == pytest.approx(4.0)


def test_circle_antipodal_two_point_set():
    ms = empirical_mean_set(CostFunction.lp(CIRCLE, 2), [0.0, math.pi], FULL)
    assert sorted(ms.points[:, 0]) == pytest.approx([math.pi / 2, 3 * math.pi / 2], abs=1e-6)
    assert ms.value == pytest.approx(math.pi ** 2 / 4, rel=1e-9)


def test_finite_space_solver_is_exact():
    space = DescriptorSpace.finite([[0, 1, 2], [1, 0, 1], [2, 1, 0]])
    ms = empirical_mean_set(CostFunction.lp(space, 2), [0, 2], FULL, method="brute_force", resolution=3)
    assert ms.points[:, 0].tolist() == [1.0]


def test_brute_force_value_is_grid_minimum():
    rng = np.random.default_rng(4)
    x = rng.uniform(0, 2 * math.pi, 30)
    ms = empirical_mean_set(CostFunction.lp(CIRCLE, 2), x, FULL, method="brute_force", resolution=1000)
    assert ms.value == ms.values.min()
    for p in ms.points:
        assert empirical_objective(CostFunction.lp(CIRCLE, 2), x, p) <= ms.value + SLACK


def test_population_examples():
    c = CostFunction.lp(S2, 2)
    pm = population_mean_set(c, point_mass(S2, [0, 1, 0]), FULL)
    np.testing.assert_allclose(pm.points, [[0, 1, 0]], atol=1e-7)
    assert pm.value == pytest.approx(0.0, abs=1e-12)
    two = population_mean_set(CostFunction.lp(CIRCLE, 2), discrete(CIRCLE, [[0.0], [math.pi]], [0.5, 0.5]), FULL)
    assert sorted(two.points[:, 0]) == pytest.approx([math.pi / 2, 3 * math.pi / 2], abs=1e-6)
    mu = np.array([0.0, 0.6, 0.8])
    v = population_mean_set(c, vmf(S2, mu, 5.0), FULL)
    assert v.details["route"] == "quadrature"
    assert one_sided_hausdorff(v.points, mu, S2).one_sided < 1e-5


def test_population_oracle_route_is_labeled():
    c = CostFunction.lp(CIRCLE, 2)
    law = discrete(CIRCLE, [[0.5], [1.0]], [0.5, 0.5])
    ms = population_mean_set(c, law, FULL, route="oracle")
    assert ms.details["route"] == "oracle"
    assert ms.points[0, 0] == pytest.approx(0.75, abs=5e-3)


def test_h_frechet_on_circle():
    c = CostFunction.h_of_d(CIRCLE, ScalarFunction.log1p_power(2))
    x = np.array([0.2, 0.3, 0.4])
    cont = empirical_mean_set(c, x, FULL)
    brute = empirical_mean_set(c, x, FULL, method="brute_force", resolution=10_000)
    assert one_sided_hausdorff(cont.points, brute.points, CIRCLE).one_sided <= 2 * math.pi / 10_000


def test_bbox_touch_warns():
    space = DescriptorSpace.euclidean(1, [(0, 1)])
    ms = empirical_mean_set(CostFunction.lp(space, 2), [5.0, 6.0], FULL, method="brute_force", resolution=101)
    assert any("bounding box" in w for w in ms.warnings)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10 ** 6), shift=st.tuples(st.floats(-5, 5), st.floats(-5, 5)))
def test_translation_equivariance(seed, shift):
    rng = np.random.default_rng(seed)
    space = DescriptorSpace.euclidean(2)
    x = rng.normal(size=(20, 2))
    v = np.array(shift)
    c = CostFunction.lp(space, 2)
    a = empirical_mean_set(c, x, FULL).points
    b = empirical_mean_set(c, x + v, FULL).points
    np.testing.assert_allclose(b, a + v, atol=1e-9)


def test_empty_sample_is_error():
    with pytest.raises(SolverError):
        empirical_mean_set(CostFunction.lp(CIRCLE, 2), np.zeros((0, 1)), FULL)
