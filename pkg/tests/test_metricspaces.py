import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genfrechet.metricspaces import (
    DescriptorSpace,
    SpaceError,
    as_points,
    discretize,
    distance,
    exp_map,
    fibonacci_sphere,
    log_map,
    pairwise_distances,
    sphere_covering_radius,
    tangent_basis,
)

CIRCLE = DescriptorSpace.circle()
S2 = DescriptorSpace.sphere(2)
LINE = DescriptorSpace.euclidean(1)


def test_circle_distance_examples():
    assert distance(CIRCLE, 0.0, math.pi) == pytest.approx(math.pi, abs=1e-15)
    assert distance(CIRCLE, 0.1, 2 * math.pi - 0.1) == pytest.approx(0.2, abs=1e-14)
    assert distance(CIRCLE, 7.0, 7.0 - 2 * math.pi) == 0.0


def test_sphere_distance_orthogonal():
    assert distance(S2, [1, 0, 0], [0, 1, 0]) == pytest.approx(math.pi / 2, abs=1e-15)
    assert distance(S2, [0, 0, 1], [0, 0, -1]) == pytest.approx(math.pi, abs=1e-15)


def test_sphere_distance_precise_for_close_points():
    a = np.array([0.0, 0.0, 1.0])
    b = np.array([math.sin(1e-9), 0.0, math.cos(1e-9)])
    assert distance(S2, a, b) == pytest.approx(1e-9, rel=1e-6)


def test_finite_space_uses_matrix():
    space = DescriptorSpace.finite([[0, 1, 3], [1, 0, 2], [3, 2, 0]])
    assert distance(space, 0, 2) == 3.0
    with pytest.raises(SpaceError):
        as_points(space, [3])
    with pytest.raises(SpaceError):
        DescriptorSpace.finite([[0, 1], [2, 0]])


def test_dimension_mismatch_is_an_error():
    with pytest.raises(SpaceError, match="dimension mismatch"):
        distance(S2, [1, 0], [0, 1, 0])
    with pytest.raises(SpaceError, match="not on the sphere"):
        as_points(S2, [1.0, 1.0, 0.0])


def test_exp_log_roundtrip_sphere():
    base = np.array([0.0, 0.0, 1.0])
    v = np.array([0.3, -0.4, 0.0])
    p = exp_map(S2, base, v)
    assert distance(S2, base, p) == pytest.approx(0.5, abs=1e-14)
    np.testing.assert_allclose(log_map(S2, base, p[None, :])[0], v, atol=1e-13)


def test_exp_map_rejects_non_tangent():
    with pytest.raises(SpaceError):
        exp_map(S2, [0, 0, 1], [0, 0, 0.5])
    with pytest.raises(SpaceError):
        exp_map(DescriptorSpace.finite([[0, 1], [1, 0]]), 0, 1)


def test_circle_grid_mesh():
    grid = discretize(CIRCLE, 10_000)
    assert len(grid.points) == 10_000
    assert grid.mesh == pytest.approx(math.pi / 10_000)


def test_euclidean_grid_needs_box():
    with pytest.raises(SpaceError):
        discretize(LINE, 10)
    grid = discretize(DescriptorSpace.euclidean(2, [(-1, 1), (0, 2)]), 11)
    assert grid.points.shape == (121, 2)
    assert grid.mesh == pytest.approx(0.5 * math.hypot(0.2, 0.2))


def test_sphere_covering_radius_against_dense_scan():
    # independent oracle: max over many random probes of the distance to the lattice
    pts = fibonacci_sphere(500)
    mesh = sphere_covering_radius(pts)
    rng = np.random.default_rng(3)
    probes = rng.standard_normal((200_000, 3))
    probes /= np.linalg.norm(probes, axis=1)[:, None]
    scanned = 0.0
    for chunk in np.array_split(probes, 20):
        scanned = max(scanned, float(pairwise_distances(S2, chunk, pts).min(axis=1).max()))
    assert scanned <= mesh + 1e-12
    assert scanned >= 0.9 * mesh


def test_sphere_resolution_1e4_mesh_value():
    grid = discretize(S2, 10_000)
    # frozen from the convex-hull computation; C = mesh * sqrt(k) about 2.73
    assert grid.mesh == pytest.approx(0.02728, abs=5e-5)


angles = st.floats(min_value=-20, max_value=20, allow_nan=False)
unit3 = st.tuples(*[st.floats(-1, 1, allow_nan=False)] * 3).filter(lambda v: np.linalg.norm(v) > 1e-3)


@settings(max_examples=100, deadline=None)
@given(a=angles, b=angles, c=angles)
def test_circle_metric_axioms(a, b, c):
    dab, dbc, dac = distance(CIRCLE, a, b), distance(CIRCLE, b, c), distance(CIRCLE, a, c)
    assert 0.0 <= dab <= math.pi
    assert dab == distance(CIRCLE, b, a)
    assert dac <= dab + dbc + 1e-12


@settings(max_examples=100, deadline=None)
@given(a=unit3, b=unit3, c=unit3)
def test_sphere_metric_axioms(a, b, c):
    a, b, c = (np.array(v) / np.linalg.norm(v) for v in (a, b, c))
    dab, dbc, dac = distance(S2, a, b), distance(S2, b, c), distance(S2, a, c)
    assert 0.0 <= dab <= math.pi + 1e-15
    assert dab == pytest.approx(distance(S2, b, a), abs=1e-15)
    assert dac <= dab + dbc + 1e-12


@settings(max_examples=100, deadline=None)
@given(p=unit3, coeffs=st.tuples(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5)))
def test_sphere_exp_travels_tangent_length(p, coeffs):
    p = np.array(p) / np.linalg.norm(p)
    v = np.array(coeffs) @ tangent_basis(S2, p)
    q = exp_map(S2, p, v)
    assert np.linalg.norm(q) == pytest.approx(1.0, abs=1e-12)
    assert distance(S2, p, q) == pytest.approx(np.linalg.norm(v), abs=1e-9)
