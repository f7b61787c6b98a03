import math

import numpy as np
import pytest

from genfrechet.distributions import great_circle_noise
from genfrechet.domains import (
    DegenerateFitError,
    DomainError,
    DomainSequence,
    DomainSpec,
    discretize_domain,
    fit_affine_subspace,
    fit_great_circle,
    kuratowski_check,
    realize,
)
from genfrechet.metricspaces import DescriptorSpace, fibonacci_sphere

LINE = DescriptorSpace.euclidean(1)
S2 = DescriptorSpace.sphere(2)


def test_kuratowski_constant_sequence_passes():
    sets = [np.array([[0.0], [1.0]])] * 10
    v = kuratowski_check(sets, np.array([[0.0], [1.0]]), LINE, tail_start=5, tol=1e-9)
    assert v.passed


def test_kuratowski_shrinking_singleton_fails_inner_condition():
    sets = [np.array([[1.0 / n]]) for n in range(1, 201)]
    v = kuratowski_check(sets, np.array([[0.0], [1.0]]), LINE, tail_start=100, tol=0.05)
    assert v.cond_i and not v.cond_ii
    np.testing.assert_allclose(v.witness_ii, [1.0])


def test_kuratowski_alternating_sequence_fails_with_witness():
    sets = [np.array([[(-1.0) ** n]]) for n in range(1, 41)]
    v = kuratowski_check(sets, np.array([[1.0]]), LINE, tail_start=20, tol=0.1)
    assert not v.cond_i
    np.testing.assert_allclose(v.witness_i, [-1.0])


def test_realize_rules():
    target = DomainSpec.full()
    assert realize(DomainSequence(target), 5) is target
    scripted = DomainSequence(target, "scripted", sets=(DomainSpec.finite_set([[1.0]]), DomainSpec.finite_set([[2.0]])))
    assert realize(scripted, 2).points == ((2.0,),)
    with pytest.raises(DomainError):
        realize(scripted, 3)


def test_fit_great_circle_recovers_equator():
    theta = np.linspace(0, 2 * math.pi, 40, endpoint=False)
    z = np.tile([0.1, -0.1], 20)
    x = np.column_stack([np.cos(theta), np.sin(theta), z])
    x /= np.linalg.norm(x, axis=1)[:, None]
    dom = fit_great_circle(x)
    np.testing.assert_allclose(np.abs(dom.normal), [0, 0, 1], atol=1e-8)


def test_fit_great_circle_degenerate_inputs():
    with pytest.raises(DegenerateFitError):
        fit_great_circle([[0, 0, 1], [0, 0, 1], [0, 0, 1]])
    with pytest.raises(DegenerateFitError):
        fit_great_circle([[0, 0, 1], [1, 0, 0]])
    with pytest.raises(DegenerateFitError):
        # uniform on the octahedron vertices: all moment eigenvalues tie
        fit_great_circle([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]])


def test_fit_great_circle_matches_exhaustive_normal_search():
    # oracle: brute-force minimization of sum (x . n)^2 over a dense normal grid
    rng = np.random.default_rng(11)
    law = great_circle_noise(S2, [0.3, -0.2, 0.93], kappa=30.0, along_mean=1.0, along_kappa=1.0)
    x = law.sample(300, rng)
    normals = fibonacci_sphere(200_000)
    moment = x.T @ x
    crit = np.einsum("ij,jk,ik->i", normals, moment, normals)
    best = normals[np.argmin(crit)]
    fitted = np.asarray(fit_great_circle(x).normal)
    angle = math.acos(min(1.0, abs(float(best @ fitted))))
    assert angle < 0.01


def test_affine_fit_and_projection():
    rng = np.random.default_rng(2)
    t = rng.uniform(-3, 3, 200)
    x = np.column_stack([t, 2 * t + 1]) + 1e-3 * rng.standard_normal((200, 2))
    dom = fit_affine_subspace(x, 1)
    plane = DescriptorSpace.euclidean(2)
    proj = dom.project(plane, np.array([[0.0, 1.0]]))
    assert dom.distance_to(plane, proj)[0] < 1e-12
    with pytest.raises(DegenerateFitError):
        fit_affine_subspace(np.zeros((5, 2)), 1)


def test_great_circle_discretization_lies_on_circle():
    dom = DomainSpec.great_circle([0.0, 0.6, 0.8])
    grid = discretize_domain(S2, dom, 128)
    assert grid.mesh == pytest.approx(math.pi / 128)
    assert np.max(np.abs(grid.points @ np.array([0.0, 0.6, 0.8]))) < 1e-12
