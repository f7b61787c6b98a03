import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genfrechet.costs import (
    CoercivityCertificate,
    CostError,
    CostFunction,
    EquicontinuityModulus,
    LowerBoundCertificate,
    ScalarFunction,
    check_additive,
    check_coercive,
    check_equicontinuous,
    check_lower_bound,
    empirical_objective,
    evaluate,
    scalarize,
)
from genfrechet.metricspaces import DescriptorSpace, distance, pairwise_distances
from genfrechet.verdict import FAIL, PASS, VACUOUS

LINE = DescriptorSpace.euclidean(1)
CIRCLE = DescriptorSpace.circle()
S2 = DescriptorSpace.sphere(2)


def test_lp_matches_distance_power():
    c = CostFunction.lp(CIRCLE, 3)
    assert evaluate(c, 0.0, 2.0) == pytest.approx(8.0, rel=1e-12)
    assert evaluate(CostFunction.lp(S2, 2), [1, 0, 0], [0, 1, 0]) == pytest.approx(math.pi ** 2 / 4, rel=1e-12)


def test_lp_rejects_p_below_one():
    with pytest.raises(CostError):
        CostFunction.lp(LINE, 0.5)


def test_h_of_d_and_g_of_rho():
    c = CostFunction.h_of_d(CIRCLE, ScalarFunction.log1p_power(2))
    assert evaluate(c, 0.0, 1.0) == pytest.approx(math.log(2.0))
    plane = DescriptorSpace.euclidean(2)
    axial = CostFunction.g_of_rho(CIRCLE, ScalarFunction.power(2), "line_residual", data_space=plane)
    # residual of (0, 2) from the line at angle 0 is 2
    assert evaluate(axial, [0.0, 2.0], 0.0) == pytest.approx(4.0)
    assert evaluate(axial, [3.0, 0.0], math.pi) == pytest.approx(0.0, abs=1e-24)


def test_non_monotone_outer_function_rejected():
    with pytest.raises(CostError):
        CostFunction.h_of_d(LINE, ScalarFunction.tabulated([0, 1, 2], [0, 2, 1]))


def test_custom_cost_may_be_negative():
    c = CostFunction.custom_cost(LINE, "centered_square")
    assert evaluate(c, 2.0, 1.0) == pytest.approx(-3.0)


def test_custom_cost_non_finite_is_error():
    c = CostFunction.custom_cost(LINE, lambda t, m: math.inf)
    with pytest.raises(CostError, match="non-finite"):
        evaluate(c, 0.0, 0.0)


def test_tabulated_cost_on_finite_spaces():
    f = DescriptorSpace.finite([[0, 1], [1, 0]])
    c = CostFunction.custom_cost(f, table=[[0.0, 5.0], [2.0, 1.0]], data_space=f)
    assert evaluate(c, 0, 1) == 5.0
    assert empirical_objective(c, [0, 1], 1) == 3.0


def test_scalarize_line_example():
    c = CostFunction.lp(LINE, 2)
    h = 1e-3
    grid = np.arange(1 + h, 3 - h / 2, h)
    pi, Pi = scalarize(c, 0.0, 2.0, 1.0, grid)
    assert pi == pytest.approx(1.0, abs=3 * h)
    assert Pi == pytest.approx(9.0, abs=7 * h)
    with pytest.raises(CostError):
        scalarize(c, 0.0, 10.0, 0.5, grid)


def test_scalarize_whole_finite_space():
    f = DescriptorSpace.finite([[0, 1, 2], [1, 0, 1], [2, 1, 0]])
    c = CostFunction.lp(f, 1)
    assert scalarize(c, 0, 1, 10.0, [0, 1, 2]) == (0.0, 2.0)


def test_additive_examples():
    holds, b = check_additive(lambda x: x * x)
    assert holds and b == pytest.approx(4.0)
    holds, b = check_additive(lambda x: x)
    assert holds and b == pytest.approx(2.0)
    holds, _ = check_additive(np.exp, probe_xs=2.0 ** np.arange(-4, 7))
    assert not holds


def test_additive_non_finite_is_error():
    with pytest.raises(CostError):
        check_additive(np.exp)


def test_equicontinuity_examples():
    rho = lambda x, m: abs(float(x[0] - m[0]))
    probes = [(np.array([5.0]), np.array([0.0]), np.array([0.05]), 0.1)]
    assert check_equicontinuous(rho, EquicontinuityModulus.linear(), probes, LINE).status == PASS
    product = lambda x, m: float(x[0] * m[0])
    delta = 0.5
    probes = [(np.array([2 * 0.1 / delta * 10]), np.array([0.0]), np.array([0.4]), 0.1)]
    assert check_equicontinuous(product, EquicontinuityModulus.constant(delta), probes, LINE).status == FAIL
    assert check_equicontinuous(rho, EquicontinuityModulus.linear(), [], LINE).status == VACUOUS
    with pytest.raises(CostError):
        check_equicontinuous(rho, EquicontinuityModulus.constant(0.0), probes, LINE)


def _dist_rho(space):
    return lambda ts, ms: pairwise_distances(space, ts, ms)


def test_coercivity_examples():
    cert = CoercivityCertificate(o=(0.0,), C=1.0, A_rule=lambda n, m: abs(m[0]) - 1.0)
    sample = np.linspace(-2, 2, 41)[:, None]
    seqs = [np.array([[2.0 ** k] for k in range(1, 12)]), np.array([[-(2.0 ** k)] for k in range(1, 12)])]
    assert check_coercive(_dist_rho(LINE), cert, LINE, sample, seqs).status == PASS
    bounded = lambda ts, ms: np.minimum(pairwise_distances(LINE, ts, ms), 5.0)
    growing = CoercivityCertificate(o=(0.0,), C=1.0, A_rule=lambda n, m: float(n))
    assert check_coercive(bounded, growing, LINE, sample, seqs).status == FAIL
    compact = check_coercive(_dist_rho(CIRCLE), CoercivityCertificate((0.0,), 1.0, lambda n, m: 0.0),
                             CIRCLE, np.zeros((3, 1)))
    assert compact.status == VACUOUS


def test_lower_bound_line():
    space = DescriptorSpace.euclidean(1)
    c = CostFunction.lp(space, 2)
    rng = np.random.default_rng(0)
    x = rng.normal(1.0, 1.0, size=(500, 1))
    second = float(np.mean(x[:, 0] ** 2))
    cert = LowerBoundCertificate(
        o=(0.0,), psi_plus=ScalarFunction.power(2), psi_minus=ScalarFunction("constant", value=1.0),
        a_plus=0.5, a_minus=2.0, a_n_rule=lambda s: (0.5, float(np.mean(s[:, 0] ** 2))),
    )
    pop = lambda ms: (ms[:, 0] - 1.0) ** 2 + 1.0
    probes = np.concatenate([np.linspace(-64, 64, 257)])[:, None]
    v = check_lower_bound(cert, c, pop, [x[:10], x], probes)
    assert v.status == PASS, v.detail
    assert second > 0


@settings(max_examples=100, deadline=None)
@given(t=st.floats(-10, 10), m=st.floats(-10, 10), p=st.floats(1, 5))
def test_lp_power_law_property(t, m, p):
    c = CostFunction.lp(LINE, p)
    assert evaluate(c, t, m) == pytest.approx(abs(t - m) ** p, rel=1e-12, abs=1e-300)


@settings(max_examples=100, deadline=None)
@given(t=st.floats(0, 2 * math.pi - 1e-9), m=st.floats(0, 2 * math.pi - 1e-9), r=st.floats(0.05, 1.0))
def test_scalarization_sandwich_and_monotone(t, m, r):
    c = CostFunction.lp(CIRCLE, 2)
    grid = np.concatenate([np.linspace(0, 2 * math.pi, 2000, endpoint=False), [m]])
    pi, Pi = scalarize(c, t, m, r, grid)
    val = evaluate(c, t, m)
    assert pi <= val <= Pi
    pi_s, Pi_s = scalarize(c, t, m, r / 2, grid)
    assert pi_s >= pi and Pi_s <= Pi


def test_scalarization_converges_as_radius_shrinks():
    c = CostFunction.lp(S2, 2)
    rng = np.random.default_rng(5)
    t = rng.standard_normal(3)
    t /= np.linalg.norm(t)
    m = np.array([0.0, 0.0, 1.0])
    grid = np.vstack([m, m + 1e-4 * rng.standard_normal((4000, 3))])
    grid /= np.linalg.norm(grid, axis=1)[:, None]
    val = evaluate(c, t, m)
    gaps = []
    for r in (1e-4, 3e-5, 1e-5):
        pi, Pi = scalarize(c, t, m, r, grid)
        gaps.append(Pi - pi)
    assert gaps[0] >= gaps[1] >= gaps[2]
    assert gaps[-1] < 1e-4 * (1 + val)
    assert distance(S2, t, m) >= 0
