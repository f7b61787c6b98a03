import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genfrechet.metricspaces import DescriptorSpace
from genfrechet.setmetrics import consistency_trend, one_sided_hausdorff, outer_limit_check
from genfrechet.verdict import FAIL, INCONCLUSIVE, PASS

LINE = DescriptorSpace.euclidean(1)
CIRCLE = DescriptorSpace.circle()


def test_one_sided_examples():
    assert one_sided_hausdorff([1.0], [1.0, 2.0], LINE).one_sided == 0.0
    rep = one_sided_hausdorff([1.0, 2.0], [1.0], LINE)
    assert rep.one_sided == 1.0
    np.testing.assert_allclose(rep.witness, [2.0])
    same = one_sided_hausdorff([0.5, 3.0], [0.5, 3.0], LINE)
    assert same.one_sided == 0.0 and same.symmetric == 0.0
    with pytest.raises(ValueError):
        one_sided_hausdorff([], [1.0], LINE)


def test_outer_limit_examples():
    target = np.array([[0.0]])
    assert outer_limit_check([target] * 10, target, LINE, 0, 0.01).status == PASS
    alternating = [np.array([[0.0]]) if n % 2 else np.array([[5.0]]) for n in range(10)]
    v = outer_limit_check(alternating, target, LINE, 0, 0.01)
    assert v.status == FAIL
    np.testing.assert_allclose(v.witness, [[5.0]])
    shrinking = [np.array([[1.0 / n]]) for n in range(1, 101)]
    assert outer_limit_check(shrinking, target, LINE, 50, 0.05).status == PASS
    assert outer_limit_check([target] * 3, target, LINE, 0, 0.01).status == INCONCLUSIVE


def test_trend_examples():
    flat = consistency_trend([(10, 0.0), (100, 0.0), (1000, 0.0)])
    assert math.isnan(flat.slope) and flat.monotone
    exact = consistency_trend([(10, 1.0), (100, 0.1), (1000, 0.01)])
    assert exact.slope == pytest.approx(-1.0, abs=1e-12)
    assert exact.strictly_decreasing
    with pytest.raises(ValueError):
        consistency_trend([(10, 1.0), (100, 0.1)])


finite_sets = st.lists(st.floats(-50, 50, allow_nan=False), min_size=1, max_size=12)


@settings(max_examples=150, deadline=None)
@given(a=finite_sets, b=finite_sets, c=finite_sets)
def test_hausdorff_axioms(a, b, c):
    ab = one_sided_hausdorff(a, b, LINE)
    ba = one_sided_hausdorff(b, a, LINE)
    assert ab.one_sided <= ab.symmetric
    assert ab.symmetric == ba.symmetric
    ac = one_sided_hausdorff(a, c, LINE).one_sided
    bc = one_sided_hausdorff(b, c, LINE).one_sided
    assert ac <= ab.one_sided + bc + 1e-12
    zero = ab.one_sided == 0.0
    assert zero == all(any(x == y for y in b) for x in a)


@settings(max_examples=100, deadline=None)
@given(
    target=st.lists(st.floats(0, 6.28), min_size=1, max_size=3),
    tol=st.floats(0.01, 0.3),
    tail=st.integers(4, 12),
    seed=st.integers(0, 2 ** 32 - 1),
)
def test_bp_implies_ziezold_surrogate(target, tol, tail, seed):
    # BP along the tail (every tail set within tol of the target) forces the
    # outer-limit surrogate to pass with the same tol
    rng = np.random.default_rng(seed)
    tgt = np.array(target)[:, None]
    head = [rng.uniform(0, 2 * math.pi, size=(3, 1)) for _ in range(5)]
    tail_sets = []
    for _ in range(tail):
        base = tgt[rng.integers(0, len(tgt), size=rng.integers(1, 4))]
        tail_sets.append(base + rng.uniform(-0.999 * tol, 0.999 * tol, size=base.shape))
    sets = head + tail_sets
    assert max(one_sided_hausdorff(s, tgt, CIRCLE).one_sided for s in tail_sets) < tol
    assert outer_limit_check(sets, tgt, CIRCLE, len(head), tol).status == PASS
