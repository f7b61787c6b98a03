"""Distances between finite point sets and set-convergence diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .metricspaces import DescriptorSpace, as_points, pairwise_distances
from .verdict import FAIL, INCONCLUSIVE, PASS, Verdict


@dataclass
class SetDistanceReport:
    one_sided: float
    symmetric: float
    witness: np.ndarray


def one_sided_hausdorff(A, B, space: DescriptorSpace) -> SetDistanceReport:
    """``sup_{a in A} d(a, B)``, plus the symmetric Hausdorff distance.

    ``witness`` is the point of ``A`` attaining the supremum.
    """
    a = as_points(space, A)
    b = as_points(space, B)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("one-sided Hausdorff distance needs nonempty sets")
    dmat = pairwise_distances(space, a, b)
    to_b = dmat.min(axis=1)
    to_a = dmat.min(axis=0)
    i = int(np.argmax(to_b))
    one = float(to_b[i])
    return SetDistanceReport(one_sided=one, symmetric=max(one, float(to_a.max())), witness=a[i])


def outer_limit_check(sets, target, space: DescriptorSpace, tail_start: int, tol: float) -> Verdict:
    """Finite-tail surrogate for ``limsup E_n subset E_0``.

    A point is treated as recurrent when at least half of the tail sets
    (``sets[tail_start:]``) hold a point within ``tol`` of it. The check fails
    when a recurrent point lies farther than ``tol`` from ``target``; the
    offending cluster centers are reported as the witness.
    """
    method = "surrogate: recurrence in >= half of the tail sets, clustered within tol"
    tail = [as_points(space, s) for s in sets[tail_start:]]
    if len(tail) < 4:
        return Verdict(INCONCLUSIVE, method, detail=f"tail has {len(tail)} sets, need >= 4")
    if any(len(s) == 0 for s in tail):
        raise ValueError("tail sets must be nonempty")
    tgt = as_points(space, target)
    pooled = np.vstack(tail)
    counts = np.zeros(len(pooled), dtype=int)
    for s in tail:
        counts += pairwise_distances(space, pooled, s).min(axis=1) <= tol
    recurrent = pooled[counts * 2 >= len(tail)]
    if len(recurrent) == 0:
        return Verdict(PASS, method, detail="no recurrent points in the tail")
    far = recurrent[pairwise_distances(space, recurrent, tgt).min(axis=1) > tol]
    if len(far) == 0:
        return Verdict(PASS, method, detail=f"{len(recurrent)} recurrent points, all within tol")
    centers: list[np.ndarray] = []
    for p in far:
        if not centers or pairwise_distances(space, p[None, :], np.array(centers)).min() > tol:
            centers.append(p)
    return Verdict(FAIL, method, witness=np.array(centers),
                   detail=f"{len(centers)} recurrent cluster(s) farther than tol from target")


@dataclass
class TrendSummary:
    ns: list[int]
    medians: list[float]
    monotone: bool
    strictly_decreasing: bool
    final_value: float
    slope: float

    @property
    def slope_defined(self) -> bool:
        return not math.isnan(self.slope)


def consistency_trend(distances) -> TrendSummary:
    """Summarize ``(n, distance)`` pairs (several replications per ``n`` allowed).

    The slope is the least-squares fit of ``log(median)`` on ``log(n)`` over
    the ``n`` with a positive median; it is NaN when fewer than two medians are
    positive.
    """
    pairs = [(int(n), float(v)) for n, v in distances]
    ns = sorted({n for n, _ in pairs})
    if len(ns) < 3:
        raise ValueError("consistency trend needs at least 3 distinct n values")
    medians = [float(np.median([v for m, v in pairs if m == n])) for n in ns]
    diffs = np.diff(medians)
    pos = [(math.log(n), math.log(v)) for n, v in zip(ns, medians) if v > 0]
    if len(pos) >= 2:
        x, y = np.array(pos).T
        slope = float(np.polyfit(x, y, 1)[0])
    else:
        slope = math.nan
    return TrendSummary(
        ns=ns,
        medians=medians,
        monotone=bool(np.all(diffs <= 0)),
        strictly_decreasing=bool(np.all(diffs < 0)),
        final_value=medians[-1],
        slope=slope,
    )
