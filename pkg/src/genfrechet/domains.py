"""Minimization domains: the fixed target ``M_0`` and data-driven ``M_n``."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .metricspaces import (
    DescriptorSpace,
    Discretization,
    SpaceError,
    as_point,
    as_points,
    discretize,
    pairwise_distances,
)

DOMAIN_KINDS = ("full", "finite_set", "great_circle", "affine", "ball")


class DomainError(ValueError):
    """Invalid domain description."""


class DegenerateFitError(DomainError):
    """A domain estimator cannot produce a unique fit for the given sample."""


def _tuple2(arr) -> tuple[tuple[float, ...], ...]:
    return tuple(tuple(float(v) for v in row) for row in np.atleast_2d(arr))


def _tuple1(arr) -> tuple[float, ...]:
    return tuple(float(v) for v in np.ravel(arr))


def canonical_sign(vec: np.ndarray) -> np.ndarray:
    """Flip ``vec`` so that its first nonzero coordinate is positive."""
    for v in vec:
        if abs(v) > 1e-12:
            return vec if v > 0 else -vec
    return vec


@dataclass(frozen=True)
class DomainSpec:
    """A closed subset of the descriptor space.

    Kinds: ``full`` (the whole space), ``finite_set`` (explicit points),
    ``great_circle`` (sphere, given by its unit normal), ``affine``
    (euclidean, ``offset + span(basis)``; ``extent`` bounds the parameters
    for discretization) and ``ball`` (closed ball ``d(center, .) <= radius``).
    """

    kind: str = "full"
    points: tuple[tuple[float, ...], ...] | None = None
    normal: tuple[float, ...] | None = None
    basis: tuple[tuple[float, ...], ...] | None = None
    offset: tuple[float, ...] | None = None
    extent: float | None = None
    center: tuple[float, ...] | None = None
    radius: float | None = None

    def __post_init__(self):
        if self.kind not in DOMAIN_KINDS:
            raise DomainError(f"unknown domain kind {self.kind!r}")
        if self.kind == "finite_set" and not self.points:
            raise DomainError("finite_set domain must be nonempty")
        if self.kind == "great_circle":
            if self.normal is None or abs(np.linalg.norm(self.normal) - 1.0) > 1e-9:
                raise DomainError("great-circle normal must have unit norm")
        if self.kind == "affine":
            if self.basis is None or self.offset is None:
                raise DomainError("affine domain needs basis and offset")
            b = np.asarray(self.basis, dtype=float)
            if b.shape[1] != len(self.offset):
                raise DomainError("affine basis and offset dimensions differ")
            if np.linalg.det(b @ b.T) <= 1e-9:
                raise DomainError("affine basis vectors must be linearly independent")
        if self.kind == "ball" and (self.center is None or self.radius is None or self.radius <= 0):
            raise DomainError("ball domain needs a center and a positive radius")

    @classmethod
    def full(cls):
        return cls("full")

    @classmethod
    def finite_set(cls, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim < 2:
            pts = pts.reshape(-1, 1)
        return cls("finite_set", points=_tuple2(pts))

    @classmethod
    def great_circle(cls, normal):
        n = np.asarray(normal, dtype=float)
        return cls("great_circle", normal=_tuple1(n / np.linalg.norm(n)))

    @classmethod
    def affine(cls, basis, offset, extent=None):
        return cls(
            "affine",
            basis=_tuple2(basis),
            offset=_tuple1(offset),
            extent=None if extent is None else float(extent),
        )

    @classmethod
    def ball(cls, center, radius):
        return cls("ball", center=_tuple1(center), radius=float(radius))

    def check_space(self, space: DescriptorSpace) -> None:
        if self.kind == "great_circle" and not (space.kind == "sphere" and space.dim == 2):
            raise DomainError("great_circle domains live on the 2-sphere")
        if self.kind == "affine" and (space.kind != "euclidean" or len(self.offset) != space.dim):
            raise DomainError("affine domain does not match the euclidean space dimension")
        if self.kind == "finite_set":
            as_points(space, np.asarray(self.points))
        if self.kind == "ball":
            as_point(space, np.asarray(self.center))

    def point_array(self, space: DescriptorSpace) -> np.ndarray:
        return as_points(space, np.asarray(self.points))

    def orthonormal_basis(self) -> np.ndarray:
        q, _ = np.linalg.qr(np.asarray(self.basis, dtype=float).T)
        return q.T

    def circle_frame(self) -> tuple[np.ndarray, np.ndarray]:
        """Deterministic orthonormal pair spanning the great circle's plane."""
        n = np.asarray(self.normal, dtype=float)
        j = int(np.argmin(np.abs(n)))
        e = np.zeros(3)
        e[j] = 1.0
        u = e - (e @ n) * n
        u /= np.linalg.norm(u)
        v = np.cross(n, u)
        return u, v

    def contains(self, space: DescriptorSpace, pts: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        """Boolean mask: which rows of ``pts`` lie in the domain within ``tol``."""
        pts = as_points(space, pts)
        if self.kind == "full":
            if space.kind == "euclidean" and space.bbox is not None:
                lo = np.array([b[0] for b in space.bbox])
                hi = np.array([b[1] for b in space.bbox])
                return np.all((pts >= lo - tol) & (pts <= hi + tol), axis=1)
            return np.ones(len(pts), dtype=bool)
        return self.distance_to(space, pts) <= tol

    def distance_to(self, space: DescriptorSpace, pts: np.ndarray) -> np.ndarray:
        """Distance from each row of ``pts`` to the domain."""
        pts = as_points(space, pts)
        if self.kind == "full":
            return np.linalg.norm(pts - self.project(space, pts), axis=1) if space.kind == "euclidean" else np.zeros(len(pts))
        if self.kind == "finite_set":
            return pairwise_distances(space, pts, self.point_array(space)).min(axis=1)
        if self.kind == "great_circle":
            n = np.asarray(self.normal)
            return np.arcsin(np.clip(np.abs(pts @ n), 0.0, 1.0))
        if self.kind == "affine":
            return np.linalg.norm(pts - self.project(space, pts), axis=1)
        center = as_point(space, np.asarray(self.center))
        d = pairwise_distances(space, pts, center[None, :])[:, 0]
        return np.maximum(d - self.radius, 0.0)

    def project(self, space: DescriptorSpace, pts: np.ndarray) -> np.ndarray:
        """Nearest-point projection of each row of ``pts`` onto the domain."""
        pts = as_points(space, pts)
        if self.kind == "full":
            if space.kind == "euclidean" and space.bbox is not None:
                lo = np.array([b[0] for b in space.bbox])
                hi = np.array([b[1] for b in space.bbox])
                return np.clip(pts, lo, hi)
            return pts
        if self.kind == "finite_set":
            own = self.point_array(space)
            return own[np.argmin(pairwise_distances(space, pts, own), axis=1)]
        if self.kind == "great_circle":
            n = np.asarray(self.normal)
            flat = pts - np.outer(pts @ n, n)
            norms = np.linalg.norm(flat, axis=1)
            if np.any(norms < 1e-12):
                raise DomainError("projection onto a great circle is undefined at its poles")
            return flat / norms[:, None]
        if self.kind == "affine":
            q = self.orthonormal_basis()
            off = np.asarray(self.offset)
            return off + ((pts - off) @ q.T) @ q
        center = as_point(space, np.asarray(self.center))
        d = pairwise_distances(space, pts, center[None, :])[:, 0]
        out = pts.copy()
        outside = d > self.radius
        if np.any(outside):
            if space.kind == "euclidean":
                out[outside] = center + (pts[outside] - center) * (self.radius / d[outside])[:, None]
            else:
                raise DomainError("ball projection is only implemented for euclidean spaces")
        return out

    def affine_extent(self, space: DescriptorSpace) -> float:
        if self.extent is not None:
            return float(self.extent)
        if space.bbox is None:
            raise DomainError("affine domain needs an extent or a bounded space")
        off = np.asarray(self.offset)
        corners = np.array(np.meshgrid(*space.bbox, indexing="ij")).reshape(space.dim, -1).T
        return float(np.linalg.norm(corners - off, axis=1).max())


def discretize_domain(space: DescriptorSpace, domain: DomainSpec, resolution: int) -> Discretization:
    """Deterministic grid on a domain together with its covering radius."""
    domain.check_space(space)
    if domain.kind == "full":
        return discretize(space, resolution)
    if domain.kind == "finite_set":
        return Discretization(domain.point_array(space), 0.0)
    if domain.kind == "great_circle":
        u, v = domain.circle_frame()
        theta = 2.0 * math.pi * np.arange(resolution) / resolution
        pts = np.outer(np.cos(theta), u) + np.outer(np.sin(theta), v)
        pts /= np.linalg.norm(pts, axis=1)[:, None]
        return Discretization(pts, math.pi / resolution)
    if domain.kind == "affine":
        if resolution < 2:
            raise DomainError("affine discretization needs resolution >= 2")
        q = domain.orthonormal_basis()
        ext = domain.affine_extent(space)
        axis = np.linspace(-ext, ext, resolution)
        grids = np.meshgrid(*([axis] * len(q)), indexing="ij")
        params = np.column_stack([g.ravel() for g in grids])
        pts = np.asarray(domain.offset) + params @ q
        step = 2.0 * ext / (resolution - 1)
        return Discretization(pts, 0.5 * step * math.sqrt(len(q)))
    # ball
    center = as_point(space, np.asarray(domain.center))
    if space.kind == "euclidean" and space.bbox is None:
        box = tuple((c - domain.radius, c + domain.radius) for c in center)
        base = discretize(DescriptorSpace.euclidean(space.dim, box), resolution)
    else:
        base = discretize(space, resolution)
    d = pairwise_distances(space, base.points, center[None, :])[:, 0]
    pts = base.points[d <= domain.radius]
    if len(pts) == 0:
        pts = center[None, :]
    return Discretization(pts, base.mesh)


@dataclass(frozen=True)
class DomainSequence:
    """The pair ``(M_0, {M_n})``.

    ``rule`` is ``constant`` (``M_n = M_0``), ``scripted`` (``sets[n - 1]``
    is ``M_n``) or ``estimator`` (``M_n`` fitted to the first ``n`` data
    points by the named estimator).
    """

    target: DomainSpec
    rule: str = "constant"
    sets: tuple[DomainSpec, ...] = ()
    estimator: str | None = None
    params: tuple[tuple[str, float], ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.rule not in ("constant", "scripted", "estimator"):
            raise DomainError(f"unknown domain rule {self.rule!r}")
        if self.rule == "scripted" and not self.sets:
            raise DomainError("scripted domain sequence needs at least one set")
        if self.rule == "estimator" and self.estimator not in ESTIMATORS:
            raise DomainError(f"unknown domain estimator {self.estimator!r}")


def realize(seq: DomainSequence, n: int, sample: np.ndarray | None = None) -> DomainSpec:
    """The realized domain ``M_n`` for sample size ``n``."""
    if n < 1:
        raise DomainError("n must be a positive integer")
    if seq.rule == "constant":
        return seq.target
    if seq.rule == "scripted":
        if n > len(seq.sets):
            raise DomainError(f"scripted sequence has no entry for n={n}")
        return seq.sets[n - 1]
    if sample is None or len(sample) < n:
        raise DomainError("estimator rules need at least n data points")
    return ESTIMATORS[seq.estimator](np.asarray(sample)[:n], **dict(seq.params))


def fit_great_circle(points) -> DomainSpec:
    """Great circle through S^2 data via the sample second-moment matrix.

    The normal is the eigenvector of the smallest eigenvalue of
    ``sum x x^T / n``, i.e. the minimizer of the summed squared sines of the
    geodesic residuals. Raises :class:`DegenerateFitError` when the two
    smallest eigenvalues coincide within 1e-9.
    """
    x = np.asarray(points, dtype=float)
    if x.ndim != 2 or x.shape[1] != 3:
        raise DomainError("great-circle fitting needs points on S^2")
    if len(x) < 3:
        raise DegenerateFitError("great-circle fitting needs at least 3 points")
    if np.all(np.abs(x - x[0]) < 1e-12):
        raise DegenerateFitError("all points are identical; the great circle is ambiguous")
    moment = x.T @ x / len(x)
    vals, vecs = np.linalg.eigh(moment)
    if vals[1] - vals[0] <= 1e-9:
        raise DegenerateFitError("two smallest moment eigenvalues coincide; ambiguous fit")
    normal = canonical_sign(vecs[:, 0])
    return DomainSpec.great_circle(normal)


def fit_affine_subspace(points, rank: float = 1, extent: float | None = None) -> DomainSpec:
    """Affine subspace of dimension ``rank`` through the sample mean (PCA)."""
    x = np.asarray(points, dtype=float)
    k = int(rank)
    if x.ndim != 2 or len(x) <= k:
        raise DegenerateFitError("affine fitting needs more points than the subspace rank")
    mean = x.mean(axis=0)
    cov = (x - mean).T @ (x - mean) / len(x)
    vals, vecs = np.linalg.eigh(cov)
    vals, vecs = vals[::-1], vecs[:, ::-1]
    if vals[k - 1] <= 1e-12:
        raise DegenerateFitError("sample spread is too small for the requested rank")
    if k < len(vals) and vals[k - 1] - vals[k] <= 1e-9:
        raise DegenerateFitError("principal eigenvalues tie; ambiguous subspace")
    basis = np.array([canonical_sign(vecs[:, i]) for i in range(k)])
    return DomainSpec.affine(basis, mean, extent)


ESTIMATORS = {
    "great_circle": fit_great_circle,
    "affine": fit_affine_subspace,
}


@dataclass
class KuratowskiVerdict:
    """Finite-discretization surrogate of Kuratowski convergence.

    ``outer`` holds ``max_{m in M_n} d(m, M_0)`` per sequence entry (item (i))
    and ``inner`` holds ``max_{m0 in M_0} d(m0, M_n)`` (item (ii)). Both
    conditions pass when every tail value is at most ``tol``.
    """

    cond_i: bool
    cond_ii: bool
    labels: list[int]
    outer: list[float]
    inner: list[float]
    tail_start: int
    tol: float
    witness_i: np.ndarray | None = None
    witness_ii: np.ndarray | None = None

    @property
    def passed(self) -> bool:
        return self.cond_i and self.cond_ii


def kuratowski_check(domain_sets, target_set, space: DescriptorSpace, tail_start: int, tol: float,
                     labels=None) -> KuratowskiVerdict:
    """Check both Kuratowski conditions along the tail ``n >= tail_start``.

    ``labels`` gives the index ``n`` of each set (defaults to 1, 2, ...).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    target = as_points(space, target_set)
    if len(target) == 0:
        raise DomainError("target set is empty")
    labels = list(range(1, len(domain_sets) + 1)) if labels is None else [int(v) for v in labels]
    if len(labels) != len(domain_sets):
        raise ValueError("labels and domain_sets differ in length")
    outer, inner = [], []
    worst_i = worst_ii = None
    worst_i_val = worst_ii_val = -1.0
    for n, pts in zip(labels, domain_sets):
        pts = as_points(space, pts)
        if len(pts) == 0:
            raise DomainError(f"domain set for n={n} is empty")
        dmat = pairwise_distances(space, pts, target)
        to_target = dmat.min(axis=1)
        from_target = dmat.min(axis=0)
        outer.append(float(to_target.max()))
        inner.append(float(from_target.max()))
        if n >= tail_start:
            if outer[-1] > worst_i_val:
                worst_i_val, worst_i = outer[-1], pts[int(np.argmax(to_target))]
            if inner[-1] > worst_ii_val:
                worst_ii_val, worst_ii = inner[-1], target[int(np.argmax(from_target))]
    tail = [i for i, n in enumerate(labels) if n >= tail_start]
    if not tail:
        raise DomainError("no sequence entries at or beyond tail_start")
    cond_i = all(outer[i] <= tol for i in tail)
    cond_ii = all(inner[i] <= tol for i in tail)
    return KuratowskiVerdict(
        cond_i=cond_i,
        cond_ii=cond_ii,
        labels=labels,
        outer=outer,
        inner=inner,
        tail_start=tail_start,
        tol=tol,
        witness_i=None if cond_i else worst_i,
        witness_ii=None if cond_ii else worst_ii,
    )


__all__ = [
    "DomainSpec",
    "DomainSequence",
    "DomainError",
    "DegenerateFitError",
    "KuratowskiVerdict",
    "discretize_domain",
    "fit_great_circle",
    "fit_affine_subspace",
    "kuratowski_check",
    "realize",
    "SpaceError",
]
