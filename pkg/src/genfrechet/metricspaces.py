"""Metric spaces for data and descriptors.

Points are plain numpy arrays. A single point has shape ``(ambient_dim,)`` and
a point set has shape ``(k, ambient_dim)``:

* ``euclidean(d)``: coordinates in R^d
* ``circle``: one angle, canonicalized into [0, 2*pi)
* ``sphere(d)``: unit vector in R^(d+1)
* ``finite``: one integer index into the distance matrix
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.spatial import ConvexHull

TWO_PI = 2.0 * math.pi
ANGLE_TOL = 1e-12
MANIFOLD_TOL = 1e-9

KINDS = ("euclidean", "circle", "sphere", "finite")


class SpaceError(ValueError):
    """Invalid point or space description."""


@dataclass(frozen=True)
class DescriptorSpace:
    """A metric space ``(M, d)`` with optional geodesic structure.

    ``matrix`` is only used by the finite kind and is stored as nested tuples
    so the space stays hashable. ``bbox`` is an optional tuple of ``(lo, hi)``
    pairs for euclidean spaces; brute-force routines require it.
    """

    kind: str
    dim: int = 1
    matrix: tuple[tuple[float, ...], ...] | None = None
    bbox: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpaceError(f"unknown space kind {self.kind!r}")
        if self.kind == "finite":
            if self.matrix is None:
                raise SpaceError("finite space needs a distance matrix")
            mat = np.asarray(self.matrix, dtype=float)
            if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] == 0:
                raise SpaceError("distance matrix must be square and nonempty")
            if not np.allclose(mat, mat.T, atol=1e-12, rtol=0):
                raise SpaceError("distance matrix must be symmetric")
            if np.any(np.diag(mat) != 0):
                raise SpaceError("distance matrix must have a zero diagonal")
            if np.any(mat < 0):
                raise SpaceError("distances must be nonnegative")
            object.__setattr__(self, "dim", 1)
        elif self.kind == "circle":
            object.__setattr__(self, "dim", 1)
        elif self.dim < 1:
            raise SpaceError("dim must be a positive integer")
        if self.bbox is not None:
            if self.kind != "euclidean":
                raise SpaceError("bbox only applies to euclidean spaces")
            if len(self.bbox) != self.dim or any(lo >= hi for lo, hi in self.bbox):
                raise SpaceError("bbox needs one (lo, hi) pair with lo < hi per dimension")

    @classmethod
    def euclidean(cls, dim, bbox=None):
        if bbox is not None:
            bbox = tuple((float(lo), float(hi)) for lo, hi in bbox)
        return cls("euclidean", int(dim), bbox=bbox)

    @classmethod
    def circle(cls):
        return cls("circle", 1)

    @classmethod
    def sphere(cls, dim=2):
        return cls("sphere", int(dim))

    @classmethod
    def finite(cls, matrix):
        mat = np.asarray(matrix, dtype=float)
        return cls("finite", 1, matrix=tuple(tuple(float(v) for v in row) for row in mat))

    @property
    def ambient_dim(self) -> int:
        if self.kind == "euclidean":
            return self.dim
        if self.kind == "sphere":
            return self.dim + 1
        return 1

    @property
    def is_compact(self) -> bool:
        return self.kind != "euclidean"

    @property
    def has_geodesics(self) -> bool:
        return self.kind != "finite"

    @property
    def size(self) -> int:
        """Number of points of a finite space."""
        if self.kind != "finite":
            raise SpaceError("only finite spaces have a size")
        return len(self.matrix)

    def dist_matrix(self) -> np.ndarray:
        return np.asarray(self.matrix, dtype=float)

    def diameter(self) -> float:
        if self.kind == "circle":
            return math.pi
        if self.kind == "sphere":
            return math.pi
        if self.kind == "finite":
            return float(self.dist_matrix().max())
        if self.bbox is None:
            return math.inf
        return float(np.linalg.norm([hi - lo for lo, hi in self.bbox]))


def canonical_angle(theta):
    theta = np.mod(np.asarray(theta, dtype=float), TWO_PI)
    # values within ANGLE_TOL of 2*pi wrap to 0 so set comparisons are stable
    return np.where(TWO_PI - theta < ANGLE_TOL, 0.0, theta)


def as_points(space: DescriptorSpace, x) -> np.ndarray:
    """Validate and canonicalize ``x`` into an array of shape ``(k, ambient_dim)``."""
    arr = np.asarray(x, dtype=float)
    amb = space.ambient_dim
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1) if amb == 1 else arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != amb:
        raise SpaceError(
            f"dimension mismatch: expected points with {amb} coordinates, got shape {np.shape(x)}"
        )
    if not np.all(np.isfinite(arr)):
        raise SpaceError("point coordinates must be finite")
    if space.kind == "circle":
        arr = canonical_angle(arr)
    elif space.kind == "sphere":
        norms = np.linalg.norm(arr, axis=1)
        if np.any(np.abs(norms - 1.0) > MANIFOLD_TOL):
            raise SpaceError("point not on the sphere (norm deviation > 1e-9)")
        arr = arr / norms[:, None]
    elif space.kind == "finite":
        idx = np.rint(arr)
        if np.any(np.abs(idx - arr) > 0) or np.any(idx < 0) or np.any(idx >= space.size):
            raise SpaceError("finite-space points must be valid integer indices")
        arr = idx
    return arr


def as_point(space: DescriptorSpace, x) -> np.ndarray:
    pts = as_points(space, x)
    if pts.shape[0] != 1:
        raise SpaceError("expected a single point")
    return pts[0]


def pairwise_distances(space: DescriptorSpace, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance matrix between canonical point arrays ``a`` (k, amb) and ``b`` (l, amb)."""
    if space.kind == "euclidean":
        diff = a[:, None, :] - b[None, :, :]
        if diff.shape[2] == 1:
            return np.abs(diff[:, :, 0])
        # hypot avoids underflow of squared tiny coordinates
        return np.hypot.reduce(diff, axis=2)
    if space.kind == "circle":
        delta = np.abs(a[:, 0][:, None] - b[:, 0][None, :]) % TWO_PI
        return np.minimum(delta, TWO_PI - delta)
    if space.kind == "sphere":
        return _sphere_angle(a @ b.T, a, b)
    mat = space.dist_matrix()
    return mat[np.ix_(a[:, 0].astype(int), b[:, 0].astype(int))]


def _sphere_angle(dots, a, b):
    # arccos loses precision near +-1; use the chordal arcsin form there
    dots = np.clip(dots, -1.0, 1.0)
    out = np.arccos(dots)
    near = np.abs(dots) > 0.9
    if np.any(near):
        ii, jj = np.nonzero(near)
        sgn = np.sign(dots[near])
        chord = np.linalg.norm(a[ii] - sgn[:, None] * b[jj], axis=1)
        small = 2.0 * np.arcsin(np.clip(chord / 2.0, 0.0, 1.0))
        out[near] = np.where(sgn > 0, small, math.pi - small)
    return out


def distance(space: DescriptorSpace, a, b) -> float:
    """Distance between two points of ``space``."""
    pa = as_point(space, a)
    pb = as_point(space, b)
    return float(pairwise_distances(space, pa[None, :], pb[None, :])[0, 0])


def distances_to(space: DescriptorSpace, points: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Distances from each row of ``points`` to the single point ``m``."""
    return pairwise_distances(space, points, m[None, :])[:, 0]


def tangent_basis(space: DescriptorSpace, base: np.ndarray) -> np.ndarray:
    """Orthonormal tangent basis at ``base``, shape ``(dim, ambient_dim)``."""
    if space.kind in ("euclidean", "circle"):
        return np.eye(space.ambient_dim)
    if space.kind == "sphere":
        # complete base to an orthonormal frame; drop the base direction
        q, _ = np.linalg.qr(np.column_stack([base, np.eye(space.ambient_dim)]))
        basis = q[:, 1:].T
        return basis - np.outer(basis @ base, base)
    raise SpaceError("finite spaces have no tangent structure")


def exp_map(space: DescriptorSpace, base, tangent, t: float = 1.0) -> np.ndarray:
    """Follow the geodesic from ``base`` with initial velocity ``tangent`` for time ``t``."""
    if not space.has_geodesics:
        raise SpaceError("finite spaces have no geodesics")
    p = as_point(space, base)
    v = np.atleast_1d(np.asarray(tangent, dtype=float)) * float(t)
    if v.shape != p.shape:
        raise SpaceError("dimension mismatch between base point and tangent vector")
    return _exp(space, p, v)


def _exp(space: DescriptorSpace, p: np.ndarray, v: np.ndarray) -> np.ndarray:
    if space.kind == "euclidean":
        return p + v
    if space.kind == "circle":
        return canonical_angle(p + v)
    if abs(float(v @ p)) > MANIFOLD_TOL * max(1.0, float(np.linalg.norm(v))):
        raise SpaceError("tangent vector must be orthogonal to the base point")
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        return p.copy()
    out = math.cos(norm) * p + math.sin(norm) * (v / norm)
    return out / np.linalg.norm(out)


def log_map(space: DescriptorSpace, base: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Tangent vectors at ``base`` pointing to each row of ``points``.

    Cut-locus points (antipodes on the sphere and circle) map to the zero vector.
    """
    if space.kind == "euclidean":
        return points - base
    if space.kind == "circle":
        delta = (points - base + math.pi) % TWO_PI - math.pi
        delta[np.isclose(np.abs(delta), math.pi, atol=1e-15)] = 0.0
        return delta
    if space.kind == "sphere":
        dots = np.clip(points @ base, -1.0, 1.0)
        theta = pairwise_distances(space, points, base[None, :])[:, 0]
        perp = points - dots[:, None] * base
        pn = np.linalg.norm(perp, axis=1)
        scale = np.divide(theta, pn, out=np.zeros_like(theta), where=pn > 1e-300)
        scale[theta > math.pi - 1e-12] = 0.0
        return perp * scale[:, None]
    raise SpaceError("finite spaces have no tangent structure")


@dataclass(frozen=True)
class Discretization:
    points: np.ndarray
    mesh: float


def fibonacci_sphere(k: int) -> np.ndarray:
    """Deterministic Fibonacci lattice with ``k`` points on S^2."""
    i = np.arange(k, dtype=float) + 0.5
    z = 1.0 - 2.0 * i / k
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    golden = math.pi * (3.0 - math.sqrt(5.0))
    phi = golden * np.arange(k)
    pts = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    return pts / np.linalg.norm(pts, axis=1)[:, None]


def sphere_covering_radius(points: np.ndarray) -> float:
    """Exact geodesic covering radius of a point set on S^2.

    The farthest point of the sphere from the set is a Voronoi vertex, i.e. the
    circumcenter of a spherical Delaunay triangle, and spherical Delaunay
    triangles are the facets of the convex hull.
    """
    hull = ConvexHull(points)
    normals = hull.equations[:, :3]
    offsets = hull.equations[:, 3]
    # outward facet normals; the circumcenter on the sphere is the normal itself
    corner = points[hull.simplices[:, 0]]
    cosang = np.clip(np.einsum("ij,ij->i", normals, corner), -1.0, 1.0)
    radii = np.arccos(cosang)
    if np.any(offsets > 0):
        # origin outside the hull: the lattice leaves a hemisphere uncovered
        return math.pi
    return float(radii.max())


@lru_cache(maxsize=32)
def _discretize_cached(space: DescriptorSpace, resolution: int) -> Discretization:
    if space.kind == "circle":
        pts = (TWO_PI * np.arange(resolution) / resolution)[:, None]
        mesh = math.pi / resolution
    elif space.kind == "finite":
        pts = np.arange(space.size, dtype=float)[:, None]
        mesh = 0.0
    elif space.kind == "sphere":
        if space.dim != 2:
            raise SpaceError("sphere discretization is only available for S^2")
        if resolution < 4:
            raise SpaceError("sphere discretization needs at least 4 points")
        pts = fibonacci_sphere(resolution)
        mesh = sphere_covering_radius(pts)
    else:
        if space.bbox is None:
            raise SpaceError("euclidean discretization needs a bounding box")
        if resolution < 2:
            raise SpaceError("euclidean discretization needs resolution >= 2 per axis")
        axes = [np.linspace(lo, hi, resolution) for lo, hi in space.bbox]
        grid = np.meshgrid(*axes, indexing="ij")
        pts = np.column_stack([g.ravel() for g in grid])
        steps = [(hi - lo) / (resolution - 1) for lo, hi in space.bbox]
        mesh = 0.5 * math.sqrt(sum(s * s for s in steps))
    pts = np.ascontiguousarray(pts, dtype=float)
    pts.setflags(write=False)
    return Discretization(pts, float(mesh))


def discretize(space: DescriptorSpace, resolution: int) -> Discretization:
    """Deterministic grid on ``space`` with its covering radius ``mesh``.

    ``resolution`` is the number of points for the circle and S^2 and the
    number of points per axis for a boxed euclidean space. Finite spaces
    return all of their points with mesh 0.
    """
    if int(resolution) != resolution or resolution < 1:
        raise SpaceError("resolution must be a positive integer")
    return _discretize_cached(space, int(resolution))
