"""Data distributions: sampling and nodes/weights for the population objective."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from numpy.polynomial.legendre import leggauss
from scipy.special import ndtri

from .metricspaces import TWO_PI, DescriptorSpace, as_point, as_points, canonical_angle

DIST_KINDS = ("point_mass", "discrete", "vmf", "wrapped_normal", "gaussian", "mixture",
              "great_circle_noise")

CIRCLE_NODES = 2 ** 14
LINE_NODES = 2 ** 14 + 1


class DistributionError(ValueError):
    """Invalid distribution parameters."""


def orthonormal_frame(axis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Two unit vectors completing ``axis`` to a right-handed orthonormal frame of R^3."""
    axis = np.asarray(axis, dtype=float)
    j = int(np.argmin(np.abs(axis)))
    e = np.zeros(3)
    e[j] = 1.0
    u = e - (e @ axis) * axis
    u /= np.linalg.norm(u)
    return u, np.cross(axis, u)


def vmf_colatitude_cos(kappa: float, u: np.ndarray) -> np.ndarray:
    """Inverse CDF of ``w = cos(colatitude)`` for vMF on S^2 (density ~ exp(kappa w))."""
    if kappa == 0:
        return 2.0 * u - 1.0
    return 1.0 + np.log(u + (1.0 - u) * math.exp(-2.0 * kappa)) / kappa


def sample_vmf(mu, kappa: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """vMF samples on S^2: inverted colatitude, uniform longitude."""
    mu = np.asarray(mu, dtype=float)
    e1, e2 = orthonormal_frame(mu)
    w = vmf_colatitude_cos(kappa, rng.uniform(size=n))
    phi = rng.uniform(0.0, TWO_PI, size=n)
    r = np.sqrt(np.clip(1.0 - w * w, 0.0, None))
    x = (r * np.cos(phi))[:, None] * e1 + (r * np.sin(phi))[:, None] * e2 + w[:, None] * mu
    return x / np.linalg.norm(x, axis=1)[:, None]


def vmf_offsets(kappa: float, n_w: int = 48, n_phi: int = 64):
    """Quadrature in the vMF frame: ``(w, phi, weight)`` arrays.

    Gauss-Legendre in ``w`` on ``[w_lo, 1]`` where ``w_lo`` cuts off mass below
    ``exp(-40)``, times the trapezoid rule in longitude.
    """
    lo = -1.0 if kappa == 0 else max(-1.0, 1.0 - 40.0 / kappa)
    x, wts = leggauss(n_w)
    w = 0.5 * (x + 1.0) * (1.0 - lo) + lo
    dens = wts * np.exp(kappa * (w - 1.0))
    dens /= dens.sum()
    phi = TWO_PI * np.arange(n_phi) / n_phi
    ww, pp = np.meshgrid(w, phi, indexing="ij")
    weights = np.repeat(dens / n_phi, n_phi)
    return ww.ravel(), pp.ravel(), weights


def _vmf_nodes(mu, kappa, n_w=48, n_phi=64):
    mu = np.asarray(mu, dtype=float)
    e1, e2 = orthonormal_frame(mu)
    w, phi, weights = vmf_offsets(kappa, n_w, n_phi)
    r = np.sqrt(np.clip(1.0 - w * w, 0.0, None))
    x = (r * np.cos(phi))[:, None] * e1 + (r * np.sin(phi))[:, None] * e2 + w[:, None] * mu
    return x / np.linalg.norm(x, axis=1)[:, None], weights


@dataclass(frozen=True)
class Distribution:
    """Law of the data ``X`` on ``space``.

    Parameters are stored as plain tuples: ``t`` (point mass), ``points`` and
    ``weights`` (discrete, mixture weights), ``mu``/``kappa`` (vMF),
    ``mu``/``sigma`` (wrapped normal), ``mu``/``cov`` (gaussian),
    ``components`` (mixture), ``normal``/``kappa``/``along_mean``/``along_kappa``
    (vMF noise around points of a great circle whose positions follow a
    von Mises law).
    """

    kind: str
    space: DescriptorSpace
    t: tuple | None = None
    points: tuple | None = None
    weights: tuple | None = None
    mu: tuple | None = None
    kappa: float = 0.0
    sigma: float = 1.0
    cov: tuple | None = None
    components: tuple = ()
    normal: tuple | None = None
    along_mean: float = 0.0
    along_kappa: float = 0.0

    def __post_init__(self):
        if self.kind not in DIST_KINDS:
            raise DistributionError(f"unknown distribution kind {self.kind!r}")
        getattr(self, f"_check_{self.kind}")()

    # validation -------------------------------------------------------------

    def _check_point_mass(self):
        as_point(self.space, np.asarray(self.t))

    def _check_weights(self, count):
        w = np.asarray(self.weights, dtype=float)
        if len(w) != count:
            raise DistributionError("weights: length does not match")
        if np.any(w < 0):
            raise DistributionError("weights: must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise DistributionError(f"weights: must sum to 1 (got {w.sum():.12g})")

    def _check_discrete(self):
        pts = as_points(self.space, np.asarray(self.points))
        self._check_weights(len(pts))

    def _check_vmf(self):
        if self.space.kind != "sphere" or self.space.dim != 2:
            raise DistributionError("vmf is implemented on S^2")
        as_point(self.space, np.asarray(self.mu))
        if self.kappa < 0:
            raise DistributionError("kappa: must be nonnegative")

    def _check_wrapped_normal(self):
        if self.space.kind != "circle":
            raise DistributionError("wrapped_normal lives on the circle")
        if not self.sigma > 0:
            raise DistributionError("sigma: must be positive")

    def _check_gaussian(self):
        if self.space.kind != "euclidean":
            raise DistributionError("gaussian lives on a euclidean space")
        mu = np.asarray(self.mu, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if mu.shape != (self.space.dim,) or cov.shape != (self.space.dim,) * 2:
            raise DistributionError("gaussian mu/cov dimensions do not match the space")
        if not np.allclose(cov, cov.T):
            raise DistributionError("cov: must be symmetric")
        if np.linalg.eigvalsh(cov).min() <= 0:
            raise DistributionError("cov: must be positive definite")

    def _check_mixture(self):
        if not self.components:
            raise DistributionError("mixture needs components")
        for comp in self.components:
            if comp.space != self.space:
                raise DistributionError("mixture components must share the space")
        self._check_weights(len(self.components))

    def _check_great_circle_noise(self):
        if self.space.kind != "sphere" or self.space.dim != 2:
            raise DistributionError("great_circle_noise is implemented on S^2")
        n = np.asarray(self.normal, dtype=float)
        if abs(np.linalg.norm(n) - 1.0) > 1e-9:
            raise DistributionError("normal: must have unit norm")
        if self.kappa < 0 or self.along_kappa < 0:
            raise DistributionError("kappa: must be nonnegative")

    # sampling ------------------------------------------------------------------

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw ``n`` i.i.d. points, shape ``(n, ambient_dim)``."""
        k = self.kind
        if k == "point_mass":
            return np.repeat(as_point(self.space, np.asarray(self.t))[None, :], n, axis=0)
        if k == "discrete":
            pts = as_points(self.space, np.asarray(self.points))
            idx = rng.choice(len(pts), size=n, p=np.asarray(self.weights))
            return pts[idx]
        if k == "vmf":
            return sample_vmf(self.mu, self.kappa, n, rng)
        if k == "wrapped_normal":
            return canonical_angle(self.mu[0] + self.sigma * rng.standard_normal(n))[:, None]
        if k == "gaussian":
            chol = np.linalg.cholesky(np.asarray(self.cov, dtype=float))
            return np.asarray(self.mu) + rng.standard_normal((n, self.space.dim)) @ chol.T
        if k == "mixture":
            labels = rng.choice(len(self.components), size=n, p=np.asarray(self.weights))
            out = np.empty((n, self.space.ambient_dim))
            for j, comp in enumerate(self.components):
                sel = labels == j
                if sel.any():
                    out[sel] = comp.sample(int(sel.sum()), rng)
            return out
        return self._sample_gc_noise(n, rng)

    def _gc_centers(self, phi):
        u, v = _gc_frame(self.normal)
        return np.outer(np.cos(phi), u) + np.outer(np.sin(phi), v)

    def _sample_gc_noise(self, n, rng):
        if self.along_kappa == 0:
            phi = rng.uniform(0.0, TWO_PI, size=n)
        else:
            phi = rng.vonmises(self.along_mean, self.along_kappa, size=n)
        centers = self._gc_centers(phi)
        normal = np.asarray(self.normal)
        e1 = np.repeat(normal[None, :], n, axis=0)
        e2 = np.cross(centers, e1)
        w = vmf_colatitude_cos(self.kappa, rng.uniform(size=n))
        lon = rng.uniform(0.0, TWO_PI, size=n)
        r = np.sqrt(np.clip(1.0 - w * w, 0.0, None))
        x = (r * np.cos(lon))[:, None] * e1 + (r * np.sin(lon))[:, None] * e2 + w[:, None] * centers
        return x / np.linalg.norm(x, axis=1)[:, None]

    # population objective -----------------------------------------------------------

    def quadrature(self):
        """Nodes and weights integrating against this law, or ``None``."""
        k = self.kind
        if k == "point_mass":
            return as_points(self.space, np.asarray(self.t)), np.ones(1)
        if k == "discrete":
            return as_points(self.space, np.asarray(self.points)), np.asarray(self.weights, dtype=float)
        if k == "vmf":
            n_w = 48 if self.kappa <= 200 else 96
            return _vmf_nodes(self.mu, self.kappa, n_w, 64)
        if k == "wrapped_normal":
            theta = TWO_PI * np.arange(CIRCLE_NODES) / CIRCLE_NODES
            delta = (theta - self.mu[0] + math.pi) % TWO_PI - math.pi
            wraps = np.arange(-6, 7)[:, None] * TWO_PI
            dens = np.exp(-0.5 * ((delta[None, :] + wraps) / self.sigma) ** 2).sum(axis=0)
            return theta[:, None], dens / dens.sum()
        if k == "gaussian":
            if self.space.dim > 3:
                return None
            if self.space.dim == 1:
                # equal-mass cells represented by their conditional means; the odd
                # count puts the middle node exactly on the median
                edges = ndtri(np.arange(LINE_NODES + 1) / LINE_NODES)
                dens = np.exp(-0.5 * edges ** 2) / math.sqrt(2.0 * math.pi)
                sd = math.sqrt(float(np.asarray(self.cov)[0, 0]))
                x = self.mu[0] + sd * LINE_NODES * (dens[:-1] - dens[1:])
                return x[:, None], np.full(LINE_NODES, 1.0 / LINE_NODES)
            x, w = hermegauss(41)
            w = w / w.sum()
            grids = np.meshgrid(*([x] * self.space.dim), indexing="ij")
            wgrid = np.meshgrid(*([w] * self.space.dim), indexing="ij")
            z = np.column_stack([g.ravel() for g in grids])
            weights = np.prod(np.column_stack([g.ravel() for g in wgrid]), axis=1)
            chol = np.linalg.cholesky(np.asarray(self.cov, dtype=float))
            keep = weights > 1e-300
            return np.asarray(self.mu) + z[keep] @ chol.T, weights[keep] / weights[keep].sum()
        if k == "mixture":
            parts = [c.quadrature() for c in self.components]
            if any(p is None for p in parts):
                return None
            nodes = np.vstack([p[0] for p in parts])
            weights = np.concatenate([wt * p[1] for wt, p in zip(self.weights, parts)])
            return nodes, weights
        n_along = 64
        phi = TWO_PI * np.arange(n_along) / n_along
        along = np.exp(self.along_kappa * (np.cos(phi - self.along_mean) - 1.0))
        along /= along.sum()
        w, lon, offw = vmf_offsets(self.kappa, 48, 32)
        r = np.sqrt(np.clip(1.0 - w * w, 0.0, None))
        centers = self._gc_centers(phi)
        normal = np.asarray(self.normal)
        nodes, weights = [], []
        for c, a in zip(centers, along):
            e2 = np.cross(c, normal)
            x = (r * np.cos(lon))[:, None] * normal + (r * np.sin(lon))[:, None] * e2 + w[:, None] * c
            nodes.append(x / np.linalg.norm(x, axis=1)[:, None])
            weights.append(a * offw)
        return np.vstack(nodes), np.concatenate(weights)

    def objective_nodes(self, route: str = "auto", oracle_size: int = 10 ** 6, seed: int = 20240601):
        """``(nodes, weights, route_used)`` representing ``E c(X, .)``.

        ``route`` is ``auto``, ``closed_form`` (atomic laws), ``quadrature`` or
        ``oracle`` (``oracle_size`` i.i.d. draws with their own ``seed``).
        """
        atomic = self.kind in ("point_mass", "discrete")
        if route == "oracle":
            if oracle_size < 10 ** 6:
                raise DistributionError("oracle samples need at least 10**6 draws")
            rng = np.random.default_rng(seed)
            pts = self.sample(oracle_size, rng)
            # repeated draws (atomic laws) merge into weighted nodes; exact reweighting
            uniq, counts = np.unique(pts, axis=0, return_counts=True)
            return uniq, counts / len(pts), "oracle"
        if route == "closed_form" and not atomic:
            raise DistributionError(f"{self.kind} has no closed-form population objective")
        quad = self.quadrature()
        if quad is None:
            if route == "quadrature":
                raise DistributionError(f"{self.kind} has no quadrature rule here")
            return self.objective_nodes("oracle", oracle_size, seed)
        return quad[0], quad[1], "closed_form" if atomic else "quadrature"


def _gc_frame(normal):
    n = np.asarray(normal, dtype=float)
    j = int(np.argmin(np.abs(n)))
    e = np.zeros(3)
    e[j] = 1.0
    u = e - (e @ n) * n
    u /= np.linalg.norm(u)
    return u, np.cross(n, u)


def point_mass(space, t):
    return Distribution("point_mass", space, t=tuple(np.ravel(t).astype(float)))


def discrete(space, points, weights):
    pts = np.asarray(points, dtype=float)
    if pts.ndim < 2:
        pts = pts.reshape(-1, 1)
    return Distribution("discrete", space, points=tuple(map(tuple, pts)),
                        weights=tuple(float(w) for w in weights))


def vmf(space, mu, kappa):
    return Distribution("vmf", space, mu=tuple(np.ravel(mu).astype(float)), kappa=float(kappa))


def wrapped_normal(space, mu, sigma):
    return Distribution("wrapped_normal", space, mu=(float(mu),), sigma=float(sigma))


def gaussian(space, mu, cov):
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    return Distribution("gaussian", space, mu=tuple(np.ravel(mu).astype(float)),
                        cov=tuple(map(tuple, cov)))


def mixture(components, weights):
    return Distribution("mixture", components[0].space, components=tuple(components),
                        weights=tuple(float(w) for w in weights))


def great_circle_noise(space, normal, kappa, along_mean=0.0, along_kappa=0.0):
    n = np.asarray(normal, dtype=float)
    return Distribution("great_circle_noise", space, normal=tuple(n / np.linalg.norm(n)),
                        kappa=float(kappa), along_mean=float(along_mean),
                        along_kappa=float(along_kappa))
