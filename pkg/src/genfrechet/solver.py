"""epsilon-argmin sets of empirical and population objectives.

Two methods are available. ``brute_force`` evaluates the objective on a
deterministic grid of the domain and returns the exact epsilon-argmin over
that grid. ``continuous`` runs multi-start geodesic descent (gradient steps
with backtracking, compass polishing for kinks, Newton refinement for smooth
minima), merged with a coarse grid scan so that disconnected minimizer sets
are not missed.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .costs import CostFunction, objective_values
from .domains import DomainError, DomainSpec, discretize_domain
from .metricspaces import (
    DescriptorSpace,
    _exp,
    as_points,
    canonical_angle,
    fibonacci_sphere,
    pairwise_distances,
    tangent_basis,
)

log = logging.getLogger(__name__)

SLACK = 1e-12
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class SolverError(RuntimeError):
    """The solver could not produce a mean set."""


@dataclass
class MeanSet:
    """An epsilon-argmin result.

    ``value`` is the minimum objective value found (``l_n`` or ``l_0``);
    ``values`` holds the objective at each listed point.
    """

    points: np.ndarray
    value: float
    epsilon: float
    method: str
    domain_used: DomainSpec | None
    values: np.ndarray
    mesh: float | None = None
    converged: bool = True
    warnings: list[str] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.points)


def _eps_mask(values: np.ndarray, epsilon: float) -> np.ndarray:
    return values <= values.min() + epsilon + SLACK


def eps_argmin_finite(values, epsilon: float) -> MeanSet:
    """Exact epsilon-argmin of a finite list of ``(point, value)`` pairs."""
    pairs = list(values)
    if not pairs:
        raise SolverError("eps_argmin needs a nonempty list of values")
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    vals = np.array([float(v) for _, v in pairs])
    mask = _eps_mask(vals, epsilon)
    points = [p for (p, _), keep in zip(pairs, mask) if keep]
    return MeanSet(points=points, value=float(vals.min()), epsilon=float(epsilon), method="finite",
                   domain_used=None, values=vals[mask])


def dedupe(space: DescriptorSpace, points: np.ndarray, values: np.ndarray, radius: float):
    """Greedy deduplication: keep lowest-value representatives more than ``radius`` apart."""
    if radius <= 0 or len(points) <= 1:
        return points, values
    order = np.lexsort((np.arange(len(values)), values))
    kept: list[int] = []
    for i in order:
        if kept:
            d = pairwise_distances(space, points[i:i + 1], points[kept])[0]
            if np.any(d <= radius):
                continue
        kept.append(int(i))
    kept.sort()
    return points[kept], values[kept]


# -- continuous method ----------------------------------------------------------


@dataclass
class ContinuousConfig:
    starts: int = 16
    tolerance: float = 1e-6
    step_tol: float = 1e-10
    max_iter: int = 500
    coarse_resolution: int | None = None
    armijo: float = 1e-4


class _Chart:
    """Local geometry of a domain for descent: tangent basis and retraction."""

    def __init__(self, space: DescriptorSpace, domain: DomainSpec, hint: np.ndarray | None):
        self.space = space
        self.domain = domain
        domain.check_space(space)
        k = domain.kind
        if k == "finite_set" or space.kind == "finite":
            raise DomainError("continuous method is not available on finite domains; use brute_force")
        if k == "ball" and space.kind != "euclidean":
            raise DomainError("continuous method on balls is only available in euclidean spaces")
        if space.kind == "sphere" and space.dim != 2 and k == "full":
            raise DomainError("continuous method on spheres is only available for S^2")
        self.box = self._box(hint)

    def _box(self, hint):
        space, domain = self.space, self.domain
        if space.kind != "euclidean":
            return None
        if space.bbox is not None:
            return np.array(space.bbox, dtype=float)
        if domain.kind == "ball":
            c = np.asarray(domain.center)
            return np.column_stack([c - domain.radius, c + domain.radius])
        if hint is None or len(hint) == 0:
            raise DomainError("unbounded euclidean domain needs a bounding box or data hint")
        lo, hi = hint.min(axis=0), hint.max(axis=0)
        pad = np.maximum(hi - lo, 1.0) * 0.1
        return np.column_stack([lo - pad, hi + pad])

    @property
    def clip_box(self):
        return None if self.space.bbox is None else np.array(self.space.bbox, dtype=float)

    @property
    def dim(self):
        if self.domain.kind == "great_circle":
            return 1
        if self.domain.kind == "affine":
            return len(self.domain.basis)
        return self.space.dim

    def basis(self, m):
        if self.domain.kind == "great_circle":
            t = np.cross(np.asarray(self.domain.normal), m)
            return (t / np.linalg.norm(t))[None, :]
        if self.domain.kind == "affine":
            return self.domain.orthonormal_basis()
        return tangent_basis(self.space, m)

    def move(self, m, v):
        space = self.space
        if space.kind == "circle":
            return canonical_angle(m + v)
        if space.kind == "sphere":
            out = _exp(space, m, v - (v @ m) * m)
            if self.domain.kind == "great_circle":
                out = self.domain.project(space, out[None, :])[0]
            return out
        out = m + v
        if self.domain.kind == "ball":
            return self.domain.project(space, out[None, :])[0]
        box = self.clip_box
        if box is not None and self.domain.kind == "full":
            out = np.clip(out, box[:, 0], box[:, 1])
        return out

    def starts(self, k):
        space, domain = self.space, self.domain
        frac = (np.arange(k) * GOLDEN) % 1.0
        if domain.kind == "great_circle":
            u, v = domain.circle_frame()
            th = 2.0 * math.pi * frac
            return np.outer(np.cos(th), u) + np.outer(np.sin(th), v)
        if space.kind == "circle":
            return canonical_angle(2.0 * math.pi * frac)[:, None]
        if space.kind == "sphere":
            return fibonacci_sphere(max(k, 4))[:k]
        unit = qmc.Halton(d=self.dim, scramble=False).random(k + 1)[1:]
        if domain.kind == "affine":
            q = domain.orthonormal_basis()
            ext = self._affine_extent()
            return np.asarray(domain.offset) + (2.0 * unit - 1.0) * ext @ q
        box = self.box
        pts = box[:, 0] + unit * (box[:, 1] - box[:, 0])
        if domain.kind == "ball":
            pts = domain.project(space, pts)
        return pts

    def _affine_extent(self):
        try:
            return self.domain.affine_extent(self.space)
        except DomainError:
            off = np.asarray(self.domain.offset)
            return float(np.abs(self.box - off[:, None]).max()) * math.sqrt(self.space.dim)

    def coarse_grid(self, resolution):
        space, domain = self.space, self.domain
        if space.kind == "euclidean" and space.bbox is None:
            if domain.kind == "full":
                boxed = DescriptorSpace.euclidean(space.dim, [tuple(r) for r in self.box])
                return discretize_domain(boxed, domain, resolution).points
            if domain.kind == "affine" and domain.extent is None:
                dom = DomainSpec.affine(domain.basis, domain.offset, self._affine_extent())
                return discretize_domain(space, dom, resolution).points
        return discretize_domain(space, domain, resolution).points


def _default_coarse(chart: _Chart) -> int:
    if chart.space.kind == "sphere" and chart.domain.kind in ("full", "ball"):
        return 400
    if chart.dim == 1:
        return 256
    if chart.dim == 2:
        return 24
    return 10


class _Objective:
    def __init__(self, c: CostFunction, nodes: np.ndarray, weights: np.ndarray):
        self.c = c
        self.nodes = nodes
        self.weights = weights
        self.evals = 0

    def __call__(self, ms: np.ndarray) -> np.ndarray:
        self.evals += len(ms)
        return objective_values(self.c, self.nodes, self.weights, ms)

    def one(self, m: np.ndarray) -> float:
        return float(self(m[None, :])[0])

    def grad_coeffs(self, chart: _Chart, m: np.ndarray, basis: np.ndarray, fm: float) -> np.ndarray:
        g = self.c.gradient(self.nodes, self.weights, m)
        if g is not None:
            return basis @ g
        h = 1e-7
        pts = np.array([chart.move(m, s * h * b) for b in basis for s in (1.0, -1.0)])
        vals = self(pts).reshape(len(basis), 2)
        return (vals[:, 0] - vals[:, 1]) / (2.0 * h)


def _noise(f: float) -> float:
    return 1e-13 * (1.0 + abs(f))


def _compass_dirs(basis: np.ndarray) -> np.ndarray:
    k = len(basis)
    if k == 1:
        return np.array([basis[0], -basis[0]])
    if k == 2:
        ang = np.arange(8) * (math.pi / 4.0)
        return np.outer(np.cos(ang), basis[0]) + np.outer(np.sin(ang), basis[1])
    return np.vstack([basis, -basis])


def _descend(f: _Objective, chart: _Chart, m0: np.ndarray, cfg: ContinuousConfig):
    """Gradient descent with Barzilai-Borwein trial steps and Armijo backtracking."""
    m = m0.copy()
    fm = f.one(m)
    alpha = None
    prev = None
    converged = False
    for _ in range(cfg.max_iter):
        basis = chart.basis(m)
        coeffs = f.grad_coeffs(chart, m, basis, fm)
        gn2 = float(coeffs @ coeffs)
        if not math.isfinite(gn2) or math.sqrt(gn2) <= 1e-14 * (1.0 + abs(fm)):
            converged = True
            break
        if prev is not None:
            s_prev, g_prev = prev
            y = coeffs - g_prev
            sy = float(s_prev @ y)
            alpha = float(s_prev @ s_prev) / sy if sy > 0 else 2.0 * alpha
        if alpha is None:
            alpha = 0.1 / math.sqrt(gn2)
        alpha = min(alpha, 1.0 / math.sqrt(gn2))
        accepted = False
        while alpha * math.sqrt(gn2) >= cfg.step_tol:
            cand = chart.move(m, -alpha * (coeffs @ basis))
            fc = f.one(cand)
            if fc <= fm - cfg.armijo * alpha * gn2:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            converged = True
            break
        step = alpha * math.sqrt(gn2)
        prev = (-alpha * coeffs, coeffs)
        m, fm = cand, fc
        if step < cfg.step_tol:
            converged = True
            break
    m, fm, ok = _compass(f, chart, m, fm, cfg)
    m, fm = _newton(f, chart, m, fm)
    return m, fm, converged and ok


def _compass(f, chart, m, fm, cfg, step=1e-2):
    s = step
    for _ in range(20 * cfg.max_iter):
        if s < cfg.step_tol:
            return m, fm, True
        dirs = _compass_dirs(chart.basis(m))
        cands = np.array([chart.move(m, s * d) for d in dirs])
        vals = f(cands)
        j = int(np.argmin(vals))
        if vals[j] < fm - _noise(fm):
            m, fm = cands[j], float(vals[j])
            s *= 2.0
        else:
            s *= 0.5
    return m, fm, False


def _newton(f, chart, m, fm, iters=20):
    if f.c.gradient(f.nodes, f.weights, m) is None:
        return m, fm
    h = 1e-5
    for _ in range(iters):
        basis = chart.basis(m)
        g = f.grad_coeffs(chart, m, basis, fm)
        gn = float(np.linalg.norm(g))
        if gn == 0.0:
            break
        k = len(basis)
        hess = np.empty((k, k))
        for j, b in enumerate(basis):
            gp = f.grad_coeffs(chart, chart.move(m, h * b), basis, fm)
            gm = f.grad_coeffs(chart, chart.move(m, -h * b), basis, fm)
            hess[:, j] = (gp - gm) / (2.0 * h)
        hess = 0.5 * (hess + hess.T)
        try:
            if np.linalg.eigvalsh(hess).min() <= 0:
                break
            step = -np.linalg.solve(hess, g)
        except np.linalg.LinAlgError:
            break
        if np.linalg.norm(step) > 1e-2:
            break
        cand = chart.move(m, step @ basis)
        fc = f.one(cand)
        gc = float(np.linalg.norm(f.grad_coeffs(chart, cand, chart.basis(cand), fc)))
        if fc > fm + _noise(fm) or gc >= gn:
            break
        m, fm = cand, fc
    return m, fm


def _verify_local(f, chart, m, fm):
    for r in (1e-2, 1e-4):
        dirs = _compass_dirs(chart.basis(m))
        cands = np.array([chart.move(m, r * d) for d in dirs])
        vals = f(cands)
        j = int(np.argmin(vals))
        if vals[j] < fm - _noise(fm):
            return cands[j]
    return None


def _continuous(f: _Objective, chart: _Chart, epsilon: float, cfg: ContinuousConfig,
                extra_starts: np.ndarray | None):
    coarse_res = cfg.coarse_resolution or _default_coarse(chart)
    grid = chart.coarse_grid(coarse_res)
    gvals = f(grid)
    order = np.argsort(gvals, kind="stable")
    starts = [chart.starts(cfg.starts), grid[order[:4]]]
    if extra_starts is not None and len(extra_starts):
        starts.append(extra_starts)
    starts = np.vstack(starts)

    found, fvals, all_converged, all_verified = [], [], True, True
    for s in starts:
        m, fm, conv = _descend(f, chart, s, cfg)
        for _ in range(3):
            better = _verify_local(f, chart, m, fm)
            if better is None:
                break
            all_verified = False
            m, fm, conv = _descend(f, chart, better, cfg)
        found.append(m)
        fvals.append(fm)
        all_converged &= conv
    pts = np.vstack([np.array(found), grid])
    vals = np.concatenate([np.array(fvals), gvals])
    return pts, vals, all_converged, {"starts": len(starts), "coarse_resolution": coarse_res,
                                      "local_checks_clean": all_verified}


def _is_line_l1(c: CostFunction, domain: DomainSpec) -> bool:
    sp = c.space
    return (sp.kind == "euclidean" and sp.dim == 1 and c.form == "lp" and c.p == 1.0
            and domain.kind == "full" and c.data_space == sp)


def _line_l1(x: np.ndarray, w: np.ndarray, epsilon: float, bbox):
    """Exact epsilon-argmin of ``sum w_i |x_i - m|`` on the line.

    The objective is convex and piecewise linear with kinks at the data, so
    the epsilon-argmin is an interval; its endpoints are returned.
    """
    order = np.argsort(x, kind="stable")
    xs, ws = x[order], w[order]
    total = float(ws.sum())
    cw = np.cumsum(ws)
    cx = np.cumsum(ws * xs)
    # F(x_k) = x_k (W_left - W_right) - S_left + S_right, with x_k counted on the left
    vals = xs * (cw - (total - cw)) - cx + (cx[-1] - cx)
    lo_box, hi_box = (bbox[0] if bbox is not None else (-math.inf, math.inf))
    best = float(vals.min())
    target = best + epsilon
    inside = np.nonzero(vals <= target + SLACK)[0]
    i, j = int(inside[0]), int(inside[-1])

    def cross(k_in, k_out):
        gap = target - vals[k_in]
        if gap <= 0:
            return xs[k_in]
        return xs[k_in] + (xs[k_out] - xs[k_in]) * gap / (vals[k_out] - vals[k_in])

    left = cross(i, i - 1) if i > 0 else xs[0] - max(target - vals[0], 0.0) / total
    right = cross(j, j + 1) if j < len(xs) - 1 else xs[-1] + max(target - vals[-1], 0.0) / total
    left, right = max(left, lo_box), min(right, hi_box)
    pts = np.array([[left]]) if left == right else np.array([[left], [right]])
    pvals = np.array([float(w @ np.abs(x - p[0])) for p in pts])
    return pts, pvals, best


# -- public entry points --------------------------------------------------------------


def _solve(c: CostFunction, nodes: np.ndarray, weights: np.ndarray, domain: DomainSpec,
           epsilon: float, method: str, resolution: int | None, cfg: ContinuousConfig,
           dedup_radius: float | None, lipschitz: float | None, extra_starts=None) -> MeanSet:
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    space = c.space
    domain.check_space(space)
    f = _Objective(c, nodes, weights)
    warnings: list[str] = []
    details: dict = {}
    exact = domain.kind == "finite_set" or space.kind == "finite"
    if method == "brute_force" or (method == "continuous" and exact):
        if exact:
            # finite candidate sets are enumerated exactly under either method
            resolution = resolution or 1
        if resolution is None:
            raise ValueError("brute_force needs a resolution")
        grid = discretize_domain(space, domain, resolution)
        vals = f(grid.points)
        mask = _eps_mask(vals, epsilon)
        pts, pvals = grid.points[mask], vals[mask]
        radius = 0.0 if dedup_radius is None else dedup_radius
        pts, pvals = dedupe(space, pts, pvals, radius)
        mesh = grid.mesh
        desc = "enumeration" if exact else f"brute_force(mesh={mesh:.6g})"
        details.update(method_desc=desc, grid_size=len(grid.points))
        if lipschitz is not None:
            details["value_error_bound"] = lipschitz * mesh
        converged = True
        value = float(vals.min())
    elif method == "continuous" and _is_line_l1(c, domain):
        pts, pvals, value = _line_l1(nodes[:, 0], weights, epsilon, space.bbox)
        mesh, converged = None, True
        details.update(method_desc="continuous(exact piecewise-linear L1 on the line)",
                       closed_form="line_l1")
    elif method == "continuous":
        chart = _Chart(space, domain, nodes if c.data_space == space else None)
        cand, cvals, converged, info = _continuous(f, chart, epsilon, cfg, extra_starts)
        mask = _eps_mask(cvals, epsilon)
        radius = 10.0 * cfg.tolerance if dedup_radius is None else dedup_radius
        pts, pvals = dedupe(space, cand[mask], cvals[mask], radius)
        mesh = None
        value = float(cvals.min())
        details.update(info, method_desc=f"continuous(starts={info['starts']}, tol={cfg.tolerance:g})")
        if not converged:
            warnings.append("optimizer did not converge within max_iter for some starts")
    else:
        raise ValueError(f"unknown solver method {method!r}")
    if space.kind == "euclidean" and space.bbox is not None and domain.kind == "full":
        box = np.array(space.bbox)
        edge = mesh or cfg.tolerance
        touch = np.any((pts <= box[:, 0] + edge) | (pts >= box[:, 1] - edge))
        if touch:
            warnings.append("minimizer touches the bounding box; enlarge the box")
    for w in warnings:
        log.warning(w)
    return MeanSet(points=pts, value=value, epsilon=float(epsilon), method=method, domain_used=domain,
                   values=pvals, mesh=mesh, converged=converged, warnings=warnings, details=details)


def empirical_mean_set(c: CostFunction, sample, domain: DomainSpec, epsilon: float = 0.0,
                       method: str = "continuous", *, resolution: int | None = None,
                       starts: int = 16, tolerance: float = 1e-6, dedup_radius: float | None = None,
                       lipschitz: float | None = None, coarse_resolution: int | None = None) -> MeanSet:
    """epsilon-argmin of the empirical objective ``F_n`` over ``domain``.

    Parameters
    ----------
    c : CostFunction
    sample : array_like
        Data points in ``c.data_space``.
    domain : DomainSpec
        Realized minimization domain ``M_n``.
    epsilon : float
        Nonnegative tolerance ``eps_n``.
    method : {"continuous", "brute_force"}
    resolution : int, optional
        Grid resolution for ``brute_force``.
    dedup_radius : float, optional
        Defaults to 0 for brute force (every grid point of the epsilon-argmin
        is reported) and to ``10 * tolerance`` for the continuous method.
    """
    pts = as_points(c.data_space, sample)
    if len(pts) == 0:
        raise SolverError("empirical mean set needs a nonempty sample")
    weights = np.full(len(pts), 1.0 / len(pts))
    extra = None
    if method == "continuous" and c.data_space == c.space and len(pts) <= 2000 and domain.kind == "full":
        own = objective_values(c, pts, weights, pts)
        extra = pts[np.argsort(own, kind="stable")[:4]]
    cfg = ContinuousConfig(starts=starts, tolerance=tolerance, coarse_resolution=coarse_resolution)
    out = _solve(c, pts, weights, domain, epsilon, method, resolution, cfg, dedup_radius, lipschitz,
                 extra_starts=extra)
    out.details["objective"] = "empirical"
    out.details["n"] = len(pts)
    return out


def population_mean_set(c: CostFunction, distribution, domain: DomainSpec, tolerance: float = 0.0,
                        method: str = "continuous", *, route: str = "auto", resolution: int | None = None,
                        oracle_size: int = 10 ** 6, oracle_seed: int = 20240601, starts: int = 16,
                        coarse_resolution: int | None = None) -> MeanSet:
    """epsilon-argmin (``epsilon = tolerance``) of the population objective ``F``.

    ``F`` is computed exactly for atomic distributions, by quadrature for
    continuous ones, or from a large oracle sample when ``route='oracle'``.
    The route used is recorded in ``details['route']``.
    """
    nodes, weights, used = distribution.objective_nodes(route, oracle_size=oracle_size, seed=oracle_seed)
    nodes = as_points(c.data_space, nodes)
    cfg = ContinuousConfig(starts=starts, coarse_resolution=coarse_resolution)
    out = _solve(c, nodes, weights, domain, tolerance, method, resolution, cfg, None, None)
    out.details["objective"] = "population"
    out.details["route"] = used
    return out


def population_objective(c: CostFunction, distribution, ms, route: str = "auto", **kw) -> np.ndarray:
    """``F(m)`` at each row of ``ms``."""
    nodes, weights, _ = distribution.objective_nodes(route, **kw)
    nodes = as_points(c.data_space, nodes)
    return objective_values(c, nodes, weights, as_points(c.space, ms))
