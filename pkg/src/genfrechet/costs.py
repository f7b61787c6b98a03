"""Cost functions ``c(t, m)``, scalarization, and regularity checkers.

Cost forms follow the hierarchy of Fréchet-type means:

* ``lp``: ``d(t, m) ** p`` with ``p >= 1``
* ``h_of_d``: ``H(d(t, m))`` for a nondecreasing ``H``
* ``g_of_rho``: ``G(rho(t, m))`` where ``rho`` maps data and descriptors to
  ``[0, inf)`` and need not be the metric
* ``custom``: any real-valued two-argument function, possibly negative
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .metricspaces import (
    DescriptorSpace,
    as_point,
    as_points,
    distances_to,
    log_map,
    pairwise_distances,
)
from .verdict import FAIL, PASS, VACUOUS, Verdict


class CostError(ValueError):
    """Invalid cost description or non-finite cost value."""


# -- scalar functions ---------------------------------------------------------

SCALAR_KINDS = ("power", "log1p_power", "identity", "exp", "constant", "tabulated")


@dataclass(frozen=True)
class ScalarFunction:
    """Named scalar function on ``[0, inf)``.

    ``tabulated`` interpolates linearly between breakpoints ``xs``/``ys`` and
    extends the last segment linearly beyond the table.
    """

    name: str
    p: float = 1.0
    value: float = 0.0
    xs: tuple[float, ...] = ()
    ys: tuple[float, ...] = ()

    def __post_init__(self):
        if self.name not in SCALAR_KINDS:
            raise CostError(f"unknown scalar function {self.name!r}")
        if self.name == "tabulated":
            if len(self.xs) < 2 or len(self.xs) != len(self.ys):
                raise CostError("tabulated function needs >= 2 matching breakpoints")
            if any(b <= a for a, b in zip(self.xs, self.xs[1:])):
                raise CostError("tabulated breakpoints must be strictly increasing")

    @classmethod
    def power(cls, p):
        return cls("power", p=float(p))

    @classmethod
    def log1p_power(cls, p=2.0):
        return cls("log1p_power", p=float(p))

    @classmethod
    def tabulated(cls, xs, ys):
        return cls("tabulated", xs=tuple(map(float, xs)), ys=tuple(map(float, ys)))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.name == "power":
            return np.power(x, self.p)
        if self.name == "log1p_power":
            return np.log1p(np.power(x, self.p))
        if self.name == "identity":
            return x.copy()
        if self.name == "exp":
            with np.errstate(over="ignore"):
                return np.exp(x)
        if self.name == "constant":
            return np.full_like(x, self.value)
        xs, ys = np.asarray(self.xs), np.asarray(self.ys)
        out = np.interp(x, xs, ys)
        lo_slope = (ys[1] - ys[0]) / (xs[1] - xs[0])
        hi_slope = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
        out = np.where(x < xs[0], ys[0] + lo_slope * (x - xs[0]), out)
        return np.where(x > xs[-1], ys[-1] + hi_slope * (x - xs[-1]), out)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        if self.name == "power":
            if self.p == 1.0:
                return np.ones_like(x)
            return self.p * np.power(x, self.p - 1.0)
        if self.name == "log1p_power":
            xp = np.power(x, self.p)
            with np.errstate(divide="ignore", invalid="ignore"):
                d = self.p * np.power(x, self.p - 1.0) / (1.0 + xp)
            return np.nan_to_num(d, nan=0.0)
        if self.name == "identity":
            return np.ones_like(x)
        if self.name == "exp":
            return np.exp(x)
        if self.name == "constant":
            return np.zeros_like(x)
        xs, ys = np.asarray(self.xs), np.asarray(self.ys)
        slopes = np.diff(ys) / np.diff(xs)
        idx = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, len(slopes) - 1)
        return slopes[idx]

    @property
    def continuous(self) -> bool:
        return True

    def is_nondecreasing(self, grid=None) -> bool:
        grid = np.linspace(0.0, 10.0, 1001) if grid is None else np.sort(np.asarray(grid, dtype=float))
        vals = self(grid)
        return bool(np.all(np.diff(vals) >= -1e-12))


# -- rho functions ------------------------------------------------------------

RhoFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _rho_distance(space, data_space):
    if space != data_space:
        raise CostError("rho='distance' needs the data space to equal the descriptor space")
    return lambda ts, ms: pairwise_distances(space, ts, ms)


def _rho_line_residual(space, data_space):
    # distance from a planar data point to the line through 0 with direction angle m
    if space.kind != "circle" or data_space.kind != "euclidean" or data_space.dim != 2:
        raise CostError("line_residual needs euclidean(2) data and circle descriptors")

    def rho(ts, ms):
        normals = np.column_stack([-np.sin(ms[:, 0]), np.cos(ms[:, 0])])
        return np.abs(ts @ normals.T)

    return rho


def _rho_inner_product(space, data_space):
    if space.kind != "euclidean" or data_space.kind != "euclidean":
        raise CostError("inner_product needs euclidean spaces")
    return lambda ts, ms: ts @ ms.T


RHO_BUILTINS = {
    "distance": _rho_distance,
    "line_residual": _rho_line_residual,
    "inner_product": _rho_inner_product,
}

_CUSTOM_REGISTRY: dict[str, Callable] = {}


def register_cost(name: str, fn: Callable) -> None:
    """Register ``fn(ts, ms) -> matrix`` under ``name`` for use in configs."""
    _CUSTOM_REGISTRY[name] = fn


def register_rho(name: str, fn: Callable) -> None:
    """Register a pairwise ``rho(ts, ms) -> matrix`` builder-free function."""
    RHO_BUILTINS[name] = lambda space, data_space: fn


def _centered_square(ts, ms):
    # |t - m|^2 - |t|^2: takes negative values, minimized by the mean
    sq = (ms * ms).sum(axis=1)[None, :] - 2.0 * ts @ ms.T
    return sq


register_cost("centered_square", _centered_square)


def resolve_rho(rho, space, data_space) -> RhoFn:
    if callable(rho):
        return _pairwise_from_pointwise(rho)
    if rho not in RHO_BUILTINS:
        raise CostError(f"unknown rho {rho!r}")
    return RHO_BUILTINS[rho](space, data_space)


def _pairwise_from_pointwise(fn):
    def pairwise(ts, ms):
        out = np.empty((len(ts), len(ms)))
        for i, t in enumerate(ts):
            for j, m in enumerate(ms):
                out[i, j] = fn(t, m)
        return out

    return pairwise


# -- cost functions -----------------------------------------------------------

COST_FORMS = ("lp", "h_of_d", "g_of_rho", "custom")


@dataclass(frozen=True)
class CostFunction:
    """A cost ``c: T x M -> R``.

    ``data_space`` defaults to ``space`` (``T = M``). ``rho`` and ``custom``
    accept a builtin/registered name or a callable; callables taking single
    points are applied pairwise. ``table`` gives a tabulated custom cost
    between two finite spaces, indexed ``table[t][m]``.
    """

    form: str
    space: DescriptorSpace
    data_space: DescriptorSpace | None = None
    p: float = 2.0
    H: ScalarFunction | None = None
    G: ScalarFunction | None = None
    rho: object = "distance"
    custom: object = None
    table: tuple[tuple[float, ...], ...] | None = None
    _rho_fn: Callable | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.form not in COST_FORMS:
            raise CostError(f"unknown cost form {self.form!r}")
        if self.data_space is None:
            object.__setattr__(self, "data_space", self.space)
        if self.form in ("lp", "h_of_d") and self.data_space != self.space:
            raise CostError(f"{self.form} costs need the data space to equal the descriptor space")
        if self.form == "lp" and not self.p >= 1:
            raise CostError("lp costs need p >= 1")
        if self.form == "h_of_d":
            if self.H is None:
                raise CostError("h_of_d cost needs H")
            if not self.H.is_nondecreasing():
                raise CostError("H must be nondecreasing")
        if self.form == "g_of_rho":
            if self.G is None:
                raise CostError("g_of_rho cost needs G")
            if not self.G.is_nondecreasing():
                raise CostError("G must be nondecreasing")
            object.__setattr__(self, "_rho_fn", resolve_rho(self.rho, self.space, self.data_space))
        if self.form == "custom":
            if self.table is not None:
                if self.space.kind != "finite" or self.data_space.kind != "finite":
                    raise CostError("tabulated costs need finite data and descriptor spaces")
                tab = np.asarray(self.table, dtype=float)
                if tab.shape != (self.data_space.size, self.space.size):
                    raise CostError("cost table shape must be (|T|, |M|)")
            elif callable(self.custom):
                object.__setattr__(self, "_rho_fn", _pairwise_from_pointwise(self.custom))
            elif self.custom in _CUSTOM_REGISTRY:
                object.__setattr__(self, "_rho_fn", _CUSTOM_REGISTRY[self.custom])
            else:
                raise CostError(f"unknown custom cost {self.custom!r}")

    @classmethod
    def lp(cls, space, p=2.0):
        return cls("lp", space, p=float(p))

    @classmethod
    def h_of_d(cls, space, H):
        return cls("h_of_d", space, H=H)

    @classmethod
    def g_of_rho(cls, space, G, rho="distance", data_space=None):
        """``G(rho(t, m))``; ``G`` must be nondecreasing, like ``H`` in ``h_of_d``."""
        return cls("g_of_rho", space, data_space=data_space, G=G, rho=rho)

    @classmethod
    def custom_cost(cls, space, fn=None, data_space=None, table=None):
        if table is not None:
            table = tuple(tuple(float(v) for v in row) for row in np.asarray(table, dtype=float))
        return cls("custom", space, data_space=data_space, custom=fn, table=table)

    @property
    def is_distance_based(self) -> bool:
        """Whether the cost is ``G(d(t, m))`` for a scalar ``G``."""
        return self.form in ("lp", "h_of_d") or (self.form == "g_of_rho" and self.rho == "distance")

    @property
    def outer(self) -> ScalarFunction | None:
        if self.form == "lp":
            return ScalarFunction.power(self.p)
        if self.form == "h_of_d":
            return self.H
        if self.form == "g_of_rho":
            return self.G
        return None

    def matrix(self, ts: np.ndarray, ms: np.ndarray) -> np.ndarray:
        """Cost matrix ``c(ts[i], ms[j])`` for canonical point arrays."""
        if self.form == "lp":
            d = pairwise_distances(self.space, ts, ms)
            out = d * d if self.p == 2.0 else np.power(d, self.p)
        elif self.form == "h_of_d":
            out = self.H(pairwise_distances(self.space, ts, ms))
        elif self.form == "g_of_rho":
            out = self.G(self._rho_fn(ts, ms))
        elif self.table is not None:
            tab = np.asarray(self.table, dtype=float)
            out = tab[np.ix_(ts[:, 0].astype(int), ms[:, 0].astype(int))]
        else:
            out = np.asarray(self._rho_fn(ts, ms), dtype=float)
        if not np.all(np.isfinite(out)):
            raise CostError("cost function returned a non-finite value")
        return out

    def rho_matrix(self, ts: np.ndarray, ms: np.ndarray) -> np.ndarray:
        if self.form == "g_of_rho":
            return self._rho_fn(ts, ms)
        return pairwise_distances(self.space, ts, ms)

    def gradient(self, ts: np.ndarray, weights: np.ndarray, m: np.ndarray) -> np.ndarray | None:
        """Riemannian gradient at ``m`` of ``sum_i w_i c(ts[i], m)``.

        Returns ``None`` when no analytic gradient is available (non-metric
        costs or finite spaces). Contributions from data points at distance 0
        or on the cut locus are taken as zero (a valid subgradient choice).
        """
        if not self.is_distance_based or not self.space.has_geodesics:
            return None
        logs = log_map(self.space, m, ts)
        d = distances_to(self.space, ts, m)
        outer = self.outer
        slope = outer.derivative(d)
        with np.errstate(divide="ignore", invalid="ignore"):
            coef = np.where(d > 1e-15, -weights * slope / d, 0.0)
        return coef @ logs


def evaluate(c: CostFunction, t, m) -> float:
    """Cost of describing data point ``t`` by descriptor ``m``."""
    pt = as_point(c.data_space, t)
    pm = as_point(c.space, m)
    return float(c.matrix(pt[None, :], pm[None, :])[0, 0])


def empirical_objective(c: CostFunction, sample, m) -> float:
    """Average cost of ``m`` over ``sample``."""
    pts = as_points(c.data_space, sample)
    if len(pts) == 0:
        raise CostError("empirical objective needs a nonempty sample")
    pm = as_point(c.space, m)
    return float(c.matrix(pts, pm[None, :])[:, 0].mean())


def objective_values(c: CostFunction, nodes: np.ndarray, weights: np.ndarray, ms: np.ndarray,
                     block: int = 2_000_000) -> np.ndarray:
    """Weighted objective ``sum_i w_i c(nodes[i], m)`` at each row of ``ms``."""
    out = np.empty(len(ms))
    step = max(1, block // max(1, len(nodes)))
    for start in range(0, len(ms), step):
        chunk = ms[start:start + step]
        out[start:start + step] = weights @ c.matrix(nodes, chunk)
    return out


def scalarize(c: CostFunction, t, m, r: float, grid) -> tuple[float, float]:
    """Local infimum and supremum of ``c(t, .)`` over grid points in the open ball ``B(m, r)``."""
    if not r > 0:
        raise CostError("radius must be positive")
    pt = as_point(c.data_space, t)
    pm = as_point(c.space, m)
    g = as_points(c.space, grid)
    inside = g[distances_to(c.space, g, pm) < r]
    if len(inside) == 0:
        raise CostError("no grid point inside the ball")
    vals = c.matrix(pt[None, :], inside)[0]
    return float(vals.min()), float(vals.max())


# -- regularity checkers -------------------------------------------------------

DEFAULT_ADDITIVE_PROBES = tuple(2.0 ** k for k in range(-10, 21))


def check_additive(G: Callable, probe_xs=DEFAULT_ADDITIVE_PROBES) -> tuple[bool, float]:
    """Probe whether ``G(2x) <= b G(x)`` for a finite ``b``.

    Returns ``(holds, b_estimate)`` where ``b_estimate`` is the largest
    observed ratio ``G(2x) / G(x)``. ``holds`` requires the ratio to be finite
    and not to grow from the second-largest probe decade to the largest.
    """
    xs = np.sort(np.asarray(probe_xs, dtype=float))
    if len(xs) == 0:
        raise CostError("probe grid must be nonempty")
    if np.any(xs < 0):
        raise CostError("probes must be nonnegative")
    xs = xs[xs > 0]
    if len(xs) == 0:
        return True, 0.0
    with np.errstate(over="ignore"):
        g1 = np.asarray(G(xs), dtype=float)
        g2 = np.asarray(G(2.0 * xs), dtype=float)
    if not (np.all(np.isfinite(g1)) and np.all(np.isfinite(g2))):
        raise CostError("G returned a non-finite value on the probe grid")
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(g1 > 0, g2 / g1, np.where(g2 > 0, np.inf, 0.0))
    b = float(ratio.max())
    if not math.isfinite(b):
        return False, b
    top = xs.max()
    hi = ratio[xs >= top / 10.0]
    prev = ratio[(xs >= top / 100.0) & (xs < top / 10.0)]
    if len(prev) == 0:
        return True, b
    stable = hi.max() <= prev.max() * (1.0 + 1e-9) + 1e-12
    return bool(stable), b


@dataclass(frozen=True)
class EquicontinuityModulus:
    """``delta_rule(eps, m) -> delta > 0``."""

    delta_rule: Callable

    @classmethod
    def linear(cls, scale=1.0):
        return cls(lambda eps, m: scale * eps)

    @classmethod
    def constant(cls, delta):
        return cls(lambda eps, m: delta)


def check_equicontinuous(rho: Callable, modulus: EquicontinuityModulus, probes, space: DescriptorSpace,
                         data_space: DescriptorSpace | None = None) -> Verdict:
    """Probe uniform continuity of ``rho(x, .)`` in the descriptor.

    Each probe is ``(x, m, m_prime, eps)`` with ``d(m, m_prime) < delta(eps, m)``.
    ``rho`` is pointwise, ``rho(x, m) -> float``.
    """
    data_space = data_space or space
    probes = list(probes)
    method = "probe-limited: |rho(x,m')-rho(x,m)| < eps on supplied probes"
    if not probes:
        return Verdict(VACUOUS, method, detail="warning: empty probe set, vacuous pass")
    worst, witness = -math.inf, None
    for x, m, mp, eps in probes:
        delta = modulus.delta_rule(eps, m)
        if not delta > 0:
            raise CostError("modulus returned a nonpositive delta")
        pm, pmp = as_point(space, m), as_point(space, mp)
        dm = float(pairwise_distances(space, pm[None, :], pmp[None, :])[0, 0])
        if dm >= delta:
            raise CostError("probe violates d(m, m') < delta(eps, m)")
        px = as_point(data_space, x)
        gap = abs(float(rho(px, pmp)) - float(rho(px, pm)))
        excess = gap / eps
        if excess > worst:
            worst, witness = excess, (px, pm, pmp, eps)
    status = PASS if worst < 1.0 else FAIL
    return Verdict(status, method, worst=worst, witness=witness,
                   detail=f"worst |drho|/eps = {worst:.6g} over {len(probes)} probes")


def equicontinuity_probes(space: DescriptorSpace, xs, ms, modulus: EquicontinuityModulus,
                          eps_values, rng: np.random.Generator):
    """Random probes ``(x, m, m', eps)`` with ``m'`` strictly inside ``B(m, delta)``."""
    from .metricspaces import _exp, tangent_basis

    out = []
    for x in xs:
        for m in ms:
            pm = as_point(space, m)
            for eps in eps_values:
                delta = modulus.delta_rule(eps, pm)
                basis = tangent_basis(space, pm)
                dirn = rng.standard_normal(len(basis)) @ basis
                dirn /= np.linalg.norm(dirn)
                step = min(delta, math.pi) * rng.uniform(0.0, 0.99)
                out.append((x, pm, _exp(space, pm, step * dirn), eps))
    return out


@dataclass(frozen=True)
class CoercivityCertificate:
    """Reference point ``o``, radius ``C`` and lower-bound rule ``A_rule(n, m_n)``."""

    o: tuple[float, ...]
    C: float
    A_rule: Callable

    def __post_init__(self):
        if not self.C > 0:
            raise CostError("coercivity radius C must be positive")


def check_coercive(rho: RhoFn, cert: CoercivityCertificate, space: DescriptorSpace, sample,
                   probe_sequences=(), data_space: DescriptorSpace | None = None) -> Verdict:
    """Probe coercivity of a pairwise ``rho(ts, ms)``.

    Passes when the sample puts positive mass on ``rho(X, o) < C`` and, along
    every probe sequence ``m_1, m_2, ...``, ``rho(t, m_n) > A_n`` for all
    sampled ``t`` with ``rho(t, o) < C``. Compact descriptor spaces pass
    vacuously.
    """
    data_space = data_space or space
    method = "probe-limited: finitely many escaping sequences"
    ts = as_points(data_space, sample)
    o = as_point(space, np.asarray(cert.o))
    near = rho(ts, o[None, :])[:, 0] < cert.C
    mass = float(near.mean()) if len(ts) else 0.0
    diag = {"mass_below_C": mass, "k_n": int(near.sum())}
    if mass <= 0:
        return Verdict(FAIL, method, detail="no sampled mass with rho(X, o) < C", diagnostics=diag)
    if space.is_compact:
        return Verdict(VACUOUS, method, detail="compact descriptor space: no escaping sequence",
                       diagnostics=diag)
    t_near = ts[near]
    worst, witness = math.inf, None
    for seq_id, seq in enumerate(probe_sequences):
        pts = as_points(space, seq)
        for n, m in enumerate(pts, start=1):
            a_n = float(cert.A_rule(n, m))
            margin = float(rho(t_near, m[None, :])[:, 0].min()) - a_n
            if margin < worst:
                worst, witness = margin, {"sequence": seq_id, "n": n, "m": m, "A_n": a_n}
    status = PASS if worst > 0 else FAIL
    return Verdict(status, method, worst=worst, witness=None if status == PASS else witness,
                   detail=f"min rho(t, m_n) - A_n = {worst:.6g}", diagnostics=diag)


@dataclass(frozen=True)
class LowerBoundCertificate:
    """``a+ psi+(d(m,o)) - a- psi-(d(m,o))`` lower-bounds ``F`` and, with the
    sample-dependent ``a_n_rule(sample) -> (a_n+, a_n-)``, also ``F_n``."""

    o: tuple[float, ...]
    psi_plus: ScalarFunction
    psi_minus: ScalarFunction
    a_plus: float
    a_minus: float
    a_n_rule: Callable

    def __post_init__(self):
        if not (self.a_plus > 0 and self.a_minus > 0):
            raise CostError("a+ and a- must be positive")

    def growth_ok(self, deltas=tuple(2.0 ** k for k in range(21))) -> bool:
        """``psi+ / psi-`` increases along the probe grid and ends large."""
        d = np.asarray(deltas, dtype=float)
        plus, minus = self.psi_plus(d), self.psi_minus(d)
        with np.errstate(divide="ignore"):
            ratio = np.where(minus > 0, plus / np.where(minus > 0, minus, 1.0), np.inf)
        tail = ratio[len(ratio) // 2:]
        finite = tail[np.isfinite(tail)]
        if len(finite) < 2:
            return True
        return bool(np.all(np.diff(finite) > 0) and finite[-1] >= 1e3 * max(finite[0], 1e-300))


def check_lower_bound(cert: LowerBoundCertificate, c: CostFunction, population: Callable, samples,
                      probe_points) -> Verdict:
    """Check the lower bound on ``F`` and on ``F_n`` for each sample prefix.

    ``population(ms) -> F(ms)``; ``samples`` is a list of data arrays.
    """
    method = "probe-limited: bound checked on sampled descriptors along rays from o"
    if not cert.growth_ok():
        return Verdict(FAIL, method, detail="psi+/psi- does not grow on the probe grid")
    space = c.space
    o = as_point(space, np.asarray(cert.o))
    ms = as_points(space, probe_points)
    d = distances_to(space, ms, o)
    slack = 1e-9
    bound = cert.a_plus * cert.psi_plus(d) - cert.a_minus * cert.psi_minus(d)
    fvals = population(ms)
    excess = bound - fvals
    worst = float(excess.max())
    witness = ("population", ms[int(np.argmax(excess))]) if worst > slack else None
    for sample in samples:
        pts = as_points(c.data_space, sample)
        ap, am = cert.a_n_rule(pts)
        bn = ap * cert.psi_plus(d) - am * cert.psi_minus(d)
        fn = c.matrix(pts, ms).mean(axis=0)
        ex = float((bn - fn).max())
        if ex > worst:
            worst = ex
            if ex > slack:
                witness = (f"empirical n={len(pts)}", ms[int(np.argmax(bn - fn))])
    status = PASS if worst <= slack else FAIL
    return Verdict(status, method, worst=worst, witness=witness,
                   detail=f"max(bound - objective) = {worst:.6g} over {len(ms)} probes")
