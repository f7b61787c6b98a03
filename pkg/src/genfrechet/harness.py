"""Monte Carlo experiment engine.

:func:`run_experiment` draws replicated samples, realizes the domains
``M_n``, solves for the empirical mean sets and measures their distance to
the population mean set. :func:`check_conditions` reports one verdict per
consistency condition, each tagged with the method that produced it.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .config import ConfigError, ExperimentConfig, parse_config
from .costs import (
    RHO_BUILTINS,
    CostFunction,
    EquicontinuityModulus,
    check_additive,
    check_coercive,
    check_equicontinuous,
    check_lower_bound,
    equicontinuity_probes,
    objective_values,
)
from .domains import DegenerateFitError, DomainError, DomainSpec, discretize_domain, kuratowski_check, realize
from .metricspaces import as_points, discretize, distances_to, pairwise_distances
from .setmetrics import consistency_trend, one_sided_hausdorff, outer_limit_check
from .solver import MeanSet, SolverError, empirical_mean_set, population_mean_set
from .verdict import FAIL, PASS, VACUOUS

log = logging.getLogger(__name__)

HOLDS = "holds-structurally"
PASSES = "passes-empirically"
FAILS = "fails"
NOT_CHECKED = "not-checked"

CONDITION_NAMES = {
    1: "domains converge in the Kuratowski sense",
    2: "descriptor space is Polish",
    3: "cost is continuous in the descriptor",
    4: "local infimum/supremum of the cost are integrable",
    5: "empirical mean sets are eventually precompact",
    6: "descriptor space has the Heine-Borel property",
    7: "empirical mean sets are eventually bounded",
    8: "objective admits a growing lower bound",
}

ROW_COLUMNS = (
    "n", "replication", "status", "n_points", "one_sided", "symmetric", "witness",
    "l_hat", "l0", "gap", "epsilon", "method", "converged",
)


class HarnessError(RuntimeError):
    """The experiment cannot be run (e.g. the population solve failed)."""


def replication_rng(seed: int, replication: int) -> np.random.Generator:
    """Independent generator for one replication."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(replication)]))


@dataclass
class ConditionVerdict:
    number: int | str
    name: str
    status: str
    method: str
    detail: str = ""
    witness: object = None


@dataclass
class ConditionReport:
    verdicts: list[ConditionVerdict]

    def get(self, key) -> ConditionVerdict:
        for v in self.verdicts:
            if v.number == key:
                return v
        raise KeyError(key)

    def lines(self) -> list[str]:
        out = []
        for v in self.verdicts:
            label = f"condition {v.number}" if isinstance(v.number, int) else f"check {v.number}"
            line = f"{label}: {v.status} [{v.method}] {v.name}"
            if v.detail:
                line += f"; {v.detail}"
            if v.witness is not None:
                line += f"; witness={_fmt_witness(v.witness)}"
            out.append(line)
        return out


@dataclass
class ConsistencyReport:
    """Rows per ``(n, replication)`` plus aggregates.

    ``summary`` holds ``(metric, n, value)`` triples; ``n`` is ``None`` for
    run-level metrics.
    """

    config: ExperimentConfig
    seed: int
    population: MeanSet
    rows: list[dict]
    summary: list[tuple[str, int | None, float]]
    mean_sets: dict = field(default_factory=dict, repr=False)
    conditions: ConditionReport | None = None

    def metric(self, name: str, n: int | None = None) -> float:
        for m, k, v in self.summary:
            if m == name and k == n:
                return v
        raise KeyError((name, n))

    def column(self, name: str, n: int | None = None) -> np.ndarray:
        return np.array([r[name] for r in self.rows if n is None or r["n"] == n], dtype=float)


def _fmt_float(x) -> str:
    return format(float(x), ".17g")


def _fmt_witness(w) -> str:
    if isinstance(w, np.ndarray):
        return " ".join(_fmt_float(v) for v in np.ravel(w))
    return str(w)


# -- population ---------------------------------------------------------------------


def population_target(config: ExperimentConfig) -> MeanSet:
    """The population mean set ``E_0`` over ``M_0``, with its computation route recorded."""
    c = config.build_cost()
    seq = config.build_domains()
    pop = config.population
    if pop.known is not None:
        space = c.space
        pts = as_points(space, pop.known)
        dist = config.build_distribution()
        nodes, weights, used = dist.objective_nodes(pop.route, oracle_size=pop.oracle_size, seed=pop.oracle_seed)
        vals = objective_values(c, as_points(c.data_space, nodes), weights, pts)
        out = MeanSet(points=pts, value=float(vals.min()), epsilon=pop.tolerance, method="known",
                      domain_used=seq.target, values=vals)
        out.details["route"] = f"known points, value via {used}"
        return out
    try:
        return population_mean_set(
            c, config.build_distribution(), seq.target, tolerance=pop.tolerance, method=pop.method,
            route=pop.route, resolution=pop.resolution, oracle_size=pop.oracle_size,
            oracle_seed=pop.oracle_seed,
        )
    except (SolverError, DomainError, ValueError) as exc:
        raise HarnessError(f"population solve failed: {exc}") from exc


# -- experiment ---------------------------------------------------------------------


def _solve_empirical(config: ExperimentConfig, c: CostFunction, x: np.ndarray, domain: DomainSpec,
                     eps: float) -> MeanSet:
    s = config.solver
    return empirical_mean_set(
        c, x, domain, eps, s.method, resolution=s.resolution, starts=s.starts, tolerance=s.tolerance,
        dedup_radius=s.dedup_radius, coarse_resolution=s.coarse_resolution,
    )


def run_experiment(config: ExperimentConfig, seed: int | None = None, *, population: MeanSet | None = None,
                   with_conditions: bool = False) -> ConsistencyReport:
    """Run every replication over the whole ``n_grid``.

    Replication ``r`` draws ``X_1..X_N`` (``N = max(n_grid)``) once from
    ``replication_rng(seed, r)``; each ``n`` uses the first ``n`` points, so
    the samples are nested as in a single data stream. Rows whose domain fit
    is degenerate or whose solve fails are kept and flagged.
    """
    seed = config.seed if seed is None else int(seed)
    c = config.build_cost()
    dist = config.build_distribution()
    seq = config.build_domains()
    e0 = population_target(config) if population is None else population
    l0 = e0.value
    space = c.space
    n_max = config.n_grid[-1]
    rows: list[dict] = []
    mean_sets: dict = {}
    for r in range(config.replications):
        rng = replication_rng(seed, r)
        sample = dist.sample(n_max, rng)
        for n in config.n_grid:
            x = sample[:n]
            eps = config.epsilon_at(n)
            row = {"n": n, "replication": r, "status": "ok", "n_points": 0, "one_sided": math.nan,
                   "symmetric": math.nan, "witness": "", "l_hat": math.nan, "l0": l0, "gap": math.nan,
                   "epsilon": eps, "method": config.solver.method, "converged": False}
            try:
                domain = realize(seq, n, x)
            except DegenerateFitError as exc:
                row["status"] = "degenerate_domain"
                log.warning("replication %d, n=%d: %s", r, n, exc)
                rows.append(row)
                continue
            try:
                ms = _solve_empirical(config, c, x, domain, eps)
            except SolverError as exc:
                row["status"] = "solver_failure"
                log.warning("replication %d, n=%d: %s", r, n, exc)
                rows.append(row)
                continue
            rep = one_sided_hausdorff(ms.points, e0.points, space)
            row.update(n_points=len(ms), one_sided=rep.one_sided, symmetric=rep.symmetric,
                       witness=_fmt_witness(rep.witness), l_hat=ms.value, gap=ms.value - l0,
                       converged=bool(ms.converged))
            if not ms.converged:
                row["status"] = "not_converged"
            mean_sets[(n, r)] = ms
            rows.append(row)
    rows.sort(key=lambda row: (row["n"], row["replication"]))
    report = ConsistencyReport(config=config, seed=seed, population=e0, rows=rows, summary=[],
                               mean_sets=mean_sets)
    report.summary = _summarize(report)
    if with_conditions:
        report.conditions = check_conditions(config, seed=seed)
    return report


def _summarize(report: ConsistencyReport) -> list[tuple[str, int | None, float]]:
    cfg = report.config
    out: list[tuple[str, int | None, float]] = []
    pairs = []
    for n in cfg.n_grid:
        ok = [r for r in report.rows if r["n"] == n and not math.isnan(r["one_sided"])]
        d = np.array([r["one_sided"] for r in ok])
        g = np.array([r["gap"] for r in ok])
        flagged = sum(1 for r in report.rows if r["n"] == n and r["status"] != "ok")
        out.append(("flagged_rows", n, float(flagged)))
        if len(d) == 0:
            continue
        pairs.extend((n, v) for v in d)
        out.append(("median_one_sided", n, float(np.median(d))))
        out.append(("max_one_sided", n, float(d.max())))
        out.append(("median_gap", n, float(np.median(g))))
        out.append(("median_abs_gap", n, float(np.median(np.abs(g)))))
        if cfg.distance_tol is not None:
            out.append(("fraction_within_distance_tol", n, float(np.mean(d <= cfg.distance_tol))))
    out.append(("population_value", None, float(report.population.value)))
    out.append(("population_size", None, float(len(report.population))))
    if len({n for n, _ in pairs}) >= 3:
        trend = consistency_trend(pairs)
        out.append(("trend_monotone", None, float(trend.monotone)))
        out.append(("trend_strictly_decreasing", None, float(trend.strictly_decreasing)))
        out.append(("trend_slope", None, trend.slope))
        out.append(("trend_final_median", None, trend.final_value))
    if cfg.value_tol is not None:
        last = cfg.n_grid[-1]
        gaps = report.column("gap", last)
        gaps = gaps[~np.isnan(gaps)]
        if len(gaps):
            out.append(("limsup_surrogate_pass", None, float(np.median(gaps) <= cfg.value_tol)))
            out.append(("value_convergence_pass", None, float(abs(np.median(gaps)) <= cfg.value_tol)))
    co = cfg.certificates.coercivity
    if co is not None:
        o = np.asarray(co.o, dtype=float)
        space = cfg.build_space()
        bound = 0.0
        for n in cfg.n_grid:
            vals = [float(distances_to(space, ms.points, o).max())
                    for (k, _), ms in report.mean_sets.items() if k == n]
            if vals:
                out.append(("max_distance_to_o", n, max(vals)))
                bound = max(bound, max(vals))
        out.append(("coercivity_bound", None, bound))
    return out


# -- conditions ---------------------------------------------------------------------


def _probe_sample(config: ExperimentConfig, seed: int) -> np.ndarray:
    return config.build_distribution().sample(config.n_grid[-1], replication_rng(seed, 0))


def _kuratowski(config: ExperimentConfig, seed: int) -> ConditionVerdict:
    seq = config.build_domains()
    space = config.build_space()
    name = CONDITION_NAMES[1]
    if seq.rule == "constant":
        return ConditionVerdict(1, name, HOLDS, "constant sequence M_n = M_0")
    k = config.kuratowski
    target = discretize_domain(space, seq.target, k.resolution)
    if seq.rule == "scripted":
        labels = list(range(1, len(seq.sets) + 1))
        sets = [discretize_domain(space, s, k.resolution) for s in seq.sets]
    else:
        sample = _probe_sample(config, seed)
        labels, sets = [], []
        for n in config.n_grid:
            try:
                sets.append(discretize_domain(space, realize(seq, n, sample), k.resolution))
                labels.append(n)
            except DegenerateFitError:
                continue
        if not sets:
            return ConditionVerdict(1, name, FAILS, "estimator fit", detail="every domain fit was degenerate")
    mesh = max([target.mesh] + [s.mesh for s in sets])
    tol = k.tol_factor * mesh if mesh > 0 else (config.distance_tol or 1e-9)
    tail_start = k.tail_start if k.tail_start is not None else labels[len(labels) // 2]
    verdict = kuratowski_check([s.points for s in sets], target.points, space, tail_start, tol, labels)
    method = f"discretized tail check (resolution {k.resolution}, tol {tol:.6g}, tail n >= {tail_start})"
    if verdict.passed:
        worst = max(max(o, i) for n, o, i in zip(labels, verdict.outer, verdict.inner) if n >= tail_start)
        return ConditionVerdict(1, name, PASSES, method, detail=f"worst tail distance {worst:.6g}")
    witness = verdict.witness_i if not verdict.cond_i else verdict.witness_ii
    which = "(i) selections escape M_0" if not verdict.cond_i else "(ii) M_0 points not approximated"
    return ConditionVerdict(1, name, FAILS, method, detail=which, witness=witness)


def _cost_is_structurally_continuous(c: CostFunction) -> bool:
    if c.form in ("lp", "h_of_d"):
        return c.form == "lp" or c.H.continuous
    if c.form == "g_of_rho":
        return c.G.continuous and isinstance(c.rho, str) and c.rho in RHO_BUILTINS
    return False


def _continuity_probe(c: CostFunction, sample: np.ndarray, seed: int) -> tuple[bool, float]:
    """Max change of ``c(t, .)`` over shrinking steps around random descriptors."""
    from .metricspaces import _exp, tangent_basis

    space = c.space
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 7]))
    ts = sample[: min(len(sample), 50)]
    grid = discretize(space, 64 if space.kind != "euclidean" else 8).points
    ms = grid[rng.choice(len(grid), size=min(len(grid), 16), replace=False)]
    if space.kind == "finite":
        return True, 0.0
    worst = []
    for h in (1e-3, 1e-6):
        top = 0.0
        for m in ms:
            basis = tangent_basis(space, m)
            v = rng.standard_normal(len(basis)) @ basis
            mp = _exp(space, m, h * v / np.linalg.norm(v))
            top = max(top, float(np.max(np.abs(c.matrix(ts, mp[None, :]) - c.matrix(ts, m[None, :])))))
        worst.append(top)
    scale = 1.0 + float(np.max(np.abs(c.matrix(ts, ms))))
    return worst[-1] <= 1e-3 * scale and worst[-1] <= worst[0] + 1e-12, worst[-1]


def _integrability_probe(c: CostFunction, sample: np.ndarray) -> tuple[bool, str]:
    """Sample means of the local supremum over a small ball stay finite and stable."""
    space = c.space
    base = discretize(space, 16 if space.kind != "euclidean" else 4).points[:8]
    r = 0.1
    sup_means = []
    for m in base:
        ball = DomainSpec.ball(m, r) if space.kind != "finite" else DomainSpec.finite_set(m[None, :])
        try:
            pts = discretize_domain(space, ball, 400 if space.kind == "sphere" else 20).points
        except DomainError:
            pts = m[None, :]
        vals = c.matrix(sample, pts).max(axis=1)
        if not np.all(np.isfinite(vals)):
            return False, "non-finite local supremum"
        half = len(vals) // 2
        sup_means.append((float(np.mean(vals[:half])), float(np.mean(vals))))
    drift = max(abs(a - b) / (1.0 + abs(b)) for a, b in sup_means)
    return drift < 0.5, f"max relative drift of sample means {drift:.3g}"


def _boundedness_probe(config: ExperimentConfig, c: CostFunction, sample: np.ndarray, o: np.ndarray):
    seq = config.build_domains()
    dists = []
    for n in config.n_grid:
        try:
            domain = realize(seq, n, sample[:n])
            ms = _solve_empirical(config, c, sample[:n], domain, config.epsilon_at(n))
        except (DegenerateFitError, SolverError):
            continue
        dists.append(float(distances_to(c.space, ms.points, o).max()))
    if len(dists) < 2:
        return None, dists
    head = max(dists[: max(1, len(dists) // 2)])
    tail = max(dists[len(dists) // 2:])
    return tail <= 2.0 * head + 1.0, dists


def check_conditions(config: ExperimentConfig, seed: int | None = None) -> ConditionReport:
    """One verdict per condition 1-8 plus any requested auxiliary checks.

    Every verdict carries a method tag; probe-based verdicts are labeled as
    such. The report is always produced.
    """
    seed = config.seed if seed is None else int(seed)
    c = config.build_cost()
    space = c.space
    dist = config.build_distribution()
    seq = config.build_domains()
    certs = config.build_certificates()
    sample = _probe_sample(config, seed)
    verdicts: list[ConditionVerdict] = []

    try:
        verdicts.append(_kuratowski(config, seed))
    except (DomainError, ValueError) as exc:
        verdicts.append(ConditionVerdict(1, CONDITION_NAMES[1], NOT_CHECKED, "discretized tail check",
                                         detail=str(exc)))

    verdicts.append(ConditionVerdict(2, CONDITION_NAMES[2], HOLDS,
                                     f"{space.kind} space is a complete separable metric space"))

    if _cost_is_structurally_continuous(c):
        verdicts.append(ConditionVerdict(3, CONDITION_NAMES[3], HOLDS,
                                         "composition of continuous functions of the metric"))
    else:
        ok, worst = _continuity_probe(c, sample, seed)
        verdicts.append(ConditionVerdict(3, CONDITION_NAMES[3], PASSES if ok else FAILS,
                                         "probe-limited: shrinking-step differences",
                                         detail=f"max |dc| at step 1e-6: {worst:.3g}"))

    finite_support = dist.kind in ("point_mass", "discrete")
    if (space.is_compact and dist.space.is_compact and _cost_is_structurally_continuous(c)) or finite_support:
        why = "finite support" if finite_support else "continuous cost on compact spaces is bounded"
        verdicts.append(ConditionVerdict(4, CONDITION_NAMES[4], HOLDS, why))
    else:
        ok, detail = _integrability_probe(c, sample)
        verdicts.append(ConditionVerdict(4, CONDITION_NAMES[4], PASSES if ok else FAILS,
                                         "probe-limited: sample means of local suprema", detail=detail))

    if space.is_compact:
        verdicts.append(ConditionVerdict(6, CONDITION_NAMES[6], HOLDS, "compact space"))
        verdicts.append(ConditionVerdict(7, CONDITION_NAMES[7], HOLDS, "compact space is bounded"))
        verdicts.append(ConditionVerdict(5, CONDITION_NAMES[5], HOLDS, "compact space"))
    else:
        verdicts.append(ConditionVerdict(6, CONDITION_NAMES[6], HOLDS, f"finite-dimensional {space.kind} space"))
        o = np.asarray(certs["lower_bound"].o if "lower_bound" in certs else np.zeros(space.ambient_dim))
        ok, dists = _boundedness_probe(config, c, sample, o)
        if ok is None:
            v7 = ConditionVerdict(7, CONDITION_NAMES[7], NOT_CHECKED, "probe-limited: mean-set radius along n_grid",
                                  detail="fewer than two solvable sample sizes")
        else:
            v7 = ConditionVerdict(7, CONDITION_NAMES[7], PASSES if ok else FAILS,
                                  "probe-limited: mean-set radius along n_grid",
                                  detail="max d(point, o) per n: " + ", ".join(f"{d:.4g}" for d in dists))
        verdicts.append(v7)
        status5 = PASSES if v7.status == PASSES else (FAILS if v7.status == FAILS else NOT_CHECKED)
        verdicts.append(ConditionVerdict(5, CONDITION_NAMES[5], status5, "Heine-Borel plus eventual boundedness"))

    if "lower_bound" in certs:
        cert = certs["lower_bound"]
        o = np.asarray(cert.o, dtype=float)
        dirs = _ray_directions(space, seed)
        radii = 2.0 ** np.arange(-2, 7)
        if space.kind == "euclidean":
            probes = np.array([o + r * d for d in dirs for r in radii])
        else:
            probes = discretize(space, 256).points
        samples = [sample[:n] for n in config.n_grid]
        pop = lambda ms: _population_values(config, c, dist, ms)
        v = check_lower_bound(cert, c, pop, samples, probes)
        status = PASSES if v.status == PASS else FAILS
        verdicts.append(ConditionVerdict(8, CONDITION_NAMES[8], status, v.method, detail=v.detail,
                                         witness=None if v.witness is None else v.witness[1]))
    else:
        detail = "not needed for compact spaces" if space.is_compact else "no lower-bound certificate supplied"
        verdicts.append(ConditionVerdict(8, CONDITION_NAMES[8], NOT_CHECKED, "certificate required", detail=detail))

    verdicts.extend(_auxiliary_checks(config, c, sample, certs, seed))
    verdicts.sort(key=lambda v: (isinstance(v.number, str), v.number if isinstance(v.number, int) else 0))
    return ConditionReport(verdicts)


def _ray_directions(space, seed):
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 11]))
    dirs = rng.standard_normal((16, space.ambient_dim))
    return dirs / np.linalg.norm(dirs, axis=1)[:, None]


def _population_values(config, c, dist, ms):
    pop = config.population
    nodes, weights, _ = dist.objective_nodes(pop.route, oracle_size=pop.oracle_size, seed=pop.oracle_seed)
    return objective_values(c, as_points(c.data_space, nodes), weights, as_points(c.space, ms))


def _rho_pointwise(c: CostFunction):
    def rho(x, m):
        return float(c.rho_matrix(x[None, :], m[None, :])[0, 0])
    return rho


def _auxiliary_checks(config, c, sample, certs, seed) -> list[ConditionVerdict]:
    out = []
    space = c.space
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 13]))
    if "additive" in config.checkers:
        G = c.outer
        if G is None:
            out.append(ConditionVerdict("additive", "scaling function G is additive", NOT_CHECKED,
                                        "needs a G(rho) or H(d) cost"))
        else:
            try:
                holds, b = check_additive(G)
                out.append(ConditionVerdict("additive", "scaling function G is additive",
                                            PASSES if holds else FAILS, "probe-limited: sup G(2x)/G(x) on 2^-10..2^20",
                                            detail=f"b = {b:.6g}"))
            except Exception as exc:  # non-finite values are a failure, not a crash
                out.append(ConditionVerdict("additive", "scaling function G is additive", FAILS,
                                            "probe-limited: sup G(2x)/G(x) on 2^-10..2^20", detail=str(exc)))
    if "equicontinuous" in config.checkers:
        modulus: EquicontinuityModulus = certs["equicontinuity"]
        grid = discretize(space, 64 if space.kind != "euclidean" else 8).points
        ms = grid[rng.choice(len(grid), size=min(8, len(grid)), replace=False)]
        probes = equicontinuity_probes(space, sample[:8], ms, modulus, (0.5, 0.1, 0.01), rng)
        v = check_equicontinuous(_rho_pointwise(c), modulus, probes, space, c.data_space)
        status = {PASS: PASSES, VACUOUS: PASSES, FAIL: FAILS}.get(v.status, NOT_CHECKED)
        out.append(ConditionVerdict("equicontinuous", "rho is equicontinuous in the descriptor", status,
                                    v.method, detail=v.detail))
    if "coercive" in config.checkers:
        cert = certs["coercivity"]
        o = np.asarray(cert.o, dtype=float)
        seqs = []
        if not space.is_compact:
            for d in _ray_directions(space, seed)[:8]:
                seqs.append(np.array([o + (2.0 ** k) * d for k in range(1, 16)]))
        v = check_coercive(c.rho_matrix, cert, space, sample, seqs, c.data_space)
        status = {PASS: PASSES, VACUOUS: PASSES, FAIL: FAILS}.get(v.status, NOT_CHECKED)
        out.append(ConditionVerdict("coercive", "rho is coercive", status, v.method, detail=v.detail))
    return out


# -- epi-convergence ----------------------------------------------------------------


@dataclass
class EpiVerdict:
    passed: bool
    method: str
    tol: float
    target_value: float
    deviations: dict
    votes: list[bool]


def epi_convergence_probe(config: ExperimentConfig, m0, approach=None, tol: float | None = None,
                          seed: int | None = None, tail_start: int | None = None) -> EpiVerdict:
    """Check ``F_n(m_n) -> F(m0)`` along a selection ``m_n`` in ``M_n``.

    ``approach(n, M_n) -> m_n`` defaults to the projection of ``m0`` onto
    ``M_n``. Each replication votes pass when every tail deviation is below
    ``tol``; the probe passes on a strict majority. The default ``tol`` is
    four standard errors of ``c(X, m0)`` at the smallest tail ``n``.
    """
    seed = config.seed if seed is None else int(seed)
    c = config.build_cost()
    dist = config.build_distribution()
    seq = config.build_domains()
    space = c.space
    m0 = as_points(space, m0)[0]
    pop = config.population
    nodes, weights, route = dist.objective_nodes(pop.route, oracle_size=pop.oracle_size, seed=pop.oracle_seed)
    nodes = as_points(c.data_space, nodes)
    cvals = c.matrix(nodes, m0[None, :])[:, 0]
    target = float(weights @ cvals)
    sd = math.sqrt(max(float(weights @ (cvals - target) ** 2), 0.0))
    ns = config.n_grid
    tail_start = tail_start if tail_start is not None else ns[len(ns) // 2]
    tail = [n for n in ns if n >= tail_start]
    if tol is None:
        tol = 4.0 * sd / math.sqrt(tail[0]) + 1e-12
    if approach is None:
        approach = lambda n, dom: dom.project(space, m0[None, :])[0]
    deviations: dict = {}
    votes = []
    for r in range(config.replications):
        sample = dist.sample(ns[-1], replication_rng(seed, r))
        ok = True
        for n in ns:
            x = sample[:n]
            try:
                dom = realize(seq, n, x)
            except DegenerateFitError:
                ok = ok and n not in tail
                continue
            mn = as_points(space, approach(n, dom))[0]
            if not dom.contains(space, mn[None, :], tol=1e-8)[0]:
                raise DomainError(f"approach point for n={n} lies outside the realized domain")
            fn = float(c.matrix(x, mn[None, :]).mean())
            dev = abs(fn - target)
            deviations[(n, r)] = dev
            if n in tail and dev > tol:
                ok = False
        votes.append(ok)
    passed = sum(votes) * 2 > len(votes)
    return EpiVerdict(passed=passed, method=f"majority vote over replications, F(m0) via {route}",
                      tol=tol, target_value=target, deviations=deviations, votes=votes)


# -- special cases ------------------------------------------------------------------

_SUITE = {
    "frechet": [
        """
name: frechet-sphere
space: sphere(2)
cost: lp(2)
distribution: {kind: vmf, mu: [0, 0, 1], kappa: 5}
domain: full
n_grid: [10, 100, 1000]
epsilon: "0"
""",
    ],
    "h_frechet": [
        """
name: h-frechet-circle
space: circle
cost: {form: h_of_d, H: log1p_power(2)}
distribution: {kind: wrapped_normal, mu: [1.0], sigma: 0.5}
domain: full
n_grid: [10, 100, 1000]
epsilon: "0"
""",
    ],
    "rho_frechet": [
        """
name: rho-frechet-axial
space: circle
data_space: {kind: euclidean, dim: 2}
cost: {form: g_of_rho, G: power(2), rho: line_residual}
distribution: {kind: gaussian, mu: [0, 0], cov: [[4, 0], [0, 1]]}
domain: full
n_grid: [10, 100, 1000]
epsilon: "0"
""",
    ],
    "c_frechet": [
        """
name: c-frechet-centered-square
space: {kind: euclidean, dim: 1, bbox: [[-10, 10]]}
cost: centered_square
distribution: {kind: gaussian, mu: [1], cov: [[1]]}
domain: full
n_grid: [10, 100, 1000]
epsilon: "0"
""",
    ],
}

_LP_TEMPLATES = (
    """
name: lp{p}-line
space: {{kind: euclidean, dim: 1, bbox: [[-10, 10]]}}
cost: lp({p})
distribution: {{kind: gaussian, mu: [0], cov: [[1]]}}
domain: full
n_grid: [10, 100, 1000]
epsilon: "0"
""",
    """
name: lp{p}-sphere
space: sphere(2)
cost: lp({p})
distribution: {{kind: vmf, mu: [0, 0, 1], kappa: 5}}
domain: full
n_grid: [10, 100, 1000]
epsilon: "0"
""",
)

SUITE_NAMES = ("frechet", "lp", "h_frechet", "rho_frechet", "c_frechet")


def special_case_suite(name: str) -> list[ExperimentConfig]:
    """Canned configs with ``M_0 = M_n = M`` and ``eps_n = 0``.

    ``name`` is one of ``frechet``, ``lp`` (``p = 1``), ``lp(p)``,
    ``h_frechet``, ``rho_frechet`` or ``c_frechet``.
    """
    key = name.strip()
    if key == "lp" or key.startswith("lp("):
        p = 1.0
        if key.startswith("lp("):
            if not key.endswith(")"):
                raise ConfigError(f"cannot parse suite name {name!r}")
            p = float(key[3:-1])
        text = [t.format(p=_fmt_p(p)) for t in _LP_TEMPLATES]
    elif key in _SUITE:
        text = _SUITE[key]
    else:
        raise ConfigError(f"unknown suite {name!r}; choose from {', '.join(SUITE_NAMES)} or lp(p)")
    return [parse_config(t) for t in text]


def _fmt_p(p: float) -> str:
    return str(int(p)) if float(p).is_integer() else repr(float(p))
