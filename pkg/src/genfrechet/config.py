"""Experiment configuration: YAML schema, validation, and object builders.

A config document looks like::

    version: 1
    space: sphere(2)              # or {kind: euclidean, dim: 2, bbox: [[-5, 5], [-5, 5]]}
    cost: lp(2)                   # or {form: h_of_d, H: {name: log1p_power, p: 2}}
    distribution: {kind: vmf, mu: [0, 0, 1], kappa: 5}
    domain: full                  # or {rule: estimator, estimator: great_circle, target: ...}
    n_grid: [10, 100, 1000]
    replications: 20
    epsilon: 1/n

Shorthands ``name(args)`` are accepted for ``space``, ``cost``,
``distribution`` and ``domain`` and are expanded to the full form.
"""
from __future__ import annotations

import csv
import hashlib
import math
import re
from pathlib import Path
from typing import Any, Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import distributions as dist_mod
from .costs import (
    CoercivityCertificate,
    CostFunction,
    EquicontinuityModulus,
    LowerBoundCertificate,
    ScalarFunction,
)
from .domains import DomainSequence, DomainSpec
from .metricspaces import DescriptorSpace, distance

SCHEMA_VERSION = 1
KNOWN_CHECKERS = (
    "kuratowski", "polish", "continuity", "integrability", "precompact", "heine_borel",
    "bounded", "lower_bound", "additive", "equicontinuous", "coercive",
)
CERT_FOR_CHECKER = {
    "lower_bound": "lower_bound",
    "equicontinuous": "equicontinuity",
    "coercive": "coercivity",
}


class ConfigError(ValueError):
    """The experiment configuration is invalid."""


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


_CALL = re.compile(r"^\s*([A-Za-z_]\w*)\s*(?:\((.*)\))?\s*$")


def _call_parts(text: str):
    m = _CALL.match(text)
    if not m:
        raise ValueError(f"cannot parse {text!r}")
    name, args = m.group(1), m.group(2)
    if args is None or not args.strip():
        return name, []
    return name, yaml.safe_load(f"[{args}]")


class SpaceModel(_Model):
    kind: Literal["euclidean", "circle", "sphere", "finite"]
    dim: Optional[int] = None
    bbox: Optional[list[tuple[float, float]]] = None
    matrix: Optional[list[list[float]]] = None
    matrix_csv: Optional[str] = None

    @model_validator(mode="before")
    @classmethod
    def _shorthand(cls, v):
        if isinstance(v, str):
            name, args = _call_parts(v)
            out: dict[str, Any] = {"kind": name}
            if args:
                out["dim"] = args[0]
            return out
        return v

    @model_validator(mode="after")
    def _complete(self):
        if self.kind in ("euclidean", "sphere") and self.dim is None:
            object.__setattr__(self, "dim", 1 if self.kind == "euclidean" else 2)
        if self.kind == "finite" and self.matrix is None and self.matrix_csv is None:
            raise ValueError("finite space needs matrix or matrix_csv")
        return self

    def build(self, base_dir: Path | None = None) -> DescriptorSpace:
        if self.kind == "euclidean":
            return DescriptorSpace.euclidean(self.dim, self.bbox)
        if self.kind == "circle":
            return DescriptorSpace.circle()
        if self.kind == "sphere":
            return DescriptorSpace.sphere(self.dim)
        if self.matrix is not None:
            return DescriptorSpace.finite(self.matrix)
        path = Path(self.matrix_csv)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        with open(path, newline="") as fh:
            rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
        return DescriptorSpace.finite(rows)


class ScalarModel(_Model):
    name: Literal["power", "log1p_power", "identity", "exp", "constant", "tabulated"]
    p: float = 1.0
    value: float = 0.0
    xs: list[float] = Field(default_factory=list)
    ys: list[float] = Field(default_factory=list)

    @model_validator(mode="before")
    @classmethod
    def _shorthand(cls, v):
        if isinstance(v, str):
            name, args = _call_parts(v)
            out: dict[str, Any] = {"name": name}
            if args:
                out["value" if name == "constant" else "p"] = args[0]
            return out
        return v

    def build(self) -> ScalarFunction:
        return ScalarFunction(self.name, p=self.p, value=self.value, xs=tuple(self.xs), ys=tuple(self.ys))


class CostModel(_Model):
    form: Literal["lp", "h_of_d", "g_of_rho", "custom"]
    p: Optional[float] = None
    H: Optional[ScalarModel] = None
    G: Optional[ScalarModel] = None
    rho: Optional[str] = None
    name: Optional[str] = None
    table: Optional[list[list[float]]] = None

    @model_validator(mode="before")
    @classmethod
    def _shorthand(cls, v):
        if isinstance(v, str):
            name, args = _call_parts(v)
            if name == "lp":
                return {"form": "lp", "p": args[0] if args else 2.0}
            return {"form": "custom", "name": name}
        return v

    @model_validator(mode="after")
    def _complete(self):
        if self.form == "lp":
            p = 2.0 if self.p is None else self.p
            if p < 1:
                raise ValueError("lp cost needs p >= 1")
            object.__setattr__(self, "p", p)
        if self.form == "h_of_d" and self.H is None:
            raise ValueError("h_of_d cost needs H")
        if self.form == "g_of_rho":
            if self.G is None:
                raise ValueError("g_of_rho cost needs G")
            if self.rho is None:
                object.__setattr__(self, "rho", "distance")
        if self.form == "custom" and self.name is None and self.table is None:
            raise ValueError("custom cost needs a registered name or a table")
        return self

    def build(self, space: DescriptorSpace, data_space: DescriptorSpace) -> CostFunction:
        if self.form == "lp":
            return CostFunction("lp", space, data_space=data_space, p=self.p)
        if self.form == "h_of_d":
            return CostFunction("h_of_d", space, data_space=data_space, H=self.H.build())
        if self.form == "g_of_rho":
            return CostFunction("g_of_rho", space, data_space=data_space, G=self.G.build(), rho=self.rho)
        table = None if self.table is None else tuple(tuple(r) for r in self.table)
        return CostFunction("custom", space, data_space=data_space, custom=self.name, table=table)


class DistributionModel(_Model):
    kind: Literal["point_mass", "discrete", "vmf", "wrapped_normal", "gaussian", "mixture",
                  "great_circle_noise"]
    t: Optional[list[float]] = None
    points: Optional[list[list[float]]] = None
    weights: Optional[list[float]] = None
    mu: Optional[list[float]] = None
    kappa: Optional[float] = None
    sigma: Optional[float] = None
    cov: Optional[list[list[float]]] = None
    components: Optional[list["DistributionModel"]] = None
    normal: Optional[list[float]] = None
    along_mean: Optional[float] = None
    along_kappa: Optional[float] = None

    @model_validator(mode="before")
    @classmethod
    def _shorthand(cls, v):
        if isinstance(v, str):
            name, args = _call_parts(v)
            if name == "point_mass":
                t = args[0] if args else 0.0
                return {"kind": name, "t": t if isinstance(t, list) else [t]}
            raise ValueError(f"no shorthand for distribution {name!r}; use the mapping form")
        return v

    @field_validator("weights")
    @classmethod
    def _weights(cls, w):
        if w is None:
            return w
        if any(x < 0 for x in w):
            raise ValueError("weights must be nonnegative")
        if abs(math.fsum(w) - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1 (got {math.fsum(w):.12g})")
        return w

    @field_validator("kappa", "along_kappa")
    @classmethod
    def _kappa(cls, k):
        if k is not None and k < 0:
            raise ValueError("kappa must be nonnegative")
        return k

    @field_validator("cov")
    @classmethod
    def _cov(cls, cov):
        if cov is None:
            return cov
        arr = np.asarray(cov, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or not np.allclose(arr, arr.T):
            raise ValueError("cov must be a symmetric square matrix")
        if np.linalg.eigvalsh(arr).min() <= 0:
            raise ValueError("cov must be positive definite")
        return cov

    def build(self, space: DescriptorSpace) -> dist_mod.Distribution:
        k = self.kind
        if k == "point_mass":
            return dist_mod.point_mass(space, self.t)
        if k == "discrete":
            return dist_mod.discrete(space, self.points, self.weights)
        if k == "vmf":
            return dist_mod.vmf(space, self.mu, self.kappa or 0.0)
        if k == "wrapped_normal":
            return dist_mod.wrapped_normal(space, self.mu[0], self.sigma)
        if k == "gaussian":
            return dist_mod.gaussian(space, self.mu, self.cov)
        if k == "mixture":
            return dist_mod.mixture([c.build(space) for c in self.components], self.weights)
        return dist_mod.great_circle_noise(space, self.normal, self.kappa or 0.0,
                                           self.along_mean or 0.0, self.along_kappa or 0.0)


class DomainModel(_Model):
    kind: Literal["full", "finite_set", "great_circle", "affine", "ball"] = "full"
    points: Optional[list[list[float]]] = None
    normal: Optional[list[float]] = None
    basis: Optional[list[list[float]]] = None
    offset: Optional[list[float]] = None
    extent: Optional[float] = None
    center: Optional[list[float]] = None
    radius: Optional[float] = None

    @model_validator(mode="before")
    @classmethod
    def _shorthand(cls, v):
        if isinstance(v, str):
            name, _ = _call_parts(v)
            return {"kind": name}
        return v

    def build(self) -> DomainSpec:
        k = self.kind
        if k == "full":
            return DomainSpec.full()
        if k == "finite_set":
            return DomainSpec.finite_set(self.points)
        if k == "great_circle":
            return DomainSpec.great_circle(self.normal)
        if k == "affine":
            return DomainSpec.affine(self.basis, self.offset, self.extent)
        return DomainSpec.ball(self.center, self.radius)


class DomainSeqModel(_Model):
    rule: Literal["constant", "scripted", "estimator"] = "constant"
    target: DomainModel = Field(default_factory=DomainModel)
    sets: Optional[list[DomainModel]] = None
    sets_csv: Optional[str] = None
    estimator: Optional[Literal["great_circle", "affine"]] = None
    params: dict[str, float] = Field(default_factory=dict)

    @model_validator(mode="before")
    @classmethod
    def _shorthand(cls, v):
        if isinstance(v, str):
            return {"rule": "constant", "target": v}
        if isinstance(v, dict) and "rule" not in v and "kind" in v:
            return {"rule": "constant", "target": v}
        return v

    @model_validator(mode="after")
    def _complete(self):
        if self.rule == "scripted" and not (self.sets or self.sets_csv):
            raise ValueError("scripted domain rule needs sets or sets_csv")
        if self.rule == "estimator" and self.estimator is None:
            raise ValueError("estimator domain rule needs an estimator name")
        return self

    def build(self, space: DescriptorSpace, base_dir: Path | None = None) -> DomainSequence:
        target = self.target.build()
        sets: tuple[DomainSpec, ...] = ()
        if self.sets:
            sets = tuple(s.build() for s in self.sets)
        elif self.sets_csv:
            path = Path(self.sets_csv)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            amb = space.ambient_dim
            with open(path, newline="") as fh:
                rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
            sets = tuple(DomainSpec.finite_set(np.array(r).reshape(-1, amb)) for r in rows)
        return DomainSequence(target=target, rule=self.rule, sets=sets, estimator=self.estimator,
                              params=tuple(sorted(self.params.items())))


class SolverModel(_Model):
    method: Literal["continuous", "brute_force"] = "continuous"
    resolution: int = 10_000
    starts: int = 16
    tolerance: float = 1e-6
    dedup_radius: Optional[float] = None
    coarse_resolution: Optional[int] = None


class PopulationModel(_Model):
    route: Literal["auto", "closed_form", "quadrature", "oracle"] = "auto"
    method: Literal["continuous", "brute_force"] = "continuous"
    resolution: int = 10_000
    tolerance: float = 0.0
    known: Optional[list[list[float]]] = None
    oracle_size: int = 10 ** 6
    oracle_seed: int = 20240601


class KuratowskiModel(_Model):
    resolution: int = 128
    tail_start: Optional[int] = None
    tol_factor: float = 2.0


class ScalarRuleModel(_Model):
    name: str
    value: float = 0.0
    scale: float = 1.0


class LowerBoundModel(_Model):
    o: list[float]
    psi_plus: ScalarModel
    psi_minus: ScalarModel
    a_plus: float
    a_minus: float
    a_n_rule: ScalarRuleModel = Field(default_factory=lambda: ScalarRuleModel(name="constant"))


class CoercivityModel(_Model):
    o: list[float]
    C: float
    A_rule: ScalarRuleModel = Field(default_factory=lambda: ScalarRuleModel(name="distance_minus_C"))


class EquicontinuityModel(_Model):
    delta_rule: ScalarRuleModel = Field(default_factory=lambda: ScalarRuleModel(name="linear"))


class CertificatesModel(_Model):
    lower_bound: Optional[LowerBoundModel] = None
    coercivity: Optional[CoercivityModel] = None
    equicontinuity: Optional[EquicontinuityModel] = None


_EPS_RE = re.compile(r"^\s*(?:(?P<c>[0-9.eE+-]+)\s*/\s*n(?:\s*\^\s*(?P<a>[0-9.eE+-]+))?|(?P<zero>0(?:\.0*)?)"
                     r"|constant\(\s*(?P<k>[0-9.eE+-]+)\s*\))\s*$")


def parse_epsilon(text: str):
    """Parse an epsilon schedule into ``(callable n -> eps, vanishes)``."""
    m = _EPS_RE.match(str(text))
    if not m:
        raise ConfigError(f"epsilon: cannot parse schedule {text!r} (use 0, c/n, c/n^a or constant(c))")
    if m.group("zero") is not None:
        return (lambda n: 0.0), True
    if m.group("k") is not None:
        k = float(m.group("k"))
        return (lambda n: k), k == 0
    c = float(m.group("c"))
    a = float(m.group("a") or 1.0)
    if c < 0:
        raise ConfigError("epsilon: schedule must be nonnegative")
    return (lambda n: c / n ** a), a > 0 or c == 0


class ExperimentConfig(_Model):
    """Validated experiment configuration (see module docstring for the schema)."""

    version: int = SCHEMA_VERSION
    name: str = "experiment"
    space: SpaceModel
    data_space: Optional[SpaceModel] = None
    cost: CostModel
    distribution: DistributionModel
    domain: DomainSeqModel = Field(default_factory=DomainSeqModel)
    n_grid: list[int]
    replications: int = 20
    epsilon: str = "1/n"
    allow_nonvanishing_epsilon: bool = False
    solver: SolverModel = Field(default_factory=SolverModel)
    population: PopulationModel = Field(default_factory=PopulationModel)
    seed: int = 0
    checkers: list[str] = Field(default_factory=list)
    certificates: CertificatesModel = Field(default_factory=CertificatesModel)
    kuratowski: KuratowskiModel = Field(default_factory=KuratowskiModel)
    distance_tol: Optional[float] = None
    value_tol: Optional[float] = None
    data: Optional[list[list[float]]] = None
    data_csv: Optional[str] = None

    @field_validator("version")
    @classmethod
    def _version(cls, v):
        if v != SCHEMA_VERSION:
            raise ValueError(f"schema version mismatch: expected {SCHEMA_VERSION}, got {v}")
        return v

    @field_validator("epsilon", mode="before")
    @classmethod
    def _eps_str(cls, v):
        return str(v)

    @field_validator("n_grid")
    @classmethod
    def _n_grid(cls, v):
        if not v:
            raise ValueError("n_grid must be nonempty")
        if any(n < 1 for n in v):
            raise ValueError("n_grid entries must be positive")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("n_grid must be strictly increasing")
        return v

    @field_validator("replications")
    @classmethod
    def _reps(cls, v):
        if v < 1:
            raise ValueError("replications must be >= 1")
        return v

    @field_validator("checkers")
    @classmethod
    def _checkers(cls, v):
        bad = [c for c in v if c not in KNOWN_CHECKERS]
        if bad:
            raise ValueError(f"unknown checkers {bad}; known: {list(KNOWN_CHECKERS)}")
        return v

    @model_validator(mode="after")
    def _cross(self):
        try:
            _, vanishes = parse_epsilon(self.epsilon)
        except ConfigError as exc:
            raise ValueError(str(exc)) from None
        if not vanishes and not self.allow_nonvanishing_epsilon:
            raise ValueError(
                f"epsilon: schedule {self.epsilon!r} does not tend to 0; "
                "set allow_nonvanishing_epsilon to override"
            )
        for checker, cert in CERT_FOR_CHECKER.items():
            if checker in self.checkers and getattr(self.certificates, cert) is None:
                raise ValueError(f"checker {checker!r} requires certificates.{cert}")
        return self

    # builders -------------------------------------------------------------------

    def build_space(self, base_dir=None) -> DescriptorSpace:
        return self.space.build(base_dir)

    def build_data_space(self, base_dir=None) -> DescriptorSpace:
        return (self.data_space or self.space).build(base_dir)

    def build_cost(self, base_dir=None) -> CostFunction:
        return self.cost.build(self.build_space(base_dir), self.build_data_space(base_dir))

    def build_distribution(self, base_dir=None):
        return self.distribution.build(self.build_data_space(base_dir))

    def build_domains(self, base_dir=None) -> DomainSequence:
        return self.domain.build(self.build_space(base_dir), base_dir)

    def epsilon_at(self, n: int) -> float:
        return parse_epsilon(self.epsilon)[0](n)

    def build_certificates(self):
        space = self.build_space()
        certs = {}
        lb = self.certificates.lower_bound
        if lb is not None:
            certs["lower_bound"] = LowerBoundCertificate(
                o=tuple(lb.o), psi_plus=lb.psi_plus.build(), psi_minus=lb.psi_minus.build(),
                a_plus=lb.a_plus, a_minus=lb.a_minus,
                a_n_rule=_a_n_rule(lb, space),
            )
        co = self.certificates.coercivity
        if co is not None:
            certs["coercivity"] = CoercivityCertificate(o=tuple(co.o), C=co.C, A_rule=_a_rule(co, space))
        eq = self.certificates.equicontinuity
        if eq is not None:
            rule = eq.delta_rule
            if rule.name == "linear":
                certs["equicontinuity"] = EquicontinuityModulus.linear(rule.scale)
            elif rule.name == "constant":
                certs["equicontinuity"] = EquicontinuityModulus.constant(rule.value)
            else:
                raise ConfigError(f"unknown delta rule {rule.name!r}")
        return certs


def _a_n_rule(lb: LowerBoundModel, space):
    rule = lb.a_n_rule
    if rule.name == "constant":
        return lambda sample: (lb.a_plus, lb.a_minus)
    if rule.name == "second_moment":
        # for c = d^2: d(X,m)^2 >= d(m,o)^2 / 2 - d(X,o)^2
        o = np.asarray(lb.o, dtype=float)

        def second_moment(sample):
            d = np.array([distance(space, x, o) for x in sample])
            return lb.a_plus, rule.scale * float(np.mean(d * d))

        return second_moment
    raise ConfigError(f"unknown a_n rule {rule.name!r}")


def _a_rule(co: CoercivityModel, space):
    rule = co.A_rule
    if rule.name == "distance_minus_C":
        o = np.asarray(co.o, dtype=float)
        return lambda n, m: distance(space, m, o) - co.C
    raise ConfigError(f"unknown A rule {rule.name!r}")


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a YAML (or JSON) config document.

    Raises :class:`ConfigError` naming the offending field.
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a mapping")
    try:
        return ExperimentConfig.model_validate(doc)
    except ValidationError as exc:
        msgs = []
        for err in exc.errors():
            loc = ".".join(str(p) for p in err["loc"])
            msgs.append(f"{loc}: {err['msg']}" if loc else err["msg"])
        raise ConfigError("; ".join(msgs)) from None


def serialize_config(config: ExperimentConfig) -> str:
    return yaml.safe_dump(config.model_dump(mode="json", exclude_none=True), sort_keys=True)


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


def config_hash(config: ExperimentConfig) -> str:
    return hashlib.sha256(serialize_config(config).encode()).hexdigest()
