"""Command-line front end.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 I/O error.
The default seed comes from ``GENFRECHET_SEED`` (then the config); ``--seed``
overrides both.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config
from .costs import CostError
from .distributions import DistributionError
from .domains import DomainError, realize
from .harness import HarnessError, check_conditions, population_target, replication_rng, run_experiment, special_case_suite
from .metricspaces import SpaceError
from .report import emit_report, mean_set_csv
from .solver import SolverError, empirical_mean_set

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
SEED_ENV = "GENFRECHET_SEED"

log = logging.getLogger("genfrechet")


def _seed(args, config: ExperimentConfig | None = None) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return config.seed if config is not None else 0


def _load(args) -> ExperimentConfig:
    path = Path(args.config)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    config = load_config(path)
    if config.data_csv is not None and not Path(config.data_csv).is_absolute():
        config = config.model_copy(update={"data_csv": str(path.parent / config.data_csv)})
    return config


def _data(config: ExperimentConfig, seed: int) -> np.ndarray:
    if config.data is not None:
        return np.asarray(config.data, dtype=float)
    if config.data_csv is not None:
        return np.loadtxt(config.data_csv, delimiter=",", ndmin=2)
    n = config.n_grid[-1]
    return config.build_distribution().sample(n, replication_rng(seed, 0))


def cmd_mean(args) -> int:
    config = _load(args)
    seed = _seed(args, config)
    c = config.build_cost()
    x = _data(config, seed)
    n = len(x)
    domain = realize(config.build_domains(), n, x)
    s = config.solver
    ms = empirical_mean_set(c, x, domain, config.epsilon_at(n), s.method, resolution=s.resolution,
                            starts=s.starts, tolerance=s.tolerance, dedup_radius=s.dedup_radius,
                            coarse_resolution=s.coarse_resolution)
    _emit_text(args, "mean_set.csv", mean_set_csv(ms))
    return EXIT_OK


def cmd_population(args) -> int:
    config = _load(args)
    ms = population_target(config)
    _emit_text(args, "population_mean_set.csv", mean_set_csv(ms))
    print(f"# route: {ms.details.get('route', ms.method)}", file=sys.stderr)
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = _load(args)
    seed = _seed(args, config)
    report = run_experiment(config, seed, with_conditions=not args.skip_conditions)
    for path in emit_report(report, args.out):
        log.info("wrote %s", path)
    return EXIT_OK


def cmd_check(args) -> int:
    config = _load(args)
    report = check_conditions(config, seed=_seed(args, config))
    _emit_text(args, "conditions.txt", "\n".join(report.lines()) + "\n")
    return EXIT_OK


def cmd_suite(args) -> int:
    configs = special_case_suite(args.name)
    seed = _seed(args)
    for cfg in configs:
        if args.replications is not None:
            cfg = cfg.model_copy(update={"replications": args.replications})
        report = run_experiment(cfg, seed, with_conditions=True)
        for path in emit_report(report, Path(args.out) / cfg.name):
            log.info("wrote %s", path)
    return EXIT_OK


def _emit_text(args, name: str, text: str) -> None:
    out = getattr(args, "out", None)
    if out:
        Path(out).mkdir(parents=True, exist_ok=True)
        (Path(out) / name).write_text(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="genfrechet", description="Generalized Frechet mean sets and consistency experiments.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_required=False):
        p.add_argument("--seed", type=int, default=None, help=f"overrides ${SEED_ENV} and the config seed")
        p.add_argument("--out", required=out_required, default=None, help="output directory")

    p = sub.add_parser("mean", help="empirical mean set of the configured data")
    p.add_argument("--config", required=True)
    common(p)
    p.set_defaults(func=cmd_mean)

    p = sub.add_parser("population", help="population mean set over M_0")
    p.add_argument("--config", required=True)
    common(p)
    p.set_defaults(func=cmd_population)

    p = sub.add_parser("simulate", help="run the Monte Carlo experiment and write reports")
    p.add_argument("--config", required=True)
    p.add_argument("--skip-conditions", action="store_true", help="do not run the condition checkers")
    common(p, out_required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("check-conditions", help="report a verdict per consistency condition")
    p.add_argument("--config", required=True)
    common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("suite", help="run a canned special-case suite")
    p.add_argument("--name", required=True, help="frechet | lp | lp(p) | h_frechet | rho_frechet | c_frechet")
    p.add_argument("--replications", type=int, default=None)
    common(p, out_required=True)
    p.set_defaults(func=cmd_suite)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, SpaceError, CostError, DistributionError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (HarnessError, SolverError, DomainError, ValueError, FloatingPointError,
            np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
