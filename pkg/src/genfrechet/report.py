"""Deterministic on-disk report files.

``report.csv``
    One row per ``(n, replication)``; columns as in ``harness.ROW_COLUMNS``.
``summary.csv``
    Long format ``metric,n,value``; ``n`` is empty for run-level metrics.
    The ``median_one_sided`` rows are the distance-vs-n plot data.
``conditions.txt``
    One verdict line per condition, with its method tag.
``manifest.json``
    Config hash, seed, package versions. No timestamps, so reruns with the
    same inputs produce identical bytes.
"""
from __future__ import annotations

import csv
import io
import json
import platform
from pathlib import Path

import numpy as np

from . import __version__
from .config import config_hash, serialize_config
from .harness import ROW_COLUMNS, ConsistencyReport, ConditionReport
from .solver import MeanSet

REPORT_FILES = ("report.csv", "summary.csv", "conditions.txt", "manifest.json", "config.yaml")


def _cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def rows_csv(report: ConsistencyReport) -> str:
    return _csv_text(ROW_COLUMNS, ([r[c] for c in ROW_COLUMNS] for r in report.rows))


def summary_csv(report: ConsistencyReport) -> str:
    return _csv_text(("metric", "n", "value"), ((m, "" if n is None else n, v) for m, n, v in report.summary))


def conditions_text(conditions: ConditionReport | None) -> str:
    if conditions is None:
        return "conditions not checked for this run\n"
    return "\n".join(conditions.lines()) + "\n"


def manifest(report: ConsistencyReport) -> dict:
    import scipy

    return {
        "config_sha256": config_hash(report.config),
        "seed": report.seed,
        "replications": report.config.replications,
        "n_grid": list(report.config.n_grid),
        "population_route": str(report.population.details.get("route", report.population.method)),
        "versions": {
            "genfrechet": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    }


def _write(path: Path, text: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(text)


def emit_report(report: ConsistencyReport, out_dir) -> list[Path]:
    """Write the report files into ``out_dir`` (created if needed).

    Raises ``OSError`` on I/O failure.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "report.csv": rows_csv(report),
        "summary.csv": summary_csv(report),
        "conditions.txt": conditions_text(report.conditions),
        "manifest.json": json.dumps(manifest(report), indent=2, sort_keys=True) + "\n",
        "config.yaml": serialize_config(report.config),
    }
    paths = []
    for name in REPORT_FILES:
        path = out / name
        _write(path, files[name])
        paths.append(path)
    return paths


def mean_set_csv(ms: MeanSet) -> str:
    """Mean-set rows: point coordinates, objective value, method, epsilon."""
    dim = ms.points.shape[1] if ms.points.ndim == 2 else 1
    header = [f"x{i}" for i in range(dim)] + ["value", "min_value", "method", "epsilon"]
    rows = ([*p, v, ms.value, ms.method, ms.epsilon] for p, v in zip(np.atleast_2d(ms.points), ms.values))
    return _csv_text(header, rows)
