import csv
import io
import json

import pytest

from genfrechet.cli import EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC, EXIT_OK, main
from genfrechet.report import REPORT_FILES

SMALL = """
name: small_vmf
space: sphere(2)
cost: lp(2)
distribution: {kind: vmf, mu: [0, 0, 1], kappa: 5}
n_grid: [10, 30]
replications: 3
epsilon: "0"
solver: {starts: 4}
seed: 11
"""


@pytest.fixture
def small(tmp_path):
    path = tmp_path / "small.yaml"
    path.write_text(SMALL)
    return path


def _read(d):
    return {name: (d / name).read_bytes() for name in REPORT_FILES}


def test_simulate_is_byte_identical(small, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", str(small), "--out", str(a), "--seed", "5"]) == EXIT_OK
    assert main(["simulate", "--config", str(small), "--out", str(b), "--seed", "5"]) == EXIT_OK
    assert _read(a) == _read(b)


def test_different_seed_same_schema(small, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["simulate", "--config", str(small), "--out", str(a), "--seed", "1", "--skip-conditions"])
    main(["simulate", "--config", str(small), "--out", str(b), "--seed", "2", "--skip-conditions"])
    ra = list(csv.reader(io.StringIO((a / "report.csv").read_text())))
    rb = list(csv.reader(io.StringIO((b / "report.csv").read_text())))
    assert ra[0] == rb[0] and len(ra) == len(rb) == 7
    assert ra[1:] != rb[1:]
    ma = json.loads((a / "manifest.json").read_text())
    assert ma["seed"] == 1 and ma["replications"] == 3


def test_seed_env_and_override(small, tmp_path, monkeypatch):
    monkeypatch.setenv("GENFRECHET_SEED", "7")
    main(["simulate", "--config", str(small), "--out", str(tmp_path / "env"), "--skip-conditions"])
    assert json.loads((tmp_path / "env" / "manifest.json").read_text())["seed"] == 7
    main(["simulate", "--config", str(small), "--out", str(tmp_path / "cli"), "--seed", "8", "--skip-conditions"])
    assert json.loads((tmp_path / "cli" / "manifest.json").read_text())["seed"] == 8
    monkeypatch.setenv("GENFRECHET_SEED", "seven")
    assert main(["simulate", "--config", str(small), "--out", str(tmp_path / "x")]) == EXIT_CONFIG


def test_mean_and_population_print_csv(small, capsys):
    assert main(["mean", "--config", str(small)]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "x0,x1,x2,value,min_value,method,epsilon"
    assert len(out) == 2
    assert main(["population", "--config", str(small)]) == EXIT_OK
    assert "route: quadrature" in capsys.readouterr().err


def test_check_conditions_prints_all_eight(small, capsys):
    assert main(["check-conditions", "--config", str(small)]) == EXIT_OK
    text = capsys.readouterr().out
    for k in range(1, 9):
        assert f"condition {k}: " in text


def test_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text(SMALL.replace("kappa: 5", "kappa: -5"))
    assert main(["simulate", "--config", str(bad), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "kappa" in capsys.readouterr().err


def test_numerical_failure_exit_code(tmp_path):
    cfg = tmp_path / "short.yaml"
    cfg.write_text("""
space: {kind: euclidean, dim: 1, bbox: [[-2, 2]]}
cost: lp(2)
distribution: point_mass(1)
domain: {rule: scripted, target: {kind: finite_set, points: [[1]]}, sets: [{kind: finite_set, points: [[1]]}]}
n_grid: [1]
data: [[0.0], [1.0], [2.0]]
""")
    assert main(["mean", "--config", str(cfg)]) == EXIT_NUMERIC


def test_missing_config_is_io_error(tmp_path):
    assert main(["mean", "--config", str(tmp_path / "nope.yaml")]) == EXIT_IO


def test_unknown_suite_is_config_error(tmp_path):
    assert main(["suite", "--name", "karcher", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_suite_writes_one_directory_per_config(tmp_path):
    assert main(["suite", "--name", "c_frechet", "--out", str(tmp_path), "--replications", "2", "--seed", "3"]) == EXIT_OK
    dirs = [d for d in tmp_path.iterdir() if d.is_dir()]
    assert dirs
    for d in dirs:
        assert sorted(p.name for p in d.iterdir()) == sorted(REPORT_FILES)
