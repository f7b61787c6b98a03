import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genfrechet.config import ConfigError, parse_config, serialize_config

MINIMAL = """
space: circle
cost: lp(2)
distribution: point_mass(0)
domain: full
n_grid: [10]
"""


def test_minimal_config_gets_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.replications == 20
    assert cfg.epsilon == "1/n"
    assert cfg.epsilon_at(10) == pytest.approx(0.1)
    assert cfg.version == 1


@pytest.mark.parametrize(
    "extra, field",
    [
        ("distribution: {kind: discrete, points: [[0], [1]], weights: [0.5, 0.4]}", "weights"),
        ("distribution: {kind: vmf, mu: [0, 0, 1], kappa: -1}", "kappa"),
        ("distribution: {kind: gaussian, mu: [0, 0], cov: [[1, 2], [2, 1]]}", "cov"),
        ("bogus_key: 3", "bogus_key"),
        ("version: 7", "version"),
        ("n_grid: [10, 10]", "n_grid"),
        ("replications: 0", "replications"),
    ],
)
def test_validation_errors_name_the_field(extra, field):
    lines = [ln for ln in MINIMAL.strip().splitlines() if not ln.startswith(extra.split(":")[0] + ":")]
    with pytest.raises(ConfigError, match=field):
        parse_config("\n".join(lines + [extra]))


def test_nonvanishing_epsilon_needs_override():
    with pytest.raises(ConfigError, match="epsilon"):
        parse_config(MINIMAL + 'epsilon: "constant(0.1)"\n')
    cfg = parse_config(MINIMAL + 'epsilon: "constant(0.1)"\nallow_nonvanishing_epsilon: true\n')
    assert cfg.epsilon_at(1000) == 0.1


def test_checker_requires_certificate():
    with pytest.raises(ConfigError, match="certificates.coercivity"):
        parse_config(MINIMAL + "checkers: [coercive]\n")


def test_unknown_checker_rejected():
    with pytest.raises(ConfigError, match="unknown checkers"):
        parse_config(MINIMAL + "checkers: [magic]\n")


def test_epsilon_schedules():
    assert parse_config(MINIMAL + 'epsilon: "0"\n').epsilon_at(5) == 0.0
    assert parse_config(MINIMAL + 'epsilon: "2/n^0.5"\n').epsilon_at(100) == pytest.approx(0.2)
    with pytest.raises(ConfigError):
        parse_config(MINIMAL + 'epsilon: "sometimes"\n')


shorthands = st.sampled_from(["circle", "sphere(2)", "{kind: euclidean, dim: 2, bbox: [[-1, 1], [-1, 1]]}"])
costs = st.sampled_from(["lp(1)", "lp(2)", "lp(3.5)", "{form: h_of_d, H: log1p_power(2)}", "centered_square"])


@settings(max_examples=50, deadline=None)
@given(
    space=shorthands,
    cost=costs,
    reps=st.integers(1, 500),
    grid=st.lists(st.integers(1, 10 ** 5), min_size=1, max_size=6, unique=True),
    seed=st.integers(0, 2 ** 31),
    eps=st.sampled_from(["0", "1/n", "3/n^2"]),
)
def test_round_trip(space, cost, reps, grid, seed, eps):
    dist = {"circle": "point_mass(0)", "sphere(2)": "{kind: vmf, mu: [0, 0, 1], kappa: 2}"}.get(
        space, "{kind: gaussian, mu: [0, 0], cov: [[1, 0], [0, 1]]}")
    text = (f"space: {space}\ncost: {cost}\ndistribution: {dist}\nn_grid: {sorted(grid)}\n"
            f"replications: {reps}\nseed: {seed}\nepsilon: \"{eps}\"\n")
    cfg = parse_config(text)
    assert parse_config(serialize_config(cfg)) == cfg
