import io

import numpy as np
import pytest

from ebu.environments import fig1_episode
from ebu.errors import ConfigError
from ebu.harness.config import RunConfig, dump_config, load_config, parse_config_text
from ebu.harness.experiment import interleave, run_experiment
from ebu.harness.fig1 import fig1_probability_curve
from ebu.harness.metrics import (
    MetricRow,
    human_normalized_score,
    mean_q_diagnostic,
    read_csv,
    relative_length,
    relative_score,
    rows_to_csv,
)
from ebu.harness.suites import directional_checks, BenchResult, verify_operator
from ebu.mdp import Episode


def exact_uniform_curve(K, gamma=0.9):
    """Exact probability by propagating the full distribution over reachable Q-tables."""
    ep = list(fig1_episode())
    dist = {tuple([0.0] * 8): 1.0}
    out = [0.0]
    for _ in range(K):
        nxt = {}
        for q, p in dist.items():
            for t in ep:
                boot = 0.0 if t.terminal else max(q[2 * t.s_next], q[2 * t.s_next + 1])
                q2 = list(q)
                q2[2 * t.s + t.a] = t.r + gamma * boot
                q2 = tuple(q2)
                nxt[q2] = nxt.get(q2, 0.0) + p / len(ep)
        dist = nxt
        out.append(sum(p for q, p in dist.items() if all(q[2 * s + 1] > q[2 * s] for s in range(3))))
    return np.array(out)


# frozen from exact_uniform_curve
EXACT = {2: 0.0, 3: 0.016, 10: 0.4571, 20: 0.8847, 40: 0.9973}


def test_exact_oracle_frozen_values():
    exact = exact_uniform_curve(40)
    for k, v in EXACT.items():
        assert exact[k] == pytest.approx(v, abs=5e-5)


def test_fig1_curve_matches_exact():
    curve = fig1_probability_curve(40, 10_000, np.random.default_rng(0))
    exact = exact_uniform_curve(40)
    se = np.sqrt(np.maximum(exact * (1 - exact), 1e-12) / 10_000)
    assert np.all(np.abs(curve.uniform - exact) <= np.maximum(4 * se, 1e-9))
    assert curve.uniform[2] == 0.0
    assert np.array_equal(curve.ebu, (np.arange(41) >= 5).astype(float))


def test_fig1_rejects_bad_args():
    with pytest.raises(ValueError):
        fig1_probability_curve(10, 0)


def test_metric_examples():
    assert relative_length(1000, 18) == pytest.approx(55.5555555, rel=1e-6)
    assert relative_score(10, 4, 8, 2) == 1.0
    assert human_normalized_score(8, 6, 2) == 1.5
    with pytest.raises(ZeroDivisionError):
        relative_length(10, 0)
    with pytest.raises(ZeroDivisionError):
        human_normalized_score(1, 3, 3)


def test_mean_q_diagnostic():
    ep = Episode([0, 1], [1, 0], [0, 1], [1, 2], [False, True])
    q = np.array([[0.0, 2.0], [4.0, 0.0], [0, 0]])
    assert mean_q_diagnostic([ep], q) == 3.0
    assert mean_q_diagnostic([ep], lambda s: q[s]) == 3.0
    with pytest.raises(ValueError):
        mean_q_diagnostic([], q)


def test_csv_roundtrip():
    rows = [MetricRow("a-s0", 0, 10, 1.5, None, 0.25, 1.0), MetricRow("a-s1", 1, 10, -2.0, 1.125, 3.0, 2.5)]
    back = read_csv(io.StringIO(rows_to_csv(rows)))
    assert back == rows
    with pytest.raises(ValueError):
        read_csv(io.StringIO("x,y\n"))


def test_interleave_five_seeds():
    per_run = [[MetricRow(f"r{i}", i, step, 0, None, 0, 0) for step in (10, 20)] for i in range(5)]
    rows = interleave(per_run)
    assert [(r.step, r.seed) for r in rows] == [(s, i) for s in (10, 20) for i in range(5)]


def test_config_parsing_and_overrides(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# chain run\nenv.kind = chain\nlearner.beta = 1  # full diffusion\nrun.seeds = 0,1,2\n")
    cfg = load_config(path, ["learner.lambda=0.5", "run.total_steps=50"])
    assert cfg.train.beta == 1.0 and cfg.train.lam == 0.5 and cfg.train.total_steps == 50
    assert cfg.seeds == [0, 1, 2]
    again = load_config_from_text(tmp_path, dump_config(cfg))
    assert again.train == cfg.train and again.seeds == cfg.seeds


def load_config_from_text(tmp_path, text):
    p = tmp_path / "dump.cfg"
    p.write_text(text)
    return load_config(p)


@pytest.mark.parametrize("text", ["nonsense.key = 1", "learner.beta = high", "just words", "learner.beta = 2"])
def test_config_errors(tmp_path, text):
    p = tmp_path / "bad.cfg"
    p.write_text(text + "\n")
    with pytest.raises(ConfigError):
        load_config(p)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.cfg")


def test_duplicate_seeds_rejected():
    with pytest.raises(ConfigError):
        RunConfig(seeds=[1, 1]).validate()


def test_experiment_csv_is_reproducible(tmp_path):
    def run(name):
        cfg = load_config(None, ["env.kind=chain", "learner.kind=one-step", "run.total_steps=100",
                                 "run.eval_period=50", "run.seeds=0,1,2,3,4", f"run.output={tmp_path / name}"])
        run_experiment(cfg)
        lines = (tmp_path / name).read_text().splitlines()
        return [line.rsplit(",", 1)[0] for line in lines]

    a, b = run("a.csv"), run("b.csv")
    assert a == b
    assert len(a) == 1 + 5 * 2
    assert a[1].startswith("run-s0,0,50,")


def test_verify_operator_small():
    report = verify_operator(seed=1, contraction_draws=10, fixed_point_mdps=3, endpoint_episodes=10)
    assert report.passed
    assert report.lines()[-1].startswith("PASS")


def test_directional_checks_orderings():
    res = BenchResult(finals={(0.2, "ebu"): [2.0], (0.2, "one-step"): [1.0],
                              (0.5, "ebu"): [1.0], (0.5, "one-step"): [1.5], (0.5, "n-step"): [0.9]})
    checks = directional_checks(res)
    assert [ok for _, ok in checks] == [True, False]
