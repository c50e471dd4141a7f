import dataclasses

import numpy as np
import pytest

from ebu.environments import LEFT, RIGHT
from ebu.errors import ConfigError
from ebu.idx import write_idx
from ebu.mdp import greedy_path
from ebu.training import Environment, TrainConfig, build_environment, epsilon_at, train


def chain_config(**kw):
    base = dict(env="chain", learner="ebu", ebu_mode="sweep", beta=1.0, lr=1.0, total_steps=200,
                eval_period=50, eps_start=1.0, eps_end=1.0)
    base.update(kw)
    return TrainConfig(**base)


@pytest.mark.parametrize("seed", range(20))
def test_chain_optimal_after_first_episode(seed):
    seen = []

    def check(step, params, memory):
        if not seen:
            table = params.theta.reshape(params.shape)
            seen.append(bool(np.all(table[:3, RIGHT] > table[:3, LEFT])))

    train(chain_config(seed=seed), on_update=check)
    assert seen == [True]


def test_same_seed_same_metrics():
    cfg = chain_config(learner="one-step", ebu_mode="regression", eps_end=0.1, total_steps=300)
    a = train(cfg).rows
    b = train(cfg).rows
    strip = lambda rows: [dataclasses.replace(r, seconds=0.0) for r in rows]
    assert strip(a) == strip(b)
    assert np.array_equal(train(cfg).params.theta, train(cfg).params.theta)


def test_rows_at_eval_period_and_end():
    rows = train(chain_config(total_steps=120, eval_period=50)).rows
    assert [r.step for r in rows] == [50, 100, 120]


@pytest.mark.parametrize("bad", [
    dict(beta=1.5),
    dict(env="cartpole"),
    dict(learner="sarsa"),
    dict(approximator="linear"),
    dict(learner="q-lambda", approximator="dense", observation="onehot"),
    dict(observation="coords"),
    dict(gamma=1.0),
    dict(n=0),
    dict(reduction="pair", approximator="dense", observation="onehot"),
])
def test_invalid_configs(bad):
    with pytest.raises(ConfigError):
        TrainConfig(**bad).validate()


def test_epsilon_schedules():
    lin = TrainConfig(eps_start=1.0, eps_end=0.0, total_steps=100)
    assert epsilon_at(lin, 0) == 1.0 and epsilon_at(lin, 50) == 0.5 and epsilon_at(lin, 500) == 0.0
    quad = TrainConfig(eps_start=1.0, eps_end=0.1, eps_shape="quadratic", eps_horizon=100)
    assert epsilon_at(quad, 50) == pytest.approx(0.1 + 0.9 * 0.25)


@pytest.mark.parametrize("learner,approx,obs", [
    ("ebu", "tabular", "index"),
    ("one-step", "tabular", "index"),
    ("n-step", "tabular", "index"),
    ("q-lambda", "tabular", "index"),
    ("retrace", "tabular", "index"),
    ("ebu", "linear", "onehot"),
    ("ebu", "dense", "coords"),
    ("retrace", "dense", "onehot"),
])
def test_learners_run_on_maze(learner, approx, obs):
    cfg = TrainConfig(env="maze", maze_width=5, maze_height=5, wall_density=0.2, maze_seed=3, learner=learner,
                      approximator=approx, observation=obs, hidden=(16,), lr=1.0 if approx == "tabular" else 0.01,
                      total_steps=400, eval_period=200, max_episode_steps=100)
    res = train(cfg)
    assert len(res.rows) == 2
    assert all(np.isfinite(r.mean_q) and r.rel_length >= 1.0 for r in res.rows)
    assert np.all(np.isfinite(res.params.theta))


def test_mnist_observations(tmp_path):
    rng = np.random.default_rng(0)
    labels = np.repeat(np.arange(10, dtype=np.uint8), 2)
    write_idx(tmp_path / "img", rng.integers(0, 256, size=(20, 4, 4), dtype=np.uint8))
    write_idx(tmp_path / "lab", labels)
    cfg = TrainConfig(env="maze", maze_width=4, maze_height=4, wall_density=0.0, learner="ebu", approximator="dense",
                      observation="mnist", mnist_images=str(tmp_path / "img"), mnist_labels=str(tmp_path / "lab"),
                      hidden=(8,), lr=0.01, total_steps=100, eval_period=100, max_episode_steps=50)
    env = build_environment(cfg)
    assert env.num_inputs == 32
    assert env.encode(np.array([0, 5]), rng).shape == (2, 32)
    assert len(train(cfg, env=env).rows) == 1


def test_maze_oracle_length():
    env = build_environment(TrainConfig(env="maze", wall_density=0.0, maze_seed=1))
    assert env.oracle_len == 18


def test_ebu_beats_one_step_early_on_maze():
    """Equal step budget on density-0.2 mazes: EBU's median relative length is no worse."""
    from ebu.harness.suites import bench_train_config
    from ebu.maze import generate_maze, maze_to_mdp

    finals = {"ebu": [], "one-step": []}
    for m in range(4):
        maze = generate_maze(10, 10, 0.2, np.random.default_rng(100 + m))
        env = Environment(maze_to_mdp(maze, 0.9), "index", maze)
        for learner in finals:
            cfg = bench_train_config(learner=learner, total_steps=20_000, eval_period=20_000, eval_episodes=5)
            finals[learner].append(train(cfg, env=env).rows[-1].rel_length)
    assert np.median(finals["ebu"]) <= np.median(finals["one-step"])
