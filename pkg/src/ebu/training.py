"""The interaction / replay / update loop shared by every learner.

One call to :func:`train` runs a single seeded agent: act epsilon-greedily,
store the transition, periodically fit the online Q-function to targets built
from replay, periodically copy it into the target network, and evaluate.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Callable

import numpy as np

from .approximator import QFunctionParams, grad_step, init_params, predict, sync_target
from .environments import make_branching, make_chain
from .errors import ConfigError
from .idx import IdxImageSet, encode_state, load_idx
from .maze import MAX_EPISODE_STEPS, MazeSpec, generate_maze, maze_to_mdp, shortest_path_len
from .mdp import Episode, TabularMDP, Transition
from .harness.metrics import MetricRow, mean_q_diagnostic, relative_length
from .replay import ReplayMemory
from .targets import (
    RetraceConfig,
    ebu_targets,
    retrace_targets,
    tabular_backward_sweep,
    watkins_q_lambda_update,
)

ENVS = ("chain", "branching", "maze")
LEARNERS = ("ebu", "one-step", "n-step", "q-lambda", "retrace")
OBSERVATIONS = ("index", "onehot", "coords", "mnist")
EPS_SHAPES = ("linear", "quadratic")


@dataclass
class TrainConfig:
    # environment
    env: str = "chain"
    branching_n: int = 2
    maze_width: int = 10
    maze_height: int = 10
    wall_density: float = 0.2
    maze_seed: int | None = None  # None: derived from ``seed``
    maze_file: str | None = None
    observation: str = "index"
    mnist_images: str | None = None
    mnist_labels: str | None = None
    max_episode_steps: int = MAX_EPISODE_STEPS
    # learner
    learner: str = "ebu"
    beta: float = 0.5
    ebu_mode: str = "regression"  # "sweep": in-place backward pass over a table
    gamma: float = 0.9
    lam: float = 1.0
    n: int | None = None  # None: run to the end of the episode
    batch_size: int = 32
    replay_capacity: int = 100_000
    update_period: int = 1
    target_sync: int = 1
    learning_starts: int = 1
    length_weighted: bool = False
    # approximator
    approximator: str = "tabular"
    hidden: tuple[int, ...] = (64,)
    lr: float = 1.0
    reduction: str | None = None  # None: "pair" for tables, "mean" otherwise
    # exploration and evaluation
    eps_start: float = 1.0
    eps_end: float = 0.0
    eps_horizon: int | None = None  # None: total_steps
    eps_shape: str = "linear"
    total_steps: int = 1000
    eval_period: int = 100
    eval_episodes: int = 1
    eval_epsilon: float = 0.05
    seed: int = 0

    def validate(self) -> "TrainConfig":
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(self.env in ENVS, f"env must be one of {ENVS}, got {self.env!r}")
        need(self.learner in LEARNERS, f"learner must be one of {LEARNERS}, got {self.learner!r}")
        need(self.observation in OBSERVATIONS, f"observation must be one of {OBSERVATIONS}")
        need(self.approximator in ("tabular", "linear", "dense"), f"unknown approximator {self.approximator!r}")
        need(self.eps_shape in EPS_SHAPES, f"eps_shape must be one of {EPS_SHAPES}")
        need(0.0 <= self.beta <= 1.0, "beta must lie in [0, 1]")
        need(0.0 <= self.lam <= 1.0, "lambda must lie in [0, 1]")
        need(0.0 <= self.gamma <= 1.0, "gamma must lie in [0, 1]")
        need(self.gamma < 1.0 or self.env == "branching", "gamma = 1 is only allowed on the branching domain")
        for name in ("eps_start", "eps_end", "eval_epsilon"):
            need(0.0 <= getattr(self, name) <= 1.0, f"{name} must lie in [0, 1]")
        for name in ("total_steps", "eval_period", "eval_episodes", "update_period", "target_sync",
                     "batch_size", "replay_capacity", "max_episode_steps", "branching_n",
                     "maze_width", "maze_height"):
            need(getattr(self, name) >= 1, f"{name} must be positive")
        need(self.learning_starts >= 0, "learning_starts must be non-negative")
        need(self.lr > 0, "lr must be positive")
        need(self.n is None or self.n >= 1, "n must be at least 1")
        need(self.eps_horizon is None or self.eps_horizon >= 1, "eps_horizon must be positive")
        need(0.0 <= self.wall_density < 1.0, "wall_density must lie in [0, 1)")
        need(all(h >= 1 for h in self.hidden), "hidden sizes must be positive")
        need(self.reduction in (None, "mean", "sum", "pair"), f"unknown reduction {self.reduction!r}")
        tabular = self.approximator == "tabular"
        need(tabular == (self.observation == "index"), "the tabular approximator takes (and only takes) index observations")
        need(self.reduction != "pair" or tabular, "pair reduction is only defined for tables")
        need(self.learner != "q-lambda" or tabular, "q-lambda is implemented for tables only")
        need(self.ebu_mode in ("regression", "sweep"), f"unknown ebu_mode {self.ebu_mode!r}")
        need(self.ebu_mode == "regression" or tabular, "the sweep form of EBU needs a table")
        need(self.observation not in ("coords", "mnist") or self.env == "maze", f"{self.observation} observations need the maze")
        if self.observation == "mnist":
            need(self.mnist_images and self.mnist_labels, "mnist observations need mnist_images and mnist_labels")
            need(self.maze_width <= 10 and self.maze_height <= 10, "mnist observations show single-digit coordinates")
        return self

    @property
    def effective_reduction(self) -> str:
        if self.reduction is not None:
            return self.reduction
        return "pair" if self.approximator == "tabular" else "mean"

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def epsilon_at(config: TrainConfig, step: int) -> float:
    """Exploration rate after ``step`` environment steps."""
    horizon = config.eps_horizon or config.total_steps
    frac = min(step / horizon, 1.0)
    if config.eps_shape == "linear":
        w = 1.0 - frac
    else:
        w = (1.0 - frac) ** 2
    return config.eps_end + (config.eps_start - config.eps_end) * w


@dataclass
class Environment:
    """A tabular world plus the observation map the approximator sees."""

    mdp: TabularMDP
    observation: str = "index"
    maze: MazeSpec | None = None
    images: IdxImageSet | None = None
    oracle_len: int | None = field(default=None, init=False)

    def __post_init__(self):
        if self.maze is not None:
            self.oracle_len = shortest_path_len(self.maze)

    @property
    def num_inputs(self) -> int:
        if self.observation in ("index", "onehot"):
            return self.mdp.num_states
        if self.observation == "coords":
            return 2
        return 2 * self.images.rows * self.images.cols

    def encode(self, states, rng: np.random.Generator):
        """Observation batch for an integer array of states (a scalar gives one observation)."""
        states = np.asarray(states, dtype=np.int64)
        if self.observation == "index":
            return states
        single = states.ndim == 0
        flat = np.atleast_1d(states)
        if self.observation == "onehot":
            out = np.eye(self.mdp.num_states)[flat]
        elif self.observation == "coords":
            w, h = self.maze.width, self.maze.height
            out = np.stack([(flat % w) / max(w - 1, 1), (flat // w) / max(h - 1, 1)], axis=1)
        else:
            w = self.maze.width
            out = np.stack([
                encode_state((int(s) % w, int(s) // w), self.images, rng).as_vector() for s in flat
            ])
        return out[0] if single else out


def build_environment(config: TrainConfig) -> Environment:
    if config.env == "chain":
        return Environment(make_chain(config.gamma), config.observation)
    if config.env == "branching":
        return Environment(make_branching(config.branching_n, gamma=config.gamma), config.observation)
    if config.maze_file:
        try:
            maze = MazeSpec.from_text(Path(config.maze_file).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read maze file: {exc}") from exc
    else:
        seed = config.maze_seed if config.maze_seed is not None else config.seed
        maze = generate_maze(config.maze_width, config.maze_height, config.wall_density, np.random.default_rng(seed))
    images = None
    if config.observation == "mnist":
        images = load_idx(config.mnist_images, config.mnist_labels)
    return Environment(maze_to_mdp(maze, config.gamma), config.observation, maze, images)


@dataclass
class TrainResult:
    rows: list[MetricRow]
    params: QFunctionParams
    memory: ReplayMemory
    env: Environment
    updates: int = 0


def _row_values(params: QFunctionParams, obs):
    if params.kind == "tabular":
        return params.theta.reshape(params.shape)[obs]
    return predict(params, obs)


def _nstep_batch(memory: ReplayMemory, idx: np.ndarray, target_fn, gamma: float, n: int | None) -> np.ndarray:
    """n-step returns from sampled logical indices; windows stop at the episode end."""
    _, ends = memory.episode_bounds(idx)
    m = ends - idx if n is None else np.minimum(n, ends - idx)
    if n is None:
        y = memory.discounted_returns(idx, gamma)
    else:
        y = np.empty(len(idx))
        for i, (lo, mi) in enumerate(zip(idx.tolist(), m.tolist())):
            y[i] = gamma ** np.arange(mi) @ memory.rewards_between(lo, lo + mi)
    last = idx + m - 1
    _, _, _, s_last, term_last = memory.columns(last)
    boot = target_fn(s_last).max(axis=1)
    return y + np.where(term_last, 0.0, gamma**m * boot)


def evaluate(env: Environment, params: QFunctionParams, config: TrainConfig, rng: np.random.Generator):
    """Run ``eval_episodes`` episodes with the evaluation epsilon; returns the episodes."""
    mdp = env.mdp
    nA = mdp.num_actions
    episodes = []
    for _ in range(config.eval_episodes):
        s = mdp.start
        rows = []
        for _ in range(config.max_episode_steps):
            q = _row_values(params, env.encode(s, rng))
            if rng.random() < config.eval_epsilon:
                a = int(rng.integers(nA))
            else:
                a = int(np.argmax(q))
            s2, r, done = mdp.step(s, a)
            rows.append((s, a, r, s2, done))
            s = s2
            if done:
                break
        episodes.append(Episode(*zip(*rows), validate=False))
    return episodes


def train(
    config: TrainConfig,
    env: Environment | None = None,
    on_update: Callable[[int, QFunctionParams, ReplayMemory], None] | None = None,
) -> TrainResult:
    """Train one agent; ``on_update(step, params, memory)`` fires after each update."""
    config.validate()
    t0 = time.perf_counter()
    env = env if env is not None else build_environment(config)
    mdp = env.mdp
    nA = mdp.num_actions
    act_rng, replay_rng, enc_rng, eval_rng, init_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(config.seed).spawn(5)
    )
    if config.approximator == "dense":
        shape = (env.num_inputs, *config.hidden, nA)
    else:
        shape = (env.num_inputs, nA)
    params = init_params(config.approximator, shape, init_rng)
    target = sync_target(params)
    memory = ReplayMemory(config.replay_capacity, config.length_weighted)
    reduction = config.effective_reduction
    retrace_cfg = RetraceConfig(config.lam, target_epsilon=config.eval_epsilon)

    def target_fn(states):
        return predict(target, env.encode(states, enc_rng))

    def update(params):
        if config.learner in ("one-step", "n-step"):
            if len(memory) == 0:
                return None
            idx = memory.sample_indices(config.batch_size, replay_rng)
            s, a, r, s2, term = memory.columns(idx)
            if config.learner == "one-step":
                boot = target_fn(s2).max(axis=1)
                y = np.where(term, r, r + config.gamma * boot)
            else:
                y = _nstep_batch(memory, idx, target_fn, config.gamma, config.n)
            return grad_step(params, env.encode(s, enc_rng), a, y, config.lr, reduction)
        if memory.num_complete == 0:
            return None
        ep = memory.sample_episode(replay_rng)
        if config.learner == "q-lambda":
            table = watkins_q_lambda_update(params.theta.reshape(params.shape), ep, config.lam, config.gamma, config.lr)
            return QFunctionParams(params.kind, params.shape, table.ravel())
        if config.learner == "ebu" and config.ebu_mode == "sweep":
            table = tabular_backward_sweep(params.theta.reshape(params.shape), ep, config.gamma, config.lr)
            return QFunctionParams(params.kind, params.shape, table.ravel())
        if config.learner == "ebu":
            y = ebu_targets(ep, target_fn, config.beta, config.gamma).y
        else:
            q_sa = target_fn(ep.states)[np.arange(len(ep)), ep.actions]
            y = q_sa + retrace_targets(ep, target_fn, retrace_cfg, config.gamma)
        return grad_step(params, env.encode(ep.states, enc_rng), ep.actions, y, config.lr, reduction)

    rows: list[MetricRow] = []

    def record(step):
        episodes = evaluate(env, params, config, eval_rng)
        returns = [ep.total_reward for ep in episodes]
        rel = None
        if env.oracle_len is not None:
            rel = float(np.mean([relative_length(len(ep), env.oracle_len) for ep in episodes]))
        mean_q = mean_q_diagnostic(episodes, lambda states: predict(params, env.encode(states, eval_rng)))
        rows.append(MetricRow("", config.seed, step, float(np.mean(returns)), rel, mean_q,
                              time.perf_counter() - t0))

    s = mdp.start
    ep_steps = 0
    updates = 0
    for step in range(1, config.total_steps + 1):
        eps = epsilon_at(config, step - 1)
        q = _row_values(params, env.encode(s, enc_rng))
        greedy = int(np.argmax(q))
        if act_rng.random() < eps:
            a = int(act_rng.integers(nA))
        else:
            a = greedy
        mu = eps / nA + (1.0 - eps) * (a == greedy)
        s2, r, done = mdp.step(s, a)
        memory.store(Transition(s, a, r, s2, done, mu))
        ep_steps += 1
        if done or ep_steps >= config.max_episode_steps:
            if not done:
                memory.end_episode()
            s, ep_steps = mdp.start, 0
        else:
            s = s2
        if step >= config.learning_starts and step % config.update_period == 0:
            new = update(params)
            if new is not None:
                params = new
                updates += 1
                if on_update is not None:
                    on_update(step, params, memory)
        if step % config.target_sync == 0:
            target = sync_target(params)
        if step % config.eval_period == 0 or step == config.total_steps:
            record(step)
    return TrainResult(rows, params, memory, env, updates)
