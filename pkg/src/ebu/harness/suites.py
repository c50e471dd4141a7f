"""Built-in reproduction suites: operator verification and the maze benchmark."""
from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..backward_operator import (
    OperatorConfig,
    contraction_ratio,
    fixed_point,
    random_schedules,
)
from ..environments import random_deterministic_mdp
from ..maze import generate_maze, maze_to_mdp
from ..mdp import greedy_policy, rollout, value_iteration
from ..targets import ebu_targets, one_step_targets
from ..training import Environment, TrainConfig, train
from .config import RunConfig
from .metrics import MetricRow

GAMMAS = (0.5, 0.9, 0.99)
BETAS = (0.0, 0.3, 0.5, 1.0)


@dataclass
class OperatorReport:
    contraction_draws: int = 0
    worst_ratio_excess: float = -np.inf  # max over draws of ratio - gamma
    contraction_failures: int = 0
    fixed_point_mdps: int = 0
    worst_fixed_point_error: float = 0.0  # max over runs of error / allowed
    fixed_point_failures: int = 0
    endpoint_episodes: int = 0
    endpoint_failures: int = 0
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return self.contraction_failures == 0 and self.fixed_point_failures == 0 and self.endpoint_failures == 0

    def lines(self) -> list[str]:
        return [
            f"contraction: {self.contraction_draws} draws, worst ratio - gamma = {self.worst_ratio_excess:.3e}, "
            f"failures = {self.contraction_failures}",
            f"fixed point: {self.fixed_point_mdps} MDPs x 2 schedules, worst error/allowed = "
            f"{self.worst_fixed_point_error:.3e}, failures = {self.fixed_point_failures}",
            f"beta = 0 vs one-step: {self.endpoint_episodes} episodes, failures = {self.endpoint_failures}",
            f"{'PASS' if self.passed else 'FAIL'} in {self.seconds:.1f}s",
        ]


def contraction_draw(rng: np.random.Generator, max_len: int = 5) -> tuple[float, float]:
    """One random MDP / schedule / Q pair; returns ``(ratio, gamma)``."""
    gamma = float(rng.choice(GAMMAS))
    beta = float(rng.choice(BETAS))
    mdp = random_deterministic_mdp(rng, gamma=gamma)
    sched = random_schedules(mdp, max_len, rng)
    cfg = OperatorConfig(beta, gamma)
    shape = (mdp.num_states, mdp.num_actions)
    scale = rng.uniform(0.1, 10.0)
    q1 = rng.normal(size=shape) * scale
    q2 = q1 + rng.normal(size=shape) * rng.uniform(0.01, 1.0) * scale
    return contraction_ratio(mdp, q1, q2, sched, cfg), gamma


def fixed_point_check(rng: np.random.Generator, max_len: int = 5, tol: float = 1e-7, eps_trunc: float = 1e-9):
    """Fixed points under two random schedules against value iteration.

    Returns the larger ``error / allowed`` of the two, where ``allowed`` is
    ``tol + eps_trunc / (1 - gamma)``.
    """
    gamma = float(rng.choice(GAMMAS[:2]))
    beta = float(rng.choice(BETAS))
    mdp = random_deterministic_mdp(rng, gamma=gamma)
    cfg = OperatorConfig(beta, gamma, eps_trunc)
    q_star = value_iteration(mdp, tol=1e-12)
    allowed = tol + eps_trunc / (1 - gamma)
    worst = 0.0
    for _ in range(2):
        sched = random_schedules(mdp, max_len, rng)
        q = fixed_point(mdp, sched, cfg, tol=tol)
        worst = max(worst, float(np.abs(q - q_star).max()) / allowed)
    return worst


def verify_operator(seed: int = 0, contraction_draws: int = 200, fixed_point_mdps: int = 50,
                    endpoint_episodes: int = 100) -> OperatorReport:
    rng = np.random.default_rng(seed)
    report = OperatorReport()
    t0 = time.perf_counter()
    for _ in range(contraction_draws):
        ratio, gamma = contraction_draw(rng)
        report.contraction_draws += 1
        report.worst_ratio_excess = max(report.worst_ratio_excess, ratio - gamma)
        if ratio > gamma + 1e-9:
            report.contraction_failures += 1
    for _ in range(fixed_point_mdps):
        err = fixed_point_check(rng)
        report.fixed_point_mdps += 1
        report.worst_fixed_point_error = max(report.worst_fixed_point_error, err)
        if err > 1.0:
            report.fixed_point_failures += 1
    for _ in range(endpoint_episodes):
        mdp = random_deterministic_mdp(rng)
        q = rng.normal(size=(mdp.num_states, mdp.num_actions))
        ep = rollout(mdp, greedy_policy(q, 1.0), rng, max_steps=int(rng.integers(1, 20)))
        report.endpoint_episodes += 1
        y = ebu_targets(ep, q, 0.0, mdp.gamma).y
        if not np.array_equal(y, one_step_targets(ep, q, mdp.gamma)):
            report.endpoint_failures += 1
    report.seconds = time.perf_counter() - t0
    return report


# ---------------------------------------------------------------- maze bench

def bench_train_config(**overrides) -> TrainConfig:
    """Desk-scale maze defaults.

    Per-step constants follow the published maze setup (update every 50
    steps, target sync every 2000, memory 30000, minibatch 350, gamma 0.9,
    beta 1). Exploration anneals quadratically over twice the run, so the
    final checkpoint sits halfway through the anneal, where the published
    comparison table was taken. Evaluation follows the greedy policy, so a
    converged agent scores a relative length of exactly 1.
    """
    base = dict(
        env="maze", maze_width=10, maze_height=10, observation="index", approximator="tabular",
        learner="ebu", beta=1.0, gamma=0.9, lr=0.2, batch_size=350, update_period=50, target_sync=2000,
        replay_capacity=30_000, total_steps=50_000, eps_shape="quadratic", eps_horizon=100_000,
        eval_period=10_000, eval_episodes=1, eval_epsilon=0.0,
    )
    base.update(overrides)
    return TrainConfig(**base)


def bench_run_config(**train_overrides) -> RunConfig:
    return RunConfig(train=bench_train_config(**train_overrides), name="maze", seeds=[0, 1, 2],
                     densities=[0.2, 0.3, 0.4, 0.5], mazes=10, learners=["ebu", "one-step", "n-step"])


def maze_seed(density: float, index: int) -> int:
    return 10_000 * int(round(density * 100)) + index


@dataclass
class BenchResult:
    rows: list[MetricRow] = field(default_factory=list)
    # (density, learner) -> final relative lengths, one per (maze, seed)
    finals: dict[tuple[float, str], list[float]] = field(default_factory=dict)
    # (density, learner) -> step -> relative lengths at that checkpoint
    curves: dict[tuple[float, str], dict[int, list[float]]] = field(default_factory=dict)
    seconds: float = 0.0

    def median(self, density: float, learner: str) -> float:
        return float(np.median(self.finals[(density, learner)]))

    def mean(self, density: float, learner: str) -> float:
        return float(np.mean(self.finals[(density, learner)]))

    def summary_lines(self) -> list[str]:
        out = ["density,learner,median_rel_length,mean_rel_length,runs"]
        for (d, learner), vals in sorted(self.finals.items()):
            out.append(f"{d},{learner},{np.median(vals):.4f},{np.mean(vals):.4f},{len(vals)}")
        return out

    def curve_lines(self) -> list[str]:
        """Median relative length at every checkpoint, one line per (density, learner)."""
        out = []
        for (d, learner), by_step in sorted(self.curves.items()):
            trace = " ".join(f"{step}:{np.median(v):.3f}" for step, v in sorted(by_step.items()))
            out.append(f"{d},{learner} {trace}")
        return out


def run_maze_bench(cfg: RunConfig, progress: Callable[[str], None] | None = None) -> BenchResult:
    """Train every learner on ``cfg.mazes`` mazes per density, ``len(cfg.seeds)`` seeds per maze."""
    cfg.validate()
    result = BenchResult()
    t0 = time.perf_counter()
    for d in cfg.densities:
        mazes = []
        for m in range(cfg.mazes):
            maze = generate_maze(cfg.train.maze_width, cfg.train.maze_height, d, np.random.default_rng(maze_seed(d, m)))
            mazes.append(Environment(maze_to_mdp(maze, cfg.train.gamma), cfg.train.observation, maze))
        for learner in cfg.learners:
            finals = result.finals.setdefault((d, learner), [])
            curve = result.curves.setdefault((d, learner), {})
            for m, env in enumerate(mazes):
                for seed in cfg.seeds:
                    tc = dataclasses.replace(cfg.train, learner=learner, wall_density=d, seed=seed)
                    res = train(tc, env=env)
                    rid = f"{cfg.name}-d{d:.2f}-m{m}-{learner}-s{seed}"
                    for row in res.rows:
                        row.run = rid
                    result.rows.extend(res.rows)
                    for row in res.rows:
                        curve.setdefault(row.step, []).append(row.rel_length)
                    finals.append(res.rows[-1].rel_length)
            if progress is not None:
                progress(f"density {d:.2f} {learner}: median rel length {np.median(finals):.3f}")
    result.seconds = time.perf_counter() - t0
    return result


def directional_checks(result: BenchResult) -> list[tuple[str, bool]]:
    """The EBU-versus-baseline orderings the benchmark is meant to show."""
    checks = []
    for d in sorted({d for d, _ in result.finals}):
        if d < 0.3 - 1e-9:
            continue
        if (d, "ebu") in result.finals and (d, "one-step") in result.finals:
            e, u = result.median(d, "ebu"), result.median(d, "one-step")
            checks.append((f"density {d:.2f}: EBU median {e:.3f} <= one-step median {u:.3f}", e <= u))
        if abs(d - 0.5) < 1e-9 and (d, "n-step") in result.finals:
            e, n = result.median(d, "ebu"), result.median(d, "n-step")
            checks.append((f"density {d:.2f}: EBU median {e:.3f} <= n-step median {n:.3f}", e <= n))
    return checks


@dataclass
class OverestimationResult:
    compared: int
    beta1_higher: int
    checkpoints: int

    @property
    def fraction(self) -> float:
        return self.beta1_higher / self.compared if self.compared else float("nan")


def overestimation_check(train_cfg: TrainConfig, densities, mazes: int, seeds, rel_tol: float = 0.05) -> OverestimationResult:
    """Mean-Q diagnostic of beta = 1 against beta = 0.5 at matched evaluation scores.

    Runs EBU with both betas on identical mazes and seeds, then compares the
    two runs checkpoint by checkpoint wherever their mean evaluation returns
    agree within ``rel_tol`` (relative).
    """
    compared = higher = checkpoints = 0
    for d in densities:
        for m in range(mazes):
            maze = generate_maze(train_cfg.maze_width, train_cfg.maze_height, d, np.random.default_rng(maze_seed(d, m)))
            env = Environment(maze_to_mdp(maze, train_cfg.gamma), train_cfg.observation, maze)
            for seed in seeds:
                runs = {}
                for beta in (1.0, 0.5):
                    tc = dataclasses.replace(train_cfg, learner="ebu", beta=beta, wall_density=d, seed=seed)
                    runs[beta] = train(tc, env=env).rows
                for r1, r5 in zip(runs[1.0], runs[0.5]):
                    checkpoints += 1
                    scale = max(abs(r1.eval_return), abs(r5.eval_return), 1.0)
                    if abs(r1.eval_return - r5.eval_return) <= rel_tol * scale:
                        compared += 1
                        higher += r1.mean_q > r5.mean_q
    return OverestimationResult(compared, higher, checkpoints)

