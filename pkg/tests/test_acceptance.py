"""Acceptance checks, one test per criterion.

Each test prints a ``criterion N PASS/FAIL`` line; the same lines are
repeated in the pytest terminal summary. Run just this file with
``pytest tests/test_acceptance.py -v``; add ``-m "not slow"`` to skip the
maze benchmark and the overestimation check.
"""
import time

import numpy as np
import pytest

from conftest import record_criterion
from ebu.approximator import finite_diff_check, init_params
from ebu.backward_operator import OperatorConfig, contraction_ratio, fixed_point, random_schedules
from ebu.environments import CONTINUE, EXIT, branching_episode, fig1_episode, make_branching, random_deterministic_mdp
from ebu.harness.fig1 import fig1_probability_curve
from ebu.harness.suites import (
    BETAS,
    GAMMAS,
    bench_run_config,
    bench_train_config,
    directional_checks,
    overestimation_check,
    run_maze_bench,
)
from ebu.mdp import greedy_policy, rollout, value_iteration
from ebu.targets import ebu_targets, one_step_targets, tabular_ebu_update, watkins_q_lambda_update


def test_criterion_1_fig1_curve():
    t0 = time.perf_counter()
    curve = fig1_probability_curve(40, 10_000, np.random.default_rng(0))
    secs = time.perf_counter() - t0
    ebu_ok = curve.ebu[5] == 1.0
    uniform_ok = curve.uniform[40] < 0.5 + 0.02
    passed = ebu_ok and uniform_ok and secs < 5.0
    detail = f"EBU P(5)={curve.ebu[5]:.4f}, uniform P(40)={curve.uniform[40]:.4f} (needs < 0.5 +- 0.02), {secs:.2f}s"
    assert record_criterion(1, "Fig. 1 probability curve", passed, detail), detail


def test_criterion_2_target_vectors():
    t0 = time.perf_counter()
    ep, q = fig1_episode(), np.zeros((4, 2))
    expected = {
        0.0: [0.0, 0.0, 0.0, 0.0, 1.0],
        0.5: [0.04100625, 0.091125, 0.2025, 0.45, 1.0],
        1.0: [0.6561, 0.729, 0.81, 0.9, 1.0],
    }
    worst = max(float(np.abs(ebu_targets(ep, q, b, 0.9).y - v).max()) for b, v in expected.items())
    secs = time.perf_counter() - t0
    passed = worst <= 1e-12 and secs < 1.0
    detail = f"max deviation {worst:.1e} over beta in 0, 0.5, 1, {secs:.3f}s"
    assert record_criterion(2, "exact backward targets", passed, detail), detail


def test_criterion_3_contraction():
    rng = np.random.default_rng(3)
    t0 = time.perf_counter()
    worst, failures = -np.inf, 0
    for _ in range(200):
        gamma, beta = float(rng.choice(GAMMAS)), float(rng.choice(BETAS))
        mdp = random_deterministic_mdp(rng, gamma=gamma)
        assert mdp.num_states <= 6 and mdp.num_actions <= 3
        sched = random_schedules(mdp, 5, rng)
        q1 = rng.normal(size=(mdp.num_states, mdp.num_actions)) * rng.uniform(0.1, 10)
        q2 = q1 + rng.normal(size=q1.shape) * rng.uniform(0.01, 2)
        ratio = contraction_ratio(mdp, q1, q2, sched, OperatorConfig(beta, gamma))
        worst = max(worst, ratio - gamma)
        failures += ratio > gamma + 1e-9
    secs = time.perf_counter() - t0
    passed = failures == 0 and secs < 30.0
    detail = f"200 draws, {failures} failures, worst ratio - gamma {worst:.2e}, {secs:.1f}s"
    assert record_criterion(3, "operator contraction", passed, detail), detail


def test_criterion_4_fixed_point():
    rng = np.random.default_rng(4)
    tol, eps_trunc = 1e-7, 1e-9
    t0 = time.perf_counter()
    worst, failures = 0.0, 0
    for _ in range(50):
        gamma, beta = float(rng.choice((0.5, 0.9))), float(rng.choice(BETAS))
        mdp = random_deterministic_mdp(rng, gamma=gamma)
        q_star = value_iteration(mdp, tol=1e-12)
        allowed = tol + eps_trunc / (1 - gamma)
        fixed = []
        for _ in range(2):
            q = fixed_point(mdp, random_schedules(mdp, 5, rng), OperatorConfig(beta, gamma, eps_trunc), tol=tol)
            err = float(np.abs(q - q_star).max())
            worst = max(worst, err / allowed)
            failures += err > allowed
            fixed.append(q)
        failures += float(np.abs(fixed[0] - fixed[1]).max()) > 2 * allowed
    secs = time.perf_counter() - t0
    passed = failures == 0 and secs < 60.0
    detail = f"50 MDPs x 2 schedules, {failures} failures, worst error/allowed {worst:.3f}, {secs:.1f}s"
    assert record_criterion(4, "fixed point and schedule independence", passed, detail), detail


def test_criterion_5_endpoints():
    rng = np.random.default_rng(5)
    zero_fail = one_fail = 0
    for _ in range(100):
        mdp = random_deterministic_mdp(rng)
        q = rng.normal(size=(mdp.num_states, mdp.num_actions))
        ep = rollout(mdp, greedy_policy(q, 0.5), rng, int(rng.integers(1, 20)))
        zero_fail += not np.array_equal(ebu_targets(ep, q, 0.0, mdp.gamma).y, one_step_targets(ep, q, mdp.gamma))
    for _ in range(100):
        mdp = random_deterministic_mdp(rng, acyclic=True)
        q = rng.normal(size=(mdp.num_states, mdp.num_actions))
        q[mdp.terminal] = 0.0
        ep = rollout(mdp, greedy_policy(q, 0.5), rng, 50)
        assert ep.terminal and len(set(ep.states.tolist())) == len(ep)
        table = tabular_ebu_update(q, ep, mdp.gamma)
        one_fail += not np.array_equal(ebu_targets(ep, q, 1.0, mdp.gamma).y, table[ep.states, ep.actions])
    passed = zero_fail == 0 and one_fail == 0
    detail = f"beta=0 vs one-step: {zero_fail}/100 mismatches, beta=1 vs tabular sweep: {one_fail}/100 mismatches"
    assert record_criterion(5, "endpoint equivalences", passed, detail), detail


def test_criterion_6_branching_counterexample():
    mdp = make_branching(2)
    gamma = mdp.gamma
    # adversarial first update: the distractor exit at s1 is learned first
    q0 = tabular_ebu_update(mdp.zeros(), branching_episode(2, exit_at=0), gamma)
    rewarded = branching_episode(2)
    q_ebu = tabular_ebu_update(q0, rewarded, gamma)
    y = ebu_targets(rewarded, q0, 1.0, gamma).y
    q_watkins = watkins_q_lambda_update(q0, rewarded, 1.0, gamma)
    ebu_ok = int(np.argmax(q_ebu[0])) == CONTINUE and y[0] > q0[0, EXIT]
    watkins_ok = q_watkins[0, CONTINUE] == 0.0 and q_watkins[1, CONTINUE] == 1.0
    passed = bool(ebu_ok and watkins_ok)
    detail = (f"EBU Q(s1,continue)={q_ebu[0, CONTINUE]:.2f} vs Q(s1,exit)={q_ebu[0, EXIT]:.2f}; "
              f"Watkins Q(s1,continue)={q_watkins[0, CONTINUE]:.2f}")
    assert record_criterion(6, "branching counterexample", passed, detail), detail


@pytest.mark.slow
def test_criterion_7_maze_benchmark():
    result = run_maze_bench(bench_run_config())
    checks = directional_checks(result)
    passed = all(ok for _, ok in checks) and result.seconds < 900
    parts = [f"{'ok' if ok else 'NOT MET'} {text}" for text, ok in checks]
    detail = "; ".join(parts) + f"; {result.seconds:.0f}s"
    for line in result.summary_lines() + result.curve_lines():
        print(line)
    early = min(result.curves[(0.5, "ebu")])
    detail += (f"; at step {early}: EBU median {np.median(result.curves[(0.5, 'ebu')][early]):.2f} vs one-step "
               f"{np.median(result.curves[(0.5, 'one-step')][early]):.2f} at density 0.5")
    assert record_criterion(7, "maze benchmark orderings", passed, detail), detail


def test_criterion_8_gradient_checks():
    rng = np.random.default_rng(8)
    t0 = time.perf_counter()
    worst = {"dense": 0.0, "linear": 0.0}
    for _ in range(50):
        n_in, n_out = int(rng.integers(1, 8)), int(rng.integers(1, 5))
        hidden = tuple(int(h) for h in rng.integers(1, 12, size=rng.integers(1, 3)))
        for kind, shape in (("dense", (n_in, *hidden, n_out)), ("linear", (n_in, n_out))):
            p = init_params(kind, shape, rng)
            p.theta[:] += rng.normal(scale=0.2, size=p.theta.shape)
            err = finite_diff_check(p, rng.normal(size=n_in), int(rng.integers(n_out)), h=1e-5)
            worst[kind] = max(worst[kind], err)
    secs = time.perf_counter() - t0
    passed = max(worst.values()) < 1e-4 and secs < 10.0
    detail = f"worst relative error dense {worst['dense']:.1e}, linear {worst['linear']:.1e}, {secs:.2f}s"
    assert record_criterion(8, "gradient checks", passed, detail), detail


@pytest.mark.slow
def test_criterion_9_overestimation():
    cfg = bench_train_config(eval_epsilon=0.05, eval_episodes=20)
    res = overestimation_check(cfg, [0.3, 0.4, 0.5], mazes=5, seeds=[0])
    passed = res.compared > 0 and res.fraction > 0.5
    detail = (f"beta=1 mean Q above beta=0.5 at {res.beta1_higher}/{res.compared} score-matched checkpoints "
              f"({res.checkpoints} total)")
    assert record_criterion(9, "overestimation trend (majority of checkpoints)", passed, detail), detail
