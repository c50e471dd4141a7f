import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import chi_square_ok
from ebu.environments import LEFT, RIGHT, make_chain, random_deterministic_mdp
from ebu.errors import ConvergenceError, EpisodeError
from ebu.mdp import (
    Episode,
    TabularMDP,
    Transition,
    bellman_backup,
    epsilon_greedy,
    epsilon_greedy_probs,
    greedy_path,
    greedy_policy,
    rollout,
    value_iteration,
)


def test_chain_q_star():
    q = value_iteration(make_chain(0.9))
    assert abs(q[2, RIGHT] - 1.0) < 1e-10
    assert abs(q[1, RIGHT] - 0.9) < 1e-10
    assert abs(q[0, RIGHT] - 0.81) < 1e-10
    assert np.all(q[3] == 0)


def test_zero_reward_mdp_has_zero_q(rng):
    mdp = random_deterministic_mdp(rng)
    mdp.reward[:] = 0.0
    assert np.all(value_iteration(mdp) == 0)


def test_single_step_to_terminal():
    mdp = TabularMDP([[1], [1]], [[2.5], [0.0]], [False, True], 0.9)
    q = value_iteration(mdp)
    assert q[0, 0] == 2.5


def test_value_iteration_non_convergence_carries_residual():
    with pytest.raises(ConvergenceError) as info:
        value_iteration(make_chain(0.9), tol=1e-12, max_iters=2)
    assert info.value.iterations == 2
    assert info.value.residual > 0


def test_terminal_must_be_absorbing():
    with pytest.raises(ValueError):
        TabularMDP([[1], [0]], [[0.0], [0.0]], [False, True], 0.9)


def test_greedy_rollout_on_chain():
    mdp = make_chain()
    q = value_iteration(mdp)
    ep = rollout(mdp, greedy_policy(q), np.random.default_rng(0))
    assert ep.states.tolist() == [0, 1, 2]
    assert ep.next_states[-1] == 3
    assert len(ep) == 3 and ep.total_reward == 1.0 and ep.terminal
    assert greedy_path(mdp, q) == [0, 1, 2, 3]


def test_rollout_truncates():
    mdp = make_chain()
    right = lambda s: np.array([0.0, 1.0])
    ep = rollout(mdp, right, np.random.default_rng(0), max_steps=2)
    assert len(ep) == 2 and not ep.terminal


def test_rollout_deterministic_given_seed():
    mdp = make_chain()
    pol = greedy_policy(np.zeros((4, 2)), 0.5)
    a = rollout(mdp, pol, np.random.default_rng(7), 50)
    b = rollout(mdp, pol, np.random.default_rng(7), 50)
    assert a == b


def test_epsilon_greedy_argmax_and_ties(rng):
    assert epsilon_greedy([0.1, 0.9], 0.0, rng) == 1
    assert epsilon_greedy([0.5, 0.5], 0.0, rng) == 0


def test_epsilon_one_is_uniform():
    rng = np.random.default_rng(3)
    draws = [epsilon_greedy([0.0, 1.0, 2.0, 3.0], 1.0, rng) for _ in range(100_000)]
    counts = np.bincount(draws, minlength=4)
    sigma = np.sqrt(100_000 * 0.25 * 0.75)
    assert np.all(np.abs(counts - 25_000) < 3 * sigma)
    assert chi_square_ok(counts, [0.25] * 4)


def test_epsilon_greedy_probs_sum():
    p = epsilon_greedy_probs([1.0, 3.0, 2.0], 0.3)
    assert np.isclose(p.sum(), 1.0)
    assert np.isclose(p[1], 0.7 + 0.1)


def test_episode_chain_violation():
    with pytest.raises(EpisodeError):
        Episode([0, 2], [1, 1], [0, 0], [1, 3], [False, True])
    with pytest.raises(EpisodeError):
        Episode([0, 1], [1, 1], [0, 0], [1, 2], [True, False])
    with pytest.raises(EpisodeError):
        Episode([], [], [], [], [])


def test_episode_from_transitions_roundtrip():
    ts = [Transition(0, 1, 0.0, 1), Transition(1, 1, 1.0, 2, True)]
    ep = Episode.from_transitions(ts)
    assert ep.transitions == ts


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_value_iteration_is_fixed_point(seed):
    mdp = random_deterministic_mdp(np.random.default_rng(seed))
    q = value_iteration(mdp, tol=1e-10)
    assert np.abs(bellman_backup(mdp, q) - q).max() <= 1e-10


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 1.0))
def test_rollouts_are_chained(seed, eps):
    rng = np.random.default_rng(seed)
    mdp = random_deterministic_mdp(rng)
    q = rng.normal(size=(mdp.num_states, mdp.num_actions))
    ep = rollout(mdp, greedy_policy(q, eps), rng, 30)
    ep._validate()
    assert np.all(ep.next_states == mdp.successor[ep.states, ep.actions])
