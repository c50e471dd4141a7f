"""Probability of recovering the optimal chain policy after k updates.

A single stored episode (the looping chain trajectory) is replayed in two
ways. Uniform sampling draws k transitions independently and uniformly with
replacement from its 5 transitions and applies each as a one-step
Q-learning update with learning rate 1. The backward update applies the
transitions in reverse order, restarting at the last one after each pass.
Both start from an all-zero table; the policy counts as optimal when
``Q(s, right) > Q(s, left)`` strictly at every non-terminal state.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..environments import LEFT, RIGHT, fig1_episode, make_chain


@dataclass
class Fig1Curve:
    updates: np.ndarray  # k = 0 .. num_updates_max
    uniform: np.ndarray
    ebu: np.ndarray
    trials: int

    @property
    def uniform_stderr(self) -> np.ndarray:
        p = self.uniform
        return np.sqrt(p * (1 - p) / self.trials)

    def rows(self):
        for k, u, e in zip(self.updates.tolist(), self.uniform.tolist(), self.ebu.tolist()):
            yield k, u, e


def _optimal(q: np.ndarray, nonterminal: np.ndarray) -> np.ndarray:
    """Row-wise check on a stack of tables ``(..., S, A)``."""
    return np.all(q[..., nonterminal, RIGHT] > q[..., nonterminal, LEFT], axis=-1)


def fig1_probability_curve(num_updates_max: int = 40, trials: int = 10_000, rng=None, gamma: float = 0.9) -> Fig1Curve:
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if num_updates_max < 0:
        raise ValueError("num_updates_max must be non-negative")
    rng = rng if rng is not None else np.random.default_rng()
    mdp = make_chain(gamma)
    ep = fig1_episode()
    nonterminal = np.flatnonzero(~mdp.terminal)
    T = len(ep)
    K = num_updates_max

    q = np.zeros((trials, mdp.num_states, mdp.num_actions))
    rows = np.arange(trials)
    uniform = np.empty(K + 1)
    uniform[0] = _optimal(q, nonterminal).mean()
    draws = rng.integers(T, size=(K, trials))
    for k in range(K):
        i = draws[k]
        s, a, r = ep.states[i], ep.actions[i], ep.rewards[i]
        boot = np.where(ep.terminals[i], 0.0, q[rows, ep.next_states[i]].max(axis=1))
        q[rows, s, a] = r + gamma * boot
        uniform[k + 1] = _optimal(q, nonterminal).mean()

    qb = np.zeros((mdp.num_states, mdp.num_actions))
    ebu = np.empty(K + 1)
    ebu[0] = float(_optimal(qb, nonterminal))
    for k in range(K):
        t = T - 1 - (k % T)
        boot = 0.0 if ep.terminals[t] else qb[ep.next_states[t]].max()
        qb[ep.states[t], ep.actions[t]] = ep.rewards[t] + gamma * boot
        ebu[k + 1] = float(_optimal(qb, nonterminal))
    return Fig1Curve(np.arange(K + 1), uniform, ebu, trials)
