"""Finite deterministic MDPs, episodes, policies and the value-iteration oracle.

States and actions are plain integer indices. A Q-table is a dense
``(num_states, num_actions)`` float array; terminal states are absorbing with
zero reward, so their rows of ``Q*`` are identically zero.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ConvergenceError, EpisodeError


@dataclass(frozen=True)
class Transition:
    s: int
    a: int
    r: float
    s_next: int
    terminal: bool = False
    # probability the behaviour policy gave to ``a``; only Retrace reads it
    mu: float = 1.0


class Episode:
    """A contiguous run of transitions, stored column-wise.

    Only the last transition may be terminal. An episode whose last transition
    is not terminal was truncated (time limit or still in progress).
    """

    __slots__ = ("states", "actions", "rewards", "next_states", "terminals", "mus")

    def __init__(self, states, actions, rewards, next_states, terminals, mus=None, *, validate=True):
        self.states = np.asarray(states, dtype=np.int64)
        self.actions = np.asarray(actions, dtype=np.int64)
        self.rewards = np.asarray(rewards, dtype=np.float64)
        self.next_states = np.asarray(next_states, dtype=np.int64)
        self.terminals = np.asarray(terminals, dtype=bool)
        if mus is None:
            mus = np.ones(len(self.states))
        self.mus = np.asarray(mus, dtype=np.float64)
        if validate:
            self._validate()

    @classmethod
    def from_transitions(cls, transitions: Iterable[Transition]) -> "Episode":
        ts = list(transitions)
        return cls(
            [t.s for t in ts],
            [t.a for t in ts],
            [t.r for t in ts],
            [t.s_next for t in ts],
            [t.terminal for t in ts],
            [t.mu for t in ts],
        )

    def _validate(self):
        n = len(self.states)
        if n == 0:
            raise EpisodeError("an episode needs at least one transition")
        for arr in (self.actions, self.rewards, self.next_states, self.terminals, self.mus):
            if arr.shape != (n,):
                raise EpisodeError("episode columns have inconsistent lengths")
        if not np.all(np.isfinite(self.rewards)):
            raise EpisodeError("rewards must be finite")
        if np.any(self.states[1:] != self.next_states[:-1]):
            k = int(np.flatnonzero(self.states[1:] != self.next_states[:-1])[0])
            raise EpisodeError(f"chain broken between steps {k} and {k + 1}")
        if np.any(self.terminals[:-1]):
            raise EpisodeError("only the last transition may be terminal")

    def __len__(self):
        return len(self.states)

    def __getitem__(self, t) -> Transition:
        return Transition(
            int(self.states[t]), int(self.actions[t]), float(self.rewards[t]),
            int(self.next_states[t]), bool(self.terminals[t]), float(self.mus[t]),
        )

    def __iter__(self):
        return (self[t] for t in range(len(self)))

    @property
    def transitions(self) -> list[Transition]:
        return list(self)

    @property
    def terminal(self) -> bool:
        return bool(self.terminals[-1])

    @property
    def total_reward(self) -> float:
        return float(self.rewards.sum())

    def __eq__(self, other):
        if not isinstance(other, Episode):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, name), getattr(other, name)) for name in self.__slots__
        )

    def __repr__(self):
        return f"Episode(T={len(self)}, terminal={self.terminal}, return={self.total_reward:g})"


@dataclass
class TabularMDP:
    """Deterministic finite MDP given by a successor table and a reward table.

    ``successor[s, a]`` is the next state and ``reward[s, a]`` the reward for
    taking ``a`` in ``s``. Terminal states must be absorbing with zero reward.
    ``gamma`` may equal 1 only for domains where every policy terminates.
    """

    successor: np.ndarray
    reward: np.ndarray
    terminal: np.ndarray
    gamma: float = 0.9
    start: int = 0
    name: str = field(default="mdp", compare=False)

    def __post_init__(self):
        self.successor = np.asarray(self.successor, dtype=np.int64)
        self.reward = np.asarray(self.reward, dtype=np.float64)
        term = np.asarray(self.terminal)
        if term.dtype != bool:
            mask = np.zeros(self.successor.shape[0], dtype=bool)
            mask[term.astype(np.int64)] = True
            term = mask
        self.terminal = term
        S, A = self.successor.shape
        if S < 1 or A < 1:
            raise ValueError("need at least one state and one action")
        if self.reward.shape != (S, A) or self.terminal.shape != (S,):
            raise ValueError("reward/terminal shapes do not match successor table")
        if self.successor.min() < 0 or self.successor.max() >= S:
            raise ValueError("successor table refers to unknown states")
        if not np.all(np.isfinite(self.reward)):
            raise ValueError("rewards must be finite")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if not 0 <= self.start < S:
            raise ValueError("start state out of range")
        rows = np.flatnonzero(self.terminal)
        if np.any(self.successor[rows] != rows[:, None]) or np.any(self.reward[rows] != 0.0):
            raise ValueError("terminal states must be absorbing with zero reward")

    @property
    def num_states(self) -> int:
        return self.successor.shape[0]

    @property
    def num_actions(self) -> int:
        return self.successor.shape[1]

    @property
    def r_max(self) -> float:
        return float(np.abs(self.reward).max())

    def is_terminal(self, s: int) -> bool:
        return bool(self.terminal[s])

    def step(self, s: int, a: int) -> tuple[int, float, bool]:
        s2 = int(self.successor[s, a])
        return s2, float(self.reward[s, a]), bool(self.terminal[s2])

    def zeros(self) -> np.ndarray:
        return np.zeros((self.num_states, self.num_actions))


def bellman_backup(mdp: TabularMDP, q: np.ndarray) -> np.ndarray:
    """One optimality backup ``r(s,a) + gamma * max_a' Q(g(s,a), a')``; terminal rows 0."""
    out = mdp.reward + mdp.gamma * q.max(axis=1)[mdp.successor]
    out[mdp.terminal] = 0.0
    return out


def value_iteration(mdp: TabularMDP, tol: float = 1e-10, max_iters: int = 10**6) -> np.ndarray:
    """Iterate the Bellman backup from zero until the sup-norm change is at most ``tol``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    q = mdp.zeros()
    residual = np.inf
    for it in range(1, max_iters + 1):
        q_new = bellman_backup(mdp, q)
        residual = float(np.abs(q_new - q).max())
        q = q_new
        if residual <= tol:
            # one more backup moves q by at most gamma * residual <= tol
            return q
    raise ConvergenceError("value iteration did not converge", residual, max_iters)


def epsilon_greedy(q_row: Sequence[float], epsilon: float, rng: np.random.Generator) -> int:
    """Uniform action with probability ``epsilon``, else argmax (lowest index wins ties)."""
    q_row = np.asarray(q_row)
    if rng.random() < epsilon:
        return int(rng.integers(len(q_row)))
    return int(np.argmax(q_row))


def epsilon_greedy_probs(q_row: Sequence[float], epsilon: float) -> np.ndarray:
    """Action distribution of :func:`epsilon_greedy` for one row of Q-values."""
    q_row = np.asarray(q_row)
    n = len(q_row)
    probs = np.full(n, epsilon / n)
    probs[int(np.argmax(q_row))] += 1.0 - epsilon
    return probs


Policy = Callable[[int], np.ndarray]


def greedy_policy(q: np.ndarray, epsilon: float = 0.0) -> Policy:
    """Wrap a Q-table as a state -> action-distribution function."""
    return lambda s: epsilon_greedy_probs(q[s], epsilon)


def rollout(mdp: TabularMDP, policy: Policy, rng: np.random.Generator, max_steps: int = 1000) -> Episode:
    """Run ``policy`` from the start state until termination or ``max_steps``."""
    if max_steps < 1:
        raise ValueError("max_steps must be at least 1")
    s = mdp.start
    if mdp.is_terminal(s):
        raise ValueError("start state is terminal")
    rows = []
    for _ in range(max_steps):
        probs = np.asarray(policy(s), dtype=np.float64)
        a = int(rng.choice(len(probs), p=probs))
        s2, r, done = mdp.step(s, a)
        rows.append((s, a, r, s2, done, probs[a]))
        s = s2
        if done:
            break
    return Episode(*zip(*rows))


def greedy_path(mdp: TabularMDP, q: np.ndarray, max_steps: int = 1000) -> list[int]:
    """States visited by the deterministic greedy policy from the start state."""
    s = mdp.start
    path = [s]
    for _ in range(max_steps):
        if mdp.is_terminal(s):
            break
        s = int(mdp.successor[s, int(np.argmax(q[s]))])
        path.append(s)
    return path
