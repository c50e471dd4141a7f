"""Toy domains: the four-state chain, the branching domain and random deterministic MDPs."""
from __future__ import annotations

import numpy as np

from .mdp import Episode, TabularMDP

LEFT, RIGHT = 0, 1
EXIT, CONTINUE = 0, 1


def make_chain(gamma: float = 0.9) -> TabularMDP:
    """Four states s1..s4 (indices 0..3) on a line, actions left/right.

    s4 is terminal and the only reward is 1 for taking ``right`` in s3.
    ``left`` in s1 is a zero-reward self-loop.
    """
    successor = np.array([[0, 1], [0, 2], [1, 3], [3, 3]])
    reward = np.zeros((4, 2))
    reward[2, RIGHT] = 1.0
    return TabularMDP(successor, reward, np.array([False, False, False, True]), gamma, name="chain")


def fig1_episode() -> Episode:
    """The stored episode s1 -> s2 -> s3 -> s2 -> s3 -> s4 of the chain domain."""
    return Episode(
        states=[0, 1, 2, 1, 2],
        actions=[RIGHT, RIGHT, LEFT, RIGHT, RIGHT],
        rewards=[0, 0, 0, 0, 1],
        next_states=[1, 2, 1, 2, 3],
        terminals=[False, False, False, False, True],
    )


def make_branching(n: int = 2, distractor_reward: float = 0.1, gamma: float = 1.0) -> TabularMDP:
    """Chain s1..s_n with a terminal side exit s_i' at every s_i.

    Non-terminal states are 0..n-1, terminal s_i' is ``n + i - 1`` for
    i = 1..n+1. ``EXIT`` in s_i leads to s_i' with ``distractor_reward``;
    ``CONTINUE`` leads to s_{i+1}, and from s_n to s_{n+1}', the only
    transition worth 1. With ``n = 2`` there are three possible episodes.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not distractor_reward < 1.0:
        raise ValueError("distractor reward must be below the goal reward of 1")
    S = 2 * n + 1
    successor = np.tile(np.arange(S)[:, None], (1, 2))
    reward = np.zeros((S, 2))
    for i in range(n):
        successor[i, EXIT] = n + i
        reward[i, EXIT] = distractor_reward
        successor[i, CONTINUE] = i + 1 if i + 1 < n else 2 * n
    reward[n - 1, CONTINUE] = 1.0
    terminal = np.arange(S) >= n
    return TabularMDP(successor, reward, terminal, gamma, name=f"branching{n}")


def branching_episode(n: int, exit_at: int | None = None, distractor_reward: float = 0.1) -> Episode:
    """Episode of :func:`make_branching` that exits at state index ``exit_at``.

    ``exit_at=None`` follows the rewarded path to the deepest terminal.
    """
    rows = []
    for i in range(n):
        if exit_at == i:
            rows.append((i, EXIT, distractor_reward, n + i, True))
            break
        last = i == n - 1
        rows.append((i, CONTINUE, 1.0 if last else 0.0, 2 * n if last else i + 1, last))
    return Episode(*zip(*rows))


def random_deterministic_mdp(
    rng: np.random.Generator,
    num_states: int | None = None,
    num_actions: int | None = None,
    gamma: float = 0.9,
    acyclic: bool = False,
    terminal_fraction: float = 0.25,
) -> TabularMDP:
    """Random deterministic MDP with at least one terminal state.

    Rewards are uniform on [-1, 1]. With ``acyclic=True`` every action moves
    to a strictly higher-numbered state, so all paths terminate.
    """
    S = int(num_states or rng.integers(2, 7))
    A = int(num_actions or rng.integers(2, 4))
    n_term = max(1, int(round(terminal_fraction * S)))
    terminal = np.zeros(S, dtype=bool)
    terminal[S - n_term:] = True
    successor = np.tile(np.arange(S)[:, None], (1, A))
    reward = np.zeros((S, A))
    for s in range(S - n_term):
        if acyclic:
            successor[s] = rng.integers(s + 1, S, size=A)
        else:
            successor[s] = rng.integers(0, S, size=A)
        reward[s] = rng.uniform(-1.0, 1.0, size=A)
    return TabularMDP(successor, reward, terminal, gamma, start=0, name="random")
