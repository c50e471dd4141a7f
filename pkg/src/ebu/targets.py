"""Target generation: episodic backward update and the multi-step baselines.

``target_q`` arguments accept either a Q-table indexed by state, or a callable
mapping an integer array of states to an ``(n, num_actions)`` array of values.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence, Union

import numpy as np

from .errors import EpisodeError
from .mdp import Episode, Transition

TargetQ = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]


def _values(target_q: TargetQ, states) -> np.ndarray:
    states = np.asarray(states, dtype=np.int64)
    if callable(target_q):
        return np.asarray(target_q(states), dtype=np.float64)
    return np.asarray(target_q, dtype=np.float64)[states]


class BackwardTargets(NamedTuple):
    y: np.ndarray
    q_tilde: np.ndarray  # (num_actions, T); column k holds values of next_states[k]


def tabular_ebu_update(q: np.ndarray, episode: Episode, gamma: float) -> np.ndarray:
    """Sweep a terminated episode from its last step to its first with learning rate 1.

    Each step overwrites ``Q(s_t, a_t) = r_t + gamma * max_a Q(s_{t+1}, a)``
    in a copy of ``q``; the terminal successor contributes 0. Earlier steps
    see the writes already made for later steps.
    """
    if not episode.terminal:
        raise EpisodeError("the tabular backward sweep needs a terminated episode")
    return tabular_backward_sweep(q, episode, gamma, 1.0)


def tabular_backward_sweep(q: np.ndarray, episode: Episode, gamma: float, alpha: float = 1.0) -> np.ndarray:
    """Backward in-place sweep with step size ``alpha``; accepts truncated episodes.

    A truncated episode's last step bootstraps from the table as it stands.
    """
    q = np.array(q, dtype=np.float64, copy=True)
    for t in range(len(episode) - 1, -1, -1):
        s, a = episode.states[t], episode.actions[t]
        y = episode.rewards[t]
        if not episode.terminals[t]:
            y += gamma * q[episode.next_states[t]].max()
        if alpha == 1.0:
            q[s, a] = y  # exact overwrite; q + (y - q) can be off by an ulp
        else:
            q[s, a] += alpha * (y - q[s, a])
    return q


def ebu_targets(episode: Episode, target_q: TargetQ, beta: float, gamma: float) -> BackwardTargets:
    """Backward target vector with diffusion coefficient ``beta``.

    The temporary table starts as the target network's values of every
    successor state. Walking backwards, the entry for the action actually
    taken next is blended towards the freshly computed target, and each
    target is the reward plus the discounted max of its (blended) column.
    A truncated episode bootstraps its last target from the target network.
    """
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must lie in [0, 1]")
    T = len(episode)
    q_tilde = _values(target_q, episode.next_states).T.copy()
    nA = q_tilde.shape[0]
    cols = np.arange(T - 1)
    a_next = episode.actions[1:]
    # the recursion only rewrites one entry per column, so the max over the
    # untouched entries can be taken up front
    old = q_tilde[a_next, cols]
    if nA > 1:
        masked = q_tilde[:, : T - 1].copy()
        masked[a_next, cols] = -np.inf
        others = masked.max(axis=0).tolist()
    else:
        others = [-np.inf] * (T - 1)
    R = episode.rewards.tolist()
    old_l = old.tolist()
    y = [0.0] * T
    blended = [0.0] * (T - 1)
    if episode.terminal:
        y[T - 1] = R[T - 1]
    else:
        y[T - 1] = R[T - 1] + gamma * float(q_tilde[:, T - 1].max())
    one_minus = 1.0 - beta
    for k in range(T - 2, -1, -1):
        b = beta * y[k + 1] + one_minus * old_l[k]
        blended[k] = b
        o = others[k]
        y[k] = R[k] + gamma * (b if b >= o else o)
    if T > 1:
        q_tilde[a_next, cols] = blended
    return BackwardTargets(np.array(y), q_tilde)


def one_step_target(t: Transition, target_q: TargetQ, gamma: float) -> float:
    if t.terminal:
        return float(t.r)
    return float(t.r + gamma * _values(target_q, [t.s_next])[0].max())


def one_step_targets(episode: Episode, target_q: TargetQ, gamma: float) -> np.ndarray:
    """:func:`one_step_target` for every step of ``episode``."""
    boot = _values(target_q, episode.next_states).max(axis=1)
    return np.where(episode.terminals, episode.rewards, episode.rewards + gamma * boot)


def nstep_target_at(episode: Episode, t: int, target_q: TargetQ, gamma: float, n: int | None) -> float:
    """n-step return from step ``t``; ``n=None`` runs to the end of the episode."""
    T = len(episode)
    m = T - t if n is None else min(n, T - t)
    if m < 1:
        raise ValueError("n must be at least 1")
    discounts = gamma ** np.arange(m)
    ret = float(discounts @ episode.rewards[t:t + m])
    end = t + m - 1
    if not episode.terminals[end]:
        ret += gamma**m * float(_values(target_q, [episode.next_states[end]])[0].max())
    return ret


def nstep_targets(episode: Episode, target_q: TargetQ, gamma: float, n: int | None) -> np.ndarray:
    """Truncated n-step returns for every step; windows stop at the episode end.

    The bootstrap term is dropped when the window reaches a terminal step.
    """
    if n is not None and n < 1:
        raise ValueError("n must be at least 1")
    T = len(episode)
    boot = _values(target_q, episode.next_states).max(axis=1)
    boot[episode.terminals] = 0.0
    y = np.empty(T)
    for t in range(T):
        m = T - t if n is None else min(n, T - t)
        discounts = gamma ** np.arange(m)
        y[t] = discounts @ episode.rewards[t:t + m] + gamma**m * boot[t + m - 1]
    return y


@dataclass
class RetraceConfig:
    """Trace settings for :func:`retrace_targets`.

    ``behavior_probs[t]`` is mu(a_t | x_t). ``target_probs[t]`` is
    pi(a_t | x_t); when omitted it is taken from the epsilon-greedy policy
    of the supplied Q with ``target_epsilon``, which also defines the
    expectation over next-state values.
    """

    lam: float
    behavior_probs: Sequence[float] | None = None
    target_probs: Sequence[float] | None = None
    target_epsilon: float = 0.05


def _eps_greedy_matrix(values: np.ndarray, epsilon: float) -> np.ndarray:
    """Row-wise :func:`epsilon_greedy_probs`."""
    n, A = values.shape
    probs = np.full((n, A), epsilon / A)
    probs[np.arange(n), values.argmax(axis=1)] += 1.0 - epsilon
    return probs


def trace_coefficients(episode: Episode, q: TargetQ, config: RetraceConfig) -> np.ndarray:
    """``c_t = lambda * min(1, pi(a_t|x_t) / mu(a_t|x_t))`` for every step."""
    T = len(episode)
    mu = np.asarray(episode.mus if config.behavior_probs is None else config.behavior_probs, dtype=np.float64)
    if mu.shape != (T,):
        raise ValueError("behaviour probabilities must match the episode length")
    if np.any(mu <= 0):
        raise ValueError("behaviour probability of a taken action is zero")
    if config.target_probs is None:
        pi_all = _eps_greedy_matrix(_values(q, episode.states), config.target_epsilon)
        pi = pi_all[np.arange(T), episode.actions]
    else:
        pi = np.asarray(config.target_probs, dtype=np.float64)
        if pi.shape != (T,):
            raise ValueError("target probabilities must match the episode length")
    return config.lam * np.minimum(1.0, pi / mu)


def retrace_targets(episode: Episode, q: TargetQ, config: RetraceConfig, gamma: float) -> np.ndarray:
    """Backward Retrace corrections ``Delta Q`` for every step of ``episode``.

    ``Delta Q_t = c_{t+1} * lambda * Delta Q_{t+1} + delta_t`` with
    ``delta_t = r_t + gamma * E_pi Q(x_{t+1}, .) - Q(x_t, a_t)``; the
    correction past the last step is 0 and a terminal successor has value 0.
    The trace weight carries ``lambda`` both inside ``c`` and as a separate
    factor, exactly as the recursion is written for this baseline.
    """
    T = len(episode)
    c = trace_coefficients(episode, q, config)
    q_sa = _values(q, episode.states)[np.arange(T), episode.actions]
    q_next = _values(q, episode.next_states)
    pi_next = _eps_greedy_matrix(q_next, config.target_epsilon)
    expected = np.where(episode.terminals, 0.0, (pi_next * q_next).sum(axis=1))
    delta = episode.rewards + gamma * expected - q_sa
    dq = np.empty(T)
    dq[T - 1] = delta[T - 1]
    for t in range(T - 2, -1, -1):
        dq[t] = c[t + 1] * config.lam * dq[t + 1] + delta[t]
    return dq


def watkins_q_lambda_update(
    q: np.ndarray, episode: Episode, lam: float, gamma: float, alpha: float = 1.0
) -> np.ndarray:
    """Online Watkins Q(lambda) pass over ``episode`` with accumulating traces.

    At each step the taken action's trace is incremented and every traced
    entry moves by ``alpha * delta * e``. If the taken action was not greedy
    under the Q-values at that moment (ties count as greedy), all traces are
    cut afterwards; otherwise they decay by ``gamma * lambda``.
    """
    q = np.array(q, dtype=np.float64, copy=True)
    e = np.zeros_like(q)
    for t in range(len(episode)):
        s, a = episode.states[t], episode.actions[t]
        greedy = q[s, a] >= q[s].max()
        boot = 0.0 if episode.terminals[t] else q[episode.next_states[t]].max()
        delta = episode.rewards[t] + gamma * boot - q[s, a]
        e[s, a] += 1.0
        q += alpha * delta * e
        if greedy:
            e *= gamma * lam
        else:
            e[:] = 0.0
    return q


def train(config, **kwargs):
    """Run the full training loop; see :func:`ebu.training.train`."""
    from .training import train as _train

    return _train(config, **kwargs)
