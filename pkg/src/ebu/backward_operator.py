"""The episodic backward operator on finite deterministic MDPs.

For a query pair ``(s, a)`` a *path* records ``(s_0, a_0) = (s, a)``, the
states ``s_1..s_L`` reached by following the successor map, and the actions
``a_1..a_{L-1}`` chosen along the way. A path either ends in a terminal
``s_L`` or is a truncated prefix of a path that has not terminated within
``max_len`` steps.

The backward return of a path cut at position ``j`` is::

    T(j) = sum_{k=1}^{j-1} (beta*gamma)^(k-1) * (beta*r(s_k,a_k) + (1-beta)*Q(s_k,a_k))
           + (beta*gamma)^(j-1) * X_j

where ``X_j = max_{a != a_j} Q(s_j, a)`` for ``j < L``. At the end of the path
``X_L`` is 0 for a terminal ``s_L`` and ``max_a Q(s_L, a)`` for a truncated
prefix, since the path has not committed to any action there. A state with a
single action uses that action's value for the off-path max.

The operator is ``(HQ)(s,a) = r(s,a) + gamma * sum_i w_i * max_j T_i(j)``
for a schedule ``w`` of positive weights over the paths from ``(s, a)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError
from .mdp import Episode, TabularMDP

MAX_PATHS = 500_000


@dataclass(frozen=True)
class Path:
    states: tuple[int, ...]    # s_0 .. s_L
    actions: tuple[int, ...]   # a_0 .. a_{L-1}
    rewards: tuple[float, ...]  # r(s_k, a_k) for k = 0 .. L-1
    terminal_reached: bool

    @property
    def length(self) -> int:
        return len(self.actions)

    @property
    def steps(self) -> list[tuple[int, int]]:
        return list(zip(self.states, self.actions))

    def __len__(self):
        return self.length


@dataclass
class OperatorConfig:
    beta: float = 0.5
    gamma: float = 0.9
    epsilon_trunc: float = 1e-3

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if self.epsilon_trunc <= 0:
            raise ValueError("epsilon_trunc must be positive")


def horizon_bound(epsilon: float, r_max: float, gamma: float) -> int:
    """Smallest path length whose discounted tail stays below ``epsilon``.

    ``ceil(log_gamma(epsilon * (1 - gamma) / r_max)) + 1``, at least 1.
    """
    if gamma == 0:
        return 1
    if not 0 < gamma < 1 or epsilon <= 0 or r_max <= 0:
        raise ValueError("need 0 < gamma < 1, epsilon > 0 and r_max > 0")
    n = math.ceil(math.log(epsilon * (1 - gamma) / r_max) / math.log(gamma)) + 1
    return max(1, n)


def enumerate_paths(mdp: TabularMDP, s: int, a: int, max_len: int) -> list[Path]:
    """All successor-following paths from ``(s, a)``, depth-first in action order.

    Paths stop at the first terminal state or after ``max_len`` steps.
    """
    if max_len < 1:
        raise ValueError("max_len must be at least 1")
    out: list[Path] = []
    A = mdp.num_actions

    def walk(states, actions, rewards):
        last = states[-1]
        if mdp.terminal[last] or len(actions) == max_len:
            out.append(Path(tuple(states), tuple(actions), tuple(rewards), bool(mdp.terminal[last])))
            if len(out) > MAX_PATHS:
                raise ValueError(f"more than {MAX_PATHS} paths; lower max_len")
            return
        for b in range(A):
            states.append(int(mdp.successor[last, b]))
            actions.append(b)
            rewards.append(float(mdp.reward[last, b]))
            walk(states, actions, rewards)
            states.pop()
            actions.pop()
            rewards.pop()

    walk([int(s), int(mdp.successor[s, a])], [int(a)], [float(mdp.reward[s, a])])
    return out


def _off_path_max(q: np.ndarray) -> np.ndarray:
    """``alt[s, a] = max_{b != a} Q(s, b)``; the sole value when only one action exists."""
    S, A = q.shape
    if A == 1:
        return q.copy()
    order = np.sort(q, axis=1)
    top, second = order[:, -1:], order[:, -2:-1]
    first_arg = np.argmax(q, axis=1)
    alt = np.broadcast_to(top, q.shape).copy()
    alt[np.arange(S), first_arg] = second[:, 0]
    return alt


def backward_return(path: Path, q: np.ndarray, j: int, config: OperatorConfig) -> float:
    """``T(j)`` for one path (see module docstring); ``1 <= j <= path.length``."""
    L = path.length
    if not 1 <= j <= L:
        raise ValueError(f"j={j} outside 1..{L}")
    c = config.beta * config.gamma
    total = 0.0
    for k in range(1, j):
        s_k, a_k = path.states[k], path.actions[k]
        total += c ** (k - 1) * (config.beta * path.rewards[k] + (1 - config.beta) * q[s_k, a_k])
    s_j = path.states[j]
    if j < L:
        row = np.delete(q[s_j], path.actions[j])
        x = float(row.max()) if row.size else float(q[s_j, path.actions[j]])
    elif path.terminal_reached:
        x = 0.0
    else:
        x = float(q[s_j].max())
    return total + c ** (j - 1) * x


@dataclass
class _PackedPaths:
    """All paths of all query pairs flattened into padded arrays."""

    group: np.ndarray      # (P,) flat index s*A + a of the query pair
    length: np.ndarray     # (P,)
    states: np.ndarray     # (P, Lmax + 1)
    actions: np.ndarray    # (P, Lmax), padded with 0
    rewards: np.ndarray    # (P, Lmax)
    terminal: np.ndarray   # (P,)


@dataclass
class Schedules:
    """Path sets and positive weights for every non-terminal ``(s, a)``."""

    paths: dict[tuple[int, int], list[Path]]
    weights: dict[tuple[int, int], np.ndarray]
    max_len: int
    _packed: _PackedPaths | None = field(default=None, repr=False)

    def validate(self, tol: float = 1e-12):
        for key, w in self.weights.items():
            if len(w) != len(self.paths[key]):
                raise ValueError(f"schedule for {key} has {len(w)} weights for {len(self.paths[key])} paths")
            if np.any(w <= 0):
                raise ValueError(f"schedule for {key} has non-positive weights")
            if abs(w.sum() - 1.0) > tol:
                raise ValueError(f"schedule for {key} sums to {w.sum()!r}, not 1")

    def packed(self, num_actions: int) -> tuple[_PackedPaths, np.ndarray]:
        if self._packed is None:
            rows = [(s * num_actions + a, p) for (s, a), ps in sorted(self.paths.items()) for p in ps]
            P = len(rows)
            Lmax = max(p.length for _, p in rows)
            packed = _PackedPaths(
                group=np.array([g for g, _ in rows], dtype=np.int64),
                length=np.array([p.length for _, p in rows], dtype=np.int64),
                states=np.zeros((P, Lmax + 1), dtype=np.int64),
                actions=np.zeros((P, Lmax), dtype=np.int64),
                rewards=np.zeros((P, Lmax)),
                terminal=np.array([p.terminal_reached for _, p in rows]),
            )
            for i, (_, p) in enumerate(rows):
                packed.states[i, : p.length + 1] = p.states
                packed.actions[i, : p.length] = p.actions
                packed.rewards[i, : p.length] = p.rewards
            self._packed = packed
        weights = np.concatenate([self.weights[key] for key in sorted(self.paths)])
        return self._packed, weights


def _build(mdp: TabularMDP, max_len: int, weigh) -> Schedules:
    paths, weights = {}, {}
    for s in range(mdp.num_states):
        if mdp.terminal[s]:
            continue
        for a in range(mdp.num_actions):
            ps = enumerate_paths(mdp, s, a, max_len)
            paths[(s, a)] = ps
            w = np.asarray(weigh((s, a), ps), dtype=np.float64)
            weights[(s, a)] = w / w.sum()
    sched = Schedules(paths, weights, max_len)
    sched.validate()
    return sched


def default_max_len(mdp: TabularMDP, config: OperatorConfig, cap: int | None = None) -> int:
    n = horizon_bound(config.epsilon_trunc, max(mdp.r_max, 1e-12), config.gamma)
    return n if cap is None else min(n, cap)


def uniform_schedules(mdp: TabularMDP, max_len: int) -> Schedules:
    return _build(mdp, max_len, lambda key, ps: np.ones(len(ps)))


def random_schedules(mdp: TabularMDP, max_len: int, rng: np.random.Generator) -> Schedules:
    """Dirichlet(1) weights per pair, floored away from zero."""
    return _build(mdp, max_len, lambda key, ps: rng.dirichlet(np.ones(len(ps))) + 1e-9)


def empirical_schedules(mdp: TabularMDP, max_len: int, episodes: list[Episode], smoothing: float = 1e-3) -> Schedules:
    """Weights from how often each path's action sequence was seen after ``(s, a)`` in ``episodes``.

    Every path also receives ``smoothing`` pseudo-counts so all weights stay positive.
    """
    counts: dict[tuple[int, int], dict[tuple[int, ...], int]] = {}
    for ep in episodes:
        S, A = ep.states.tolist(), ep.actions.tolist()
        for t in range(len(ep)):
            key = (S[t], A[t])
            seq = tuple(A[t:t + max_len])
            bucket = counts.setdefault(key, {})
            bucket[seq] = bucket.get(seq, 0) + 1

    def weigh(key, ps):
        bucket = counts.get(key, {})
        return np.array([bucket.get(p.actions, 0) + smoothing for p in ps])

    return _build(mdp, max_len, weigh)


def _path_maxima(mdp: TabularMDP, q: np.ndarray, packed: _PackedPaths, config: OperatorConfig) -> np.ndarray:
    """``max_j T(j)`` for every packed path, vectorised over paths and cut points."""
    beta, c = config.beta, config.beta * config.gamma
    P, Lmax = packed.actions.shape
    k = np.arange(Lmax)
    powers = c**k  # (beta*gamma)^(j-1) for j = 1..Lmax; 0**0 == 1
    rows = np.arange(P)

    # interior steps k = 1..L-1 live in columns 0..Lmax-2
    st, ac = packed.states[:, 1:Lmax], packed.actions[:, 1:Lmax]
    contrib = beta * packed.rewards[:, 1:Lmax] + (1 - beta) * q[st, ac]
    contrib = np.where(k[1:][None, :] < packed.length[:, None], contrib, 0.0)
    prefix = np.zeros((P, Lmax))
    prefix[:, 1:] = np.cumsum(contrib * powers[None, : Lmax - 1], axis=1)

    # X_j in column j-1: off-path max at s_j, replaced at j = L by the end value
    alt = _off_path_max(q)
    a_next = np.zeros((P, Lmax), dtype=np.int64)
    a_next[:, : Lmax - 1] = packed.actions[:, 1:]
    x = alt[packed.states[:, 1:], a_next]
    final_state = packed.states[rows, packed.length]
    x[rows, packed.length - 1] = np.where(packed.terminal, 0.0, q[final_state].max(axis=1))

    T = prefix + powers[None, :] * x
    T = np.where(k[None, :] < packed.length[:, None], T, -np.inf)
    return T.max(axis=1)


def apply_operator(mdp: TabularMDP, q: np.ndarray, schedules: Schedules, config: OperatorConfig) -> np.ndarray:
    """One application of the operator to every pair; terminal rows map to 0."""
    S, A = mdp.num_states, mdp.num_actions
    if not schedules.paths:
        return np.zeros((S, A))
    packed, w = schedules.packed(A)
    maxima = _path_maxima(mdp, np.asarray(q, dtype=np.float64), packed, config)
    avg = np.bincount(packed.group, weights=w * maxima, minlength=S * A).reshape(S, A)
    out = mdp.reward + config.gamma * avg
    out[mdp.terminal] = 0.0
    return out


def contraction_ratio(mdp, q1, q2, schedules: Schedules, config: OperatorConfig) -> float:
    """``||H q1 - H q2||_inf / ||q1 - q2||_inf``."""
    gap = float(np.abs(np.asarray(q1) - np.asarray(q2)).max())
    if gap == 0.0:
        raise ZeroDivisionError("q1 and q2 are identical")
    h1 = apply_operator(mdp, q1, schedules, config)
    h2 = apply_operator(mdp, q2, schedules, config)
    return float(np.abs(h1 - h2).max()) / gap


def fixed_point(
    mdp: TabularMDP,
    schedules: Schedules,
    config: OperatorConfig,
    tol: float = 1e-8,
    max_iters: int = 100_000,
) -> np.ndarray:
    """Iterate ``Q <- HQ`` from zero until the iterate is provably within ``tol`` of the fixed point.

    Stops once ``gamma / (1 - gamma) * ||Q_{n+1} - Q_n|| <= tol``, the
    standard a-posteriori bound for a gamma-contraction.
    """
    if tol <= config.epsilon_trunc:
        raise ValueError("tol must exceed epsilon_trunc")
    g = config.gamma
    q = mdp.zeros()
    change = np.inf
    for it in range(1, max_iters + 1):
        q_new = apply_operator(mdp, q, schedules, config)
        change = float(np.abs(q_new - q).max())
        q = q_new
        if g / (1 - g) * change <= tol:
            return q
    raise ConvergenceError("episodic backward operator iteration did not converge", change, max_iters)
