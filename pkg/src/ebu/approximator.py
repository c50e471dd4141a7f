"""Q-function approximators sharing one flat-parameter representation.

Three kinds are supported:

* ``tabular``: shape ``(num_states, num_actions)``; observations are state indices.
* ``linear``: shape ``(num_features, num_actions)``; ``Q = phi @ W`` with no bias.
* ``dense``: shape ``(n_in, h_1, ..., h_k, num_actions)``; rectifier hidden
  layers and an identity output layer, parameters laid out layer by layer
  as ``W_i`` (row-major ``fan_in x fan_out``) followed by ``b_i``.

The training loss is ``0.5 * mean((y - Q(s, a))**2)`` over the batch
(``reduction="sum"`` drops the mean), with gradients flowing only through the
chosen action's output. For tables, ``reduction="pair"`` divides each sample
by how often its (state, action) entry occurs in the batch, so every touched
entry moves ``lr`` of the way towards the mean of its targets.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

KINDS = ("tabular", "linear", "dense")


@dataclass
class QFunctionParams:
    kind: str
    shape: tuple[int, ...]
    theta: np.ndarray

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown approximator kind {self.kind!r}")
        self.shape = tuple(int(v) for v in self.shape)
        self.theta = np.asarray(self.theta, dtype=np.float64)
        if self.kind == "dense" and len(self.shape) < 2:
            raise ValueError("dense shape needs at least input and output sizes")
        if self.kind != "dense" and len(self.shape) != 2:
            raise ValueError(f"{self.kind} shape must be (inputs, actions)")
        if self.theta.shape != (num_parameters(self.kind, self.shape),):
            raise ValueError("parameter vector does not match the shape descriptor")

    @property
    def num_actions(self) -> int:
        return self.shape[-1]

    @property
    def num_inputs(self) -> int:
        return self.shape[0]

    def copy(self) -> "QFunctionParams":
        return QFunctionParams(self.kind, self.shape, self.theta.copy())


TargetNetwork = QFunctionParams


def num_parameters(kind: str, shape) -> int:
    if kind == "dense":
        return sum(a * b + b for a, b in zip(shape[:-1], shape[1:]))
    return int(shape[0] * shape[1])


def init_params(kind: str, shape, rng: np.random.Generator | None = None) -> QFunctionParams:
    """Tabular and linear start at zero; dense weights are uniform in +-1/sqrt(fan_in), biases zero."""
    shape = tuple(int(v) for v in shape)
    if kind != "dense":
        return QFunctionParams(kind, shape, np.zeros(num_parameters(kind, shape)))
    rng = rng if rng is not None else np.random.default_rng()
    parts = []
    for fan_in, fan_out in zip(shape[:-1], shape[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        parts.append(rng.uniform(-bound, bound, size=fan_in * fan_out))
        parts.append(np.zeros(fan_out))
    return QFunctionParams(kind, shape, np.concatenate(parts))


def _layers(params: QFunctionParams, theta=None):
    theta = params.theta if theta is None else theta
    out, i = [], 0
    for fan_in, fan_out in zip(params.shape[:-1], params.shape[1:]):
        W = theta[i:i + fan_in * fan_out].reshape(fan_in, fan_out)
        i += fan_in * fan_out
        b = theta[i:i + fan_out]
        i += fan_out
        out.append((W, b))
    return out


def _as_batch(params: QFunctionParams, obs):
    """Normalise observations to a batch; returns ``(batch, was_single)``."""
    if params.kind == "tabular":
        arr = np.asarray(obs)
        if not np.issubdtype(arr.dtype, np.integer):
            raise ValueError("tabular observations must be integer state indices")
        single = arr.ndim == 0
        arr = np.atleast_1d(arr).astype(np.int64)
        if arr.ndim != 1 or arr.min(initial=0) < 0 or arr.max(initial=0) >= params.shape[0]:
            raise ValueError("state index out of range for the table")
        return arr, single
    arr = np.asarray(obs, dtype=np.float64)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.ndim != 2 or arr.shape[1] != params.num_inputs:
        raise ValueError(f"observation shape {np.shape(obs)} does not match input size {params.num_inputs}")
    return arr, single


def _forward(params: QFunctionParams, x: np.ndarray):
    acts = [x]
    h = x
    layers = _layers(params)
    for i, (W, b) in enumerate(layers):
        z = h @ W + b
        h = np.maximum(z, 0.0) if i < len(layers) - 1 else z
        acts.append(h)
    return acts


def predict(params: QFunctionParams, obs) -> np.ndarray:
    """Action values for one observation ``(A,)`` or a batch ``(B, A)``."""
    x, single = _as_batch(params, obs)
    if params.kind == "tabular":
        out = params.theta.reshape(params.shape)[x]
    elif params.kind == "linear":
        out = x @ params.theta.reshape(params.shape)
    else:
        out = _forward(params, x)[-1]
    return out[0] if single else out


def _output_grads(params: QFunctionParams, x: np.ndarray, actions: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Gradient of ``sum_i weights[i] * Q(x_i, actions[i])`` w.r.t. theta."""
    grad = np.zeros_like(params.theta)
    A = params.num_actions
    if params.kind == "tabular":
        np.add.at(grad, x * A + actions, weights)
        return grad
    if params.kind == "linear":
        G = np.zeros((len(x), A))
        G[np.arange(len(x)), actions] = weights
        return (x.T @ G).ravel()
    acts = _forward(params, x)
    layers = _layers(params)
    views = _layers(params, grad)
    delta = np.zeros((len(x), A))
    delta[np.arange(len(x)), actions] = weights
    for i in range(len(layers) - 1, -1, -1):
        W, _ = layers[i]
        gW, gb = views[i]
        gW += acts[i].T @ delta
        gb += delta.sum(axis=0)
        if i > 0:
            delta = (delta @ W.T) * (acts[i] > 0)
    return grad


def loss(params: QFunctionParams, obs, actions, targets, reduction: str = "mean") -> float:
    x, _ = _as_batch(params, obs)
    actions = np.asarray(actions, dtype=np.int64)
    err = np.asarray(targets, dtype=np.float64) - predict(params, x)[np.arange(len(actions)), actions]
    if reduction == "pair":
        if params.kind != "tabular":
            raise ValueError("pair reduction is only defined for tables")
        _, inverse, counts = np.unique(x * params.num_actions + actions, return_inverse=True, return_counts=True)
        return 0.5 * float(np.sum(err**2 / counts[inverse]))
    total = 0.5 * float(err @ err)
    return total / len(actions) if reduction == "mean" else total


def loss_gradient(params: QFunctionParams, obs, actions, targets, reduction: str = "mean") -> np.ndarray:
    x, _ = _as_batch(params, obs)
    actions = np.asarray(actions, dtype=np.int64)
    targets = np.asarray(targets, dtype=np.float64)
    if len(actions) == 0 or len(actions) != len(x) or targets.shape != actions.shape:
        raise ValueError("batch must be non-empty with matching observation/action/target lengths")
    if not np.all(np.isfinite(targets)):
        raise ValueError("targets must be finite")
    err = targets - predict(params, x)[np.arange(len(actions)), actions]
    if reduction == "mean":
        scale = 1.0 / len(actions)
    elif reduction == "sum":
        scale = 1.0
    elif reduction == "pair":
        if params.kind != "tabular":
            raise ValueError("pair reduction is only defined for tables")
        _, inverse, counts = np.unique(x * params.num_actions + actions, return_inverse=True, return_counts=True)
        scale = 1.0 / counts[inverse]
    else:
        raise ValueError(f"unknown reduction {reduction!r}")
    return _output_grads(params, x, actions, -err * scale)


def grad_step(params: QFunctionParams, obs, actions, targets, lr: float, reduction: str = "mean") -> QFunctionParams:
    """One plain gradient-descent step; returns new parameters."""
    g = loss_gradient(params, obs, actions, targets, reduction)
    return QFunctionParams(params.kind, params.shape, params.theta - lr * g)


def output_gradient(params: QFunctionParams, obs, action: int) -> np.ndarray:
    """Analytic gradient of ``Q(obs, action)`` with respect to theta."""
    x, _ = _as_batch(params, obs)
    if len(x) != 1:
        raise ValueError("output_gradient takes a single observation")
    return _output_grads(params, x, np.array([action]), np.ones(1))


def finite_diff_check(params: QFunctionParams, obs, action: int, h: float = 1e-5, floor: float = 1e-7) -> float:
    """Largest relative gap between analytic and central-difference gradients.

    Components where both gradients are below ``floor`` in magnitude (for
    example weights feeding a dead rectifier) are left out.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    analytic = output_gradient(params, obs, action)
    numeric = np.empty_like(analytic)
    probe = params.copy()
    for i in range(len(params.theta)):
        old = probe.theta[i]
        probe.theta[i] = old + h
        up = predict(probe, obs)[action]
        probe.theta[i] = old - h
        down = predict(probe, obs)[action]
        probe.theta[i] = old
        numeric[i] = (up - down) / (2 * h)
    denom = np.maximum(np.abs(analytic), np.abs(numeric))
    keep = denom > floor
    if not keep.any():
        return 0.0
    return float(np.max(np.abs(analytic - numeric)[keep] / denom[keep]))


def sync_target(params: QFunctionParams) -> TargetNetwork:
    """Frozen deep copy used to generate targets."""
    return params.copy()


def save_params(params: QFunctionParams, path):
    """Text header line ``kind d0,d1,...`` followed by little-endian float64 values."""
    header = f"{params.kind} {','.join(map(str, params.shape))}\n".encode("ascii")
    Path(path).write_bytes(header + params.theta.astype("<f8").tobytes())


def load_params(path) -> QFunctionParams:
    data = Path(path).read_bytes()
    nl = data.index(b"\n")
    kind, dims = data[:nl].decode("ascii").split()
    shape = tuple(int(v) for v in dims.split(","))
    theta = np.frombuffer(data[nl + 1:], dtype="<f8").astype(np.float64)
    return QFunctionParams(kind, shape, theta)
