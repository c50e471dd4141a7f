"""Flat ``key = value`` run configuration files.

Keys carry a section prefix (``env.``, ``learner.``, ``approx.``, ``run.``).
Blank lines and ``#`` comments are ignored. The same dotted names are
accepted as command-line overrides, e.g. ``--set learner.beta=1``.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigError
from ..training import TrainConfig

# dotted key -> TrainConfig field
TRAIN_KEYS = {
    "env.kind": "env",
    "env.n": "branching_n",
    "env.width": "maze_width",
    "env.height": "maze_height",
    "env.wall_density": "wall_density",
    "env.maze_seed": "maze_seed",
    "env.maze_file": "maze_file",
    "env.observation": "observation",
    "env.mnist_images": "mnist_images",
    "env.mnist_labels": "mnist_labels",
    "env.max_episode_steps": "max_episode_steps",
    "learner.kind": "learner",
    "learner.beta": "beta",
    "learner.ebu_mode": "ebu_mode",
    "learner.gamma": "gamma",
    "learner.lambda": "lam",
    "learner.n": "n",
    "learner.batch_size": "batch_size",
    "learner.replay_capacity": "replay_capacity",
    "learner.update_period": "update_period",
    "learner.target_sync": "target_sync",
    "learner.learning_starts": "learning_starts",
    "learner.length_weighted": "length_weighted",
    "approx.kind": "approximator",
    "approx.hidden": "hidden",
    "approx.lr": "lr",
    "approx.reduction": "reduction",
    "run.total_steps": "total_steps",
    "run.eval_period": "eval_period",
    "run.eval_episodes": "eval_episodes",
    "run.eval_epsilon": "eval_epsilon",
    "run.eps_start": "eps_start",
    "run.eps_end": "eps_end",
    "run.eps_horizon": "eps_horizon",
    "run.eps_shape": "eps_shape",
}

# dotted key -> RunConfig field (everything that is not per-agent)
RUN_KEYS = {
    "run.name": "name",
    "run.seeds": "seeds",
    "run.output": "output",
    "run.densities": "densities",
    "run.mazes": "mazes",
    "run.learners": "learners",
}

_TRAIN_TYPES = {f.name: f.type for f in dataclasses.fields(TrainConfig)}


@dataclass
class RunConfig:
    train: TrainConfig = field(default_factory=TrainConfig)
    name: str = "run"
    seeds: list[int] = field(default_factory=lambda: [0])
    output: str | None = None
    # maze benchmark only
    densities: list[float] = field(default_factory=lambda: [0.2, 0.3, 0.4, 0.5])
    mazes: int = 10
    learners: list[str] = field(default_factory=lambda: ["ebu", "one-step", "n-step"])

    def validate(self) -> "RunConfig":
        self.train.validate()
        if not self.seeds:
            raise ConfigError("run.seeds must list at least one seed")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("run.seeds contains duplicates")
        if self.mazes < 1:
            raise ConfigError("run.mazes must be positive")
        if not all(0.0 <= d < 1.0 for d in self.densities):
            raise ConfigError("run.densities must lie in [0, 1)")
        return self


def _parse_bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _convert(key: str, annotation: str, text: str):
    text = text.strip()
    optional = "None" in annotation
    if optional and text.lower() in ("none", ""):
        return None
    try:
        if annotation.startswith("tuple"):
            return tuple(int(v) for v in text.split(",") if v.strip())
        if annotation.startswith("list[int]"):
            return [int(v) for v in text.split(",") if v.strip()]
        if annotation.startswith("list[float]"):
            return [float(v) for v in text.split(",") if v.strip()]
        if annotation.startswith("list[str]"):
            return [v.strip() for v in text.split(",") if v.strip()]
        if annotation.startswith("bool"):
            return _parse_bool(text)
        if annotation.startswith("int"):
            return int(text)
        if annotation.startswith("float"):
            return float(text)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {text!r} ({exc})") from exc
    return text


def parse_config_text(text: str) -> dict[str, str]:
    """``key = value`` pairs in file order; later duplicates win."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = value
    return out


def apply_settings(cfg: RunConfig, settings: dict[str, str]) -> RunConfig:
    run_types = {f.name: f.type for f in dataclasses.fields(RunConfig)}
    train_updates = {}
    for key, value in settings.items():
        if key in TRAIN_KEYS:
            name = TRAIN_KEYS[key]
            train_updates[name] = _convert(key, str(_TRAIN_TYPES[name]), value)
        elif key in RUN_KEYS:
            name = RUN_KEYS[key]
            setattr(cfg, name, _convert(key, str(run_types[name]), value))
        else:
            raise ConfigError(f"unknown config key {key!r}")
    cfg.train = dataclasses.replace(cfg.train, **train_updates)
    return cfg


def parse_overrides(pairs: list[str]) -> dict[str, str]:
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override must look like key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def load_config(path=None, overrides: list[str] | None = None, base: RunConfig | None = None) -> RunConfig:
    cfg = base if base is not None else RunConfig()
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        cfg = apply_settings(cfg, parse_config_text(text))
    if overrides:
        cfg = apply_settings(cfg, parse_overrides(overrides))
    return cfg.validate()


def dump_config(cfg: RunConfig) -> str:
    """Render ``cfg`` back into the file format."""
    lines = []
    for key, name in TRAIN_KEYS.items():
        value = getattr(cfg.train, name)
        lines.append(f"{key} = {_render(value)}")
    for key, name in RUN_KEYS.items():
        lines.append(f"{key} = {_render(getattr(cfg, name))}")
    return "\n".join(lines) + "\n"


def _render(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, (list, tuple)):
        return ",".join(str(v) for v in value)
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)
