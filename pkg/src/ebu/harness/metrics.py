"""Evaluation metrics and the CSV row schema."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable

import numpy as np

CSV_HEADER = ("run", "seed", "step", "eval_return", "rel_length", "mean_q", "seconds")


def relative_length(agent_len: float, oracle_len: float) -> float:
    """Agent path length over the shortest possible one."""
    if oracle_len <= 0:
        raise ZeroDivisionError("oracle length must be positive")
    return agent_len / oracle_len


def relative_score(agent: float, baseline: float, human: float, random: float) -> float:
    """``(agent - baseline) / (max(human, baseline) - random)``."""
    denom = max(human, baseline) - random
    if denom == 0:
        raise ZeroDivisionError("relative score denominator is zero")
    return (agent - baseline) / denom


def human_normalized_score(agent: float, human: float, random: float) -> float:
    """``(agent - random) / |human - random|``."""
    denom = abs(human - random)
    if denom == 0:
        raise ZeroDivisionError("human and random scores coincide")
    return (agent - random) / denom


def mean_q_diagnostic(episodes, q) -> float:
    """Mean of ``Q(s_t, a_t)`` over every transition of the evaluation episodes.

    ``q`` is a table indexed by state or a callable from a state array to
    action values.
    """
    episodes = list(episodes)
    if not episodes:
        raise ValueError("need at least one episode")
    states = np.concatenate([ep.states for ep in episodes])
    actions = np.concatenate([ep.actions for ep in episodes])
    values = q(states) if callable(q) else np.asarray(q)[states]
    return float(np.mean(np.asarray(values)[np.arange(len(actions)), actions]))


@dataclass
class MetricRow:
    run: str
    seed: int
    step: int
    eval_return: float
    rel_length: float | None
    mean_q: float
    seconds: float

    def to_csv_fields(self) -> list[str]:
        return [
            self.run,
            str(self.seed),
            str(self.step),
            repr(float(self.eval_return)),
            "" if self.rel_length is None else repr(float(self.rel_length)),
            repr(float(self.mean_q)),
            f"{self.seconds:.3f}",
        ]

    @classmethod
    def from_csv_fields(cls, fields: list[str]) -> "MetricRow":
        if len(fields) != len(CSV_HEADER):
            raise ValueError(f"expected {len(CSV_HEADER)} fields, got {len(fields)}")
        run, seed, step, ret, rel, mq, secs = fields
        return cls(run, int(seed), int(step), float(ret), None if rel == "" else float(rel), float(mq), float(secs))


def write_csv(rows: Iterable[MetricRow], fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for row in rows:
        w.writerow(row.to_csv_fields())


def read_csv(fh) -> list[MetricRow]:
    r = csv.reader(fh)
    header = next(r, None)
    if tuple(header or ()) != CSV_HEADER:
        raise ValueError(f"unexpected CSV header {header}")
    return [MetricRow.from_csv_fields(fields) for fields in r]


def rows_to_csv(rows: Iterable[MetricRow]) -> str:
    buf = io.StringIO()
    write_csv(rows, buf)
    return buf.getvalue()
