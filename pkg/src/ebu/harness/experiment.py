"""Seeded multi-run execution with CSV output."""
from __future__ import annotations

import dataclasses
import sys
from pathlib import Path
from typing import Callable

from ..training import train
from .config import RunConfig
from .metrics import MetricRow, write_csv


def run_id(name: str, seed: int) -> str:
    return f"{name}-s{seed}"


def interleave(per_run: list[list[MetricRow]]) -> list[MetricRow]:
    """Merge per-run row lists by step, keeping run order within a step."""
    tagged = [(row.step, i, j, row) for i, rows in enumerate(per_run) for j, row in enumerate(rows)]
    tagged.sort(key=lambda item: item[:3])
    return [row for *_, row in tagged]


def run_experiment(cfg: RunConfig, progress: Callable[[str], None] | None = None) -> list[MetricRow]:
    """Train one agent per seed and return every evaluation row, interleaved by step.

    When ``cfg.output`` is set the rows are also written there as CSV.
    """
    cfg.validate()
    per_run = []
    for seed in cfg.seeds:
        result = train(dataclasses.replace(cfg.train, seed=seed))
        rid = run_id(cfg.name, seed)
        for row in result.rows:
            row.run = rid
        per_run.append(result.rows)
        if progress is not None and result.rows:
            last = result.rows[-1]
            progress(f"{rid}: step {last.step} eval_return {last.eval_return:.3f}")
    rows = interleave(per_run)
    if cfg.output:
        with open(Path(cfg.output), "w", newline="") as fh:
            write_csv(rows, fh)
    return rows


def print_rows(rows, fh=sys.stdout):
    write_csv(rows, fh)
