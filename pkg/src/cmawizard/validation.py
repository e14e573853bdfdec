"""Post-tuning selection by repeated whole-suite runs and majority vote.

Each validation run regenerates the suite's instances with a run-specific
seed, every contender runs every instance (sharing the instance seed for a
paired comparison), the per-instance winner is the contender with the
smallest final loss, and the per-run winner is the contender winning the most
instances.  The overall winner is the modal run winner.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .engine import CmaConfig, DEFAULT_CONFIG
from .errors import ConfigurationError
from .racing import Runner, cma_runner
from .suites import SuiteSpec, generate_suite
from .util import derive_seed

DEFAULT_CONTENDER = "default"


@dataclass(frozen=True)
class ValidationReport:
    contenders: tuple[str, ...]
    per_run_winners: tuple[str, ...]
    per_instance_win_counts: tuple[tuple[float, ...], ...]  # [run][contender]
    overall_winner: str
    mean_losses: dict[str, float]
    vote: str
    n_instances_per_run: int

    def total_wins(self, name: str) -> float:
        idx = self.contenders.index(name)
        return float(sum(run[idx] for run in self.per_instance_win_counts))

    def to_dict(self) -> dict:
        return {
            "contenders": list(self.contenders),
            "per_run_winners": list(self.per_run_winners),
            "per_instance_win_counts": [list(r) for r in self.per_instance_win_counts],
            "overall_winner": self.overall_winner,
            "mean_losses": {k: float(v) for k, v in self.mean_losses.items()},
            "vote": self.vote,
            "n_instances_per_run": self.n_instances_per_run,
        }


def _run_winner(names, wins, losses) -> str:
    best = max(wins.values())
    tied = [n for n in names if wins[n] == best]
    if len(tied) == 1:
        return tied[0]
    return min(tied, key=lambda n: (float(np.mean(losses[n])), n))


def validate(
    contenders: Mapping[str, CmaConfig],
    suite: SuiteSpec,
    n_runs: int = 10,
    seed: int = 0,
    n_blocks: int = 8,
    vote: str = "runs",
    runner: Runner = cma_runner,
) -> ValidationReport:
    """Race contenders over fresh whole-suite draws; majority vote decides.

    The four-parameter default configuration is always included.  ``vote``
    selects between the per-run majority ("runs") and pooling every
    run x instance comparison ("pooled"); instance-level ties split the win
    equally among the tied contenders.
    """
    if vote not in ("runs", "pooled"):
        raise ConfigurationError(f"vote must be 'runs' or 'pooled', got {vote!r}")
    entries = dict(contenders)
    if not any(cfg == DEFAULT_CONFIG for cfg in entries.values()):
        entries[DEFAULT_CONTENDER] = DEFAULT_CONFIG
    if len(entries) < 2:
        raise ConfigurationError("validation needs at least 2 contenders")
    names = list(entries)

    per_run_winners: list[str] = []
    win_matrix: list[tuple[float, ...]] = []
    all_losses: dict[str, list[float]] = {n: [] for n in names}
    n_instances_per_run = 0

    for r in range(n_runs):
        blocks = generate_suite(suite, n_blocks, derive_seed(seed, "validation", r))
        instances = [inst for block in blocks for inst in block.instances]
        n_instances_per_run = len(instances)
        wins = {n: 0.0 for n in names}
        run_losses = {n: [] for n in names}
        for i, inst in enumerate(instances):
            inst_seed = derive_seed(seed, "validation", r, i)
            losses = {
                n: float(runner(entries[n].to_params(), inst, inst_seed)) for n in names
            }
            best = min(losses.values())
            tied = [n for n in names if losses[n] == best]
            for n in tied:
                wins[n] += 1.0 / len(tied)
            for n in names:
                run_losses[n].append(losses[n])
                all_losses[n].append(losses[n])
        per_run_winners.append(_run_winner(names, wins, run_losses))
        win_matrix.append(tuple(wins[n] for n in names))

    mean_losses = {n: float(np.mean(all_losses[n])) for n in names}
    if vote == "pooled":
        totals = {n: sum(row[i] for row in win_matrix) for i, n in enumerate(names)}
        best = max(totals.values())
        tied = [n for n in names if totals[n] == best]
        overall = min(tied, key=lambda n: (mean_losses[n], n))
    else:
        counts = {n: per_run_winners.count(n) for n in names}
        best = max(counts.values())
        tied = [n for n in names if counts[n] == best]
        if len(tied) > 1:
            totals = {n: sum(row[names.index(n)] for row in win_matrix) for n in tied}
            top = max(totals.values())
            tied = [n for n in tied if totals[n] == top]
        overall = min(tied, key=lambda n: (mean_losses[n], n))

    return ValidationReport(
        contenders=tuple(names),
        per_run_winners=tuple(per_run_winners),
        per_instance_win_counts=tuple(win_matrix),
        overall_winner=overall,
        mean_losses=mean_losses,
        vote=vote,
        n_instances_per_run=n_instances_per_run,
    )
