"""Anytime pairwise comparison of stored runs.

A *setting* is one (instance, seed, checkpoint) triple.  At each checkpoint
(a fraction of the instance budget) the best-so-far loss is read off each
run's history; pairwise win fractions over all settings give the score
matrix, and per-setting min-max rescaling of losses gives the normalized
convergence curves.  Everything is ordinal in the losses, so rankings are
invariant to per-instance rescaling of the objectives.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .engine import RunRecord
from .errors import EvaluationError

DEFAULT_CHECKPOINTS = (0.05, 0.10, 0.25, 0.50, 1.00)


@dataclass(frozen=True)
class ScoreMatrix:
    """Pairwise win fractions, ordered by descending global score."""

    algorithms: tuple[str, ...]
    wins: np.ndarray  # wins[i, j] = fraction of settings where i beats j
    global_scores: tuple[float, ...]
    score_se: tuple[float, ...]
    n_settings: int

    def win_rate(self, a: str, b: str) -> float:
        return float(self.wins[self.algorithms.index(a), self.algorithms.index(b)])

    def rank_of(self, a: str) -> int:
        return self.algorithms.index(a) + 1


@dataclass(frozen=True)
class ConvergenceCurve:
    algorithm: str
    points: tuple[tuple[float, float], ...]  # (budget fraction, mean normalized loss)
    final_loss_label: float
    second_final_loss_label: float


def checkpoint_evals(fraction: float, budget: int) -> int:
    return max(1, int(np.floor(fraction * budget)))


def best_so_far(history: Sequence[tuple[int, float]], evals: int) -> float:
    """Last best-so-far entry at or before ``evals``; earliest entry if none."""
    value = history[0][1]
    for e, loss in history:
        if e > evals:
            break
        value = loss
    return value


def _collect(records: Iterable[RunRecord], checkpoints):
    by_algo: dict[str, dict[tuple[str, int], RunRecord]] = {}
    budgets: dict[tuple[str, int], int] = {}
    for rec in records:
        setting = (rec.instance.key(), rec.seed)
        per = by_algo.setdefault(rec.algorithm, {})
        if setting in per:
            raise EvaluationError(
                f"duplicate record for algorithm {rec.algorithm!r}, "
                f"instance {setting[0]}, seed {setting[1]}"
            )
        per[setting] = rec
        budgets[setting] = rec.instance.budget
    if not by_algo:
        raise EvaluationError("no records given")

    settings = sorted(budgets)
    gaps = [
        (algo, s)
        for algo in sorted(by_algo)
        for s in settings
        if s not in by_algo[algo]
    ]
    if gaps:
        shown = ", ".join(f"{a} missing {s[0]}/seed {s[1]}" for a, s in gaps[:5])
        raise EvaluationError(f"incomplete comparison set ({len(gaps)} gaps): {shown}")

    algos = sorted(by_algo)
    # losses[a][t] for t enumerating (instance, seed) x checkpoint, in order
    losses = np.empty((len(algos), len(settings) * len(checkpoints)))
    for ai, algo in enumerate(algos):
        col = 0
        for s in settings:
            rec = by_algo[algo][s]
            for frac in checkpoints:
                losses[ai, col] = best_so_far(
                    rec.history, checkpoint_evals(frac, budgets[s])
                )
                col += 1
    return algos, settings, losses


def score_matrix(
    records: Iterable[RunRecord], checkpoints: Sequence[float] = DEFAULT_CHECKPOINTS
) -> ScoreMatrix:
    """Pairwise anytime win fractions; ties count half for each side."""
    algos, settings, losses = _collect(records, checkpoints)
    n = len(algos)
    n_settings = losses.shape[1]

    wins = np.full((n, n), 0.5)
    for i in range(n):
        for j in range(i + 1, n):
            li, lj = losses[i], losses[j]
            w = np.mean((li < lj) + 0.5 * (li == lj))
            wins[i, j] = w
            wins[j, i] = 1.0 - w

    if n == 1:
        per_setting = np.full((1, n_settings), 0.5)
    else:
        per_setting = np.empty((n, n_settings))
        for i in range(n):
            beaten = [
                (losses[i] < losses[j]) + 0.5 * (losses[i] == losses[j])
                for j in range(n)
                if j != i
            ]
            per_setting[i] = np.mean(beaten, axis=0)
    scores = per_setting.mean(axis=1)
    if n_settings > 1:
        ses = per_setting.std(axis=1, ddof=1) / np.sqrt(n_settings)
    else:
        ses = np.zeros(n)

    order = sorted(range(n), key=lambda i: (-scores[i], algos[i]))
    return ScoreMatrix(
        algorithms=tuple(algos[i] for i in order),
        wins=wins[np.ix_(order, order)],
        global_scores=tuple(float(scores[i]) for i in order),
        score_se=tuple(float(ses[i]) for i in order),
        n_settings=n_settings,
    )


def convergence_curves(
    records: Iterable[RunRecord], checkpoints: Sequence[float] = DEFAULT_CHECKPOINTS
) -> list[ConvergenceCurve]:
    """Min-max rescaled losses per setting, averaged per checkpoint.

    Within each (instance, seed, checkpoint) the losses across algorithms map
    linearly to [0, 1] (all-equal maps to 0); the curve of an algorithm is
    the mean of its rescaled losses over instances and seeds per checkpoint.
    """
    algos, settings, losses = _collect(records, checkpoints)
    n_cp = len(checkpoints)
    normalized = np.zeros_like(losses)
    for col in range(losses.shape[1]):
        column = losses[:, col]
        lo, hi = column.min(), column.max()
        if hi > lo:
            normalized[:, col] = (column - lo) / (hi - lo)

    curves = []
    by_checkpoint = normalized.reshape(len(algos), len(settings), n_cp)
    ordered = sorted(range(n_cp), key=lambda k: checkpoints[k])
    for ai, algo in enumerate(algos):
        means = by_checkpoint[ai].mean(axis=0)
        points = tuple((float(checkpoints[k]), float(means[k])) for k in ordered)
        final = points[-1][1]
        second = points[-2][1] if n_cp > 1 else final
        curves.append(
            ConvergenceCurve(
                algorithm=algo,
                points=points,
                final_loss_label=final,
                second_final_loss_label=second,
            )
        )
    return curves


def format_rank_label(matrix: ScoreMatrix, algorithm: str) -> str:
    """Render "rank/total:score% +- halfwidth" for one algorithm."""
    idx = matrix.algorithms.index(algorithm)
    score = 100.0 * matrix.global_scores[idx]
    half = 100.0 * matrix.score_se[idx]
    return f"{idx + 1}/{len(matrix.algorithms)}:{score:.1f}% +- {half:.1f}"
