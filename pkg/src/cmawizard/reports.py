"""Rendered comparison outputs: plain-text tables and matplotlib figures.

The figures mirror the delimited data files: a win-rate heatmap with the six
best algorithms as rows and all algorithms as columns, and normalized
loss-versus-budget curves with final/second-final means in the legend.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluation import ConvergenceCurve, ScoreMatrix, format_rank_label

MAX_HEATMAP_ROWS = 6


def matrix_table(matrix: ScoreMatrix, max_rows: int = MAX_HEATMAP_ROWS) -> str:
    algos = matrix.algorithms
    n_rows = min(max_rows, len(algos))
    label_width = max(len(format_rank_label(matrix, a)) for a in algos[:n_rows])
    name_width = max(len(a) for a in algos[:n_rows])
    col_width = max(8, max(len(a) for a in algos) + 1)

    lines = [f"pairwise win rate over {matrix.n_settings} settings (row beats column)"]
    header = f"{'':{label_width}}  {'':{name_width}}"
    header += "".join(f"{a:>{col_width}}" for a in algos)
    lines.append(header)
    for i in range(n_rows):
        label = format_rank_label(matrix, algos[i])
        cells = "".join(f"{matrix.wins[i, j]:>{col_width}.3f}" for j in range(len(algos)))
        lines.append(f"{label:{label_width}}  {algos[i]:{name_width}}{cells}")
    return "\n".join(lines) + "\n"


def labels_block(matrix: ScoreMatrix) -> str:
    return "\n".join(
        f"{format_rank_label(matrix, a)}  {a}" for a in matrix.algorithms
    ) + "\n"


def curves_table(curves: Iterable[ConvergenceCurve]) -> str:
    lines = ["normalized mean loss per budget fraction"]
    for curve in curves:
        series = "  ".join(f"{frac:g}:{value:.4f}" for frac, value in curve.points)
        lines.append(
            f"{curve.algorithm}  (final {curve.final_loss_label:.4f}, "
            f"second {curve.second_final_loss_label:.4f})  {series}"
        )
    return "\n".join(lines) + "\n"


def render_heatmap(matrix: ScoreMatrix, path, max_rows: int = MAX_HEATMAP_ROWS) -> None:
    algos = matrix.algorithms
    n_rows = min(max_rows, len(algos))
    data = np.asarray(matrix.wins[:n_rows, :], dtype=float)

    fig, ax = plt.subplots(figsize=(max(6.0, 0.9 * len(algos) + 2), 0.6 * n_rows + 2.2))
    image = ax.imshow(data, cmap="viridis", vmin=0.0, vmax=1.0, aspect="auto")
    ax.set_xticks(range(len(algos)))
    ax.set_xticklabels(
        [f"{a}\n{format_rank_label(matrix, a)}" for a in algos],
        rotation=45,
        ha="right",
        fontsize=8,
    )
    ax.set_yticks(range(n_rows))
    ax.set_yticklabels(
        [f"{format_rank_label(matrix, a)} {a}" for a in algos[:n_rows]], fontsize=8
    )
    for i in range(n_rows):
        for j in range(len(algos)):
            ax.text(
                j, i, f"{data[i, j]:.2f}",
                ha="center", va="center", fontsize=7,
                color="white" if data[i, j] < 0.6 else "black",
            )
    ax.set_title("fraction of settings where row beats column")
    fig.colorbar(image, ax=ax, shrink=0.85)
    fig.tight_layout()
    fig.savefig(Path(path), dpi=150)
    plt.close(fig)


def render_curves(curves: Sequence[ConvergenceCurve], path) -> None:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for curve in curves:
        xs = [frac for frac, _ in curve.points]
        ys = [value for _, value in curve.points]
        label = (
            f"{curve.algorithm} ({curve.final_loss_label:.2f}, "
            f"{curve.second_final_loss_label:.2f})"
        )
        ax.plot(xs, ys, marker="o", label=label)
    ax.set_xscale("log")
    ax.set_xlabel("budget fraction")
    ax.set_ylabel("normalized mean loss")
    ax.set_ylim(-0.05, 1.05)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(Path(path), dpi=150)
    plt.close(fig)
