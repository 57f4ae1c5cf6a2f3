"""Figure rendering for evaluation runs and ablation sweeps.

Uses the Agg backend only; figures go straight to files next to the tables.
PNG metadata is pinned so repeated runs write identical bytes.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib as mpl

mpl.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .engine import AblationGrid, RunResult  # noqa: E402
from .errors import ValidationError  # noqa: E402

_SAVE_OPTS = {"dpi": 130, "metadata": {"Software": "idrank"}}

MAP_COLOR = "#2a6fbb"
PAIRWISE_COLOR = "#c44e52"


def _finish(fig, path: str | Path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
    return path


def render_run_figure(results: Sequence[RunResult], path: str | Path) -> Path:
    """Grouped bars per method: retrieval mAP next to the pairwise baseline."""
    results = list(results)
    if not results:
        raise ValidationError("no results to plot")
    labels = [r.method for r in results]
    xs = range(len(results))
    width = 0.38
    fig, ax = plt.subplots(figsize=(1.6 + 1.1 * len(results), 3.4))
    ax.bar([x - width / 2 for x in xs], [r.map_primary for r in results],
           width, label="mAP", color=MAP_COLOR)
    ax.bar([x + width / 2 for x in xs], [r.pairwise_score for r in results],
           width, label=f"pairwise ({results[0].pairwise_mode})", color=PAIRWISE_COLOR)
    ax.set_xticks(list(xs))
    ax.set_xticklabels(labels, rotation=20, ha="right")
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("score")
    ax.set_title(f"{results[0].dataset} / {results[0].encoder}")
    ax.legend(frameon=False)
    return _finish(fig, path)


def render_ablation_figure(grid: AblationGrid, path: str | Path) -> Path:
    """Mean mAP and pairwise score across the grid axis, seed-averaged."""
    if not grid.cells:
        raise ValidationError("empty grid")
    map_means = [grid.mean_map(v) for v in grid.values]
    pw_means = [grid.mean_pairwise(v) for v in grid.values]
    fig, ax = plt.subplots(figsize=(4.6, 3.4))
    if grid.axis == "sampling-strategy":
        xs = range(len(grid.values))
        width = 0.38
        ax.bar([x - width / 2 for x in xs], map_means, width, label="mAP", color=MAP_COLOR)
        ax.bar([x + width / 2 for x in xs], pw_means, width, label="pairwise", color=PAIRWISE_COLOR)
        ax.set_xticks(list(xs))
        ax.set_xticklabels([str(v) for v in grid.values])
    else:
        ax.plot(grid.values, map_means, marker="o", label="mAP", color=MAP_COLOR)
        ax.plot(grid.values, pw_means, marker="s", label="pairwise", color=PAIRWISE_COLOR)
        ax.set_xticks(list(grid.values))
    ax.set_xlabel(grid.axis)
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel(f"score (mean over {len(grid.seeds)} seed{'s' if len(grid.seeds) != 1 else ''})")
    ax.legend(frameon=False)
    return _finish(fig, path)


def render_drift_figure(deltas: Sequence[float], map_means: Sequence[float],
                        pairwise_means: Sequence[float], path: str | Path) -> Path:
    """Drift response curves: how each metric degrades as queries blend away."""
    if not deltas:
        raise ValidationError("no drift points to plot")
    fig, ax = plt.subplots(figsize=(4.6, 3.4))
    ax.plot(deltas, map_means, marker="o", label="mAP", color=MAP_COLOR)
    ax.plot(deltas, pairwise_means, marker="s", label="pairwise", color=PAIRWISE_COLOR)
    ax.set_xlabel("drift toward distractor")
    ax.set_ylabel("score")
    ax.set_ylim(0.0, 1.05)
    ax.legend(frameon=False)
    return _finish(fig, path)
