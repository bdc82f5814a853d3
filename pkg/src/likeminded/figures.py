"""Report figures rendered to files next to the delimited outputs.

Only diagnostic plots live here: the influencer rank distribution with its
fitted power law, the filter funnel, and the consensus-matrix heatmap.
Graph layouts, word clouds and Sankey rendering are left to external
viewers fed by the export module.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .compare import FilterReport
from .langcluster import ConsensusMatrix
from .netcluster import InfluencerRanking, PowerLawFit


def plot_rank_distribution(
    ranking: InfluencerRanking, fit: PowerLawFit | None, path: str | Path
) -> Path:
    """Retweet counts over rank on log-log axes, with the fitted curve."""
    path = Path(path)
    ranks = np.arange(1, len(ranking.entries) + 1)
    counts = np.array([count for _, count in ranking.entries], dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ranks, counts, "o", markersize=3, label="retweet count")
    if fit is not None and not fit.degenerate:
        ax.plot(
            ranks,
            fit.b * ranks ** (-fit.m),
            "-",
            label=f"fit: {fit.b:.0f} * x^(-{fit.m:.3f}), r²={fit.r_squared:.3f}",
        )
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("influencer rank")
    ax.set_ylabel("retweets")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_filter_funnel(report: FilterReport, path: str | Path) -> Path:
    """Horizontal in/out bars per funnel stage, grouped by side and kind."""
    path = Path(path)
    stages = list(report.stages)
    fig, ax = plt.subplots(figsize=(8, max(2.0, 0.6 * len(stages) + 1)))
    y = np.arange(len(stages))
    ax.barh(y + 0.2, [st.items_in for st in stages], height=0.4, label="in", color="#7fa8d9")
    ax.barh(y - 0.2, [st.items_out for st in stages], height=0.4, label="out", color="#2d5d8f")
    ax.set_yticks(y)
    ax.set_yticklabels([f"{st.side}/{st.kind}: {st.name}" for st in stages], fontsize=7)
    ax.invert_yaxis()
    ax.set_xlabel("items")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_consensus_heatmap(matrix: ConsensusMatrix, path: str | Path) -> Path:
    """Co-clustering counts as a heatmap, users in id order."""
    path = Path(path)
    order = sorted(range(len(matrix.users)), key=lambda i: matrix.users[i])
    counts = matrix.counts[np.ix_(order, order)] if len(order) else matrix.counts
    fig, ax = plt.subplots(figsize=(5, 4))
    image = ax.imshow(counts, cmap="viridis", vmin=0, vmax=max(1, matrix.rounds))
    fig.colorbar(image, ax=ax, label="co-clustered rounds")
    ax.set_xlabel("user")
    ax.set_ylabel("user")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
