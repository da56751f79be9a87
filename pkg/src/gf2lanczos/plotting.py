"""Figures written next to the key=value reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def _finish(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_rank_defect(result, path, reference: float = 0.764) -> None:
    hist = np.bincount(result.defects)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(np.arange(hist.size), hist / result.trials, color="0.4", width=0.7)
    ax.set_xlabel(f"rank defect of a random symmetric {result.n}x{result.n} matrix")
    ax.set_ylabel("fraction of trials")
    ax.set_title(f"mean {result.mean:.4f} over {result.trials} trials (reference {reference})")
    _finish(fig, path)


def plot_step_ranks(reports, width: int, path) -> None:
    """Per-step rank of the selection mask for one or more solves."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for k, rep in enumerate(reports):
        ax.plot(rep.ranks, drawstyle="steps-mid", lw=1, alpha=0.8, label=f"seed {rep.seed}" if k < 8 else None)
    ax.axhline(width - 0.764, color="k", ls=":", lw=1, label="n - 0.764")
    ax.set_xlabel("step")
    ax.set_ylabel("rank of d_i")
    ax.set_ylim(0, width + 2)
    if len(reports) <= 8:
        ax.legend(fontsize=8, loc="lower left")
    _finish(fig, path)


def plot_bench(rows: list[dict], path) -> None:
    """Seconds per iteration for each repetition, one bar per run."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(range(len(rows)), [r["sec_per_iter"] * 1e3 for r in rows], color="0.4")
    ax.set_xlabel("repetition")
    ax.set_ylabel("ms per iteration")
    _finish(fig, path)
