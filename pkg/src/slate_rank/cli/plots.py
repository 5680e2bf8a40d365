"""Matplotlib figures written next to the delimited artifacts.

All figures render through the Agg backend so runs work headless, and
nothing time- or host-dependent is drawn, keeping reruns byte-identical.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_DPI = 120


def _save(fig, path: str) -> None:
    fig.savefig(path, dpi=_DPI, metadata={"Software": "slate-rank"})
    plt.close(fig)


def plot_history(history, path: str) -> None:
    """Loss curves and validation metrics over epochs, best epoch marked."""
    fig, (ax_loss, ax_val) = plt.subplots(1, 2, figsize=(9.0, 3.6))
    rows = history.rows
    if rows:
        epochs = [r.epoch for r in rows]
        for t in sorted(rows[0].task_loss):
            ax_loss.plot(epochs, [r.task_loss[t] for r in rows],
                         marker=".", label=f"loss[{t}]")
        if any(r.sim_loss > 0 for r in rows):
            ax_loss.plot(epochs, [r.sim_loss for r in rows],
                         marker=".", linestyle="--", label="loss[sim]")
        ax_loss.plot(epochs, [r.total_loss for r in rows],
                     color="black", alpha=0.5, label="total")
        for t in sorted(rows[0].val_auc):
            ax_val.plot(epochs, [r.val_auc[t] for r in rows],
                        marker=".", label=f"val auc[{t}]")
        for t in sorted(rows[0].val_mae):
            ax_val.plot(epochs, [r.val_mae[t] for r in rows],
                        marker=".", linestyle="--", label=f"val mae[{t}]")
        for ax in (ax_loss, ax_val):
            ax.axvline(history.best_epoch, color="gray", alpha=0.4,
                       linewidth=1, label="best epoch")
            ax.legend(fontsize=8)
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("training loss")
    ax_val.set_xlabel("epoch")
    ax_val.set_ylabel("validation metric")
    fig.tight_layout()
    _save(fig, path)


def plot_sweep(rows, mean_by_ratio: dict, path: str) -> None:
    """Validation AUC against the similarity-weight ratio."""
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    by_seed: dict = {}
    for r in rows:
        by_seed.setdefault(r["seed"], []).append((r["ratio"], r["val_auc"]))
    for seed in sorted(by_seed):
        pts = sorted(by_seed[seed])
        ax.plot([p[0] for p in pts], [p[1] for p in pts],
                marker=".", alpha=0.4, linewidth=1, label=f"seed {seed}")
    ratios = sorted(mean_by_ratio)
    ax.plot(ratios, [mean_by_ratio[r] for r in ratios],
            marker="o", color="black", linewidth=2, label="mean")
    ax.set_xlabel("similarity weight ratio")
    ax.set_ylabel("validation auc")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def plot_alignment(l_u: np.ndarray, l_s: np.ndarray, path: str,
                   max_dims: int = 8) -> None:
    """Per-dimension histograms of the two encoder heads, overlaid."""
    dims = min(l_u.shape[1], max_dims)
    cols = min(dims, 4)
    rows = (dims + cols - 1) // cols
    fig, axes = plt.subplots(rows, cols, figsize=(2.6 * cols, 2.2 * rows),
                             squeeze=False)
    for j in range(rows * cols):
        ax = axes[j // cols][j % cols]
        if j >= dims:
            ax.axis("off")
            continue
        lo = min(l_u[:, j].min(), l_s[:, j].min())
        hi = max(l_u[:, j].max(), l_s[:, j].max())
        if lo == hi:
            lo, hi = lo - 0.5, hi + 0.5
        bins = np.linspace(lo, hi, 30)
        ax.hist(l_u[:, j], bins=bins, alpha=0.55, label="user enc")
        ax.hist(l_s[:, j], bins=bins, alpha=0.55, label="slate enc")
        ax.set_title(f"dim {j}", fontsize=8)
        ax.tick_params(labelsize=7)
        if j == 0:
            ax.legend(fontsize=7)
    fig.tight_layout()
    _save(fig, path)
