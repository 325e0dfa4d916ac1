"""Figure rendering for the CLI report paths.

Every report command writes a PNG next to its delimited output.  The Agg
backend is forced and PNG metadata is stripped, so figures are
byte-identical across re-runs of the same configuration.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_SAVE = {"dpi": 130, "metadata": {"Software": None}}


def _style(ax):
    ax.grid(True, alpha=0.3)
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)


def plot_fit_history(loss, accuracy, path):
    """Loss and pair-accuracy curves over training epochs."""
    epochs = np.arange(1, len(loss) + 1)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.4))
    ax1.plot(epochs, loss, color="#3465a4")
    ax1.set_xlabel("epoch")
    ax1.set_ylabel("pairwise loss")
    ax2.plot(epochs, accuracy, color="#4e9a06")
    ax2.set_xlabel("epoch")
    ax2.set_ylabel("pair accuracy")
    ax2.set_ylim(-0.02, 1.02)
    for ax in (ax1, ax2):
        _style(ax)
    fig.tight_layout()
    fig.savefig(path, **_SAVE)
    plt.close(fig)


def plot_trajectory(report, path):
    """Mixture duality gap (log-log), oracle error, and policy entropy."""
    ts = np.array([cp.t for cp in report.checkpoints], dtype=float)
    gaps = np.array([cp.gap for cp in report.checkpoints])
    eps = np.array([cp.epsilon for cp in report.checkpoints])
    ent = np.array([cp.policy.entropy() for cp in report.checkpoints])
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.4))
    positive = gaps > 0
    if np.any(positive):
        ax1.loglog(ts[positive], gaps[positive], marker="o", ms=3,
                   color="#3465a4", label="mixture gap")
        ref = gaps[positive][0] * np.sqrt(ts[positive][0] / ts[positive])
        ax1.loglog(ts[positive], ref, ls="--", color="#888888", label=r"$t^{-1/2}$ reference")
    if np.any(eps > 0):
        ax1.loglog(ts[eps > 0], eps[eps > 0], marker="s", ms=3,
                   color="#cc0000", label="oracle error")
    ax1.set_xlabel("iteration")
    ax1.set_ylabel("duality gap")
    ax1.legend(fontsize=8)
    ax2.semilogx(ts, ent, marker="o", ms=3, color="#4e9a06")
    ax2.set_xlabel("iteration")
    ax2.set_ylabel("policy entropy (nats)")
    for ax in (ax1, ax2):
        _style(ax)
    fig.tight_layout()
    fig.savefig(path, **_SAVE)
    plt.close(fig)


def plot_decomposition(matrix, dec, path):
    """Heatmaps of the game and its transitive/cyclic parts on a shared scale."""
    parts = [("game", matrix.s), ("transitive", dec.T), ("cyclic", dec.C)]
    vmax = max(float(np.max(np.abs(a))) for _, a in parts) or 1.0
    fig, axes = plt.subplots(1, 3, figsize=(10, 3.2))
    for ax, (title, a) in zip(axes, parts):
        im = ax.imshow(a, cmap="RdBu_r", vmin=-vmax, vmax=vmax)
        ax.set_title(title, fontsize=10)
        ax.set_xticks([])
        ax.set_yticks([])
    fig.colorbar(im, ax=axes, shrink=0.85)
    fig.savefig(path, **_SAVE)
    plt.close(fig)
