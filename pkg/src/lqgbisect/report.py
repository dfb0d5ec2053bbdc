"""Figure rendering for solver outputs (headless, files only)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .moments import CostPair
from .simulate import EmpiricalStats, TrajectoryRecord
from .solver import SweepTable


def sweep_figure(table: SweepTable, path) -> None:
    """Plot the constraint gap f against the multiplier, marking the root."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(table.lambdas, table.f, marker=".", lw=1.2)
    ax.axhline(0.0, color="k", lw=0.8)
    crossings = np.nonzero((table.f[:-1] > 0) & (table.f[1:] <= 0))[0]
    if crossings.size:
        i = int(crossings[0])
        ax.axvspan(table.lambdas[i], table.lambdas[i + 1], color="tab:orange", alpha=0.3,
                   label="sign change")
        ax.legend()
    ax.set_xlabel(r"multiplier $\lambda$")
    ax.set_ylabel(r"constraint gap $f(\lambda)$")
    ax.set_title("Constraint gap vs. multiplier")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def trajectory_figure(record: TrajectoryRecord, path) -> None:
    """Plot state components and inputs of one rollout over the horizon."""
    n = record.states.shape[1]
    m = record.inputs.shape[1]
    fig, (ax_x, ax_u) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    steps = np.arange(record.states.shape[0])
    for i in range(n):
        ax_x.plot(steps, record.states[:, i], lw=1.0, label=f"x_{i + 1}")
    ax_x.set_ylabel("state")
    ax_x.legend(ncol=min(n, 4), fontsize=8)
    ax_x.grid(alpha=0.3)
    for j in range(m):
        ax_u.plot(steps[:-1], record.inputs[:, j], lw=1.0, label=f"u_{j + 1}")
    ax_u.set_xlabel("step k")
    ax_u.set_ylabel("input")
    ax_u.legend(fontsize=8)
    ax_u.grid(alpha=0.3)
    fig.suptitle("Closed-loop rollout")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def histogram_figure(stats: EmpiricalStats, path, analytic: CostPair | None = None) -> None:
    """Histogram the per-sample costs, with analytic means overlaid if given."""
    fig, (ax_o, ax_c) = plt.subplots(1, 2, figsize=(9, 4))
    bins = min(60, max(10, stats.samples // 25))
    ax_o.hist(stats.objective_samples, bins=bins, color="tab:blue", alpha=0.8)
    ax_o.axvline(stats.objective_mean, color="k", lw=1.2, label="empirical mean")
    if analytic is not None:
        ax_o.axvline(analytic.Jp, color="tab:red", lw=1.2, ls="--", label="analytic")
    ax_o.set_xlabel("objective cost")
    ax_o.set_ylabel("count")
    ax_o.legend(fontsize=8)
    ax_c.hist(stats.constraint_samples, bins=bins, color="tab:green", alpha=0.8)
    ax_c.axvline(stats.constraint_mean, color="k", lw=1.2, label="empirical mean")
    if analytic is not None:
        ax_c.axvline(analytic.C, color="tab:red", lw=1.2, ls="--", label="analytic")
    ax_c.set_xlabel("constraint cost")
    ax_c.legend(fontsize=8)
    fig.suptitle(f"Sampled costs ({stats.samples} rollouts, seed {stats.seed})")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
