"""Figure rendering for reports: saved PNG files, no interactive backend.

Each helper writes one figure to the given path and closes it, so batch
runs cannot leak figure state. Colors and sizes are fixed for
reproducible output across runs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_DPI = 150


def _target_label(target) -> str:
    j, r, s = target
    return f"({j},{r})" if s == 1 else f"({j},{r},s={s})"


def ci_forest(intervals, path, title: str = "confidence intervals") -> None:
    """Horizontal interval plot, one row per target, point at the
    de-biased estimate."""
    n = len(intervals)
    fig, ax = plt.subplots(figsize=(7, max(2.5, 0.28 * n + 1.2)))
    ys = np.arange(n)[::-1]
    for y, ci in zip(ys, intervals):
        ax.plot([ci.lower, ci.upper], [y, y], color="#1f77b4", lw=1.6)
        ax.plot(ci.estimate, y, "o", color="#1f77b4", ms=4)
    ax.axvline(0.0, color="#888888", lw=0.8, ls=":")
    ax.set_yticks(ys)
    ax.set_yticklabels([_target_label(ci.target) for ci in intervals], fontsize=8)
    ax.set_xlabel("coefficient")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def null_histogram(result, path, title: str = "bootstrap null distribution") -> None:
    """Histogram of the bootstrap statistics with the observed statistic
    and the critical value marked."""
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.hist(result.null_stats, bins=40, color="#9ecae1", edgecolor="white")
    ax.axvline(result.critical_value, color="#d62728", ls="--", lw=1.4,
               label=f"critical value ({1 - result.alpha:.0%})")
    ax.axvline(result.statistic, color="#2ca02c", lw=1.6,
               label=f"observed (p={result.p_value:.4g})")
    ax.set_xlabel("max studentised statistic")
    ax.set_ylabel("replicates")
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def lambda_sweep(pairs, alpha: float, path) -> None:
    """p-value versus penalty level for the sweep mode of the test
    command."""
    lams = [lam for lam, _ in pairs]
    pvals = [p for _, p in pairs]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(lams, pvals, "o-", color="#1f77b4")
    ax.axhline(alpha, color="#d62728", ls="--", lw=1.2, label=f"alpha={alpha:g}")
    ax.set_xlabel("penalty")
    ax.set_ylabel("p-value")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title("p-value across penalty levels")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def coverage_heatmap(matrix: np.ndarray, level: float, method: str, path) -> None:
    """Coverage grid with the nominal level as the colour midpoint."""
    matrix = np.asarray(matrix)
    p = matrix.shape[0]
    fig, ax = plt.subplots(figsize=(0.6 * p + 2.2, 0.6 * p + 1.8))
    im = ax.imshow(matrix, vmin=max(0.0, level - 0.15),
                   vmax=min(1.0, level + 0.05), cmap="RdYlGn")
    for j in range(p):
        for r in range(p):
            ax.text(r, j, f"{matrix[j, r]:.2f}", ha="center", va="center",
                    fontsize=7)
    ax.set_xticks(range(p))
    ax.set_xticklabels([f"r{r + 1}" for r in range(p)], fontsize=8)
    ax.set_yticks(range(p))
    ax.set_yticklabels([f"j{j + 1}" for j in range(p)], fontsize=8)
    ax.set_title(f"{method} coverage, nominal {level:.0%}")
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def rejection_bars(labels, rates: np.ndarray, alphas, path,
                   title: str = "rejection frequency") -> None:
    """Grouped bars: one group per scenario, one bar per alpha."""
    rates = np.asarray(rates)
    n_s, n_a = rates.shape
    width = 0.8 / n_a
    xs = np.arange(n_s)
    fig, ax = plt.subplots(figsize=(max(6.0, 0.9 * n_s + 2), 4))
    palette = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728"]
    for a, alpha in enumerate(alphas):
        ax.bar(xs + (a - (n_a - 1) / 2) * width, rates[:, a], width=width,
               label=f"alpha={alpha:g}", color=palette[a % len(palette)])
        ax.axhline(alpha, color=palette[a % len(palette)], ls=":", lw=1.0)
    ax.set_xticks(xs)
    ax.set_xticklabels(labels, fontsize=8, rotation=20, ha="right")
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("rejection rate")
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
