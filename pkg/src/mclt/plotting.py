"""Figure rendering for experiment reports.

Every report path that writes delimited output also renders the matching
matplotlib figures next to it (headless Agg backend, PNG files).
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_COLORS = {"robust": "tab:blue", "starter": "tab:orange", "starter+closer": "tab:green"}


def _color(label: str):
    return _COLORS.get(label)


def _new_axes(xlabel: str, ylabel: str):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _finish(fig, ax, path: Path, legend: bool = True):
    if legend:
        ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_success_curves(results, path):
    fig, ax = _new_axes("reception overhead", "successful recovery rate")
    for r in results:
        label = r.spec.scheme
        ax.plot(r.grid, r.success_rate, label=label, color=_color(label))
    ax.set_ylim(-0.02, 1.02)
    _finish(fig, ax, Path(path))


def plot_error_curves(results, path):
    fig, ax = _new_axes("reception overhead", "symbol error rate")
    floor = 0.1 / max(r.trials * r.spec.k for r in results)
    for r in results:
        label = r.spec.scheme
        ax.semilogy(r.grid, np.maximum(r.error_rate, floor), label=label, color=_color(label))
    _finish(fig, ax, Path(path))


def save_experiment_figures(result, outdir) -> list[Path]:
    outdir = Path(outdir)
    paths = [outdir / "success_rate.png", outdir / "error_rate.png"]
    plot_success_curves([result], paths[0])
    plot_error_curves([result], paths[1])
    return paths


def save_comparison_figures(results, outdir) -> list[Path]:
    outdir = Path(outdir)
    paths = [outdir / "comparison_success_rate.png", outdir / "comparison_error_rate.png"]
    plot_success_curves(results, paths[0])
    plot_error_curves(results, paths[1])
    return paths


def plot_pmf(dists, path, logy: bool = False):
    """Stem/line plot of one or more degree distributions."""
    fig, ax = _new_axes("degree d", "probability")
    for dist in dists:
        degrees = np.arange(1, dist.k + 1)
        ax.plot(degrees, dist.pmf, marker="o", markersize=2.5, linewidth=0.8, label=dist.kind)
    if logy:
        ax.set_yscale("log")
    _finish(fig, ax, Path(path))


def plot_release_curves(k: int, table: np.ndarray, degrees, path):
    """q(d, L) against the number of solved symbols, one curve per degree."""
    fig, ax = _new_axes("input symbols solved", "release probability")
    solved = k - np.arange(1, k + 1)
    for row, d in enumerate(degrees):
        order = np.argsort(solved)
        ax.plot(solved[order], table[row][order], label=f"d={d}")
    _finish(fig, ax, Path(path))
