"""Figure rendering for the experiment reports.

Every function writes a PNG next to the delimited output it illustrates and
returns the path.  Rendering is headless (Agg) and timestamp-free so reruns
produce identical bytes.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .dataset import Dataset, feature_matrix
from .expr_core import ExprTree, evaluate_matrix
from .series_tools import Series, series_eval

__all__ = [
    "save_fit_plot",
    "save_history_plot",
    "save_surface_plot",
    "save_error_vs_order_plot",
    "save_truncation_plot",
    "save_benchmark_plot",
]


def _finish(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_fit_plot(dataset: Dataset, tree: ExprTree, path) -> Path:
    """Training data against the evolved expression on a dense grid."""
    grid = np.linspace(dataset.parameter_grid.min(), dataset.parameter_grid.max(), 400)
    dense = feature_matrix(dataset.feature_spec, grid)
    pred = evaluate_matrix(tree, dense)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(grid, pred, label="SR expression", color="tab:blue")
    ax.scatter(dataset.parameter_grid, dataset.target, s=18, color="black", zorder=3, label="training data")
    ax.set_xlabel(dataset.param_name)
    ax.set_ylabel("target")
    ax.legend()
    return _finish(fig, path)


def save_history_plot(results, path) -> Path:
    """Best-so-far penalized fitness per generation, one line per seed."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for r in results:
        ax.plot(range(len(r.fitness_history)), r.fitness_history, label=f"seed {r.seed}")
    ax.set_yscale("log")
    ax.set_xlabel("generation")
    ax.set_ylabel("best penalized fitness")
    ax.legend(fontsize=8)
    return _finish(fig, path)


def save_surface_plot(orders, params, surface, path, title: str = "") -> Path:
    """RRMSE heat map over (order, parameter)."""
    fig, ax = plt.subplots(figsize=(6.4, 4))
    params = np.asarray(params)
    with np.errstate(divide="ignore"):
        z = np.log10(np.maximum(np.asarray(surface), 1e-300))
    mesh = ax.pcolormesh(params, orders, z, shading="nearest", cmap="viridis")
    ax.set_xscale("log")
    ax.set_xlabel("parameter")
    ax.set_ylabel("truncation order n")
    if title:
        ax.set_title(title)
    fig.colorbar(mesh, ax=ax, label="log10 RRMSE")
    return _finish(fig, path)


def save_error_vs_order_plot(curves: dict, orders, path, title: str = "") -> Path:
    """RRMSE against truncation order for one or more labelled series."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, errs in curves.items():
        ax.plot(orders, errs, marker="o", label=label)
    ax.set_yscale("log")
    ax.set_xlabel("order n")
    ax.set_ylabel("RRMSE")
    if title:
        ax.set_title(title)
    ax.legend()
    return _finish(fig, path)


def save_truncation_plot(params, optimal_orders, path) -> Path:
    """Optimal truncation order across the parameter grid."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.step(params, optimal_orders, where="mid")
    ax.set_xscale("log")
    ax.set_xlabel("parameter")
    ax.set_ylabel("optimal truncation order")
    return _finish(fig, path)


def save_benchmark_plot(series: Series, exact_fn, params, orders, path) -> Path:
    """Exact solution with partial sums of the benchmark series overlaid."""
    params = np.asarray(params)
    fig, ax = plt.subplots(figsize=(6, 4))
    exact = [exact_fn(p) for p in params]
    ax.plot(params, exact, color="black", lw=2, label="exact")
    for n in orders:
        ax.plot(params, [series_eval(series, p, n) for p in params], "--", label=f"n = {n}")
    ax.set_xlabel(series.variable)
    ax.set_ylabel("value")
    ax.legend(fontsize=8)
    return _finish(fig, path)
