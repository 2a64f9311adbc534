"""Figure rendering for the CLI report paths.

Every function takes data plus an output path and writes a PNG; nothing here
opens interactive windows (the Agg backend is forced at import).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .stats import freedman_diaconis_bins


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_estimate_histogram(estimates, path, title="AMS estimates") -> None:
    """Histogram of the per-realization probability estimates."""
    estimates = np.asarray(estimates, dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(estimates, bins=freedman_diaconis_bins(estimates), color="C0", edgecolor="black")
    ax.axvline(estimates.mean(), color="C3", linestyle="--", label=f"mean = {estimates.mean():.3g}")
    ax.set_xlabel("estimated probability")
    ax.set_ylabel("count")
    ax.set_title(title)
    ax.legend()
    _finish(fig, path)


def plot_decay_fit(inv_eps, log_p, fit, path) -> None:
    """log p against 1/eps with the least-squares line overlaid."""
    inv_eps = np.asarray(inv_eps, dtype=float)
    log_p = np.asarray(log_p, dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(inv_eps, log_p, "o", color="C0", label="estimates")
    grid = np.linspace(inv_eps.min(), inv_eps.max(), 100)
    ax.plot(grid, fit.slope * grid + fit.intercept, "-", color="C3",
            label=f"slope = {fit.slope:.4g}, R$^2$ = {fit.r_squared:.4f}")
    ax.set_xlabel(r"$1/\varepsilon$")
    ax.set_ylabel(r"$\log \hat{p}$")
    ax.set_title("Exponential decay of the transition probability")
    ax.legend()
    _finish(fig, path)


def plot_crossing_histogram(values, path, title="Crossings of the mean-zero line") -> None:
    """Histogram of the transverse coordinate at reaction-coordinate zero."""
    values = np.asarray(values, dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(values, bins=freedman_diaconis_bins(values), color="C0", edgecolor="black")
    ax.set_xlabel(r"$(x - y)/2$ at $\xi = 0$")
    ax.set_ylabel("count")
    ax.set_title(title)
    _finish(fig, path)


def plot_two_particle_trajectories(trajectories, critical_points, path,
                                   title="Reactive trajectories") -> None:
    """Overlay of (x, y) reactive paths with the critical points marked."""
    fig, ax = plt.subplots(figsize=(5.5, 5.5))
    for states in trajectories:
        ax.plot(states[:, 0], states[:, 1], lw=0.5, alpha=0.5, color="C0")
    markers = {"minimum": ("o", "C2"), "maximum": ("s", "C3")}
    for cp in critical_points:
        mark, color = markers.get(cp.classification, ("x", "k"))
        ax.plot(cp.location[0], cp.location[1], mark, color=color, markersize=8)
    ax.set_xlabel("$x$")
    ax.set_ylabel("$y$")
    ax.set_title(title)
    ax.set_aspect("equal")
    _finish(fig, path)


def plot_space_time(states, dt, path, title="Reactive trajectory") -> None:
    """Space-time heatmap of a grid-model trajectory (node vs step)."""
    states = np.asarray(states, dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4))
    mesh = ax.imshow(
        states.T, origin="lower", aspect="auto", cmap="RdBu_r", vmin=-1.2, vmax=1.2,
        extent=(0.0, states.shape[0] * dt, 0.0, 1.0))
    fig.colorbar(mesh, ax=ax, label="$x$")
    ax.set_xlabel("time")
    ax.set_ylabel("node position")
    ax.set_title(title)
    _finish(fig, path)


def plot_bifurcation_diagram(parameter_values, point_sets, path,
                             parameter_name="kappa") -> None:
    """Critical-point coordinates against the coupling parameter."""
    fig, ax = plt.subplots(figsize=(6, 4))
    colors = {"minimum": "C2", "maximum": "C3"}
    for value, points in zip(parameter_values, point_sets):
        for cp in points:
            color = colors.get(cp.classification, "C0")
            ax.plot(value, cp.location[0], ".", color=color, markersize=5)
    ax.set_xlabel(parameter_name)
    ax.set_ylabel("critical-point $x$ coordinate")
    ax.set_title("Critical points vs coupling strength")
    _finish(fig, path)
