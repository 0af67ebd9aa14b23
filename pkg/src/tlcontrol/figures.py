"""Matplotlib renderings saved next to the delimited output.

Every renderer takes plain arrays plus a target path and writes one PNG;
nothing here feeds back into the numerics.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)
import numpy as np  # noqa: E402

_BRANCH_STYLE = (
    ("state -h", "tab:blue"),
    ("state 0", "tab:green"),
    ("state +h", "tab:red"),
)


def _finish(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_pdf_figure(path, x, branch_densities, marginal, gaussian, d: float) -> Path:
    """Analytic branch densities, their marginal, and the matched Gaussian."""
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    for (label, color), density in zip(_BRANCH_STYLE, branch_densities):
        ax.plot(x, density, color=color, lw=1.4, label=label)
    ax.plot(x, marginal, "k-", lw=2.0, label="marginal")
    ax.plot(x, gaussian, "k--", lw=1.2, label="Gaussian, same variance")
    for trigger in (-d, d):
        ax.axvline(trigger, color="0.75", lw=0.8, zorder=0)
    ax.set_xlabel("x [m]")
    ax.set_ylabel("probability density [1/m]")
    ax.legend(frameon=False, fontsize=9)
    return _finish(fig, path)


def render_sweep_figure(path, R, w_tlc_over_U, w_linear_over_U) -> Path:
    """Dimensionless optimal cost of both rules against R, log-log."""
    R = np.asarray(R, dtype=float)
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    ax.loglog(R, w_tlc_over_U, "o-", color="tab:red", label="switched rule")
    ax.loglog(R, w_linear_over_U, "s--", color="tab:blue", label="linear rule")
    guide = w_tlc_over_U[0] * (R / R[0]) ** -1.5
    ax.loglog(R, guide, ":", color="0.5", lw=1.0, label=r"$R^{-3/2}$ guide")
    ax.set_xlabel("R")
    ax.set_ylabel("optimal cost w / U")
    ax.legend(frameon=False, fontsize=9)
    return _finish(fig, path)


def render_histogram_figure(path, centers, sim_rows, ref_rows, labels) -> Path:
    """Sampled densities (steps) against reference curves (lines)."""
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    colors = [color for _, color in _BRANCH_STYLE] + ["k"]
    for row, label, color in zip(sim_rows, labels, colors):
        ax.step(centers, row, where="mid", color=color, lw=1.0, label=f"{label} (sampled)")
    for row, color in zip(ref_rows, colors):
        ax.plot(centers, row, color=color, lw=1.6, alpha=0.7)
    ax.set_xlabel("x [m]")
    ax.set_ylabel("probability density [1/m]")
    ax.legend(frameon=False, fontsize=8)
    return _finish(fig, path)


def render_analyze_figure(path, d_grid, w_of_d, d_opt, k2_grid, w_of_k2, k2_opt) -> Path:
    """Cost landscapes along the variance constraint, optima marked."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 3.8))
    ax1.plot(d_grid, w_of_d, color="tab:red", lw=1.5)
    ax1.axvline(d_opt, color="0.6", lw=0.8, ls="--")
    ax1.set_xlabel("trigger distance d [m]")
    ax1.set_ylabel("cost w [m/s]")
    ax1.set_title("switched rule", fontsize=10)
    ax2.plot(k2_grid, w_of_k2, color="tab:blue", lw=1.5)
    ax2.axvline(k2_opt, color="0.6", lw=0.8, ls="--")
    ax2.set_xlabel("gain k2 [1/s]")
    ax2.set_ylabel("cost E|u| [m/s]")
    ax2.set_title("linear rule", fontsize=10)
    return _finish(fig, path)
