"""Figure rendering for the CLI report path.

Only the command-line layer imports this module, so the numerical core
stays free of any plotting dependency. All functions write a PNG to the
given path and return the path.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .wigner import R_NEGATIVITY_THRESHOLD, WignerGrid


def plot_wigner_grid(grid: WignerGrid, path, title: str = "Wigner function"):
    fig, ax = plt.subplots(figsize=(7, 5))
    mesh = ax.pcolormesh(
        grid.xi_axis, grid.chi_axis, grid.values.T, cmap="RdBu_r", shading="auto"
    )
    fig.colorbar(mesh, ax=ax, label=r"$W(\xi,\chi)$ [1/rad$^2$]")
    ax.set_xlabel(r"$\xi$ [rad]")
    ax.set_ylabel(r"$\chi$ [rad]")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_wmin_curve(r_values, w_values, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(r_values, w_values, "b-", lw=1.5)
    ax.axhline(0.0, color="gray", lw=0.8)
    ax.axvline(R_NEGATIVITY_THRESHOLD, color="gray", lw=0.8, ls="--",
               label=r"$r = 1/\sqrt{3}$")
    ax.set_xlabel(r"Bloch radius $r$")
    ax.set_ylabel(r"$W_{\min}$ [1/rad$^2$]")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_point_scan(series, path, xlabel, title=""):
    """Measured points with error bars overlaid on theory curves.

    ``series`` is a list of dicts with keys ``label``, ``x``, ``y``, ``yerr``
    and optionally ``theory_x``/``theory_y``.
    """
    fig, ax = plt.subplots(figsize=(7, 4.5))
    colors = plt.cm.viridis(np.linspace(0.0, 0.85, max(len(series), 2)))
    for entry, color in zip(series, colors):
        ax.errorbar(
            entry["x"], entry["y"], yerr=entry.get("yerr"),
            fmt="o", ms=4, capsize=2, color=color, label=entry.get("label"),
        )
        if "theory_x" in entry:
            ax.plot(entry["theory_x"], entry["theory_y"], "-", lw=1.2, color=color)
    ax.axhline(0.0, color="gray", lw=0.8)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(r"$W$ [1/rad$^2$]")
    if title:
        ax.set_title(title)
    if any(entry.get("label") for entry in series):
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_wmin_vs_r(points, fit, path):
    """Per-time Wigner minima against the model Bloch radius, with fit line."""
    rs = [p[0] for p in points]
    ws = [p[1] for p in points]
    errs = [p[2] for p in points]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(rs, ws, yerr=errs, fmt="ko", ms=5, capsize=3, label="campaign minima")
    r_line = np.linspace(0.0, 1.0, 100)
    if fit is not None:
        slope = fit.parameters["slope"]
        intercept = fit.parameters["intercept"]
        ax.plot(r_line, slope * r_line + intercept, "gray", lw=1.5, label="fit")
    analytic = (1.0 - math.sqrt(3.0) * r_line) / (2.0 * math.pi**2)
    ax.plot(r_line, analytic, "b--", lw=1.0, label="model")
    ax.axhline(0.0, color="gray", lw=0.8)
    ax.axvline(R_NEGATIVITY_THRESHOLD, color="gray", lw=0.8, ls=":")
    ax.set_xlabel(r"Bloch radius $r$")
    ax.set_ylabel(r"$W_{\min}$ [1/rad$^2$]")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_ramsey(delays, p_survival, p_err, path, fit_curve=None):
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.errorbar(delays, p_survival, yerr=p_err, fmt="ko", ms=4, capsize=2,
                label="simulated")
    if fit_curve is not None:
        ax.plot(fit_curve[0], fit_curve[1], "r-", lw=1.2, label="fit")
    ax.set_xlabel("delay [ms]")
    ax.set_ylabel("survival probability")
    ax.set_ylim(-0.05, 1.05)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_tomography_series(times, r_values, purities, path, model_times=None, model_r=None):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(times, r_values, "ko", ms=5, label="r (tomography)")
    ax.plot(times, purities, "s", color="tab:blue", ms=5, label="purity")
    if model_times is not None:
        ax.plot(model_times, model_r, "k--", lw=1.0, label="r (model)")
    ax.set_xlabel("evolution time [ms]")
    ax.set_ylabel("value")
    ax.set_ylim(0.0, 1.05)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
