"""Learning-curve figure: trajectory, fitted curve, point estimate and bounds."""

from __future__ import annotations

import matplotlib
from matplotlib.figure import Figure

import numpy as np

from .curvefit import evaluate_curve

# fixed ids and no timestamp keep the SVG byte-stable across runs
_SVG_RC = {"svg.hashsalt": "learncurve", "svg.fonttype": "path"}


def curve_grid(trajectory, N: int, points: int = 200) -> np.ndarray:
    """``points`` evenly spaced sizes over ``[n_1, N]`` merged with the trajectory sizes."""
    grid = np.linspace(float(trajectory.sizes[0]), float(N), points)
    return np.unique(np.concatenate([grid, trajectory.sizes]))


def plot_report(report, path, title=None):
    """Write the report's learning-curve figure to ``path`` (format from the suffix)."""
    traj = report.trajectory
    N = report.n_total
    grid = curve_grid(traj, N)
    with matplotlib.rc_context(_SVG_RC):
        fig = Figure(figsize=(6.4, 4.4))
        ax = fig.add_subplot()
        ax.plot(grid, evaluate_curve(report.curve, grid), color="tab:blue", lw=1.6,
                label=f"fitted curve ({report.curve.family})")
        ax.plot(traj.sizes, traj.estimates, "o", color="black", ms=4, label="trajectory")
        ax.plot([N], [report.point_estimate], "D", color="tab:red", ms=7,
                label=f"f(N) = {report.point_estimate:.3f}")
        ax.axvline(report.n_opt, color="gray", ls="--", lw=1, label=f"n_opt = {report.n_opt}")
        marker = "^" if report.metric.increasing else "v"
        ax.plot([report.n_opt], [report.bound], marker, color="tab:green", ms=8,
                label=f"bound = {report.bound:.3f}")
        ax.plot([N], [report.bound_bc], marker, color="tab:orange", ms=8,
                label=f"bias-corrected bound = {report.bound_bc:.3f}")
        ax.set_xlabel("training size n")
        ax.set_ylabel(report.metric.value.upper())
        if title:
            ax.set_title(title)
        ax.legend(loc="best", fontsize=8, frameon=False)
        fig.tight_layout()
        fig.savefig(path, metadata={"Date": None})


def plot_coverage(result, path, nominal=0.95):
    """Bar chart of bound coverage per learner and method with the nominal level."""
    rows = [r for r in result.summary() if r["coverage"] != ""]
    methods = list(dict.fromkeys(r["method"] for r in rows))
    learners = list(dict.fromkeys(r["learner"] for r in rows))
    width = 0.8 / max(len(methods), 1)
    with matplotlib.rc_context(_SVG_RC):
        fig = Figure(figsize=(6.4, 4.0))
        ax = fig.add_subplot()
        for k, method in enumerate(methods):
            cov = [next((r["coverage"] for r in rows
                         if r["learner"] == lr and r["method"] == method), np.nan)
                   for lr in learners]
            ax.bar(np.arange(len(learners)) + (k - (len(methods) - 1) / 2) * width, cov,
                   width, label=method)
        ax.axhline(nominal, color="black", ls="--", lw=1, label=f"nominal {nominal:g}")
        ax.set_xticks(np.arange(len(learners)), learners)
        ax.set_ylim(0, 1.05)
        ax.set_ylabel("coverage")
        ax.legend(loc="lower right", fontsize=8, frameon=False)
        fig.tight_layout()
        fig.savefig(path, metadata={"Date": None})
