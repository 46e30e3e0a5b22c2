"""Figures rendered from experiment rows.  Files only; no interactive backends."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_sweep(rows, path):
    """Objective against theta, one line per method (mean over seeds)."""
    series = defaultdict(lambda: defaultdict(list))
    for r in rows:
        series[r["method"]][float(r["theta_deg"])].append(float(r["p_value"]))
    fig, ax = plt.subplots(figsize=(6, 4))
    for method, points in series.items():
        thetas = sorted(points)
        ax.plot(thetas, [sum(points[t]) / len(points[t]) for t in thetas], marker="o", ms=3, label=method)
    n = rows[0]["n"] if rows else "?"
    ax.set_xlabel("theta (degrees)")
    ax.set_ylabel(rows[0]["measurement"].replace("_", " ") + " probability" if rows else "probability")
    ax.set_title(f"n = {n}")
    ax.set_xlim(0, 180)
    ax.grid(alpha=0.3)
    ax.legend()
    return _save(fig, path)


def plot_trace(record, path):
    """Objective and symmetry index over iterations of one run."""
    its = [row[0] for row in record.trajectory]
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(6, 5), sharex=True)
    top.plot(its, [row[1] for row in record.trajectory])
    top.set_ylabel("error probability")
    top.set_title(f"{record.method}, n = {record.n}, theta = {record.theta:g}")
    bottom.plot(its, [row[2] for row in record.trajectory], color="tab:red")
    bottom.set_ylabel("symmetry index")
    bottom.set_xlabel("iteration")
    for ax in (top, bottom):
        ax.grid(alpha=0.3)
    return _save(fig, path)


def plot_symmetry_scatter(records, path):
    """Symmetry index against objective across the iterates of several runs."""
    fig, ax = plt.subplots(figsize=(5, 4))
    for rec in records:
        ax.scatter([row[2] for row in rec.trajectory], [row[1] for row in rec.trajectory], s=6,
                   label=f"{rec.method} seed {rec.seed}")
    ax.set_xlabel("symmetry index")
    ax.set_ylabel("error probability")
    ax.grid(alpha=0.3)
    ax.legend(fontsize="small")
    return _save(fig, path)


def plot_averaging(trials, path):
    """Original objective per trial with the min-max range of its averaged states."""
    fig, ax = plt.subplots(figsize=(7, 4))
    xs = [t.trial for t in trials]
    ax.vlines(xs, [t.averaged_min for t in trials], [t.averaged_max for t in trials], color="tab:blue",
              label="averaged (min to max)")
    ax.scatter(xs, [t.original for t in trials], facecolors="none", edgecolors="k", label="original")
    ax.set_xlabel("trial")
    ax.set_ylabel("error probability")
    ax.grid(alpha=0.3)
    ax.legend()
    return _save(fig, path)
