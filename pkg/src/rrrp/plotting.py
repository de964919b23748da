"""Figures for study, trial and benchmark outputs (written to files)."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _label(s) -> str:
    return s.policy if s.rho is None else f"{s.policy}\nrho={s.rho:g}"


def plot_study(summaries, path) -> Path:
    """Mean time before first failure and travel overhead with their intervals."""
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    labels = [_label(s) for s in summaries]
    x = np.arange(len(summaries))
    for ax, metric, title in [(axes[0], "ttff_s", "time before first failure (s)"),
                              (axes[1], "overhead", "travel time overhead")]:
        mean = np.array([s.mean[metric] for s in summaries])
        lo = np.array([s.ci[metric][0] for s in summaries])
        hi = np.array([s.ci[metric][1] for s in summaries])
        ax.bar(x, mean, color="tab:blue", alpha=0.7)
        ax.errorbar(x, mean, yerr=[mean - lo, hi - mean], fmt="none", ecolor="k", capsize=3)
        ax.set_xticks(x, labels, fontsize=8)
        ax.set_title(title)
    return _save(fig, path)


def plot_soc(trace: Sequence[Sequence[tuple[float, float]]], path, uav: int | None = None) -> Path:
    fig, ax = plt.subplots(figsize=(8, 3))
    for r, tr in enumerate(trace):
        if uav is not None and r != uav:
            continue
        if not tr:
            continue
        t, soc = zip(*tr)
        ax.plot(t, soc, lw=1, label=f"UAV {r}")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("state of charge")
    ax.set_ylim(0, 1.05)
    ax.legend(loc="lower right", fontsize=8)
    return _save(fig, path)


def plot_scenario(scenario, path) -> Path:
    fig, ax = plt.subplots(figsize=(7, 5))
    for r, tour in enumerate(scenario.uav_tours):
        pts = np.vstack([tour.points, tour.points[:1]]) if tour.cyclic else tour.points
        ax.plot(pts[:, 0], pts[:, 1], "r--", lw=0.8)
        ax.plot(tour.points[:, 0], tour.points[:, 1], "ro", ms=4, label="task nodes" if r == 0 else None)
    for k, road in enumerate(scenario.ugv_roads):
        pts = np.vstack([road.points, road.points[:1]]) if road.cyclic else road.points
        ax.plot(pts[:, 0], pts[:, 1], "b-", lw=1.5, label="UGV roads" if k == 0 else None)
    ax.set_aspect("equal")
    ax.legend(fontsize=8)
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    return _save(fig, path)


def plot_bench(rows: Sequence[dict], gap_path, runtime_path) -> tuple[Path, Path]:
    """Box plot of objective gap per size and mean runtimes on a log axis."""
    sizes = sorted({r["size"] for r in rows})
    gaps = [[r["gap_pct"] for r in rows if r["size"] == n and r["gap_pct"] is not None] for n in sizes]
    fig, ax = plt.subplots(figsize=(7, 4))
    with_gap = [(n, g) for n, g in zip(sizes, gaps) if g]
    if with_gap:
        ax.boxplot([g for _, g in with_gap], tick_labels=[str(n) for n, _ in with_gap])
    ax.set_xlabel("edges")
    ax.set_ylabel("objective increase over optimum (%)")
    p1 = _save(fig, gap_path)

    fig, ax = plt.subplots(figsize=(7, 4))
    alg = [np.mean([r["alg_ms"] for r in rows if r["size"] == n]) for n in sizes]
    ax.semilogy(sizes, alg, "o-", label="feasible pipeline")
    orc = [(n, np.mean(v)) for n in sizes
           if (v := [r["oracle_ms"] for r in rows if r["size"] == n and r["oracle_ms"] is not None])]
    if orc:
        ax.semilogy(*zip(*orc), "s--", label="branch and bound")
    ax.set_xlabel("edges")
    ax.set_ylabel("mean runtime (ms)")
    ax.legend(fontsize=8)
    p2 = _save(fig, runtime_path)
    return p1, p2
