"""Report figures rendered next to the delimited outputs.

Every command that writes a CSV also saves one PNG with the same stem
(unless output.figures is off).  Rendering uses the Agg backend so runs
work headless; figures never influence the CSV bytes.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "figure_path",
    "simulate_figure",
    "mms_figure",
    "check_weight_figure",
    "gn_figure",
    "fit_decay_figure",
    "sweep_figure",
]


def figure_path(csv_path) -> str:
    text = str(csv_path)
    stem = text[: -len(".csv")] if text.endswith(".csv") else text
    return stem + ".png"


def _save(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def simulate_figure(rows, path) -> None:
    """Energy decay curves and the outer-ring truncation monitor."""
    t = np.array([row.t for row in rows])
    fig, (ax, ax2) = plt.subplots(1, 2, figsize=(9.0, 3.6))
    for name, style in (
        ("E_classical", "-"),
        ("E_higher", "--"),
        ("W", "-."),
        ("L2_u", ":"),
    ):
        vals = np.array([getattr(row, name) for row in rows])
        positive = vals > 0.0
        if np.any(positive):
            ax.loglog(1.0 + t[positive], vals[positive], style, label=name)
    ax.set_xlabel("1 + t")
    ax.set_ylabel("value")
    ax.legend(fontsize=8)
    ax.set_title("energy decay")

    sup_u = np.array([row.sup_u for row in rows])
    ring = np.array([row.outer_ring_amp for row in rows])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(sup_u > 0.0, ring / np.maximum(sup_u, 1e-300), 0.0)
    ax2.semilogy(t, np.maximum(ratio, 1e-20))
    ax2.axhline(1e-8, color="red", lw=0.8, ls="--", label="validity level")
    ax2.set_xlabel("t")
    ax2.set_ylabel("outer ring / sup |u|")
    ax2.legend(fontsize=8)
    ax2.set_title("truncation monitor")
    _save(fig, path)


def mms_figure(rows, path) -> None:
    """Convergence plot: error vs step with a slope-2 guide per study."""
    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    for study, marker in (("joint", "o"), ("temporal", "s")):
        sel = [r for r in rows if r.study == study]
        if not sel:
            continue
        x = np.array([r.h if study == "joint" else r.dt for r in sel])
        e = np.array([r.error for r in sel])
        ax.loglog(x, e, marker + "-", label=study)
        guide = e[0] * (x / x[0]) ** 2
        ax.loglog(x, guide, "k:", lw=0.8)
    ax.set_xlabel("h (joint) / dt (temporal)")
    ax.set_ylabel("final-time L2 error")
    ax.legend(fontsize=8)
    ax.set_title("manufactured-solution convergence (dotted: slope 2)")
    _save(fig, path)


def check_weight_figure(records, path) -> None:
    """Worst normalized margin per time slice, by check."""
    fig, ax = plt.subplots(figsize=(5.6, 3.8))
    by_check: dict[str, dict[float, float]] = {}
    for rec in records:
        worst = by_check.setdefault(rec["check_id"], {})
        t = rec["t"]
        worst[t] = min(worst.get(t, math.inf), rec["margin"])
    for check, worst in sorted(by_check.items()):
        ts = sorted(worst)
        ax.plot(ts, [worst[t] for t in ts], label=check)
    ax.axhline(0.0, color="black", lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("worst normalized margin")
    ax.legend(fontsize=8)
    ax.set_title("pointwise weight inequalities")
    _save(fig, path)


def gn_figure(records, path) -> None:
    """Interpolation ratios by exponent and refinement level."""
    fig, ax = plt.subplots(figsize=(5.6, 3.8))
    ms = sorted({rec["m"] for rec in records})
    for m in ms:
        for level, marker in ((0, "o"), (1, "x")):
            vals = [
                rec["ratio"]
                for rec in records
                if rec["m"] == m and rec["level"] == level
            ]
            ax.scatter([m] * len(vals), vals, s=12, marker=marker, alpha=0.5)
    ax.set_xlabel("integrability exponent m")
    ax.set_ylabel("interpolation ratio")
    ax.set_title("ratio sampler (o: base grid, x: refined)")
    _save(fig, path)


def fit_decay_figure(t, series, fits, path) -> None:
    """Series with their fitted power laws."""
    fig, ax = plt.subplots(figsize=(5.6, 3.8))
    for column, values in series.items():
        positive = values > 0.0
        ax.loglog(1.0 + t[positive], values[positive], label=column)
        if column in fits:
            alpha, c = fits[column]
            ax.loglog(1.0 + t, c * (1.0 + t) ** (-alpha), "k--", lw=0.8)
    ax.set_xlabel("1 + t")
    ax.set_ylabel("value")
    ax.legend(fontsize=8)
    ax.set_title("decay fits (dashed: fitted power laws)")
    _save(fig, path)


def sweep_figure(summary, path) -> None:
    """Sweep outcomes: combined-norm peak per combination, colored by status."""
    fig, ax = plt.subplots(figsize=(6.4, 3.8))
    colors = {"completed": "tab:blue", "blew_up": "tab:red", "solver_failed": "tab:orange"}
    for idx, row in enumerate(summary):
        value = row["max_W"] if row["max_W"] > 0.0 else 1e-300
        ax.scatter(idx, value, color=colors.get(row["status"], "gray"), s=18)
    ax.set_yscale("log")
    ax.set_xlabel("combination index (sorted)")
    ax.set_ylabel("max W")
    handles = [
        plt.Line2D([], [], marker="o", ls="", color=c, label=s) for s, c in colors.items()
    ]
    ax.legend(handles=handles, fontsize=8)
    ax.set_title("parameter sweep")
    _save(fig, path)
