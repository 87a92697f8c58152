"""Figure families rendered from simulator CSV output.

Each renderer returns a small result object carrying the plotted samples
and bound lines so callers (and tests) can verify the bounds dominate the
data without re-reading the figures.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import SchemaError, read_csv, require


@dataclass
class FigureResult:
    paths: list[str] = field(default_factory=list)
    max_queue_sample: float = 0.0
    queue_bound: float = float("inf")
    max_energy_sample: float = 0.0
    energy_bound: float = float("inf")
    # smallest bound-minus-sample gap across plotted points (rowwise for
    # sweeps, where the bound varies with V)
    queue_margin: float = float("inf")
    energy_margin: float = float("inf")

    @property
    def bounds_dominate(self) -> bool:
        return self.queue_margin >= -1e-9 and self.energy_margin >= -1e-9


def _save(fig, out_dir: str, name: str, result: FigureResult) -> None:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    result.paths.append(path)


def plot_v_sweep(summary_csv: str, out_dir: str) -> FigureResult:
    """Objective and average queue sizes against the penalty weight, with
    the analytic bound lines overlaid."""
    t = read_csv(summary_csv)
    require(t, ["V", "avg_objective", "avg_data_queue", "avg_energy",
                "q_bound", "e_bound"], summary_csv)
    if len(t["V"]) < 2:
        raise SchemaError(f"{summary_csv}: need at least 2 sweep rows, "
                          f"got {len(t['V'])}")
    order = np.argsort(t["V"])
    v = t["V"][order]
    res = FigureResult(
        max_queue_sample=float(np.max(t["avg_data_queue"])),
        queue_bound=float(np.max(t["q_bound"])),
        max_energy_sample=float(np.max(t["avg_energy"])),
        energy_bound=float(np.max(t["e_bound"])),
        queue_margin=float(np.min(t["q_bound"] - t["avg_data_queue"])),
        energy_margin=float(np.min(t["e_bound"] - t["avg_energy"])))

    fig, axes = plt.subplots(1, 3, figsize=(13, 3.6))
    axes[0].plot(v, t["avg_objective"][order], "o-")
    axes[0].set_xlabel("V")
    axes[0].set_ylabel("time-average objective")
    axes[1].plot(v, t["avg_data_queue"][order], "o-", label="average")
    axes[1].plot(v, t["q_bound"][order], "k--", label="bound")
    axes[1].set_xlabel("V")
    axes[1].set_ylabel("data queue")
    axes[1].legend()
    axes[2].plot(v, t["avg_energy"][order], "o-", label="average")
    axes[2].plot(v, t["e_bound"][order], "k--", label="capacity")
    axes[2].set_xlabel("V")
    axes[2].set_ylabel("energy queue")
    axes[2].legend()
    fig.suptitle("penalty-weight sweep")
    _save(fig, out_dir, "v_sweep.png", res)
    return res


def _pick_columns(names, prefix, values, top):
    cols = [n for n in names if n.startswith(prefix)]
    peaks = sorted(cols, key=lambda c: -float(np.nanmax(values[c])))
    return peaks[:top]


def plot_trajectories(run_dir: str, out_dir: str, top: int = 3) -> FigureResult:
    """Largest queue trajectories of one run with bound lines overlaid."""
    state_csv = os.path.join(run_dir, "state.csv")
    summary_csv = os.path.join(run_dir, "summary.csv")
    t = read_csv(state_csv)
    s = read_csv(summary_csv)
    require(t, ["slot"], state_csv)
    require(s, ["q_bound", "e_bound"], summary_csv)
    q_cols = _pick_columns(t.keys(), "q_", t, top)
    e_cols = _pick_columns(t.keys(), "e_", t, top)
    if not q_cols and not e_cols:
        raise SchemaError(f"{state_csv}: no queue trace columns")
    q_bound = float(s["q_bound"][0])
    e_bound = float(s["e_bound"][0])
    max_q = float(max((np.nanmax(t[c]) for c in q_cols), default=0.0))
    max_e = float(max((np.nanmax(t[c]) for c in e_cols), default=0.0))
    res = FigureResult(
        max_queue_sample=max_q, queue_bound=q_bound,
        max_energy_sample=max_e, energy_bound=e_bound,
        queue_margin=q_bound - max_q, energy_margin=e_bound - max_e)

    fig, axes = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    for c in q_cols:
        node, session = c[2:].split("_")
        axes[0].plot(t["slot"], t[c], label=f"node {node}, session {session}")
    axes[0].axhline(q_bound, color="k", ls="--", label="bound")
    axes[0].set_ylabel("data backlog")
    axes[0].legend(fontsize=8)
    for c in e_cols:
        axes[1].plot(t["slot"], t[c], label=f"node {c[2:]}")
    axes[1].axhline(e_bound, color="k", ls="--", label="capacity")
    axes[1].set_ylabel("stored energy")
    axes[1].set_xlabel("slot")
    axes[1].legend(fontsize=8)
    fig.suptitle(os.path.basename(os.path.abspath(run_dir)))
    _save(fig, out_dir, "trajectories.png", res)
    return res


def plot_bcd(trace_csv: str, out_dir: str) -> FigureResult:
    """Power-solver convergence traces; the ascent property is asserted on
    the plotted data."""
    t = read_csv(trace_csv)
    require(t, ["slot", "iteration", "objective"], trace_csv)
    if len(t["slot"]) == 0:
        raise SchemaError(f"{trace_csv}: no trace rows")
    res = FigureResult()
    fig, ax = plt.subplots(figsize=(6, 4))
    for slot in np.unique(t["slot"])[:8]:
        sel = t["slot"] == slot
        it = t["iteration"][sel]
        obj = t["objective"][sel]
        order = np.argsort(it)
        obj = obj[order]
        drops = np.diff(obj)
        if len(drops) and drops.min() < -1e-6 * max(1.0, float(np.abs(obj).max())):
            raise SchemaError(
                f"{trace_csv}: non-monotone trace at slot {slot:g}")
        ax.plot(it[order], obj, "o-", ms=3, label=f"slot {slot:g}")
    ax.set_xlabel("sweep")
    ax.set_ylabel("solver objective")
    ax.legend(fontsize=8)
    fig.suptitle("power allocation convergence")
    _save(fig, out_dir, "bcd_convergence.png", res)
    return res


def plot_sensitivity(root: str, out_dir: str) -> FigureResult:
    """Utility/cost bars for each labelled family summary under root."""
    families = []
    for name in sorted(os.listdir(root)):
        path = os.path.join(root, name, "summary.csv")
        if os.path.exists(path):
            families.append((name, path))
    if not families:
        raise SchemaError(f"{root}: no family summary.csv files")
    res = FigureResult()
    fig, axes = plt.subplots(1, len(families),
                             figsize=(4 * len(families), 3.6), squeeze=False)
    for ax, (name, path) in zip(axes[0], families):
        t = read_csv(path)
        require(t, ["label", "avg_utility", "avg_cost"], path)
        labels = [str(x) for x in t["label"]]
        pos = np.arange(len(labels))
        ax.bar(pos - 0.2, t["avg_utility"], width=0.4, label="utility")
        ax.bar(pos + 0.2, t["avg_cost"], width=0.4, label="cost")
        ax.set_xticks(pos, labels, rotation=20, fontsize=8)
        ax.set_title(name, fontsize=10)
        ax.legend(fontsize=8)
    _save(fig, out_dir, "sensitivity.png", res)
    return res
