"""Slot loop, time-average metrics, sweeps, and runtime audits.

A run is deterministic given (network, params, seed): the per-slot random
state is a pure function of (seed, slot), and the controller is
deterministic.  Every slot is checked for feasibility and against the
queue-bound and activation-premise monitors; the one-slot drift inequality
is audited on a sampled schedule (every slot up to 10^4 slots, every 10th
beyond, or every slot in full-audit mode).
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import control, queues
from .model import BoundConstants, Network, Params, bound_constants, \
    validate_network
from .queues import Decision, QueueState
from .stochastic import SlotState, state_at


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, float) or isinstance(v, np.floating):
        return repr(float(v))
    return str(v)


def _row(values) -> str:
    return ",".join(_fmt(v) for v in values) + "\n"


SLOT_COLUMNS = [
    "slot", "objective", "avg_objective", "utility", "cost", "total_q",
    "max_q", "mean_e_eh", "mean_e_eg", "mean_e_me", "active_nodes",
    "active_links", "bcd_sweeps", "bcd_converged", "feasibility_violations",
    "qmax_violations", "emax_violations", "premise_c_violations",
    "premise_d_violations", "delta_violations", "audit_slack",
]

SUMMARY_COLUMNS = [
    "label", "V", "seed", "slots", "avg_objective", "avg_utility",
    "avg_cost", "avg_data_queue", "max_data_queue", "avg_energy",
    "max_energy", "q_bound", "e_bound", "availability_violations",
    "feasibility_violations", "qmax_violations", "emax_violations",
    "premise_c_violations", "premise_d_violations", "delta_violations",
    "bcd_nonconvergences", "audits", "audit_violations", "min_audit_slack",
    "max_first_active_slot", "error",
]


@dataclass
class AuditRecord:
    slot: int
    lhs: float
    bound: float
    slack: float
    ok: bool
    delta_v: float


@dataclass
class RunMetrics:
    label: str = ""
    V: float = 0.0
    seed: int = 0
    slots: int = 0
    avg_objective: float = 0.0
    avg_utility: float = 0.0
    avg_cost: float = 0.0
    avg_data_queue: float = 0.0
    max_data_queue: float = 0.0
    avg_energy: float = 0.0
    max_energy: float = 0.0
    q_bound: float = 0.0
    e_bound: float = 0.0
    availability_violations: int = 0
    feasibility_violations: int = 0
    qmax_violations: int = 0
    emax_violations: int = 0
    premise_c_violations: int = 0
    premise_d_violations: int = 0
    delta_violations: int = 0
    bcd_nonconvergences: int = 0
    audits: int = 0
    audit_violations: int = 0
    min_audit_slack: float = float("inf")
    max_first_active_slot: int = -1
    error: str = ""
    wall_clock: float = 0.0                 # not written to CSV
    first_active: np.ndarray | None = None
    avg_q_per_nf: np.ndarray | None = None
    avg_e_per_n: np.ndarray | None = None
    violation_samples: list = field(default_factory=list)

    @property
    def monitor_violations(self) -> int:
        return (self.availability_violations + self.feasibility_violations
                + self.qmax_violations + self.emax_violations
                + self.premise_c_violations + self.premise_d_violations
                + self.delta_violations + self.audit_violations)

    def summary_row(self) -> list:
        row = [getattr(self, c) for c in SUMMARY_COLUMNS]
        return [v.replace(",", ";") if isinstance(v, str) else v for v in row]


def theorem1_monitor(state: QueueState, dec: Decision, net: Network,
                     params: Params, bounds: BoundConstants) -> list[str]:
    """Queue-bound and activation-premise checks for one slot.

    `state` is the slot's starting state: the consumption and transmission
    premises quantify over it.
    """
    tol = 1e-9
    idx = net.index()
    out: list[str] = []
    if idx.n_sessions:
        over = state.q - bounds.q_max_f[None, :]
        for n, f in zip(*np.nonzero(over > tol)):
            out.append(f"data queue bound: node {n} session {f} backlog "
                       f"{state.q[n, f]:.12g} > {bounds.q_max_f[f]:.12g}")
    over_e = state.energy - bounds.theta
    for n in np.flatnonzero(over_e > tol):
        out.append(f"energy bound: node {n} stored {state.energy[n]:.12g} "
                   f"> {bounds.theta[n]:.12g}")
    cons = queues.consumption_all(dec, net)
    bad = (cons > 1e-12) & (state.energy < bounds.p_total_max - tol)
    for n in np.flatnonzero(bad):
        out.append(f"activation premise: node {n} consumes {cons[n]:.12g} "
                   f"with {state.energy[n]:.12g} < {bounds.p_total_max[n]:.12g}")
    if idx.n_links and idx.n_sessions:
        floor = params.l_max * params.x_max
        sending = dec.x > 1e-12
        for l, f in zip(*np.nonzero(sending)):
            if state.q[idx.tx[l], f] < floor - tol:
                out.append(f"transmission premise: link {l} session {f} "
                           f"sends with backlog {state.q[idx.tx[l], f]:.12g} "
                           f"< {floor}")
    return out


def lemma1_audit(before: QueueState, after: QueueState, dec: Decision,
                 slot: SlotState, net: Network, params: Params,
                 bounds: BoundConstants,
                 diag: control.Diagnostics | None = None) -> AuditRecord:
    """Assert the one-slot drift-plus-penalty inequality on realized data."""
    theta = bounds.theta
    lyap_b = 0.5 * float(np.sum(before.q ** 2)) \
        + 0.5 * float(np.sum((before.energy - theta) ** 2))
    lyap_a = 0.5 * float(np.sum(after.q ** 2)) \
        + 0.5 * float(np.sum((after.energy - theta) ** 2))
    objective = control.slot_objective(dec, slot, net, params)
    lhs = lyap_a - lyap_b - params.V * objective
    if diag is not None:
        delta_v = diag.delta_v
    else:
        weights = control.compute_weights(before, slot, net, params, bounds)
        delta_v = control.delta_v_value(dec, before, weights, net, params)
    bound = bounds.b + delta_v
    slack = bound - lhs
    ok = slack >= -1e-6 * max(1.0, abs(bound), abs(lhs))
    return AuditRecord(slot=slot.slot, lhs=lhs, bound=bound, slack=slack,
                       ok=ok, delta_v=delta_v)


def _class_means(energy: np.ndarray, idx) -> tuple[float, float, float]:
    out = []
    for mask in (idx.harvests & ~idx.buys, idx.buys & ~idx.harvests,
                 idx.harvests & idx.buys):
        out.append(float(energy[mask].mean()) if mask.any() else float("nan"))
    return tuple(out)


def run(net: Network, params: Params, seed: int | None = None,
        T: int | None = None, out_dir: str | None = None,
        csv_every: int | None = None, full_audit: bool = False,
        bcd_trace: bool = False, initial: QueueState | None = None,
        label: str = "") -> RunMetrics:
    """Simulate T slots and return exact running-average metrics.

    Writes slots.csv, state.csv, and summary.csv under out_dir when given.
    Deterministic: identical (net, params, seed) produce byte-identical
    CSV files.
    """
    t0 = time.perf_counter()
    seed = params.seed if seed is None else int(seed)
    T = params.slots if T is None else int(T)
    problems = validate_network(net, params)
    if problems:
        raise ValueError("invalid network: " + "; ".join(problems))
    bounds = bound_constants(net, params)
    idx = net.index()
    audit_every = 1 if (full_audit or T <= 10_000) else 10
    if csv_every is None:
        csv_every = 1 if T <= 10_000 else 10

    state = initial.copy() if initial is not None else QueueState.zeros(net)
    m = RunMetrics(label=label, V=params.V, seed=seed, slots=T,
                   q_bound=bounds.q_max,
                   e_bound=float(bounds.theta.max()) if len(net.nodes) else 0.0)
    first_active = np.full(idx.n_nodes, -1, dtype=int)
    sum_obj = sum_util = sum_cost = 0.0
    sum_q = np.zeros((idx.n_nodes, idx.n_sessions))
    sum_e = np.zeros(idx.n_nodes)
    max_q = 0.0
    max_e = 0.0
    min_slack = float("inf")
    slot_rows: list[str] = []
    state_rows: list[str] = []
    trace_rows: list[str] = []
    trace_slots = 0

    solver_cache: dict = {}
    try:
        for t in range(T):
            slot = state_at(seed, t, net, params)
            dec, diag = control.run_slot(state, slot, net, params, bounds,
                                         cache=solver_cache, trace=bcd_trace)

            feas = queues.check_feasible(dec, state, slot, net, params)
            mon = theorem1_monitor(state, dec, net, params, bounds)
            n_q = sum("data queue bound" in v for v in mon)
            n_e = sum("energy bound" in v for v in mon)
            n_c = sum("activation premise" in v for v in mon)
            n_d = sum("transmission premise" in v for v in mon)
            m.feasibility_violations += len(feas)
            m.qmax_violations += n_q
            m.emax_violations += n_e
            m.premise_c_violations += n_c
            m.premise_d_violations += n_d
            for v in (feas + mon)[:3]:
                if len(m.violation_samples) < 20:
                    m.violation_samples.append(f"slot {t}: {v}")

            n_delta = 0
            on = dec.p_tx > 0
            if on.any():
                over = (diag.capacities[on]
                        > params.delta * dec.p_tx[on] + 1e-9)
                n_delta = int(over.sum())
                m.delta_violations += n_delta
            if not diag.report.converged:
                m.bcd_nonconvergences += 1

            newly = (first_active < 0) & (diag.consumption > 1e-12)
            first_active[newly] = t

            audit_slack = float("nan")
            new_state = queues.step(state, dec, slot, net)
            if t % audit_every == 0:
                rec = lemma1_audit(state, new_state, dec, slot, net, params,
                                   bounds, diag)
                m.audits += 1
                if not rec.ok:
                    m.audit_violations += 1
                    if len(m.violation_samples) < 20:
                        m.violation_samples.append(
                            f"slot {t}: drift audit slack {rec.slack:.6g}")
                min_slack = min(min_slack, rec.slack)
                audit_slack = rec.slack

            sum_obj += diag.objective
            sum_util += diag.utility
            sum_cost += diag.cost
            sum_q += new_state.q
            sum_e += new_state.energy
            if idx.n_sessions:
                max_q = max(max_q, float(new_state.q.max()))
            max_e = max(max_e, float(new_state.energy.max()))

            if out_dir is not None and t % csv_every == 0:
                me = _class_means(new_state.energy, idx)
                slot_rows.append(_row([
                    t, diag.objective, sum_obj / (t + 1), diag.utility,
                    diag.cost, float(new_state.q.sum()),
                    float(new_state.q.max()) if idx.n_sessions else 0.0,
                    me[0], me[1], me[2], int(diag.active.sum()),
                    diag.active_links, diag.report.iterations,
                    diag.report.converged, len(feas), n_q, n_e, n_c, n_d,
                    n_delta, audit_slack]))
                state_rows.append(_row(
                    [t] + list(new_state.q.ravel()) + list(new_state.energy)))
            if bcd_trace and diag.report.trace and (
                    trace_slots < 5 or t % 2500 == 0):
                trace_slots += 1
                for it, val in enumerate(diag.report.trace):
                    trace_rows.append(_row([t, it, val]))
            state = new_state
    except queues.AvailabilityError as exc:
        m.availability_violations += 1
        m.error = str(exc)
        if out_dir is not None:
            os.makedirs(out_dir, exist_ok=True)
            with open(os.path.join(out_dir, "state_dump.txt"), "w") as fh:
                fh.write(f"{exc}\n\nqueues:\n{state.q!r}\n\n"
                         f"energy:\n{state.energy!r}\n")
        raise

    if T > 0:
        # pre-state monitoring covers slots 0..T-1; close out the final state
        final = theorem1_monitor(state, Decision.zeros(net), net, params,
                                 bounds)
        m.qmax_violations += sum("data queue bound" in v for v in final)
        m.emax_violations += sum("energy bound" in v for v in final)

    n = max(T, 1)
    m.avg_objective = sum_obj / n
    m.avg_utility = sum_util / n
    m.avg_cost = sum_cost / n
    m.avg_data_queue = float(sum_q.mean()) / n if sum_q.size else 0.0
    m.max_data_queue = max_q
    m.avg_energy = float(sum_e.mean()) / n if sum_e.size else 0.0
    m.max_energy = max_e
    m.min_audit_slack = min_slack
    m.first_active = first_active
    m.max_first_active_slot = int(first_active.max()) if len(first_active) else -1
    m.avg_q_per_nf = sum_q / n
    m.avg_e_per_n = sum_e / n
    m.wall_clock = time.perf_counter() - t0

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "slots.csv"), "w") as fh:
            fh.write(",".join(SLOT_COLUMNS) + "\n")
            fh.writelines(slot_rows)
        q_cols = [f"q_{nd}_{f}" for nd in range(idx.n_nodes)
                  for f in range(idx.n_sessions)]
        e_cols = [f"e_{nd}" for nd in range(idx.n_nodes)]
        with open(os.path.join(out_dir, "state.csv"), "w") as fh:
            fh.write(",".join(["slot"] + q_cols + e_cols) + "\n")
            fh.writelines(state_rows)
        if bcd_trace:
            with open(os.path.join(out_dir, "bcd_trace.csv"), "w") as fh:
                fh.write("slot,iteration,objective\n")
                fh.writelines(trace_rows)
        write_summary(os.path.join(out_dir, "summary.csv"), [m])
    return m


def write_summary(path: str, metrics: list[RunMetrics]) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(SUMMARY_COLUMNS) + "\n")
        for m in metrics:
            fh.write(_row(m.summary_row()))


def sweep_V(net: Network, params: Params, Vs, seed: int | None = None,
            T: int | None = None, out_dir: str | None = None,
            **run_kwargs) -> list[RunMetrics]:
    """One run per V with seeds derived as base + index; writes a combined
    summary.csv plus one subdirectory per cell.  A failing cell records its
    error and the other cells continue.
    """
    if not len(list(Vs)):
        raise ValueError("V list must be non-empty")
    base_seed = params.seed if seed is None else int(seed)
    out = []
    for i, v in enumerate(Vs):
        cell_params = replace(params, V=float(v))
        cell_dir = None
        if out_dir is not None:
            cell_dir = os.path.join(out_dir, f"V{v:g}_seed{base_seed + i}")
        try:
            m = run(net, cell_params, seed=base_seed + i, T=T,
                    out_dir=cell_dir, label=f"V={v:g}", **run_kwargs)
        except Exception as exc:  # keep sweeping the remaining cells
            m = RunMetrics(label=f"V={v:g}", V=float(v), seed=base_seed + i,
                           slots=T if T is not None else params.slots,
                           error=str(exc))
        out.append(m)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        write_summary(os.path.join(out_dir, "summary.csv"), out)
    return out
