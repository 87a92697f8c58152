"""Data and energy queue state, exact slot dynamics, feasibility checks.

Data backlogs at each session's destination are pinned to zero (arriving
data is absorbed).  Energy availability is a hard precondition of ``step``:
the control plane must never spend energy a node does not hold, so a
violation here is a controller bug, not a recoverable event.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Network, Params
from .powalloc import link_capacities
from .stochastic import SlotState

TOL = 1e-9


class AvailabilityError(RuntimeError):
    """A decision spends energy a node does not have."""


@dataclass
class QueueState:
    q: np.ndarray        # (N, F) data backlogs
    energy: np.ndarray   # (N,) stored energy

    @classmethod
    def zeros(cls, net: Network) -> "QueueState":
        return cls(q=np.zeros((net.n_nodes, net.n_sessions)),
                   energy=np.zeros(net.n_nodes))

    def copy(self) -> "QueueState":
        return QueueState(q=self.q.copy(), energy=self.energy.copy())


@dataclass
class Decision:
    e: np.ndarray      # (N,) harvested
    g: np.ndarray      # (N,) purchased
    r: np.ndarray      # (F,) admitted source rates
    p_tx: np.ndarray   # (L,) transmit powers
    x: np.ndarray      # (L, F) routed rates

    @classmethod
    def zeros(cls, net: Network) -> "Decision":
        return cls(e=np.zeros(net.n_nodes), g=np.zeros(net.n_nodes),
                   r=np.zeros(net.n_sessions), p_tx=np.zeros(net.n_links),
                   x=np.zeros((net.n_links, net.n_sessions)))


def consumption_all(dec: Decision, net: Network) -> np.ndarray:
    """Per-node energy drawn this slot: sensing + transmission + reception."""
    idx = net.index()
    out = idx.out_inc @ dec.p_tx
    if idx.n_sessions:
        out += idx.src_inc @ (idx.p_sense_f * dec.r)
        rx_units = idx.in_inc @ dec.x.sum(axis=1)
        out += idx.p_rx * rx_units
    return out


def total_consumption(node: int, dec: Decision, net: Network) -> float:
    return float(consumption_all(dec, net)[node])


def step(state: QueueState, dec: Decision, slot: SlotState,
         net: Network) -> QueueState:
    """Apply one slot of the exact queue dynamics."""
    idx = net.index()
    cons = consumption_all(dec, net)
    short = state.energy - cons
    bad = np.flatnonzero(short < -TOL)
    if bad.size:
        n = int(bad[0])
        raise AvailabilityError(
            f"slot {slot.slot}: node {n} consumes {cons[n]:.12g} with only "
            f"{state.energy[n]:.12g} stored (energy-availability violated)")

    inflow = np.where(idx.harvests, dec.e, 0.0) + np.where(idx.buys, dec.g, 0.0)
    energy = state.energy + inflow - cons
    energy[energy < 0.0] = 0.0  # availability held, so any negative is roundoff

    q = state.q - idx.out_inc @ dec.x + idx.in_inc @ dec.x
    if idx.n_sessions:
        q[idx.src, np.arange(idx.n_sessions)] += dec.r
    tiny = (q < 0.0) & (q > -TOL)
    q[tiny] = 0.0
    if (q < 0.0).any():
        n, f = np.unravel_index(int(np.argmin(q)), q.shape)
        raise RuntimeError(f"slot {slot.slot}: negative backlog {q[n, f]:.3g} "
                           f"at node {n} session {f} (data-availability bug)")
    q[idx.is_dst] = 0.0
    return QueueState(q=q, energy=energy)


def check_feasible(dec: Decision, state: QueueState, slot: SlotState,
                   net: Network, params: Params) -> list[str]:
    """All per-slot constraints, each checked to within 1e-9."""
    idx = net.index()
    out: list[str] = []
    theta = np.array([nd.battery if nd.battery is not None else np.inf
                      for nd in net.nodes])

    for f in range(idx.n_sessions):
        if dec.r[f] < -TOL or dec.r[f] > idx.r_max_f[f] + TOL:
            out.append(f"session {f}: rate {dec.r[f]:.12g} outside "
                       f"[0, {idx.r_max_f[f]}]")
    if (dec.p_tx < -TOL).any():
        out.append("negative transmit power")
    budget = idx.out_inc @ dec.p_tx
    for n in np.flatnonzero(budget > idx.p_max + TOL):
        out.append(f"node {n}: transmit power {budget[n]:.12g} exceeds "
                   f"budget {idx.p_max[n]}")

    if (dec.x < -TOL).any():
        out.append("negative routed rate")
    cap = link_capacities(dec.p_tx, slot, net)
    load = dec.x.sum(axis=1)
    eff = np.where(np.isneginf(cap), 0.0, np.maximum(cap, 0.0))
    for l in np.flatnonzero(load > eff + TOL):
        out.append(f"link {l}: load {load[l]:.12g} exceeds capacity "
                   f"{eff[l]:.12g}")

    cons = consumption_all(dec, net)
    for n in np.flatnonzero(cons > state.energy + TOL):
        out.append(f"node {n}: consumption {cons[n]:.12g} exceeds stored "
                   f"energy {state.energy[n]:.12g}")

    inflow = np.where(idx.harvests, dec.e, 0.0) + np.where(idx.buys, dec.g, 0.0)
    over = state.energy + inflow - theta
    for n in np.flatnonzero(over > TOL):
        out.append(f"node {n}: inflow overfills battery by {over[n]:.12g}")

    for n in range(idx.n_nodes):
        if dec.e[n] < -TOL or dec.e[n] > slot.harvest[n] + TOL:
            out.append(f"node {n}: harvest {dec.e[n]:.12g} outside "
                       f"[0, {slot.harvest[n]:.12g}]")
        if not idx.harvests[n] and dec.e[n] > TOL:
            out.append(f"node {n}: harvests without a harvester")
        if dec.g[n] < -TOL or dec.g[n] > idx.g_max_n[n] + TOL:
            out.append(f"node {n}: purchase {dec.g[n]:.12g} outside "
                       f"[0, {idx.g_max_n[n]}]")
        if not idx.buys[n] and dec.g[n] > TOL:
            out.append(f"node {n}: buys without a grid connection")

    if idx.n_sessions:
        sent = idx.out_inc @ dec.x
        over_q = sent - state.q
        for n, f in zip(*np.nonzero(over_q > TOL)):
            out.append(f"node {n} session {f}: sends {sent[n, f]:.12g} with "
                       f"backlog {state.q[n, f]:.12g}")
    return out
