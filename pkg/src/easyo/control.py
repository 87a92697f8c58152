"""Per-slot control: perturbation weights, energy management, source rates,
link weights, power allocation, and max-weight scheduling.

Every component is a per-node or per-session closed form except the power
allocation, which ``powalloc`` solves.  A node participates in sensing,
transmission, and reception only while its stored energy covers its
worst-case one-slot consumption; below that it only recharges.  This
activation rule is what guarantees energy availability with empty initial
batteries, where the closed forms alone would overspend.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import BoundConstants, Network, Params
from .powalloc import BcdReport, bcd_solve, build_problem, link_capacities
from .queues import Decision, QueueState, consumption_all
from .stochastic import SlotState, unit_price

GATE_TOL = 1e-9

# utility family registry: value, derivative inverse
UTILITIES = {
    "log1p": (math.log1p, lambda y: 1.0 / y - 1.0),
}


@dataclass
class SlotWeights:
    a: np.ndarray             # (N,) battery deficit E - theta, <= 0
    d: np.ndarray             # (N,) scaled instantaneous purchase price
    w: np.ndarray             # (L, F) differential backlog weights
    w_shifted: np.ndarray     # (L, F) [w - sigma]^+
    best_session: np.ndarray  # (L,) argmax session per link (lowest id wins)
    best_weight: np.ndarray   # (L,) the winning shifted weight


def compute_weights(state: QueueState, slot: SlotState, net: Network,
                    params: Params, bounds: BoundConstants) -> SlotWeights:
    idx = net.index()
    a = state.energy - bounds.theta
    price0 = np.array([unit_price(float(slot.price[n]), 0.0, params)
                       for n in range(idx.n_nodes)])
    d = np.where(idx.buys,
                 params.V * (1.0 - params.omega1) * params.omega2 * price0,
                 0.0)
    if idx.n_links and idx.n_sessions:
        w = (state.q[idx.tx, :] - state.q[idx.rx, :]
             + (a * idx.p_rx)[idx.rx, None])
        w_shifted = np.maximum(w - bounds.sigma_f[None, :], 0.0)
        best_session = np.argmax(w_shifted, axis=1)  # first max: lowest id
        best_weight = w_shifted[np.arange(idx.n_links), best_session]
    else:
        w = np.zeros((idx.n_links, idx.n_sessions))
        w_shifted = w.copy()
        best_session = np.zeros(idx.n_links, dtype=np.intp)
        best_weight = np.zeros(idx.n_links)
    return SlotWeights(a=a, d=d, w=w, w_shifted=w_shifted,
                       best_session=best_session, best_weight=best_weight)


def energy_management(E: float, theta: float, D: float, h: float,
                      g_max: float, supply_class: str):
    """Closed-form harvest/purchase split for one node.

    Minimizes (E-theta)*e + (D+E-theta)*g over the class-masked box with
    e+g bounded by the battery headroom.  Harvesting is never worse per
    unit than buying (D >= 0), so fill e first, then g only while its
    coefficient stays negative, i.e. while D < headroom.
    """
    if E > theta + GATE_TOL:
        raise RuntimeError(f"stored energy {E} exceeds capacity {theta}")
    c = max(theta - E, 0.0)
    harvests = supply_class in ("EH", "ME")
    buys = supply_class in ("EG", "ME")
    e = min(h, c) if harvests else 0.0
    g = 0.0
    if buys and D < c:
        g = min(g_max, c - e)
    return e, g


def _energy_all(state: QueueState, weights: SlotWeights, slot: SlotState,
                net: Network, bounds: BoundConstants):
    idx = net.index()
    c = np.maximum(bounds.theta - state.energy, 0.0)
    e = np.where(idx.harvests, np.minimum(slot.harvest, c), 0.0)
    g = np.where(idx.buys & (weights.d < c),
                 np.minimum(idx.g_max_n, c - e), 0.0)
    return e, g


def source_rate(Q: float, A: float, params: Params, r_max: float,
                p_sense: float, utility: str = "log1p") -> float:
    """Admission rate maximizing V*w1*U(r) - (Q - A*p_sense)*r on [0, r_max]."""
    price = Q - A * p_sense
    if price <= 0.0:
        return r_max
    scale = params.V * params.omega1
    if scale <= 0.0:
        return 0.0
    y = price / scale
    if y <= 0.0:   # subnormal price underflows the division
        return r_max
    _, du_inv = UTILITIES[utility]
    return min(max(du_inv(y), 0.0), r_max)


def schedule(weights: SlotWeights, capacities: np.ndarray) -> np.ndarray:
    """Max-weight routing: the winning session takes the whole capacity on
    every link whose shifted weight is positive."""
    L, F = weights.w_shifted.shape
    x = np.zeros((L, F))
    on = (weights.best_weight > 0.0) & (capacities > 0.0)
    if on.any():
        links = np.flatnonzero(on)
        x[links, weights.best_session[links]] = capacities[links]
    return x


def slot_objective(dec: Decision, slot: SlotState, net: Network,
                   params: Params) -> float:
    """Utility-minus-cost objective of one slot's decision."""
    util = utility_total(dec.r, net)
    cost = cost_total(dec.g, slot, net, params)
    return params.omega1 * util - (1.0 - params.omega1) * params.omega2 * cost


def utility_total(r: np.ndarray, net: Network) -> float:
    idx = net.index()
    total = 0.0
    for f in range(idx.n_sessions):
        u, _ = UTILITIES[idx.utility_f[f]]
        total += u(float(r[f]))
    return total


def cost_total(g: np.ndarray, slot: SlotState, net: Network,
               params: Params) -> float:
    idx = net.index()
    total = 0.0
    for n in idx.buy_nodes:
        gn = float(g[n])
        if gn > 0.0:
            total += unit_price(float(slot.price[n]), gn, params) * gn
    return total


def delta_v_value(dec: Decision, state: QueueState, weights: SlotWeights,
                  net: Network, params: Params) -> float:
    """Value of the drift bound's decision-dependent part for a decision."""
    idx = net.index()
    energy_term = float(np.sum(
        weights.a * np.where(idx.harvests, dec.e, 0.0)
        + (weights.d + weights.a) * np.where(idx.buys, dec.g, 0.0)))
    rate_term = 0.0
    for f in range(idx.n_sessions):
        u, _ = UTILITIES[idx.utility_f[f]]
        src = idx.src[f]
        rate_term -= (params.V * params.omega1 * u(float(dec.r[f]))
                      - float(state.q[src, f]) * float(dec.r[f])
                      + float(weights.a[src]) * idx.p_sense_f[f]
                      * float(dec.r[f]))
    link_term = 0.0
    if idx.n_links:
        link_term -= float(np.sum(weights.w * dec.x))
        link_term -= float(np.sum(weights.a[idx.tx] * dec.p_tx))
    return energy_term + rate_term + link_term


@dataclass
class Diagnostics:
    objective: float
    utility: float
    cost: float
    delta_v: float
    weights: SlotWeights
    capacities: np.ndarray      # (L,) raw log-capacities, -inf when silent
    consumption: np.ndarray     # (N,)
    active: np.ndarray          # (N,) activation gate
    report: BcdReport
    active_links: int


def run_slot(state: QueueState, slot: SlotState, net: Network, params: Params,
             bounds: BoundConstants, cache: dict | None = None,
             trace: bool = False):
    """One slot of the controller; returns a feasible Decision.

    `cache` carries solver warm-start state between consecutive slots; it
    only affects iteration counts, never the committed decision.
    """
    idx = net.index()
    weights = compute_weights(state, slot, net, params, bounds)
    active = state.energy >= bounds.p_total_max

    e, g = _energy_all(state, weights, slot, net, bounds)

    r = np.zeros(idx.n_sessions)
    for f in range(idx.n_sessions):
        src = idx.src[f]
        if active[src]:
            r[f] = source_rate(float(state.q[src, f]), float(weights.a[src]),
                               params, idx.r_max_f[f], idx.p_sense_f[f],
                               idx.utility_f[f])

    if idx.n_links:
        link_ok = active[idx.tx] & active[idx.rx]
        gated = np.where(link_ok, weights.best_weight, 0.0)
        active_links = gated > 0.0
        pruned_early = 0
        if active_links.any():
            # a link whose interference-free optimum cannot contribute
            # positively never transmits; drop it before building the solve
            a_tx = weights.a[idx.tx]
            snr1 = idx.k_gain * slot.pair_gain[idx.link_pair] / idx.noise
            u0 = np.where(a_tx < 0.0,
                          np.minimum(gated / np.maximum(-a_tx, 1e-300),
                                     idx.p_max[idx.tx]),
                          idx.p_max[idx.tx])
            with np.errstate(divide="ignore", invalid="ignore"):
                best = gated * np.log(np.maximum(snr1 * u0, 1e-300)) \
                    + a_tx * u0
            hopeful = active_links & (best >= -1e-10)
            pruned_early = int(active_links.sum() - hopeful.sum())
            active_links = hopeful
        p = np.zeros(idx.n_links)
        report = BcdReport()
        if active_links.any():
            prob, link_ids = build_problem(net, slot, gated, weights.a,
                                           active_links)
            p0 = None
            if cache is not None and "p" in cache:
                p0 = cache["p"][link_ids]
            p_local, report = bcd_solve(prob, p0=p0, trace=trace)
            p[link_ids] = p_local
        if cache is not None:
            cache["p"] = p
        report.pruned += pruned_early
        cap_raw = link_capacities(p, slot, net)
        cap_eff = np.where(np.isneginf(cap_raw), 0.0,
                           np.clip(cap_raw, 0.0, params.x_max))
        cap_eff[~link_ok] = 0.0
        x = schedule(weights, cap_eff)
        n_active_links = int(active_links.sum())
    else:
        p = np.zeros(0)
        x = np.zeros((0, idx.n_sessions))
        cap_raw = np.zeros(0)
        report = BcdReport()
        n_active_links = 0

    dec = Decision(e=e, g=g, r=r, p_tx=p, x=x)
    util = utility_total(r, net)
    cost = cost_total(g, slot, net, params)
    diag = Diagnostics(
        objective=params.omega1 * util
        - (1.0 - params.omega1) * params.omega2 * cost,
        utility=util, cost=cost,
        delta_v=delta_v_value(dec, state, weights, net, params),
        weights=weights, capacities=cap_raw,
        consumption=consumption_all(dec, net), active=active,
        report=report, active_links=n_active_links)
    return dec, diag
