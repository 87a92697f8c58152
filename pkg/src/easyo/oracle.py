"""Brute-force reference solvers used only by tests.

Everything here recomputes from raw definitions and shares no code path
with the components it checks: grid enumeration for the rate and power
subproblems, vertex enumeration for the energy subproblem, and a from-
scratch evaluation of the one-slot drift bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import BoundConstants, Network, Params
from .powalloc import PowerProblem
from .queues import Decision, QueueState
from .stochastic import SlotState


def grid_rate_oracle(Q: float, A: float, params: Params, r_max: float,
                     p_sense: float, grid: int = 20001) -> float:
    """Exhaustive maximizer of V*w1*log(1+r) - (Q - A*p_sense)*r."""
    if grid < 10000:
        raise ValueError("grid must have at least 10^4 points")
    r = np.linspace(0.0, r_max, grid)
    obj = params.V * params.omega1 * np.log1p(r) - (Q - A * p_sense) * r
    return float(r[int(np.argmax(obj))])


def lp_energy_oracle(E: float, theta: float, D: float, h: float,
                     g_max: float, supply_class: str):
    """Exact solve of the 2-variable harvest/purchase LP by vertex
    enumeration.  Ties prefer smaller g, then smaller e."""
    c = max(theta - E, 0.0)
    harvests = supply_class in ("EH", "ME")
    buys = supply_class in ("EG", "ME")
    e_hi = min(h, c) if harvests else 0.0
    g_hi = min(g_max, c) if buys else 0.0
    cand = {(0.0, 0.0), (e_hi, 0.0), (0.0, g_hi), (e_hi, g_hi),
            (e_hi, max(min(c - e_hi, g_hi), 0.0)),
            (max(min(c - g_hi, e_hi), 0.0), g_hi)}
    feasible = [(e, g) for e, g in cand
                if 0.0 <= e <= e_hi + 1e-15 and 0.0 <= g <= g_hi + 1e-15
                and e + g <= c + 1e-12]

    def value(eg):
        e, g = eg
        return (E - theta) * e + (D + E - theta) * g

    lo = min(value(eg) for eg in feasible)
    tol = 1e-9 * max(1.0, abs(lo))
    tied = [eg for eg in feasible if value(eg) <= lo + tol]
    return min(tied, key=lambda eg: (eg[1], eg[0]))


def _g_raw(P: np.ndarray, prob: PowerProblem, cross: np.ndarray) -> np.ndarray:
    """Committed objective for rows of power vectors, from raw arrays."""
    intf = P @ cross.T
    out = np.zeros(len(P))
    for i in range(prob.n_links):
        on = P[:, i] > 0
        pi = P[on, i]
        sinr = prob.s_own[i] * pi / (prob.noise[i] + intf[on, i])
        out[on] += (prob.w[i] * np.log(prob.k_gain[i] * sinr)
                    + prob.a[prob.tx[i]] * pi)
    return out


def _cross_dense(prob: PowerProblem) -> np.ndarray:
    L = prob.n_links
    cross = np.zeros((L, L))
    for i in range(L):
        for k in range(prob.intf_ptr[i], prob.intf_ptr[i + 1]):
            cross[i, prob.intf_link[k]] = prob.intf_gain[k]
    return cross


def grid_power_oracle(prob: PowerProblem, grid: int = 401):
    """Exhaustive maximizer of the committed power objective on a grid.

    Limited to 3 links; the grid includes exact 0 and the node budget, and
    combinations violating a node budget are discarded.
    """
    L = prob.n_links
    if L > 3:
        raise ValueError("grid oracle supports at most 3 links")
    if grid < 400:
        raise ValueError("grid must have at least 400 points per dimension")
    axes = [np.linspace(0.0, prob.p_max[prob.tx[i]], grid) for i in range(L)]
    cross = _cross_dense(prob)
    best_val = -np.inf
    best_p = np.zeros(L)
    if L == 1:
        P = axes[0][:, None]
        vals = _g_raw(P, prob, cross)
        k = int(np.argmax(vals))
        return P[k].copy(), float(vals[k])
    if L == 2:
        A, B = np.meshgrid(axes[0], axes[1], indexing="ij")
        P = np.column_stack([A.ravel(), B.ravel()])
        P = _budget_filter(P, prob)
        vals = _g_raw(P, prob, cross)
        k = int(np.argmax(vals))
        return P[k].copy(), float(vals[k])
    # 3 links: sweep axis 0 as an outer scalar loop over a flattened
    # (p1, p2) plane, reusing float32 buffers; the grid tolerance is
    # orders of magnitude above float32 noise at these magnitudes
    need_filter = len(np.unique(prob.tx)) < L
    ax32 = [a.astype(np.float32) for a in axes]
    with np.errstate(divide="ignore"):
        sep = []
        for i in range(L):
            s = (prob.w[i] * np.log(ax32[i])
                 + prob.a[prob.tx[i]] * ax32[i]).astype(np.float32)
            s[ax32[i] == 0.0] = 0.0
            sep.append(s)
    const = np.array([prob.w[i] * math.log(prob.k_gain[i] * prob.s_own[i])
                      for i in range(L)], dtype=np.float32)
    w32 = prob.w.astype(np.float32)
    n32 = prob.noise.astype(np.float32)
    c32 = cross.astype(np.float32)
    p1 = np.repeat(ax32[1], grid)
    p2 = np.tile(ax32[2], grid)
    plane = sep[1][:, None] + sep[2][None, :]
    plane = plane.ravel()
    on1 = (p1 > 0).astype(np.float32)
    on2 = (p2 > 0).astype(np.float32)
    base = [c32[i, 1] * p1 + c32[i, 2] * p2 for i in range(L)]
    m = grid * grid
    den = np.empty(m, dtype=np.float32)
    term = np.empty(m, dtype=np.float32)
    vals = np.empty(m, dtype=np.float32)
    for k0, p0 in enumerate(ax32[0]):
        np.copyto(vals, plane)
        vals += sep[0][k0]
        for i in range(L):
            mask = on1 if i == 1 else on2 if i == 2 else None
            if i == 0 and p0 == 0.0:
                continue
            np.add(base[i], n32[i] + c32[i, 0] * p0, out=den)
            np.log(den, out=term)
            term *= -w32[i]
            term += const[i]
            if mask is not None:
                term *= mask
            vals += term
        if need_filter:
            for n in set(int(t) for t in prob.tx):
                cols = np.flatnonzero(prob.tx == n)
                tot = np.zeros(m, dtype=np.float32)
                for c in cols:
                    tot += p0 if c == 0 else (p1 if c == 1 else p2)
                vals[tot > prob.p_max[n] + 1e-12] = -np.inf
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val = float(vals[k])
            best_p = np.array([p0, p1[k], p2[k]], dtype=float)
    return best_p, best_val


def _budget_filter(P: np.ndarray, prob: PowerProblem) -> np.ndarray:
    keep = np.ones(len(P), dtype=bool)
    for n in np.unique(prob.tx):
        cols = np.flatnonzero(prob.tx == n)
        keep &= P[:, cols].sum(axis=1) <= prob.p_max[n] + 1e-12
    return P[keep]


@dataclass
class DriftTerms:
    lhs: float           # one-slot Lyapunov change minus V * objective
    bound: float         # constant-plus-decision bound on the same quantity
    slack: float
    b_const: float
    energy_term: float
    rate_term: float
    link_term: float
    delta_v: float


def drift_term_oracle(before: QueueState, after: QueueState, dec: Decision,
                      slot: SlotState, net: Network, params: Params,
                      bounds: BoundConstants) -> DriftTerms:
    """Recompute both sides of the one-slot drift inequality from scratch."""
    theta = np.array([nd.battery for nd in net.nodes])
    lyap_before = 0.5 * float(np.sum(before.q ** 2)) \
        + 0.5 * float(np.sum((before.energy - theta) ** 2))
    lyap_after = 0.5 * float(np.sum(after.q ** 2)) \
        + 0.5 * float(np.sum((after.energy - theta) ** 2))

    util = 0.0
    for f, s in enumerate(net.sessions):
        util += math.log1p(float(dec.r[f]))
    cost = 0.0
    for n, nd in enumerate(net.nodes):
        if nd.buys and dec.g[n] > 0.0:
            if params.price_model == "affine":
                unit = params.price_a + params.price_b * float(dec.g[n])
            else:
                unit = float(slot.price[n])
            cost += unit * float(dec.g[n])
    objective = (params.omega1 * util
                 - (1.0 - params.omega1) * params.omega2 * cost)
    lhs = lyap_after - lyap_before - params.V * objective

    energy_term = 0.0
    for n, nd in enumerate(net.nodes):
        a_n = float(before.energy[n]) - theta[n]
        if params.price_model == "affine":
            unit0 = params.price_a
        else:
            unit0 = float(slot.price[n])
        d_n = params.V * (1.0 - params.omega1) * params.omega2 * unit0
        if nd.harvests:
            energy_term += a_n * float(dec.e[n])
        if nd.buys:
            energy_term += (d_n + a_n) * float(dec.g[n])

    rate_term = 0.0
    for f, s in enumerate(net.sessions):
        a_src = float(before.energy[s.source]) - theta[s.source]
        rate_term -= (params.V * params.omega1 * math.log1p(float(dec.r[f]))
                      - float(before.q[s.source, f]) * float(dec.r[f])
                      + a_src * s.p_sense * float(dec.r[f]))

    link_term = 0.0
    for l, lk in enumerate(net.links):
        a_rx = float(before.energy[lk.rx]) - theta[lk.rx]
        a_tx = float(before.energy[lk.tx]) - theta[lk.tx]
        for f in range(net.n_sessions):
            w = (float(before.q[lk.tx, f]) - float(before.q[lk.rx, f])
                 + a_rx * net.nodes[lk.rx].p_rx)
            link_term -= w * float(dec.x[l, f])
        link_term -= a_tx * float(dec.p_tx[l])

    delta_v = energy_term + rate_term + link_term
    bound = bounds.b + delta_v
    return DriftTerms(lhs=lhs, bound=bound, slack=bound - lhs,
                      b_const=bounds.b, energy_term=energy_term,
                      rate_term=rate_term, link_term=link_term,
                      delta_v=delta_v)
