"""Per-slot transmit power allocation.

The slot problem maximizes  sum_l [ w_l * C_l(p) + a_tx(l) * p_l ]  over
per-node power budgets, where C_l = log(K * SINR_l) and w_l >= 0 are the
shifted max-weight link weights.  Under the log change of variables
p = exp(p_hat) the objective is strictly concave, so Gauss-Seidel block
maximization over per-node blocks converges to the global optimum.

Each block update is solved exactly: a node's links on one channel couple
to the outside world only through their total power (every external
co-channel listener hears them with the same gain), so a block reduces to
one concave scalar equation per channel group plus a multiplier search for
the node budget.  Roots come from safeguarded Newton iterations, which
meets the gradient-projection residual target without an inner descent
loop.

The log transform cannot represent a silent link.  After the sweeps
converge, links whose committed contribution  w*C + a*p  is negative are
pruned to exactly zero and the remainder re-solved; this restores the
p = 0 boundary the variable change removed and never lowers the committed
objective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import Network
from .stochastic import SlotState

P_FLOOR = 1e-9          # smallest representable group power in the solver
SWEEP_TOL = 1e-8        # relative sweep-to-sweep objective improvement
MAX_SWEEPS = 100
PRUNE_TOL = 1e-10


@dataclass
class PowerProblem:
    """Active-link instance of the slot power allocation problem."""

    w: np.ndarray          # (L,) shifted link weights, >= 0
    tx: np.ndarray         # (L,) transmitter index into the node arrays
    channel: np.ndarray    # (L,) channel ids
    s_own: np.ndarray      # (L,) direct-path gains
    noise: np.ndarray      # (L,) receiver noise floors
    k_gain: np.ndarray     # (L,) capacity offset gains
    a: np.ndarray          # (n_nodes,) battery deficit weights, <= 0
    p_max: np.ndarray      # (n_nodes,) node power budgets
    intf_ptr: np.ndarray   # CSR over links: co-channel other-tx interferers
    intf_link: np.ndarray
    intf_gain: np.ndarray  # gain tx(j) -> rx(i) for each CSR entry
    _cross: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_links(self) -> int:
        return len(self.w)

    @property
    def n_nodes(self) -> int:
        return len(self.a)

    def cross(self) -> np.ndarray:
        """Dense (L, L) cross-gain matrix: cross[i, j] hits rx(i) from j."""
        if self._cross is None:
            c = np.zeros((self.n_links, self.n_links))
            for i in range(self.n_links):
                for k in range(self.intf_ptr[i], self.intf_ptr[i + 1]):
                    c[i, self.intf_link[k]] = self.intf_gain[k]
            self._cross = c
        return self._cross

    def interference(self, p: np.ndarray) -> np.ndarray:
        """Co-channel interference power at each link's receiver."""
        return self.cross() @ p

    @classmethod
    def from_dense(cls, w, tx, channel, s_own, noise, k_gain, a, p_max,
                   cross_gain=None) -> "PowerProblem":
        """Build from a dense (L, L) cross-gain matrix; test convenience.

        cross_gain[i, j] is the gain from tx(j) to rx(i); only co-channel
        entries with tx(j) != tx(i) are used.
        """
        w = np.asarray(w, dtype=float)
        tx = np.asarray(tx, dtype=np.intp)
        channel = np.asarray(channel, dtype=np.intp)
        L = len(w)
        ptr = [0]
        jj, gg = [], []
        for i in range(L):
            for j in range(L):
                if i == j or channel[i] != channel[j] or tx[i] == tx[j]:
                    continue
                gain = 0.0 if cross_gain is None else float(cross_gain[i, j])
                if gain > 0.0:
                    jj.append(j)
                    gg.append(gain)
            ptr.append(len(jj))
        return cls(w=w, tx=tx, channel=channel,
                   s_own=np.asarray(s_own, dtype=float),
                   noise=np.asarray(noise, dtype=float),
                   k_gain=np.asarray(k_gain, dtype=float),
                   a=np.asarray(a, dtype=float),
                   p_max=np.asarray(p_max, dtype=float),
                   intf_ptr=np.array(ptr, dtype=np.intp),
                   intf_link=np.array(jj, dtype=np.intp),
                   intf_gain=np.array(gg, dtype=float))


@dataclass
class BcdReport:
    iterations: int = 0
    trace: list = field(default_factory=list)  # final solve round, monotone
    converged: bool = True
    residual: float = 0.0
    pruned: int = 0


def build_problem(net: Network, slot: SlotState, w_star: np.ndarray,
                  a: np.ndarray, active_links: np.ndarray):
    """Slice the slot's active links into a standalone PowerProblem.

    Returns (problem, link_ids) with link_ids mapping problem rows back to
    network link indices.
    """
    idx = net.index()
    link_ids = np.flatnonzero(active_links)
    local = -np.ones(idx.n_links, dtype=np.intp)
    local[link_ids] = np.arange(len(link_ids))
    if len(idx.intf_link):
        keep = active_links[idx.intf_row] & active_links[idx.intf_link]
        jj = local[idx.intf_link[keep]]
        gg = slot.pair_gain[idx.intf_pair[keep]]
        counts = np.bincount(idx.intf_row[keep], minlength=idx.n_links)
        ptr = np.zeros(len(link_ids) + 1, dtype=np.intp)
        np.cumsum(counts[link_ids], out=ptr[1:])
    else:
        jj = np.zeros(0, dtype=np.intp)
        gg = np.zeros(0)
        ptr = np.zeros(len(link_ids) + 1, dtype=np.intp)
    gains = slot.pair_gain[idx.link_pair[link_ids]]
    prob = PowerProblem(
        w=w_star[link_ids].astype(float),
        tx=idx.tx[link_ids].copy(),
        channel=idx.channel[link_ids].copy(),
        s_own=gains.astype(float),
        noise=idx.noise[link_ids].copy(),
        k_gain=idx.k_gain[link_ids].copy(),
        a=a.astype(float),
        p_max=idx.p_max.copy(),
        intf_ptr=ptr,
        intf_link=jj,
        intf_gain=gg)
    return prob, link_ids


# ---------------------------------------------------------------------------
# objective pieces


def psi(link: int, p_hat: np.ndarray, prob: PowerProblem) -> float:
    """Log-SINR of one link at log-powers p_hat (processing gain excluded)."""
    lo, hi = prob.intf_ptr[link], prob.intf_ptr[link + 1]
    intf = 0.0
    for k in range(lo, hi):
        ph = p_hat[prob.intf_link[k]]
        if ph > -np.inf:
            intf += math.exp(ph) * prob.intf_gain[k]
    return (math.log(prob.s_own[link]) + float(p_hat[link])
            - math.log(prob.noise[link] + intf))


def capacities(p: np.ndarray, prob: PowerProblem) -> np.ndarray:
    """Per-link log-capacity log(K * SINR); -inf where the link is silent."""
    intf = prob.interference(p)
    out = np.full(prob.n_links, -np.inf)
    on = p > 0
    out[on] = np.log(prob.k_gain[on] * prob.s_own[on] * p[on]
                     / (prob.noise[on] + intf[on]))
    return out


def capacity(link: int, p: np.ndarray, prob: PowerProblem) -> float:
    return float(capacities(np.asarray(p, dtype=float), prob)[link])


def link_capacities(p: np.ndarray, slot: SlotState, net: Network) -> np.ndarray:
    """Capacities over the full network link set for committed powers."""
    idx = net.index()
    if len(idx.intf_link):
        contrib = p[idx.intf_link] * slot.pair_gain[idx.intf_pair]
        intf = np.bincount(idx.intf_row, weights=contrib,
                           minlength=idx.n_links)
    else:
        intf = np.zeros(idx.n_links)
    out = np.full(idx.n_links, -np.inf)
    on = p > 0
    if on.any():
        s = slot.pair_gain[idx.link_pair[on]]
        out[on] = np.log(idx.k_gain[on] * s * p[on] / (idx.noise[on] + intf[on]))
    return out


def objective_G(p: np.ndarray, prob: PowerProblem) -> float:
    """Committed objective: silent links contribute nothing."""
    p = np.asarray(p, dtype=float)
    on = p > 0
    if not on.any():
        return 0.0
    c = capacities(p, prob)
    return float(np.sum(prob.w[on] * c[on] + prob.a[prob.tx[on]] * p[on]))


def psi_gradient(node: int, p_hat: np.ndarray, prob: PowerProblem) -> np.ndarray:
    """Exact gradient of the full solver objective over `node`'s block.

    Includes the damping this node's power inflicts on every co-channel
    listener's log-SINR.  Returned in block order (ascending link id).
    """
    p = np.exp(p_hat)
    intf = prob.interference(p)
    den = prob.noise + intf
    mine = np.flatnonzero(prob.tx == node)
    grad = np.empty(len(mine))
    for bi, i in enumerate(mine):
        g = prob.w[i] + prob.a[node] * p[i]
        for j in range(prob.n_links):
            if prob.tx[j] == node:
                continue
            for k in range(prob.intf_ptr[j], prob.intf_ptr[j + 1]):
                if prob.intf_link[k] == i:
                    g -= prob.w[j] * p[i] * prob.intf_gain[k] / den[j]
        grad[bi] = g
    return grad


def solver_objective(p: np.ndarray, prob: PowerProblem,
                     active: np.ndarray) -> float:
    """Log-domain surrogate ascended by the sweeps (finite at the floor)."""
    intf = prob.interference(np.where(active, p, 0.0))
    i = np.flatnonzero(active)
    psi_v = (np.log(prob.s_own[i]) + np.log(p[i])
             - np.log(prob.noise[i] + intf[i]))
    return float(np.sum(prob.w[i] * psi_v + prob.a[prob.tx[i]] * p[i]))


# ---------------------------------------------------------------------------
# exact block maximization


def _group_root(W_c: float, ext: list, a_eff: float, hi: float,
                u0: float = 0.0):
    """Root of  W_c - sum_j w_j*m_j*u/(d_j + m_j*u) + a_eff*u  on (0, hi].

    ext is a list of (w_j, m_j, d_j) float triples.  The derivative of the
    group objective in the log domain is strictly decreasing with value
    W_c > 0 at 0+, so the root is unique; returns (root, slope) with the
    slope of the derivative there, or (hi, 0.0) when the derivative is
    still nonnegative at hi.  u0 warm-starts the Newton iteration.
    """
    if not ext:
        if a_eff >= 0.0:
            return hi, 0.0
        u = W_c / -a_eff
        if u >= hi:
            return hi, 0.0
        return u, a_eff

    s = 0.0
    for wj, mj, dj in ext:
        t = mj * hi
        s += wj * t / (dj + t)
    if W_c - s + a_eff * hi >= 0.0:
        return hi, 0.0

    scale = max(1.0, W_c)
    lo_b, hi_b = 0.0, hi
    u = u0
    if not (0.0 < u < hi):
        u = min(hi, W_c / -a_eff) if a_eff < 0.0 else 0.5 * hi
        if not (0.0 < u < hi):
            u = 0.5 * hi
    gu = 0.0
    dg = a_eff
    for _ in range(60):
        gu = a_eff * u + W_c
        dg = a_eff
        for wj, mj, dj in ext:
            t = mj * u
            den = dj + t
            gu -= wj * t / den
            dg -= wj * mj * dj / (den * den)
        if abs(gu) <= 1e-11 * scale:
            break
        if gu > 0.0:
            lo_b = u
        else:
            hi_b = u
        if hi_b - lo_b <= 1e-14 * hi:
            break
        nxt = u - gu / dg if dg < 0.0 else 0.0
        u = nxt if lo_b < nxt < hi_b else 0.5 * (lo_b + hi_b)
    return max(u, P_FLOOR), dg


class _Group:
    """One node's links on one channel plus their external listeners."""

    __slots__ = ("links", "single", "frac", "W_c", "ext_j", "ext_w", "ext_m",
                 "ext")

    def __init__(self, links, frac, W_c, ext_j, ext_w, ext_m):
        self.links = links
        self.single = links[0] if len(links) == 1 else -1
        self.frac = frac
        self.W_c = W_c
        self.ext_j = ext_j      # listener link ids (python ints)
        self.ext_w = ext_w
        self.ext_m = ext_m
        self.ext = []           # (w, m, d) triples, refreshed per update


class _Block:
    """One node's channel groups."""

    __slots__ = ("node", "budget", "a", "groups", "mu", "any_ext")

    def __init__(self, node, budget, a):
        self.node = node
        self.budget = budget
        self.a = a
        self.groups: list[_Group] = []
        self.mu = 0.0
        self.any_ext = False


def _build_blocks(prob: PowerProblem, active: np.ndarray) -> list[_Block]:
    tx = prob.tx
    channel = prob.channel
    w = prob.w
    act = np.flatnonzero(active).tolist()
    by_node: dict[int, dict[int, list[int]]] = {}
    for i in act:
        by_node.setdefault(int(tx[i]), {}).setdefault(int(channel[i]),
                                                      []).append(i)
    # (node, channel) -> {listener link: gain node -> rx(listener)}
    listeners: dict[tuple[int, int], dict[int, float]] = {}
    ptr = prob.intf_ptr
    for j in act:
        for k in range(ptr[j], ptr[j + 1]):
            i = int(prob.intf_link[k])
            if not active[i]:
                continue
            key = (int(tx[i]), int(channel[i]))
            listeners.setdefault(key, {})[j] = float(prob.intf_gain[k])
    blocks = []
    for n in sorted(by_node):
        blk = _Block(n, float(prob.p_max[n]), float(prob.a[n]))
        for c in sorted(by_node[n]):
            grp = np.array(by_node[n][c], dtype=np.intp)
            W_c = float(w[grp].sum())
            heard = listeners.get((n, c), {})
            ext_j = sorted(heard)
            g = _Group(grp, w[grp] / W_c, W_c, ext_j,
                       [float(w[j]) for j in ext_j],
                       [heard[j] for j in ext_j])
            blk.groups.append(g)
            blk.any_ext = blk.any_ext or bool(ext_j)
        blocks.append(blk)
    return blocks


def _update_block(blk: _Block, prob: PowerProblem, p: np.ndarray,
                  intf: np.ndarray):
    """Exactly maximize one node's block in place.

    Returns (KKT residual, largest group-power movement).
    """
    groups = blk.groups
    k = len(groups)
    budget = blk.budget

    if not blk.any_ext:
        # isolated node: closed form, budget split proportional to weight
        blk.mu = 0.0
        if blk.a < 0.0:
            roots = [min(g.W_c / -blk.a, budget) for g in groups]
        else:
            roots = [budget] * k
        if sum(roots) > budget:
            w_sum = sum(g.W_c for g in groups)
            roots = [g.W_c * budget / w_sum for g in groups]
        moved = 0.0
        for gi, g in enumerate(groups):
            u = max(roots[gi], P_FLOOR)
            if g.single >= 0:
                old = float(p[g.single])
                p[g.single] = u
            else:
                old = float(p[g.links].sum())
                p[g.links] = u * g.frac
            moved = max(moved, abs(u - old))
        return 0.0, moved

    noise = prob.noise
    u_olds = [0.0] * k
    for gi, g in enumerate(groups):
        u_old = float(p[g.single]) if g.single >= 0 else float(p[g.links].sum())
        u_olds[gi] = u_old
        # external denominators with this node's current contribution removed
        g.ext = [(wj, mj, max(noise[j] + intf[j] - mj * u_old, noise[j]))
                 for j, wj, mj in zip(g.ext_j, g.ext_w, g.ext_m)]

    roots = [0.0] * k
    slopes = [0.0] * k
    for gi, g in enumerate(groups):
        roots[gi], slopes[gi] = _group_root(g.W_c, g.ext, blk.a, budget,
                                            u_olds[gi])
    mu = 0.0
    total = sum(roots)
    if total > budget * (1.0 + 1e-12):
        if k == 1:
            roots[0] = budget
        else:
            # Newton on the multiplier: du/dmu = u / slope at interior
            # roots.  Ignoring the externals gives the closed form
            # mu0 = sum(W_c)/budget + a, an upper bound on the true
            # multiplier since interference only lowers the power demand.
            mu_hi = sum(g.W_c for g in groups) / budget + blk.a
            mu = mu_hi
            if blk.mu > 0.0:
                mu = min(blk.mu, mu_hi)
            mu_lo = 0.0
            for _ in range(40):
                total = 0.0
                dtotal = 0.0
                for gi, g in enumerate(groups):
                    roots[gi], slopes[gi] = _group_root(
                        g.W_c, g.ext, blk.a - mu, budget, roots[gi])
                    total += roots[gi]
                    if slopes[gi] < 0.0:
                        dtotal += roots[gi] / slopes[gi]
                err = total - budget
                if abs(err) <= 1e-10 * budget:
                    break
                if err > 0.0:
                    mu_lo = mu
                else:
                    mu_hi = mu
                nxt = mu - err / dtotal if dtotal < 0.0 else 0.0
                mu = nxt if mu_lo < nxt < mu_hi else 0.5 * (mu_lo + mu_hi)
            scale = budget / sum(roots)
            if scale < 1.0:
                roots = [u * scale for u in roots]
    blk.mu = mu

    residual = 0.0
    moved = 0.0
    for gi, g in enumerate(groups):
        u = max(roots[gi], P_FLOOR)
        if u < budget * (1.0 - 1e-12):
            gv = (blk.a - mu) * u + g.W_c
            for wj, mj, dj in g.ext:
                t = mj * u
                gv -= wj * t / (dj + t)
            residual = max(residual, abs(gv))
        if g.single >= 0:
            p[g.single] = u
        else:
            p[g.links] = u * g.frac
        delta = u - u_olds[gi]
        if delta != 0.0:
            moved = max(moved, abs(delta))
            for j, mj in zip(g.ext_j, g.ext_m):
                intf[j] += mj * delta
    return residual, moved


def block_update(node: int, p_hat: np.ndarray, prob: PowerProblem):
    """Exact maximizer of the full objective over `node`'s block.

    Other blocks are read from p_hat and held fixed.  Returns
    (link_indices, new_log_powers) for the node's positive-weight links.
    """
    active = prob.w > 0
    p = np.where(np.isneginf(p_hat), 0.0, np.exp(p_hat))
    mine = np.flatnonzero((prob.tx == node) & active)
    if len(mine) == 0:
        return mine, np.empty(0)
    blk = [b for b in _build_blocks(prob, active) if b.node == node][0]
    intf = prob.interference(np.where(active, p, 0.0))
    _update_block(blk, prob, p, intf)
    return mine, np.log(np.maximum(p[mine], P_FLOOR))


MOVE_TOL = 1e-11


def bcd_solve(prob: PowerProblem, p0: np.ndarray | None = None,
              trace: bool = False):
    """Gauss-Seidel sweeps over nodes in ascending id until the objective
    improvement stalls; silent and pruned links come back as exact zeros.

    p0 warm-starts the sweeps (the fixed point does not depend on it).
    With trace=True the report carries the solver objective after each
    sweep of the final solve round.
    """
    L = prob.n_links
    p = np.zeros(L)
    report = BcdReport()
    active = prob.w > 0
    if not active.any():
        return p, report

    # a link whose interference-free optimum already contributes negatively
    # can never help (interference only lowers its capacity), so drop it now
    a_tx = prob.a[prob.tx]
    snr1 = prob.k_gain * prob.s_own / prob.noise   # capacity factor at p = 1
    u0 = np.where(a_tx < 0.0,
                  np.minimum(prob.w / np.maximum(-a_tx, 1e-300),
                             prob.p_max[prob.tx]),
                  prob.p_max[prob.tx])
    with np.errstate(divide="ignore", invalid="ignore"):
        best = prob.w * np.log(np.maximum(snr1 * u0, 1e-300)) + a_tx * u0
    hopeless = active & (best < -PRUNE_TOL)
    if hopeless.any():
        active[hopeless] = False
        report.pruned += int(hopeless.sum())
        if not active.any():
            return p, report

    warm = False
    if p0 is not None:
        p = np.where(active & (p0 > 0.0), p0, 0.0)
        fresh = active & (p <= 0.0)
        if fresh.any():
            share = prob.p_max[prob.tx] / np.maximum(
                np.bincount(prob.tx, weights=active,
                            minlength=prob.n_nodes)[prob.tx], 1.0)
            p[fresh] = 0.5 * share[fresh]
        warm = True

    while True:
        blocks = _build_blocks(prob, active)
        if not warm:
            for blk in blocks:
                mine = np.flatnonzero(active & (prob.tx == blk.node))
                p[mine] = 0.5 * blk.budget / len(mine)
        p[~active] = 0.0
        intf = prob.interference(p)

        prev = -np.inf
        converged = False
        sweep_trace: list[float] = []
        while report.iterations < MAX_SWEEPS:
            residual = 0.0
            moved = 0.0
            for blk in blocks:
                res, mv = _update_block(blk, prob, p, intf)
                residual = max(residual, res)
                moved = max(moved, mv)
            intf = prob.interference(np.where(active, p, 0.0))
            report.iterations += 1
            report.residual = residual
            if trace:
                sweep_trace.append(solver_objective(p, prob, active))
            if moved <= MOVE_TOL:
                # a full sweep of exact best responses left every block
                # fixed, which is the coordinate-wise (= global) optimum
                converged = True
                break
            if trace:
                obj = sweep_trace[-1]
            else:
                obj = solver_objective(p, prob, active)
            if abs(obj - prev) <= SWEEP_TOL * (1.0 + abs(obj)):
                converged = True
                break
            prev = obj
        report.trace = sweep_trace
        report.converged = report.converged and converged

        # prune links whose committed contribution is negative, re-solve warm
        c = capacities(np.where(active, p, 0.0), prob)
        contrib = prob.w * np.where(np.isneginf(c), 0.0, c) \
            + prob.a[prob.tx] * p
        neg = active & (contrib < -PRUNE_TOL)
        if not neg.any() or report.iterations >= MAX_SWEEPS:
            break
        active[neg] = False
        p[neg] = 0.0
        report.pruned += int(neg.sum())
        if not active.any():
            break
        warm = True

    p = np.where(active & (p > 2 * P_FLOOR), p, 0.0)
    budgets = np.bincount(prob.tx, weights=p, minlength=prob.n_nodes)
    over = budgets > prob.p_max + 1e-9
    if over.any():
        n = int(np.flatnonzero(over)[0])
        raise AssertionError(
            f"power budget violated at node {n}: {budgets[n]} > "
            f"{prob.p_max[n]}")
    # absorb proportional-split rounding so node sums never exceed budget
    tight = budgets > prob.p_max
    if tight.any():
        p *= np.where(tight, prob.p_max / np.maximum(budgets, 1e-300),
                      1.0)[prob.tx]
    return p, report
