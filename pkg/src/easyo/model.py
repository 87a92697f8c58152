"""Network model: topology, parameters, and derived bound constants.

A network is a directed graph of sensor nodes.  Each node draws energy from
harvesting (EH), the electricity grid (EG), or both (ME).  Sessions are
source/destination pairs routed over multiple hops; links carry a CDMA
channel id so only co-channel transmissions interfere.

All derived constants used by the runtime monitors (per-session queue
bounds, per-node battery capacities, drift constants) are computed here in
``bound_constants`` and written back onto the network, after which the
network is treated as immutable.
"""

from __future__ import annotations

import collections
import math
from dataclasses import dataclass, fields, replace

import numpy as np

SUPPLY_CLASSES = ("EH", "EG", "ME")


class TopologyError(ValueError):
    """Raised when a topology cannot be built or violates hard invariants."""


@dataclass
class Node:
    id: int
    supply_class: str  # "EH" | "EG" | "ME"
    x: float
    y: float
    noise_floor: float | None = None   # N0 at this node's receiver [W]
    p_max: float | None = None         # transmit power budget [W]
    p_rx: float | None = None          # energy per received data unit
    g_max: float | None = None         # grid purchase cap per slot (EG/ME)
    battery: float | None = None       # capacity, set by bound_constants
    p_total_max: float | None = None   # worst-case one-slot consumption

    @property
    def harvests(self) -> bool:
        return self.supply_class in ("EH", "ME")

    @property
    def buys(self) -> bool:
        return self.supply_class in ("EG", "ME")


@dataclass
class Link:
    tx: int
    rx: int
    channel: int
    distance: float = 0.0      # filled from node positions at build time
    k_gain: float | None = None  # spreading processing gain, >> 1


@dataclass
class Session:
    id: int
    source: int
    destination: int
    r_max: float | None = None       # admission cap [units/slot]
    p_sense: float | None = None     # sensing energy per admitted unit
    utility: str = "log1p"


@dataclass(frozen=True)
class Params:
    """Scenario knobs.  Defaults reproduce the standard 20-node scenario."""

    V: float = 1000.0        # penalty weight: objective vs. backlog trade-off
    omega1: float = 0.6      # utility weight in the combined objective
    omega2: float = 0.5      # cost mapping factor
    delta: float = 2.0       # assumed capacity-to-power ratio bound
    beta_u: float = 1.0      # max utility derivative (1 for log1p)
    h_max: float = 2.0       # harvest per slot upper bound
    g_max: float = 2.0       # grid purchase per slot upper bound
    p_max: float = 2.0       # per-node transmit power budget
    p_rx: float = 0.05       # reception energy per data unit
    p_sense: float = 0.1     # sensing energy per data unit
    r_max: float = 3.0       # session admission cap
    x_max: float = 2.0       # per-link per-session rate bound
    l_max: int = 6           # max in/out degree the scenario permits
    sc_min: float = 0.9      # channel fade coefficient range
    sc_max: float = 1.1
    sg_min: float = 0.5      # electricity price state range
    sg_max: float = 1.0
    n0: float = 5e-13        # receiver noise floor [W]
    k_gain: float = 100.0    # CDMA processing gain
    slots: int = 10000
    seed: int = 1
    price_model: str = "flat"  # "flat": unit cost = price state; "affine": a + b*g
    price_a: float = 0.0
    price_b: float = 0.0

    def validated(self) -> "Params":
        validate_params(self)
        return self


def validate_params(p: Params) -> None:
    if not (0.0 <= p.omega1 <= 1.0):
        raise ValueError(f"omega1 must be in [0, 1], got {p.omega1}")
    for name in ("omega2", "delta", "beta_u", "p_max", "r_max", "x_max",
                 "n0", "k_gain", "V"):
        if getattr(p, name) <= 0:
            raise ValueError(f"{name} must be positive, got {getattr(p, name)}")
    for name in ("h_max", "g_max", "p_rx", "p_sense"):
        if getattr(p, name) < 0:
            raise ValueError(f"{name} must be nonnegative, got {getattr(p, name)}")
    if p.l_max < 1:
        raise ValueError(f"l_max must be >= 1, got {p.l_max}")
    if not (0 < p.sc_min <= p.sc_max):
        raise ValueError(f"bad fade range [{p.sc_min}, {p.sc_max}]")
    if not (0 <= p.sg_min <= p.sg_max):
        raise ValueError(f"bad price range [{p.sg_min}, {p.sg_max}]")
    if p.slots < 0:
        raise ValueError(f"slots must be >= 0, got {p.slots}")
    if p.price_model not in ("flat", "affine"):
        raise ValueError(f"unknown price_model {p.price_model!r}")


@dataclass
class Network:
    nodes: list[Node]
    links: list[Link]
    sessions: list[Session]
    n_channels: int = 1

    def __post_init__(self):
        self._index = None

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_links(self) -> int:
        return len(self.links)

    @property
    def n_sessions(self) -> int:
        return len(self.sessions)

    def out_links(self, n: int) -> list[int]:
        return [i for i, l in enumerate(self.links) if l.tx == n]

    def in_links(self, n: int) -> list[int]:
        return [i for i, l in enumerate(self.links) if l.rx == n]

    def sessions_sourced(self, n: int) -> set[int]:
        return {s.id for s in self.sessions if s.source == n}

    def index(self) -> "NetIndex":
        if self._index is None:
            self._index = NetIndex(self)
        return self._index


@dataclass
class BoundConstants:
    """Constants from the queue-bound and drift analysis.

    Scalars are worst-case over sessions; the ``*_f`` arrays carry the
    per-session values actually used by the controller and monitors.
    """

    sigma: float              # link-weight shift: l_max*x_max + r_max
    sigma_f: np.ndarray
    q_max: float              # deterministic data-queue ceiling
    q_max_f: np.ndarray
    theta: np.ndarray         # per-node battery capacity / perturbation
    p_total_max: np.ndarray   # per-node worst-case one-slot consumption
    b_q: float
    b_e: np.ndarray
    b: float                  # drift constant
    b_tilde: float            # drift constant incl. the weight-shift term


# ---------------------------------------------------------------------------
# topology construction


@dataclass
class TopologyConfig:
    """Either an explicit node/link/session list or generator settings."""

    nodes: list[Node] | None = None
    links: list[Link] | None = None
    sessions: list[Session] | None = None
    n_nodes: int = 20
    n_channels: int = 14
    n_sessions: int = 6
    target_links: int = 78          # directed
    seed: int = 7
    radius: float = 1.2             # grid-cell units; direct-neighbor reach
    jitter: float = 0.05
    supply_mix: str | list[str] = "mixed"   # or "all_eh"/"all_eg"/"all_me"
    session_hops: tuple[int, int] = (2, 3)
    scale: float | None = None      # min link distance; default is headroom-safe
    l_max_cap: int = 6              # degree cap honoured by the generator

    @property
    def explicit(self) -> bool:
        return self.nodes is not None


def headroom_distance(params: Params) -> float:
    """Smallest link distance keeping capacities inside the model's rate
    and capacity-to-power assumptions at any feasible transmit power.

    At distance d the best-case SNR factor is q = K*sc_max*d^-4/n0.  The
    log-capacity stays below x_max for all p <= p_max iff q*p_max <=
    exp(x_max), and below delta*p for all p iff q <= delta*e.
    """
    q_cap = min(math.exp(params.x_max) / params.p_max, params.delta * math.e)
    return (params.k_gain * params.sc_max / (params.n0 * q_cap)) ** 0.25


def headroom_report(net: Network, params: Params) -> list[str]:
    """Links whose gain geometry can break the rate/delta assumptions."""
    d_safe = headroom_distance(params)
    bad = []
    for i, l in enumerate(net.links):
        if l.distance < d_safe * (1 - 1e-12):
            bad.append(f"link {i} ({l.tx}->{l.rx}): distance {l.distance:.6g} "
                       f"< headroom-safe {d_safe:.6g}")
    return bad


def _supply_for(i: int, mix) -> str:
    if isinstance(mix, (list, tuple)):
        return mix[i]
    if mix == "mixed":
        return SUPPLY_CLASSES[i % 3]
    if mix in ("all_eh", "all_eg", "all_me"):
        return mix[-2:].upper()
    raise TopologyError(f"unknown supply_mix {mix!r}")


def _generate(cfg: TopologyConfig) -> Network:
    n = cfg.n_nodes
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed]))
    cols = int(np.ceil(np.sqrt(n * 1.25)))
    pos = np.empty((n, 2))
    for i in range(n):
        r, c = divmod(i, cols)
        pos[i] = (c + rng.uniform(-cfg.jitter, cfg.jitter),
                  r + rng.uniform(-cfg.jitter, cfg.jitter))

    dist = np.hypot(pos[:, None, 0] - pos[None, :, 0],
                    pos[:, None, 1] - pos[None, :, 1])
    iu = np.triu_indices(n, 1)
    order = np.argsort(dist[iu], kind="stable")
    target_und = max(1, cfg.target_links // 2)
    deg = np.zeros(n, dtype=int)
    edges: list[tuple[int, int]] = []
    taken: set[tuple[int, int]] = set()
    # direct grid neighbours first, then shortest remaining pairs up to target
    for k in order:
        a, b = int(iu[0][k]), int(iu[1][k])
        if dist[a, b] > cfg.radius:
            break
        if deg[a] >= cfg.l_max_cap or deg[b] >= cfg.l_max_cap:
            continue
        edges.append((a, b))
        taken.add((a, b))
        deg[a] += 1
        deg[b] += 1
    for k in order:
        if len(edges) >= target_und:
            break
        a, b = int(iu[0][k]), int(iu[1][k])
        if (a, b) in taken:
            continue
        if deg[a] >= cfg.l_max_cap or deg[b] >= cfg.l_max_cap:
            continue
        edges.append((a, b))
        taken.add((a, b))
        deg[a] += 1
        deg[b] += 1

    adj = [[] for _ in range(n)]
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)

    def hops_from(s):
        h = [-1] * n
        h[s] = 0
        q = collections.deque([s])
        while q:
            u = q.popleft()
            for v in adj[u]:
                if h[v] < 0:
                    h[v] = h[u] + 1
                    q.append(v)
        return h

    hops = [hops_from(s) for s in range(n)]
    if any(h < 0 for row in hops for h in row):
        raise TopologyError("generated topology is disconnected; widen radius "
                            "or raise target_links")

    lo, hi = cfg.session_hops
    candidates = [(a, b) for a in range(n) for b in range(n)
                  if a != b and lo <= hops[a][b] <= hi]
    if len(candidates) < cfg.n_sessions:
        candidates = [(a, b) for a in range(n) for b in range(n)
                      if a != b and hops[a][b] >= 1]
    pick = rng.choice(len(candidates), size=cfg.n_sessions, replace=False)
    sessions = [Session(id=i, source=candidates[int(k)][0],
                        destination=candidates[int(k)][1])
                for i, k in enumerate(sorted(int(x) for x in pick))]

    scale = cfg.scale
    if scale is None:
        dmin = min(dist[a, b] for a, b in edges)
        scale = headroom_distance(_DEFAULT_PARAMS) * (1 + 1e-9) / dmin
    pos = pos * scale

    nodes = [Node(id=i, supply_class=_supply_for(i, cfg.supply_mix),
                  x=float(pos[i, 0]), y=float(pos[i, 1])) for i in range(n)]
    links = []
    lid = 0
    for a, b in edges:
        d = float(np.hypot(pos[a, 0] - pos[b, 0], pos[a, 1] - pos[b, 1]))
        for tx, rx in ((a, b), (b, a)):
            links.append(Link(tx=tx, rx=rx, channel=lid % cfg.n_channels,
                              distance=d))
            lid += 1
    return Network(nodes=nodes, links=links, sessions=sessions,
                   n_channels=cfg.n_channels)


_DEFAULT_PARAMS = Params()


def build_topology(cfg: TopologyConfig) -> Network:
    """Build a network from an explicit listing or the seeded generator.

    Generator mode places nodes on a jittered grid, links nearest pairs up
    to the target count under the degree cap, assigns channels round-robin
    in link creation order, and scales distances so the default parameters
    keep every link inside the capacity headroom.
    """
    if cfg.explicit:
        nodes = [replace(nd) for nd in cfg.nodes]
        links = [replace(lk) for lk in (cfg.links or [])]
        sessions = [replace(s) for s in (cfg.sessions or [])]
        ids = [nd.id for nd in nodes]
        if sorted(ids) != list(range(len(nodes))):
            raise TopologyError("node ids must be 0..N-1")
        nodes.sort(key=lambda nd: nd.id)
        seen = set()
        for i, lk in enumerate(links):
            if lk.tx == lk.rx:
                raise TopologyError(f"link {i} is a self-loop at node {lk.tx}")
            if (lk.tx, lk.rx) in seen:
                raise TopologyError(f"duplicate link {lk.tx}->{lk.rx}")
            seen.add((lk.tx, lk.rx))
            a, b = nodes[lk.tx], nodes[lk.rx]
            lk.distance = float(math.hypot(a.x - b.x, a.y - b.y))
            if lk.distance <= 0:
                raise TopologyError(f"link {i} has zero length")
        net = Network(nodes=nodes, links=links, sessions=sessions,
                      n_channels=max((lk.channel for lk in links), default=0) + 1)
        for s in sessions:
            if s.source == s.destination:
                raise TopologyError(f"session {s.id} has source == destination")
            if not _has_path(net, s.source, s.destination):
                raise TopologyError(f"session {s.id}: no path "
                                    f"{s.source}->{s.destination}")
        return net
    net = _generate(cfg)
    for s in net.sessions:
        if not _has_path(net, s.source, s.destination):
            raise TopologyError(f"session {s.id}: no path "
                                f"{s.source}->{s.destination}")
    return net


def _has_path(net: Network, src: int, dst: int) -> bool:
    adj = collections.defaultdict(list)
    for l in net.links:
        adj[l.tx].append(l.rx)
    seen = {src}
    q = collections.deque([src])
    while q:
        u = q.popleft()
        if u == dst:
            return True
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                q.append(v)
    return False


# ---------------------------------------------------------------------------
# derived constants


def bound_constants(net: Network, params: Params) -> BoundConstants:
    """Resolve per-node/per-session parameters and compute bound constants.

    Per-node fields left unset by the topology take the scalar Params
    defaults.  Battery capacities (the Lyapunov perturbation) are written
    back onto the nodes.
    """
    validate_params(params)
    for nd in net.nodes:
        if nd.noise_floor is None:
            nd.noise_floor = params.n0
        if nd.p_max is None:
            nd.p_max = params.p_max
        if nd.p_rx is None:
            nd.p_rx = params.p_rx
        if nd.g_max is None:
            nd.g_max = params.g_max
    for lk in net.links:
        if lk.k_gain is None:
            lk.k_gain = params.k_gain
    for s in net.sessions:
        if s.r_max is None:
            s.r_max = params.r_max
        if s.p_sense is None:
            s.p_sense = params.p_sense

    nN = net.n_nodes
    r_max_f = np.array([s.r_max for s in net.sessions], dtype=float)
    lx = params.l_max * params.x_max
    sigma_f = lx + r_max_f
    q_max_f = params.omega1 * params.beta_u * params.V + r_max_f
    r_glob = float(r_max_f.max()) if net.sessions else params.r_max

    p_total = np.zeros(nN)
    for s in net.sessions:
        p_total[s.source] += s.p_sense * s.r_max
    for i, nd in enumerate(net.nodes):
        p_total[i] += nd.p_max + nd.p_rx * lx
    theta = params.delta * params.omega1 * params.beta_u * params.V + p_total

    b_q = 1.5 * lx * lx + r_glob * r_glob
    inflow = np.array([(nd.harvests * params.h_max) + (nd.buys * nd.g_max)
                       for nd in net.nodes], dtype=float)
    b_e = 0.5 * inflow**2 + 0.5 * p_total**2
    b = nN * len(net.sessions) * b_q + float(b_e.sum())
    sigma = float(sigma_f.max()) if net.sessions else lx + params.r_max
    q_max = float(q_max_f.max()) if net.sessions else (
        params.omega1 * params.beta_u * params.V + params.r_max)
    b_tilde = b + nN * len(net.sessions) * sigma * lx

    for i, nd in enumerate(net.nodes):
        nd.battery = float(theta[i])
        nd.p_total_max = float(p_total[i])
    net._index = None  # resolved fields changed; rebuild cached arrays
    return BoundConstants(sigma=sigma, sigma_f=sigma_f, q_max=q_max,
                          q_max_f=q_max_f, theta=theta, p_total_max=p_total,
                          b_q=b_q, b_e=b_e, b=b, b_tilde=b_tilde)


def validate_network(net: Network, params: Params) -> list[str]:
    """Collect invariant violations.  Empty means the topology is usable."""
    out: list[str] = []
    for nd in net.nodes:
        if nd.supply_class not in SUPPLY_CLASSES:
            out.append(f"node {nd.id}: unknown supply class {nd.supply_class!r}")
        if nd.noise_floor is not None and nd.noise_floor <= 0:
            out.append(f"node {nd.id}: noise floor must be positive")
        if nd.battery is not None and nd.battery <= 0:
            out.append(f"node {nd.id}: battery capacity must be positive")
    seen = set()
    outdeg = collections.Counter()
    indeg = collections.Counter()
    for i, lk in enumerate(net.links):
        if lk.tx == lk.rx:
            out.append(f"link {i}: self loop at node {lk.tx}")
        if (lk.tx, lk.rx) in seen:
            out.append(f"link {i}: duplicate {lk.tx}->{lk.rx}")
        seen.add((lk.tx, lk.rx))
        if lk.distance <= 0:
            out.append(f"link {i}: distance must be positive")
        if not (0 <= lk.tx < net.n_nodes and 0 <= lk.rx < net.n_nodes):
            out.append(f"link {i}: endpoint out of range")
        if lk.channel < 0:
            out.append(f"link {i}: negative channel")
        outdeg[lk.tx] += 1
        indeg[lk.rx] += 1
    for n, d in outdeg.items():
        if d > params.l_max:
            out.append(f"node {n}: out-degree {d} exceeds l_max={params.l_max}")
    for n, d in indeg.items():
        if d > params.l_max:
            out.append(f"node {n}: in-degree {d} exceeds l_max={params.l_max}")
    for s in net.sessions:
        if s.source == s.destination:
            out.append(f"session {s.id}: source == destination")
        if s.r_max is not None and s.r_max <= 0:
            out.append(f"session {s.id}: r_max must be positive")
        if s.p_sense is not None and s.p_sense < 0:
            out.append(f"session {s.id}: sensing cost must be nonnegative")
        if not _has_path(net, s.source, s.destination):
            out.append(f"session {s.id}: no path {s.source}->{s.destination}")
    return out


# ---------------------------------------------------------------------------
# flat index arrays for the hot path


class NetIndex:
    """Array view of a resolved network, shared by the per-slot machinery.

    Gain pairs: one row per distinct (tx, rx) propagation path that matters,
    i.e. every link plus every co-channel interferer-to-receiver path.  Link
    rows come first in link id order; extra interference-only pairs follow
    in lexicographic order.  The random fade stream is consumed in exactly
    this order.
    """

    def __init__(self, net: Network):
        nN, nL, nF = net.n_nodes, net.n_links, net.n_sessions
        self.n_nodes, self.n_links, self.n_sessions = nN, nL, nF
        self.tx = np.array([l.tx for l in net.links], dtype=np.intp)
        self.rx = np.array([l.rx for l in net.links], dtype=np.intp)
        self.channel = np.array([l.channel for l in net.links], dtype=np.intp)
        self.k_gain = np.array([l.k_gain or 0.0 for l in net.links])
        self.noise = np.array([net.nodes[l.rx].noise_floor or 0.0
                               for l in net.links])
        self.p_max = np.array([nd.p_max or 0.0 for nd in net.nodes])
        self.p_rx = np.array([nd.p_rx or 0.0 for nd in net.nodes])
        self.g_max_n = np.array([nd.g_max or 0.0 for nd in net.nodes])
        self.harvests = np.array([nd.harvests for nd in net.nodes], dtype=bool)
        self.buys = np.array([nd.buys for nd in net.nodes], dtype=bool)
        self.src = np.array([s.source for s in net.sessions], dtype=np.intp)
        self.dst = np.array([s.destination for s in net.sessions], dtype=np.intp)
        self.r_max_f = np.array([s.r_max or 0.0 for s in net.sessions])
        self.p_sense_f = np.array([s.p_sense or 0.0 for s in net.sessions])
        self.utility_f = [s.utility for s in net.sessions]

        # out/in incidence as dense (N, L) 0/1 matrices; tiny and matmul-fast
        self.out_inc = np.zeros((nN, nL))
        self.in_inc = np.zeros((nN, nL))
        for i in range(nL):
            self.out_inc[self.tx[i], i] = 1.0
            self.in_inc[self.rx[i], i] = 1.0
        self.src_inc = np.zeros((nN, nF))
        for f in range(nF):
            self.src_inc[self.src[f], f] = 1.0
        self.is_dst = np.zeros((nN, nF), dtype=bool)
        for f in range(nF):
            self.is_dst[self.dst[f], f] = True

        # gain-pair table: links first, then interference-only pairs
        pair_of: dict[tuple[int, int], int] = {}
        pair_dist: list[float] = []
        for i, l in enumerate(net.links):
            pair_of[(l.tx, l.rx)] = i
            pair_dist.append(l.distance)
        pos = np.array([[nd.x, nd.y] for nd in net.nodes])

        def interferes(i, j):
            # co-channel transmissions of other nodes; a receiver's own
            # transmissions never jam its own reception (medium access)
            return (i != j and self.channel[i] == self.channel[j]
                    and self.tx[j] != self.tx[i] and self.tx[j] != self.rx[i])

        extra = set()
        for i in range(nL):
            for j in range(nL):
                if interferes(i, j):
                    key = (int(self.tx[j]), int(self.rx[i]))
                    if key not in pair_of:
                        extra.add(key)
        for key in sorted(extra):
            a, b = key
            pair_of[key] = len(pair_dist)
            pair_dist.append(float(np.hypot(*(pos[a] - pos[b]))))
        self.pair_of = pair_of
        self.pair_dist = np.array(pair_dist)
        self.n_pairs = len(pair_dist)
        self.link_pair = np.arange(nL, dtype=np.intp)

        # interference CSR over links: for link i, the co-channel links j
        # whose power lands on rx_i via pair (tx_j, rx_i)
        ptr = [0]
        jj: list[int] = []
        pair_idx: list[int] = []
        for i in range(nL):
            for j in range(nL):
                if not interferes(i, j):
                    continue
                jj.append(j)
                pair_idx.append(pair_of[(int(self.tx[j]), int(self.rx[i]))])
            ptr.append(len(jj))
        self.intf_ptr = np.array(ptr, dtype=np.intp)
        self.intf_link = np.array(jj, dtype=np.intp)
        self.intf_pair = np.array(pair_idx, dtype=np.intp)
        self.intf_row = np.repeat(np.arange(nL, dtype=np.intp),
                                  np.diff(self.intf_ptr))

        self.harvest_nodes = np.flatnonzero(self.harvests)
        self.buy_nodes = np.flatnonzero(self.buys)


# ---------------------------------------------------------------------------
# topology / config text format
#
# Sectioned plain text.  [params] holds key = value pairs named after the
# Params fields.  [generator] requests generated topology; explicit [nodes],
# [links], [sessions] blocks override it.  Lines starting with '#' are
# comments.  Example:
#
#   [params]
#   V = 1000
#   [generator]
#   nodes = 20
#   channels = 14
#   sessions = 6
#   links = 78
#   seed = 7

_PARAM_TYPES = {f.name: f.type for f in fields(Params)}
_GEN_KEYS = {"nodes": "n_nodes", "channels": "n_channels",
             "sessions": "n_sessions", "links": "target_links",
             "seed": "seed", "radius": "radius", "jitter": "jitter",
             "supply": "supply_mix", "scale": "scale"}


class ConfigError(ValueError):
    pass


def _convert(name, raw, kind, lineno):
    try:
        if kind is int or kind == "int":
            return int(raw)
        if kind is float or kind == "float":
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"line {lineno}: bad value for {name!r}: {raw!r}")


def parse_config_text(text: str):
    """Parse config text into (TopologyConfig, Params).

    Unknown keys are errors; the diagnostic names the key and line.
    """
    section = None
    pkv: dict = {}
    gkv: dict = {}
    nodes: list[Node] = []
    links: list[Link] = []
    sessions: list[Session] = []
    saw = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip().lower()
            if section not in ("params", "generator", "nodes", "links",
                               "sessions"):
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            saw.add(section)
            continue
        if section is None:
            raise ConfigError(f"line {lineno}: content before any section")
        if section in ("params", "generator"):
            if "=" not in s:
                raise ConfigError(f"line {lineno}: expected key = value")
            key, raw = (t.strip() for t in s.split("=", 1))
            if section == "params":
                if key not in _PARAM_TYPES:
                    raise ConfigError(f"line {lineno}: unknown params key {key!r}")
                pkv[key] = _convert(key, raw, _PARAM_TYPES[key], lineno)
            else:
                if key not in _GEN_KEYS:
                    raise ConfigError(f"line {lineno}: unknown generator key {key!r}")
                kind = float if key in ("radius", "jitter", "scale") else (
                    str if key == "supply" else int)
                gkv[_GEN_KEYS[key]] = _convert(key, raw, kind, lineno)
        elif section == "nodes":
            t = s.split()
            if len(t) < 4:
                raise ConfigError(f"line {lineno}: node needs 'id class x y'")
            nodes.append(Node(id=_convert("id", t[0], int, lineno),
                              supply_class=t[1].upper(),
                              x=_convert("x", t[2], float, lineno),
                              y=_convert("y", t[3], float, lineno)))
        elif section == "links":
            t = s.split()
            if len(t) < 3:
                raise ConfigError(f"line {lineno}: link needs 'tx rx channel'")
            links.append(Link(tx=_convert("tx", t[0], int, lineno),
                              rx=_convert("rx", t[1], int, lineno),
                              channel=_convert("channel", t[2], int, lineno)))
        elif section == "sessions":
            t = s.split()
            if len(t) < 3:
                raise ConfigError(f"line {lineno}: session needs 'id src dst'")
            sessions.append(Session(
                id=_convert("id", t[0], int, lineno),
                source=_convert("src", t[1], int, lineno),
                destination=_convert("dst", t[2], int, lineno),
                r_max=_convert("r_max", t[3], float, lineno) if len(t) > 3 else None,
                p_sense=_convert("p_sense", t[4], float, lineno) if len(t) > 4 else None))
    try:
        params = Params(**pkv).validated()
    except ValueError as exc:
        raise ConfigError(str(exc))
    if "nodes" in saw:
        cfg = TopologyConfig(nodes=nodes, links=links, sessions=sessions)
    else:
        cfg = TopologyConfig(**gkv)
    return cfg, params


def format_topology(net: Network, params: Params | None = None) -> str:
    """Explicit-topology dump; reloads to a bit-identical network."""
    out = []
    if params is not None:
        out.append("[params]")
        defaults = Params()
        for f in fields(Params):
            v = getattr(params, f.name)
            if v != getattr(defaults, f.name):
                out.append(f"{f.name} = {v!r}")
        out.append("")
    out.append("[nodes]")
    for nd in net.nodes:
        out.append(f"{nd.id} {nd.supply_class} {nd.x!r} {nd.y!r}")
    out.append("")
    out.append("[links]")
    for lk in net.links:
        out.append(f"{lk.tx} {lk.rx} {lk.channel}")
    out.append("")
    out.append("[sessions]")
    for s in net.sessions:
        extra = ""
        if s.r_max is not None:
            extra = f" {s.r_max!r}"
            if s.p_sense is not None:
                extra += f" {s.p_sense!r}"
        out.append(f"{s.id} {s.source} {s.destination}{extra}")
    out.append("")
    return "\n".join(out)
