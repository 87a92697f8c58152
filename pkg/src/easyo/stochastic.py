"""Per-slot random state: channel fades, harvestable energy, grid prices.

Each slot's state is a pure function of (run seed, slot index).  Draws are
consumed in a fixed, documented order so adding observers or changing the
controller never perturbs the stream:

  1. fades for every gain pair (links in id order, then the extra
     interference-only pairs in lexicographic order),
  2. harvestable energy for EH/ME nodes in ascending node id,
  3. price states for EG/ME nodes in ascending node id.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Network, Params


@dataclass
class SlotState:
    """One slot's realization.

    ``pair_gain`` holds the fade-scaled gain for every propagation pair in
    the network's pair table; ``channel`` is the per-link view of it.
    ``harvest`` is zero at nodes without a harvester; ``price`` is zero at
    nodes without a grid connection and must not be read there.
    """

    slot: int
    pair_gain: np.ndarray   # (n_pairs,)
    harvest: np.ndarray     # (N,)
    price: np.ndarray       # (N,)

    def channel(self, net: Network) -> np.ndarray:
        return self.pair_gain[net.index().link_pair]


def slot_rng(seed: int, slot: int) -> np.random.Generator:
    """Independent generator for one (seed, slot) pair; replay is exact."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(slot)]))


def sample_slot(rng: np.random.Generator, net: Network, params: Params,
                slot: int = 0) -> SlotState:
    """Draw one slot of channel fades, harvests, and price states.

    Gains follow fade * d^-4 with the fade uniform on [sc_min, sc_max];
    interference paths use the interferer-to-receiver distance under the
    same law.  Harvests are uniform on [0, h_max], prices uniform on
    [sg_min, sg_max].
    """
    idx = net.index()
    fade = rng.uniform(params.sc_min, params.sc_max, size=idx.n_pairs)
    pair_gain = fade * idx.pair_dist ** -4.0
    harvest = np.zeros(idx.n_nodes)
    if idx.harvest_nodes.size:
        harvest[idx.harvest_nodes] = rng.uniform(0.0, params.h_max,
                                                 size=idx.harvest_nodes.size)
    price = np.zeros(idx.n_nodes)
    if idx.buy_nodes.size:
        price[idx.buy_nodes] = rng.uniform(params.sg_min, params.sg_max,
                                           size=idx.buy_nodes.size)
    return SlotState(slot=slot, pair_gain=pair_gain, harvest=harvest,
                     price=price)


def state_at(seed: int, slot: int, net: Network, params: Params) -> SlotState:
    """Replay helper: the slot state as a pure function of (seed, slot)."""
    return sample_slot(slot_rng(seed, slot), net, params, slot=slot)


def electricity_price(state: SlotState, net: Network, node: int,
                      g: float, params: Params) -> float:
    """Unit cost of grid energy at `node` when purchasing `g` this slot.

    The default "flat" model charges the price state itself, independent of
    the amount.  The "affine" model charges a + b*g (convex increasing).
    """
    nd = net.nodes[node]
    if not nd.buys:
        raise ValueError(f"node {node} ({nd.supply_class}) has no grid supply")
    if g < 0:
        raise ValueError(f"negative purchase g={g}")
    return unit_price(float(state.price[node]), g, params)


def unit_price(price_state: float, g: float, params: Params) -> float:
    if params.price_model == "affine":
        return params.price_a + params.price_b * g
    return price_state
