import numpy as np
import pytest

from easyo.model import (Link, Node, Params, Session, TopologyConfig,
                         build_topology)
from easyo.stochastic import electricity_price, sample_slot, slot_rng, state_at


def net_with(d=1.0, classes=("ME", "ME")):
    cfg = TopologyConfig(
        nodes=[Node(0, classes[0], 0.0, 0.0), Node(1, classes[1], d, 0.0)],
        links=[Link(0, 1, 0), Link(1, 0, 1)],
        sessions=[Session(0, source=0, destination=1)])
    return build_topology(cfg)


def test_channel_gain_range_unit_distance():
    net = net_with(d=1.0)
    p = Params(sc_min=0.9, sc_max=1.1)
    for t in range(50):
        s = state_at(1, t, net, p)
        gains = s.channel(net)
        assert np.all(gains >= 0.9) and np.all(gains <= 1.1)


def test_zero_harvest_cap():
    net = net_with()
    s = state_at(1, 0, net, Params(h_max=0.0))
    assert np.all(s.harvest == 0.0)


def test_harvest_and_price_ranges():
    net = net_with()
    p = Params(h_max=2.0, sg_min=0.5, sg_max=1.0)
    for t in range(100):
        s = state_at(5, t, net, p)
        assert np.all(s.harvest >= 0) and np.all(s.harvest <= 2.0)
        assert np.all(s.price >= 0.5) and np.all(s.price <= 1.0)


def test_replay_is_exact():
    net = net_with()
    p = Params()
    a = state_at(42, 17, net, p)
    b = state_at(42, 17, net, p)
    assert np.array_equal(a.pair_gain, b.pair_gain)
    assert np.array_equal(a.harvest, b.harvest)
    assert np.array_equal(a.price, b.price)
    c = state_at(42, 18, net, p)
    assert not np.array_equal(a.pair_gain, c.pair_gain)


def test_only_harvesters_draw_harvest():
    net = net_with(classes=("EG", "EH"))
    s = state_at(3, 0, net, Params())
    assert s.harvest[0] == 0.0
    assert s.price[1] == 0.0


def test_harvest_mean_matches_uniform():
    # 10^5 draws: mean within 3 sigma of h_max/2
    cfg = TopologyConfig(
        nodes=[Node(i, "EH", float(i), 0.0) for i in range(100)]
        + [Node(100, "EH", 0.0, 1.0)],
        links=[Link(0, 100, 0)], sessions=[])
    net = build_topology(cfg)
    p = Params(h_max=2.0)
    draws = []
    for t in range(1000):
        draws.append(state_at(9, t, net, p).harvest[:100])
    draws = np.concatenate(draws)
    assert draws.size == 100_000
    band = 3 * p.h_max / np.sqrt(12 * draws.size)
    assert abs(draws.mean() - p.h_max / 2) <= band


def test_price_flat_default():
    net = net_with()
    s = state_at(1, 0, net, Params())
    s.price[0] = 0.7
    assert electricity_price(s, net, 0, 1.5, Params()) == 0.7
    s.price[0] = 1.0
    assert electricity_price(s, net, 0, 0.0, Params()) == 1.0


def test_price_affine_form():
    net = net_with()
    s = state_at(1, 0, net, Params())
    p = Params(price_model="affine", price_a=0.5, price_b=0.1)
    assert electricity_price(s, net, 0, 2.0, p) == pytest.approx(0.7)


def test_price_requires_grid_supply():
    net = net_with(classes=("EH", "EG"))
    s = state_at(1, 0, net, Params())
    with pytest.raises(ValueError, match="no grid supply"):
        electricity_price(s, net, 0, 1.0, Params())


def test_draw_order_independent_of_observers():
    # consuming the rng for one slot never depends on who reads the state
    net = net_with()
    p = Params()
    rng = slot_rng(7, 3)
    s1 = sample_slot(rng, net, p, slot=3)
    s2 = state_at(7, 3, net, p)
    assert np.array_equal(s1.pair_gain, s2.pair_gain)
    assert np.array_equal(s1.harvest, s2.harvest)
    assert np.array_equal(s1.price, s2.price)
