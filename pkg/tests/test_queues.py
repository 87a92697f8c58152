import numpy as np
import pytest

from easyo.model import (Link, Node, Params, Session, TopologyConfig,
                         bound_constants, build_topology)
from easyo.queues import (AvailabilityError, Decision, QueueState,
                          check_feasible, consumption_all, step,
                          total_consumption)
from easyo.stochastic import state_at


def line_net():
    """0 -> 1 -> 2 with one session 0 to 2; unit-ish distances."""
    cfg = TopologyConfig(
        nodes=[Node(0, "ME", 0.0, 0.0), Node(1, "ME", 1.0, 0.0),
               Node(2, "ME", 2.0, 0.0)],
        links=[Link(0, 1, 0), Link(1, 2, 1)],
        sessions=[Session(0, source=0, destination=2)])
    net = build_topology(cfg)
    params = Params(k_gain=100.0, n0=1.0, sc_min=1.0, sc_max=1.0)
    bound_constants(net, params)
    return net, params


def test_total_consumption_components():
    net, params = line_net()
    dec = Decision.zeros(net)
    dec.r[0] = 2.0            # sensing at node 0: 0.1 * 2 = 0.2
    dec.p_tx[0] = 1.5         # transmit at node 0
    dec.x[0, 0] = 4.0         # node 1 receives 4 units: 0.05 * 4 = 0.2
    assert total_consumption(0, dec, net) == pytest.approx(0.2 + 1.5)
    assert total_consumption(1, dec, net) == pytest.approx(0.2)
    assert total_consumption(2, dec, net) == 0.0


def test_total_consumption_zero_decision():
    net, _ = line_net()
    assert consumption_all(Decision.zeros(net), net).sum() == 0.0


def test_total_consumption_non_source():
    net, _ = line_net()
    dec = Decision.zeros(net)
    dec.p_tx[1] = 0.7
    assert total_consumption(1, dec, net) == pytest.approx(0.7)


def test_step_data_queue_example():
    # Q=5, out=3, in=1, local r=2 -> 5
    net, params = line_net()
    state = QueueState.zeros(net)
    state.q[1, 0] = 5.0
    state.q[0, 0] = 3.0
    state.energy[:] = 100.0
    net.nodes[1].battery = 1e6  # plenty of headroom for this synthetic step
    dec = Decision.zeros(net)
    dec.x[1, 0] = 3.0   # node 1 sends 3
    dec.x[0, 0] = 1.0   # node 1 receives 1
    slot = state_at(1, 0, net, params)
    new = step(state, dec, slot, net)
    assert new.q[1, 0] == pytest.approx(5.0 - 3.0 + 1.0)
    assert new.q[0, 0] == pytest.approx(2.0)


def test_step_source_arrival():
    net, params = line_net()
    state = QueueState.zeros(net)
    state.energy[:] = 100.0
    dec = Decision.zeros(net)
    dec.r[0] = 2.0
    new = step(state, dec, state_at(1, 0, net, params), net)
    assert new.q[0, 0] == pytest.approx(2.0)


def test_step_energy_example():
    # E=10, e=1, g=2, consumption=3 -> 10
    net, params = line_net()
    state = QueueState.zeros(net)
    state.energy[:] = 10.0
    dec = Decision.zeros(net)
    dec.e[0] = 1.0
    dec.g[0] = 2.0
    dec.p_tx[0] = 3.0
    new = step(state, dec, state_at(1, 0, net, params), net)
    assert new.energy[0] == pytest.approx(10.0)


def test_step_zero_decision_is_identity():
    net, params = line_net()
    state = QueueState.zeros(net)
    state.q[0, 0] = 4.0
    state.energy[:] = 2.0
    new = step(state, Decision.zeros(net), state_at(1, 0, net, params), net)
    assert np.array_equal(new.q, state.q)
    assert np.array_equal(new.energy, state.energy)


def test_step_destination_absorbs():
    net, params = line_net()
    state = QueueState.zeros(net)
    state.q[1, 0] = 5.0
    state.energy[:] = 100.0
    dec = Decision.zeros(net)
    dec.x[1, 0] = 2.0
    new = step(state, dec, state_at(1, 0, net, params), net)
    assert new.q[2, 0] == 0.0


def test_step_availability_hard_error():
    net, params = line_net()
    state = QueueState.zeros(net)
    state.energy[:] = 0.1
    dec = Decision.zeros(net)
    dec.p_tx[0] = 1.0
    with pytest.raises(AvailabilityError, match="node 0"):
        step(state, dec, state_at(1, 0, net, params), net)


# --- feasibility -----------------------------------------------------------


def feasible_setup():
    net, params = line_net()
    state = QueueState.zeros(net)
    state.q[0, 0] = 30.0
    state.q[1, 0] = 10.0
    state.energy[:] = 50.0
    slot = state_at(1, 0, net, params)
    slot.harvest[:] = 1.0
    slot.price[:] = 0.7
    dec = Decision.zeros(net)
    dec.e[:] = 0.5
    dec.g[:] = 1.0
    dec.r[0] = 2.0
    dec.p_tx[0] = 1.0
    return net, params, state, slot, dec


def test_feasible_decision_passes():
    net, params, state, slot, dec = feasible_setup()
    assert check_feasible(dec, state, slot, net, params) == []


def test_harvest_bound_violation():
    net, params, state, slot, dec = feasible_setup()
    dec.e[0] = slot.harvest[0] + 0.1
    out = check_feasible(dec, state, slot, net, params)
    assert any("node 0" in v and "harvest" in v for v in out)


def test_capacity_violation_detected():
    from easyo.powalloc import link_capacities
    net, params, state, slot, dec = feasible_setup()
    cap = link_capacities(dec.p_tx, slot, net)
    dec.x[0, 0] = cap[0] + 1e-6
    out = check_feasible(dec, state, slot, net, params)
    assert any("link 0" in v and "capacity" in v for v in out)


def test_capacity_tolerance_allows_exact_load():
    from easyo.powalloc import link_capacities
    net, params, state, slot, dec = feasible_setup()
    cap = link_capacities(dec.p_tx, slot, net)
    dec.x[0, 0] = cap[0]
    assert check_feasible(dec, state, slot, net, params) == []


def test_rate_bound_violation():
    net, params, state, slot, dec = feasible_setup()
    dec.r[0] = net.sessions[0].r_max + 0.01
    out = check_feasible(dec, state, slot, net, params)
    assert any("session 0" in v for v in out)


def test_power_budget_violation():
    net, params, state, slot, dec = feasible_setup()
    dec.p_tx[0] = net.nodes[0].p_max + 0.01
    out = check_feasible(dec, state, slot, net, params)
    assert any("budget" in v for v in out)


def test_battery_overfill_violation():
    net, params, state, slot, dec = feasible_setup()
    state.energy[0] = net.nodes[0].battery - 0.5
    out = check_feasible(dec, state, slot, net, params)
    assert any("overfill" in v for v in out)


def test_purchase_cap_violation():
    net, params, state, slot, dec = feasible_setup()
    dec.g[1] = net.nodes[1].g_max + 0.2
    out = check_feasible(dec, state, slot, net, params)
    assert any("purchase" in v for v in out)


def test_data_availability_violation():
    net, params, state, slot, dec = feasible_setup()
    state.q[1, 0] = 0.5
    dec.p_tx[1] = 1.0
    dec.x[1, 0] = 1.0
    out = check_feasible(dec, state, slot, net, params)
    assert any("backlog" in v for v in out)


def test_class_mask_violations():
    cfg = TopologyConfig(
        nodes=[Node(0, "EG", 0.0, 0.0), Node(1, "EH", 1.0, 0.0)],
        links=[Link(0, 1, 0)],
        sessions=[Session(0, source=0, destination=1)])
    net = build_topology(cfg)
    params = Params()
    bound_constants(net, params)
    state = QueueState.zeros(net)
    state.energy[:] = 10.0
    slot = state_at(1, 0, net, params)
    dec = Decision.zeros(net)
    dec.e[0] = 0.1   # EG node cannot harvest
    dec.g[1] = 0.1   # EH node cannot buy
    out = check_feasible(dec, state, slot, net, params)
    assert any("harvester" in v for v in out)
    assert any("grid" in v for v in out)


# --- conservation ----------------------------------------------------------


def test_ledgers_telescope():
    """Data and energy ledgers balance over a random feasible horizon."""
    net, params = line_net()
    rng = np.random.default_rng(0)
    state = QueueState.zeros(net)
    state.energy[:] = 50.0
    start = state.copy()
    admitted = 0.0
    absorbed = 0.0
    inflow = np.zeros(3)
    spent = np.zeros(3)
    for t in range(200):
        slot = state_at(2, t, net, params)
        dec = Decision.zeros(net)
        dec.r[0] = rng.uniform(0, 1)
        dec.e[:] = np.minimum(slot.harvest, 0.2)
        dec.g[:] = rng.uniform(0, 0.3, size=3)
        dec.p_tx[:] = 0.2   # capacity log(20) covers every routed rate below
        dec.x[0, 0] = min(rng.uniform(0, 1), state.q[0, 0])
        dec.x[1, 0] = min(rng.uniform(0, 1), state.q[1, 0])
        assert check_feasible(dec, state, slot, net, params) == []
        admitted += dec.r[0]
        absorbed += dec.x[1, 0]
        inflow += dec.e + dec.g
        spent += consumption_all(dec, net)
        state = step(state, dec, slot, net)
    assert admitted - absorbed == pytest.approx(
        float((state.q - start.q).sum()), abs=1e-8)
    assert np.allclose(state.energy - start.energy, inflow - spent, atol=1e-8)
