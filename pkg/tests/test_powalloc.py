import math

import numpy as np
import pytest

from easyo.oracle import grid_power_oracle
from easyo.powalloc import (PowerProblem, bcd_solve, block_update, capacities,
                            capacity, objective_G, psi, psi_gradient,
                            solver_objective)


def single_link(w=2.0, a=-1.0, s=1.0, n0=1.0, k=100.0, p_max=2.0):
    return PowerProblem.from_dense(
        w=[w], tx=[0], channel=[0], s_own=[s], noise=[n0], k_gain=[k],
        a=np.array([a]), p_max=np.array([p_max]))


def two_link(w=(2.0, 2.0), a=(-1.0, -1.0), s=(1.0, 1.0), cross=0.5,
             n0=1.0, k=100.0, p_max=2.0, same_channel=True):
    ch = [0, 0] if same_channel else [0, 1]
    xg = np.array([[0.0, cross], [cross, 0.0]])
    return PowerProblem.from_dense(
        w=list(w), tx=[0, 1], channel=ch, s_own=list(s), noise=[n0, n0],
        k_gain=[k, k], a=np.array(a), p_max=np.array([p_max, p_max]),
        cross_gain=xg)


# --- psi and capacity ------------------------------------------------------


def test_psi_no_interference():
    prob = single_link(s=1.0, n0=1.0)
    assert psi(0, np.array([0.0]), prob) == pytest.approx(0.0)


def test_psi_one_interferer():
    prob = two_link(s=(1.0, 1.0), cross=1.0, n0=1.0)
    # p_hat = (1, 0): psi_0 = 1 - log(1 + 1) = 1 - log 2
    val = psi(0, np.array([1.0, 0.0]), prob)
    assert val == pytest.approx(1.0 - math.log(2.0))


def test_psi_interference_limited_scale_invariance():
    prob = two_link(cross=0.7, n0=0.0 + 1e-300)
    ph = np.array([0.3, -0.2])
    v1 = psi(0, ph, prob)
    v2 = psi(0, ph + math.log(2.0), prob)
    assert v2 == pytest.approx(v1, abs=1e-9)


def test_capacity_value():
    # SINR 0.5 with K=100 -> log 50
    prob = single_link(s=1.0, n0=2.0, k=100.0)
    assert capacity(0, [1.0], prob) == pytest.approx(math.log(50.0))


def test_capacity_silent_link():
    prob = single_link()
    assert capacity(0, [0.0], prob) == -np.inf


def test_capacity_monotone_in_power():
    prob = single_link(n0=1.0)
    caps = [capacity(0, [p], prob) for p in (0.2, 0.5, 1.0, 2.0)]
    assert all(a < b for a, b in zip(caps, caps[1:]))


def test_objective_g_single_link():
    prob = single_link(w=2.0, a=-1.0, s=1.0, n0=2.0, k=100.0)
    # C(1) = log 50; G = 2 log 50 - 1
    assert objective_G([1.0], prob) == pytest.approx(2 * math.log(50.0) - 1.0)


def test_objective_g_silent_is_zero():
    prob = two_link()
    assert objective_G([0.0, 0.0], prob) == 0.0


# --- gradients -------------------------------------------------------------


def test_gradient_isolated_link_closed_form():
    prob = single_link(w=3.0, a=-2.0)
    for ph in (-1.0, 0.0, 0.5):
        g = psi_gradient(0, np.array([ph]), prob)
        assert g[0] == pytest.approx(3.0 - 2.0 * math.exp(ph))


def test_gradient_negative_when_weightless():
    prob = single_link(w=0.0, a=-1.0)
    prob.w[0] = 0.0
    g = psi_gradient(0, np.array([0.0]), prob)
    assert g[0] < 0


def _objective_full(p_hat, prob):
    total = 0.0
    for i in range(prob.n_links):
        total += prob.w[i] * psi(i, p_hat, prob)
        total += prob.a[prob.tx[i]] * math.exp(p_hat[i])
    return total


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(7)
    for _ in range(100):
        L = int(rng.integers(2, 4))
        tx = np.arange(L)
        ch = np.zeros(L, dtype=int)
        cross = rng.uniform(0.1, 1.0, size=(L, L))
        prob = PowerProblem.from_dense(
            w=rng.uniform(0.5, 5.0, size=L), tx=tx, channel=ch,
            s_own=rng.uniform(0.5, 2.0, size=L),
            noise=rng.uniform(0.5, 2.0, size=L),
            k_gain=np.full(L, 100.0),
            a=-rng.uniform(0.2, 3.0, size=L),
            p_max=np.full(L, 2.0), cross_gain=cross)
        p_hat = rng.uniform(-1.5, 0.5, size=L)
        for node in range(L):
            grad = psi_gradient(node, p_hat, prob)
            h = 1e-6
            fd = np.empty(1)
            e = np.zeros(L)
            e[node] = h
            fd[0] = (_objective_full(p_hat + e, prob)
                     - _objective_full(p_hat - e, prob)) / (2 * h)
            assert grad[0] == pytest.approx(fd[0], rel=1e-5, abs=1e-7)


# --- block updates ---------------------------------------------------------


def test_block_update_closed_form():
    # no interference: p* = min(w / -a, p_max)
    prob = single_link(w=1.2, a=-2.0, p_max=2.0)
    _, new = block_update(0, np.array([math.log(0.3)]), prob)
    assert math.exp(new[0]) == pytest.approx(0.6, rel=1e-9)
    prob2 = single_link(w=10.0, a=-1.0, p_max=2.0)
    _, new2 = block_update(0, np.array([math.log(0.3)]), prob2)
    assert math.exp(new2[0]) == pytest.approx(2.0, rel=1e-9)


def test_block_update_symmetric_links():
    prob = PowerProblem.from_dense(
        w=[2.0, 2.0], tx=[0, 0], channel=[0, 1], s_own=[1.0, 1.0],
        noise=[1.0, 1.0], k_gain=[100.0, 100.0], a=np.array([-4.0]),
        p_max=np.array([2.0]))
    _, new = block_update(0, np.log([0.1, 0.9]), prob)
    assert new[0] == pytest.approx(new[1], rel=1e-9)
    assert math.exp(new[0]) == pytest.approx(0.5, rel=1e-9)


def test_block_update_budget_split():
    # both links want 1.5 each; budget 2 splits proportional to weight
    prob = PowerProblem.from_dense(
        w=[3.0, 1.0], tx=[0, 0], channel=[0, 1], s_own=[1.0, 1.0],
        noise=[1.0, 1.0], k_gain=[100.0, 100.0], a=np.array([-0.5]),
        p_max=np.array([2.0]))
    _, new = block_update(0, np.log([0.5, 0.5]), prob)
    p = np.exp(new)
    assert p.sum() == pytest.approx(2.0, rel=1e-9)
    assert p[0] / p[1] == pytest.approx(3.0, rel=1e-9)


# --- full solves -----------------------------------------------------------


def test_bcd_single_link_matches_closed_form():
    prob = single_link(w=1.2, a=-2.0)
    p, rep = bcd_solve(prob)
    assert p[0] == pytest.approx(0.6, rel=1e-8)
    assert rep.converged


def test_bcd_zero_weights_no_sweeps():
    prob = two_link(w=(0.0, 0.0))
    p, rep = bcd_solve(prob)
    assert np.all(p == 0.0)
    assert rep.iterations == 0


def test_bcd_trace_monotone():
    prob = two_link(w=(4.0, 3.0), a=(-1.0, -1.5), cross=0.4)
    p, rep = bcd_solve(prob, trace=True)
    assert rep.converged
    assert all(b >= a - 1e-9 for a, b in zip(rep.trace, rep.trace[1:]))


def test_bcd_budget_feasible():
    rng = np.random.default_rng(3)
    for _ in range(50):
        prob = two_link(w=tuple(rng.uniform(0.5, 8, 2)),
                        a=tuple(-rng.uniform(0.1, 2, 2)),
                        cross=rng.uniform(0.05, 1.0))
        p, _ = bcd_solve(prob)
        for n in (0, 1):
            assert p[prob.tx == n].sum() <= prob.p_max[n] + 1e-9


def test_bcd_matches_grid_oracle_two_link():
    prob = two_link(w=(4.0, 3.0), a=(-2.0, -1.0), cross=0.3, n0=1.0)
    p, rep = bcd_solve(prob)
    p_star, g_star = grid_power_oracle(prob, grid=401)
    g_bcd = objective_G(p, prob)
    assert g_bcd >= g_star - 1e-4 * abs(g_star)


def test_solver_objective_finite_at_floor():
    prob = two_link()
    val = solver_objective(np.array([1e-9, 1.0]), prob,
                           np.array([True, True]))
    assert np.isfinite(val)


def test_capacities_vector():
    prob = two_link(s=(1.0, 1.0), cross=0.5, n0=1.0)
    c = capacities(np.array([1.0, 0.0]), prob)
    assert c[0] == pytest.approx(math.log(100.0 * 1.0 / 1.0))
    assert c[1] == -np.inf
