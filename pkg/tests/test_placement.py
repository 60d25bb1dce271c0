import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_scenario
from relaypos.errors import TargetInfeasible
from relaypos.flow import max_flow_at
from relaypos.geometry import EPS_EQ, EPS_GEO, Point, contains, convex_hull
from relaypos.hypergraph import Scenario
from relaypos.oracle import GridSpec, grid_best_position, smallest_enclosing_circle
from relaypos.placement import (
    compute_p_star,
    duality_check,
    max_flow_place,
    min_cost_place,
    trace_r_hat,
)
from relaypos.rate_model import make_low_snr

LOW2 = make_low_snr(alpha=2.0)


def hull_of(sc):
    return convex_hull([Point(*p) for p in sc.nodes_array()])


# --------------------------------------------------------------------------- p*


def test_p_star_symmetric_pair():
    p, v = compute_p_star(Scenario((0, 0), [(2, 0)], 1, 1, LOW2))
    assert p.dist(Point(1, 0)) < 1e-9 and v == pytest.approx(1.0)


def test_p_star_equal_budgets_is_enclosing_center():
    sc = Scenario((0, 0), [(0, 1), (4, 0)], 1, 1, LOW2)
    p, v = compute_p_star(sc)
    sec = smallest_enclosing_circle([Point(0, 0), Point(0, 1), Point(4, 0)])
    assert p.dist(sec.center) < 1e-6


def test_p_star_weighted():
    # g(nu) = 4 g(mu): the source anchor is four times heavier, so 2 D_sp = D_pt
    p, v = compute_p_star(Scenario((0, 0), [(2, 0)], 1, 4, LOW2))
    assert p.dist(Point(2 / 3, 0)) < 1e-9
    assert v == pytest.approx(16 / 9)


# --------------------------------------------------------------------------- max flow


def test_max_flow_symmetric_single_destination():
    r = max_flow_place(Scenario((0, 0), [(2, 0)], 1, 1, LOW2))
    assert r.branch == "PStar"
    assert r.relay.dist(Point(1, 0)) < 1e-9
    assert r.objective == pytest.approx(1.0, rel=1e-12)


def test_pstar_certificate():
    sc = Scenario((0, 0), [(1, 1), (1, -1), (2.5, 0)], 1, 1, LOW2)
    r = max_flow_place(sc)
    assert r.branch == "PStar"
    lhs, rhs = r.diagnostics["step1_lhs"], r.diagnostics["step1_rhs"]
    assert abs(lhs - rhs) <= EPS_EQ * max(1.0, lhs, rhs)
    assert max_flow_at(sc.with_relay(r.relay)).residual_mu <= 1e-7
    g = grid_best_position(sc)
    assert abs(r.objective - g.grid_value) <= g.slack and r.objective >= g.value - 1e-6


def test_step2_reduced_set():
    # two destinations huddle next to the source, one is far away
    sc = Scenario((0, 0), [(0.1, 0.05), (-0.05, 0.1), (3, 0)], 1, 1, LOW2)
    r = max_flow_place(sc)
    assert r.branch == "PStarFiltered"
    assert r.relay.dist(Point(1.5, 0)) < 1e-7
    assert r.objective == pytest.approx(1 / 1.5**2, rel=1e-9)
    g = grid_best_position(sc)
    assert r.objective >= g.value - 1e-6


def test_step3_segment_search():
    sc = Scenario((0, 0), [(1, 2), (2, -1), (3, 0.5)], 2, 1, LOW2)
    r = max_flow_place(sc, sweep=False)
    assert r.branch == "BisectorSegment"
    p_star, _ = compute_p_star(sc)
    assert r.objective >= max_flow_at(sc.with_relay(p_star)).total_flow
    assert r.objective >= r.diagnostics["F2"]
    g = grid_best_position(sc, grid=GridSpec(400))
    assert abs(r.objective - g.grid_value) <= g.slack


def test_step1_equality_is_not_sufficient_with_unequal_budgets():
    # the equality holds at p*, but moving the relay toward the source frees
    # source power for the direct path and carries more flow
    sc = Scenario((0, 0), [(2, 1), (2, -1)], 1, 0.5, LOW2)
    alg = max_flow_place(sc, sweep=False)
    assert alg.branch == "PStar"
    best = max_flow_place(sc)
    assert best.objective > alg.objective * 1.01
    assert best.diagnostics["algorithm_branch"] == "PStar"
    g = grid_best_position(sc)
    assert best.objective >= g.value - 1e-6


def test_placements_stay_in_hull():
    rng = np.random.default_rng(41)
    for _ in range(10):
        sc = random_scenario(rng)
        r = max_flow_place(sc)
        assert contains(hull_of(sc), r.relay, EPS_GEO)
        c = min_cost_place(sc, 0.3 * max_flow_at(sc.with_relay(r.relay)).total_flow)
        assert contains(hull_of(sc), c.relay, EPS_GEO)


def test_max_flow_is_consistent_with_flow_module():
    sc = Scenario((0.1, 0.2), [(0.9, 0.1), (0.6, 0.8)], 3, 2, make_low_snr(alpha=3))
    r = max_flow_place(sc)
    assert r.flow.total_flow == pytest.approx(max_flow_at(sc.with_relay(r.relay)).total_flow, rel=1e-12)


# --------------------------------------------------------------------------- R-hat


def test_r_hat_single_destination_is_the_segment():
    sc = Scenario((0, 0), [(2, 1)], 1, 1, LOW2)
    curve = trace_r_hat(sc, 64)
    t = np.array([2.0, 1.0])
    cross = curve.points[:, 0] * t[1] - curve.points[:, 1] * t[0]
    assert np.all(np.abs(cross) < 1e-9)
    # the disk point nearest t is on the source circle of each radius
    assert np.allclose(np.hypot(*curve.points.T), curve.radii, atol=1e-9)


def test_r_hat_last_piece_points_at_farthest_destination():
    sc = Scenario((0, 0), [(1, 0), (0, 2)], 1, 1, LOW2)
    curve = trace_r_hat(sc, 256)
    rho, p = curve.radii[-1], curve.points[-1]
    assert rho < 2.0
    assert np.allclose(p, [0.0, rho], atol=1e-9)


def test_r_hat_symmetric_pair_follows_bisector_then_breaks():
    sc = Scenario((0, 0), [(2, 1), (2, -1)], 1, 1, LOW2)
    curve = trace_r_hat(sc, 200)
    on_axis = np.abs(curve.points[:, 1]) < 1e-9
    assert np.all(on_axis)  # both destinations are uncovered until the source disk reaches them
    assert curve.radii[-1] < np.sqrt(5)


# --------------------------------------------------------------------------- min cost


def test_min_cost_symmetric_example():
    sc = Scenario((0, 0), [(2, 0)], 1, 1, LOW2)
    r = min_cost_place(sc, 0.5)
    assert r.relay.dist(Point(1, 0)) < 1e-6
    # the cost is flat at the optimum, so the split is only located to ~sqrt(eps)
    assert (r.source_power, r.relay_power) == pytest.approx((0.5, 0.5), rel=1e-7)
    assert r.objective == pytest.approx(1.0, rel=1e-12)
    assert r.branch == "MinCostCenter"


def test_min_cost_tiny_flow_goes_to_midpoint():
    r = min_cost_place(Scenario((0, 0), [(2, 0)], 1, 1, LOW2), 1e-6)
    assert r.relay.dist(Point(1, 0)) < 1e-6


def test_min_cost_above_max_flow_is_infeasible():
    with pytest.raises(TargetInfeasible):
        min_cost_place(Scenario((0, 0), [(2, 0)], 1, 1, LOW2), 1.0 + 1e-6)


def test_min_cost_powers_follow_the_rate_law():
    sc = Scenario((0.2, 0.1), [(0.9, 0.3), (0.5, 0.9), (0.1, 0.7)], 4, 2, make_low_snr(alpha=3))
    F = 0.5 * max_flow_place(sc).objective
    r = min_cost_place(sc, F)
    m = sc.model
    assert r.source_power == pytest.approx(float(m.g_inv(m.h(r.source_reach) * F)), rel=1e-9)
    assert r.relay_power == pytest.approx(float(m.g_inv(m.h(r.relay_reach) * F)), rel=1e-9)


def test_min_cost_points_lie_on_r_hat():
    rng = np.random.default_rng(42)
    for _ in range(8):
        sc = random_scenario(rng)
        F = 0.5 * max_flow_place(sc, polish=False).objective
        try:
            r = min_cost_place(sc, F)
        except TargetInfeasible:
            continue
        curve = trace_r_hat(sc, 2048)
        # compare with the curve sample at the same source radius
        rho = np.hypot(*(np.array(tuple(r.relay)) - sc.source_array))
        k = int(np.argmin(np.abs(curve.radii - rho)))
        near = curve.points[max(k - 2, 0): k + 3]
        assert np.min(np.hypot(*(near - np.array(tuple(r.relay))).T)) < 1e-3


@given(seed=st.integers(0, 2**31))
@settings(max_examples=15, deadline=None)
def test_min_cost_place_nondecreasing_in_flow(seed):
    sc = random_scenario(np.random.default_rng(seed), n_range=(1, 3))
    fmax = max_flow_place(sc, polish=False).objective
    costs = []
    for frac in (0.1, 0.3, 0.5, 0.7):
        try:
            costs.append(min_cost_place(sc, frac * fmax).objective)
        except TargetInfeasible:
            break
    assert all(b >= a * (1 - 1e-9) for a, b in zip(costs, costs[1:]))


# --------------------------------------------------------------------------- duality


def test_duality_single_symmetric_destination():
    sc = Scenario((0, 0), [(2, 0)], 1, 1, LOW2)
    rep = duality_check(sc, [0.25, 0.5, 1.0])
    assert rep.failures == 0 and rep.monotone
    for e in rep.entries:
        assert e.min_cost_relay.dist(Point(1, 0)) < 1e-6
        assert e.gamma_hat == pytest.approx(1.0, rel=1e-5)


def test_duality_endpoint_matches_gamma():
    sc = Scenario((0, 0), [(2, 0.5), (1.5, -0.8)], 1, 3, LOW2)
    fstar = max_flow_place(sc).objective
    rep = duality_check(sc, [fstar])
    e = rep.entries[0]
    assert e.matched
    assert e.gamma_hat == pytest.approx(sc.gamma, rel=1e-4)
