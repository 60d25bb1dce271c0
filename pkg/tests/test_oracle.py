from itertools import combinations

import numpy as np
import pytest

from conftest import random_scenario
from relaypos.errors import InvalidScenario, OracleTooLarge
from relaypos.geometry import Point
from relaypos.hypergraph import Scenario
from relaypos.oracle import GridSpec, enumerate_path_flows, grid_best_position, smallest_enclosing_circle


def brute_enclosing_radius(pts):
    """Smallest radius among circles through 2 or 3 points that cover everything."""
    best = np.inf
    cands = []
    for a, b in combinations(pts, 2):
        cands.append(((a + b) / 2, np.hypot(*(a - b)) / 2))
    for a, b, c in combinations(pts, 3):
        d = 2 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]))
        if abs(d) < 1e-12:
            continue
        ux = ((a @ a) * (b[1] - c[1]) + (b @ b) * (c[1] - a[1]) + (c @ c) * (a[1] - b[1])) / d
        uy = ((a @ a) * (c[0] - b[0]) + (b @ b) * (a[0] - c[0]) + (c @ c) * (b[0] - a[0])) / d
        u = np.array([ux, uy])
        cands.append((u, np.hypot(*(a - u))))
    for u, r in cands:
        if np.all(np.hypot(*(pts - u).T) <= r * (1 + 1e-12) + 1e-12):
            best = min(best, r)
    return best


def test_welzl_matches_brute_force():
    rng = np.random.default_rng(31)
    for _ in range(100):
        pts = rng.random((int(rng.integers(2, 9)), 2))
        circ = smallest_enclosing_circle([Point(*p) for p in pts])
        assert circ.radius == pytest.approx(brute_enclosing_radius(pts), rel=1e-9)


def test_grid_symmetric_single_destination():
    sc = Scenario((0, 0), [(2, 0)], 1, 1)
    res = grid_best_position(sc)
    assert res.grid_point.dist(Point(1, 0)) <= res.pitch
    assert res.value == pytest.approx(1.0, rel=1e-6)
    assert res.grid_value <= 1.0 + 1e-12


def test_grid_min_cost_zero_flow_returns_first_point():
    sc = Scenario((0, 0), [(1, 0), (0, 1)], 1, 1)
    res = grid_best_position(sc, ("min_cost", 0.0), GridSpec(20, 0))
    assert res.value == 0.0
    # lowest grid index (smallest x, then smallest y) among hull points that are not nodes
    assert tuple(res.point) == (0.0, pytest.approx(1.0 / 19.0))


def test_grid_rejects_bad_input():
    sc = Scenario((0, 0), [(1, 0)], 1, 1)
    with pytest.raises(InvalidScenario):
        GridSpec(4)
    with pytest.raises(InvalidScenario):
        grid_best_position(sc, "fastest")


def test_enumeration_single_destination_support():
    sc = Scenario((0, 0), [(2, 0)], 1, 0.25, relay=(1, 0))
    assert enumerate_path_flows(sc, 64).support <= 2


def test_enumeration_without_relay_budget_uses_direct_path():
    sc = Scenario((0, 0), [(2, 0), (1, 1)], 1, 1, relay=(1, 0.2))
    res = enumerate_path_flows(sc, 32, nu=0.0)
    assert res.support == 1
    direct = res.grid_split[-1]
    assert direct[0] == 32 and res.best_flow == pytest.approx(1.0 / 4.0)


def test_enumeration_random_four_node_support():
    rng = np.random.default_rng(32)
    for _ in range(10):
        sc = random_scenario(rng, n_range=(3, 3), with_relay=True)
        assert enumerate_path_flows(sc, 64).support <= 2


def test_enumeration_limit():
    sc = Scenario((0, 0), [(i + 1.0, 0.1 * i) for i in range(7)], 1, 1, relay=(0.5, 0.0))
    with pytest.raises(OracleTooLarge):
        enumerate_path_flows(sc)
