from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relaypos.geometry import (
    Circle,
    Point,
    Region,
    circle_intersection_region,
    contains,
    convex_hull,
    disk_constrained_centers,
    enclosing_center,
    maximize_on_segment,
    perpendicular_bisector,
    weighted_minimax_point,
)
from relaypos.oracle import smallest_enclosing_circle

coords = st.floats(-10, 10, allow_nan=False)
point_lists = st.lists(st.tuples(coords, coords), min_size=1, max_size=25)


def brute_hull_vertices(pts):
    """O(n^3): a point is a hull vertex iff it is not inside any triangle of the others nor between two."""
    pts = np.unique(np.asarray(pts, dtype=float), axis=0)
    keep = []
    for i, p in enumerate(pts):
        others = np.delete(pts, i, axis=0)
        inside = False
        for a, b, c in combinations(others, 3):
            d = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
            if abs(d) < 1e-14:
                continue
            l1 = ((b[1] - c[1]) * (p[0] - c[0]) + (c[0] - b[0]) * (p[1] - c[1])) / d
            l2 = ((c[1] - a[1]) * (p[0] - c[0]) + (a[0] - c[0]) * (p[1] - c[1])) / d
            if min(l1, l2, 1 - l1 - l2) >= -1e-12:
                inside = True
                break
        if not inside:
            for a, b in combinations(others, 2):
                ab, ap = b - a, p - a
                cross = ab[0] * ap[1] - ab[1] * ap[0]
                t = ap @ ab / (ab @ ab)
                if abs(cross) < 1e-12 and 0 <= t <= 1:
                    inside = True
                    break
        if not inside:
            keep.append(tuple(p))
    return set(keep)


def test_hull_single_point():
    hull = convex_hull([Point(0, 0)])
    assert [tuple(v) for v in hull.vertices] == [(0.0, 0.0)]


def test_hull_drops_interior_point():
    hull = convex_hull([Point(0, 0), Point(1, 0), Point(0, 1), Point(0.2, 0.2)])
    assert {tuple(v) for v in hull.vertices} == {(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)}


def test_hull_matches_brute_force_on_random_points():
    rng = np.random.default_rng(7)
    pts = rng.random((100, 2))
    hull = convex_hull([Point(*p) for p in pts])
    assert {tuple(v) for v in hull.vertices} == brute_hull_vertices(pts)
    assert all(contains(hull, p) for p in pts)


@given(point_lists)
@settings(max_examples=200, deadline=None)
def test_hull_idempotent_and_contains_inputs(pts):
    hull = convex_hull([Point(*p) for p in pts])
    again = convex_hull(list(hull.vertices))
    assert [tuple(v) for v in again.vertices] == [tuple(v) for v in hull.vertices]
    assert all(contains(hull, p, 1e-9) for p in pts)


def test_contains_square():
    sq = convex_hull([Point(0, 0), Point(1, 0), Point(1, 1), Point(0, 1)])
    assert contains(sq, (0.5, 0.5))
    assert not contains(sq, (2.0, 0.0))
    assert contains(sq, (1 + 1e-12, 0.5), 1e-9)


def test_minimax_symmetric_midpoint():
    res = weighted_minimax_point([(Point(0, 0), 1.0), (Point(2, 0), 1.0)], h=lambda d: d**2, h_inv=np.sqrt)
    assert res.point.dist(Point(1, 0)) < 1e-9
    assert res.value == pytest.approx(1.0, rel=1e-9)


def test_minimax_three_anchors_is_enclosing_circle():
    pts = [Point(0, 0), Point(0, 1), Point(4, 0)]
    res = weighted_minimax_point([(p, 1.0) for p in pts], h=lambda d: d**2, h_inv=np.sqrt)
    sec = smallest_enclosing_circle(pts)
    assert res.point.dist(sec.center) < 1e-6
    assert res.value == pytest.approx(sec.radius**2, rel=1e-6)


def test_minimax_weighted_pair():
    res = weighted_minimax_point([(Point(0, 0), 4.0), (Point(2, 0), 1.0)], h=lambda d: d**2, h_inv=np.sqrt)
    # golden-section oracle on the segment between the anchors
    from scipy.optimize import minimize_scalar

    f = lambda x: max(4 * x**2, (2 - x) ** 2)  # noqa: E731
    x = minimize_scalar(f, bounds=(0, 2), method="bounded", options={"xatol": 1e-12}).x
    assert res.point.dist(Point(x, 0)) < 1e-6
    assert res.point.dist(Point(2 / 3, 0)) < 1e-9
    assert res.value == pytest.approx(16 / 9, rel=1e-9)


@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=2, max_size=8), st.lists(st.floats(0.2, 5), min_size=8, max_size=8))
@settings(max_examples=100, deadline=None)
def test_minimax_certificate(pts, weights):
    pts = list(dict.fromkeys(pts))
    if len(pts) < 2:
        return
    anchors = [(Point(*p), w) for p, w in zip(pts, weights)]
    res = weighted_minimax_point(anchors, h=lambda d: d**2, h_inv=np.sqrt)
    vals = [w * res.point.dist(p) ** 2 for p, w in anchors]
    top = max(vals)
    assert top == pytest.approx(res.value, rel=1e-7, abs=1e-12)
    near = [v for v in vals if v >= top - 1e-7 * max(1.0, top)]
    if len(near) == 1:
        # a single active anchor means the optimum sits on it
        k = int(np.argmax(vals))
        assert res.point.dist(anchors[k][0]) < 1e-6
    # no nearby point does better
    rng = np.random.default_rng(0)
    for d in rng.normal(size=(32, 2)) * 1e-4:
        q = Point(res.point.x + d[0], res.point.y + d[1])
        assert max(w * q.dist(p) ** 2 for p, w in anchors) >= res.value * (1 - 1e-9) - 1e-12


def test_perpendicular_bisectors():
    cases = [((0, 0), (2, 0), (1, 0), (0, 1)), ((0, 0), (0, 2), (0, 1), (1, 0)), ((0, 0), (2, 2), (1, 1), (-1, 1))]
    for a, b, through, direction in cases:
        line = perpendicular_bisector(Point(*a), Point(*b))
        d = np.array(line.direction)
        expected = np.array(direction, dtype=float) / np.hypot(*direction)
        assert abs(abs(d @ expected) - 1.0) < 1e-12
        off = np.array(through) - np.array(tuple(line.point))
        assert abs(off[0] * d[1] - off[1] * d[0]) < 1e-12


def test_circle_intersections():
    empty = circle_intersection_region(Circle(Point(0, 0), 1), Circle(Point(3, 0), 1))
    assert empty.is_empty()
    same = circle_intersection_region(Circle(Point(0, 0), 1), Circle(Point(0, 0), 1))
    assert same.contains((0.99, 0.0)) and not same.contains((1.01, 0.0))
    lens = circle_intersection_region(Circle(Point(0, 0), 1), Circle(Point(1, 0), 1))
    assert lens.contains((0.5, 0.0)) and not lens.contains((-0.5, 0.0))


def test_maximize_on_segment():
    x, fx = maximize_on_segment(lambda x: -((x - 0.3) ** 2), 0.0, 1.0, unimodal=True)
    assert abs(x - 0.3) < 1e-9
    x, fx = maximize_on_segment(lambda x: x, 0.0, 1.0)
    assert x == pytest.approx(1.0, abs=1e-12) and fx == pytest.approx(1.0)


def test_enclosing_center_matches_welzl():
    rng = np.random.default_rng(3)
    for _ in range(200):
        pts = rng.random((int(rng.integers(1, 12)), 2))
        c, r = enclosing_center(pts)
        sec = smallest_enclosing_circle([Point(*p) for p in pts])
        assert r == pytest.approx(sec.radius, rel=1e-9, abs=1e-12)
        assert np.hypot(*(c - np.array(tuple(sec.center)))) < 1e-7


def test_disk_constrained_centers_match_scalar_solver():
    from relaypos.geometry import constrained_center

    rng = np.random.default_rng(5)
    for _ in range(100):
        targets = rng.random((int(rng.integers(1, 6)), 2))
        center = rng.random(2)
        radius = float(rng.uniform(0.01, 1.0))
        pts, vals = disk_constrained_centers(targets, center, [radius])
        ref = constrained_center(targets, Point(*center), radius)
        assert vals[0] == pytest.approx(ref.value, rel=1e-7, abs=1e-9)
        assert np.hypot(*(pts[0] - center)) <= radius * (1 + 1e-9) + 1e-12


def test_region_plane_contains_everything():
    assert Region.plane().contains((1e6, -1e6))
