"""Relay placement: the three-step max-flow algorithm, the min-cost algorithm, the R-hat curve and duality.

Notation follows the module docs of :mod:`relaypos.flow`.  A *cut* ``k`` names
the two-hop path whose source hop serves ``t1..tk`` plus the relay and whose
relay hop serves ``t(k+1)..tn``.  For a fixed cut, any relay position is
dominated by the point of the disk ``D(s, rho)`` closest in max-distance to the
relay's targets, so cut by cut the search collapses to a scalar ``rho``.  The
union over cuts of those points, with ``rho`` between consecutive destination
radii, is the R-hat curve.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import ConsistencyError, DegenerateGeometry, InvalidScenario, TargetInfeasible
from .flow import FlowSolution, SCAN_BATCH, max_flow_at, max_flow_many, min_cost_at
from .geometry import (
    EPS_EQ,
    EPS_GEO,
    Point,
    Segment,
    approx_equal,
    contains,
    contains_many,
    convex_hull,
    disk_constrained_centers,
    golden_max,
    project_to_polygon,
    perpendicular_bisector,
    weighted_minimax_point,
)
from .hypergraph import Scenario, path_table

BRANCHES = (
    "PStar",
    "PStarFiltered",
    "BisectorSegment",
    "BoundaryHat",
    "RHatSweep",
    "LocalPolish",
    "MinCostCenter",
    "MinCostRing",
)

_SEGMENT_CHECKS = 65
_SEGMENT_PRESCAN = 257
_SWEEP_SAMPLES = 257
_START_GRID = 24
_START_COUNT = 4
# gamma-hat values are only resolved to about this relative accuracy, since the
# max-flow position they are matched against is itself a numerical optimum
_GAMMA_RTOL = 1e-5


@dataclass(frozen=True)
class PlacementResult:
    relay: Point
    objective: float
    branch: str
    flow: FlowSolution
    source_reach: float = float("nan")
    relay_reach: float = float("nan")
    source_power: float = float("nan")
    relay_power: float = float("nan")
    heuristic: bool = False
    diagnostics: dict = field(default_factory=dict)


# --------------------------------------------------------------------------- helpers


def _hull(scenario: Scenario):
    return convex_hull([Point(*p) for p in scenario.nodes_array()])


def _flow_values(scenario, pts, mu=None, nu=None):
    """``F*`` at each point; positions on top of a node score ``-inf``."""
    v = max_flow_many(scenario, np.atleast_2d(pts), SCAN_BATCH, mu, nu)
    return np.where(np.isfinite(v), v, -np.inf)


def _flow_at_point(scenario, p, mu=None, nu=None):
    return float(_flow_values(scenario, np.asarray(p, dtype=float)[None, :], mu, nu)[0])


def compute_p_star(scenario: Scenario, destinations: Optional[np.ndarray] = None, mu=None, nu=None):
    """Weighted minimax point with anchors ``(s, g(nu))`` and ``(t, g(mu))``.

    Returns ``(point, value)`` where ``value`` is the minimized
    ``max(g(nu) h(D_ps), g(mu) max_t h(D_pt))``.
    """
    model = scenario.model
    mu = scenario.mu if mu is None else mu
    nu = scenario.nu if nu is None else nu
    dests = scenario.dest_array if destinations is None else np.atleast_2d(destinations)
    anchors = [(scenario.source, float(model.g(nu)))]
    anchors += [(Point(*t), float(model.g(mu))) for t in dests]
    res = weighted_minimax_point(anchors, None, model.h, model.h_inv)
    return res.point, res.value


# --------------------------------------------------------------------------- R-hat curve


@dataclass(frozen=True)
class RHatPiece:
    """A maximal run of R-hat samples sharing the same uncovered set and active farthest targets."""

    start: Point
    end: Point
    active: tuple  # sorted destination indices (1-based) attaining the max distance
    uncovered: tuple  # destinations outside the source disk
    pi_range: tuple

    @property
    def segment(self) -> Optional[Segment]:
        if self.start.dist(self.end) <= EPS_GEO:
            return None
        return Segment(self.start, self.end)


@dataclass(frozen=True)
class RHatCurve:
    radii: np.ndarray
    points: np.ndarray
    pieces: tuple

    @property
    def segments(self) -> list:
        return [p.segment for p in self.pieces if p.segment is not None]

    def distance_to(self, p) -> float:
        """Distance from ``p`` to the polyline through the samples of each piece."""
        q = np.asarray(tuple(Point.of(p)), dtype=float)
        best = float(np.min(np.hypot(*(self.points - q).T)))
        for piece in self.pieces:
            seg = piece.segment
            if seg is not None:
                best = min(best, seg.distance_to(q))
        return best


def r_hat_point(scenario: Scenario, pi_s: float):
    """Point of ``D(s, pi_s)`` minimizing the farthest distance to destinations outside that disk."""
    d_st = scenario.source_distances()
    outside = d_st > pi_s
    if not np.any(outside):
        return None, 0.0
    pts, vals = disk_constrained_centers(scenario.dest_array[outside], scenario.source_array, [pi_s])
    return pts[0], float(vals[0])


def trace_r_hat(scenario: Scenario, samples: int = 512) -> RHatCurve:
    """Sample the R-hat curve for source radii sweeping ``(0, D_s,tn)``."""
    if samples < 2:
        raise InvalidScenario(f"trace_r_hat needs at least 2 samples, got {samples}", "samples")
    d_st = scenario.source_distances()
    t = scenario.dest_array
    s = scenario.source_array
    top = float(d_st[-1])
    radii = np.linspace(0.0, top, samples + 2)[1:-1]
    pts = np.empty((len(radii), 2))
    active, uncovered = [], []
    for k in range(scenario.n):
        lo = d_st[k - 1] if k > 0 else 0.0
        mask = (radii >= lo) & (radii < d_st[k]) if k > 0 else radii < d_st[k]
        if not np.any(mask):
            continue
        p, v = disk_constrained_centers(t[k:], s, radii[mask])
        pts[mask] = p
    for rho, p in zip(radii, pts):
        out = tuple(int(i) + 1 for i in np.nonzero(d_st > rho)[0])
        dists = np.hypot(*(t[np.array(out) - 1] - p).T)
        top_d = dists.max()
        act = tuple(o for o, d in zip(out, dists) if d >= top_d - 1e-9 * max(1.0, top_d))
        active.append(act)
        uncovered.append(out)
    pieces = []
    start = 0
    for i in range(1, len(radii) + 1):
        if i == len(radii) or active[i] != active[start] or uncovered[i] != uncovered[start]:
            pieces.append(
                RHatPiece(
                    Point(*pts[start]),
                    Point(*pts[i - 1]),
                    active[start],
                    uncovered[start],
                    (float(radii[start]), float(radii[i - 1])),
                )
            )
            start = i
    return RHatCurve(radii, pts, tuple(pieces))


def _cut_ranges(scenario: Scenario):
    """Source-radius interval of each cut along the R-hat curve."""
    d_st = scenario.source_distances()
    scale = max(1.0, float(d_st[-1]))
    for k in range(scenario.n):
        lo = float(d_st[k - 1]) if k > 0 else 1e-9 * scale
        hi = float(d_st[k])
        if hi > lo:
            yield k, lo, hi


def _sweep_max_flow(scenario: Scenario, mu, nu, samples=_SWEEP_SAMPLES):
    """Best ``F*`` along the R-hat curve: dense scan per cut, then golden refinement."""
    s = scenario.source_array
    t = scenario.dest_array
    best = (-np.inf, None, None)
    for k, lo, hi in _cut_ranges(scenario):
        radii = np.linspace(lo, hi, samples)
        pts, _ = disk_constrained_centers(t[k:], s, radii)
        vals = _flow_values(scenario, pts, mu, nu)
        j = int(np.argmax(vals))
        if not np.isfinite(vals[j]):
            continue

        def f(rho, k=k):
            p, _ = disk_constrained_centers(t[k:], s, [rho])
            return _flow_at_point(scenario, p[0], mu, nu)

        a, b = radii[max(j - 1, 0)], radii[min(j + 1, samples - 1)]
        rho, v = golden_max(f, a, b, tol=1e-12 * max(1.0, hi))
        if vals[j] >= v:
            rho, v = radii[j], vals[j]
        if v > best[0]:
            p, _ = disk_constrained_centers(t[k:], s, [rho])
            best = (float(v), p[0], k)
    return best


def _polish(scenario, p0, f0, hull, mu, nu):
    """Nelder-Mead refinement of ``F*`` inside the hull; returns the start point if nothing improves."""

    def neg(x):
        if not contains(hull, x, EPS_GEO):
            return math.inf
        v = _flow_at_point(scenario, x, mu, nu)
        return -v if np.isfinite(v) else math.inf

    scale = max(hull.diameter, 1e-9)
    simplex = np.array([p0, p0 + [1e-3 * scale, 0.0], p0 + [0.0, 1e-3 * scale]])
    res = minimize(
        neg, p0, method="Nelder-Mead",
        options={"initial_simplex": simplex, "xatol": 1e-11 * scale, "fatol": 1e-14, "maxiter": 400},
    )
    if np.isfinite(res.fun) and -res.fun > f0:
        return np.asarray(res.x), float(-res.fun)
    return np.asarray(p0), f0


def _coarse_starts(scenario, hull, mu, nu, m=_START_GRID, top=_START_COUNT):
    """Best few points of a coarse hull lattice, used as extra local-search seeds."""
    verts = hull.as_array()
    lo, hi = verts.min(axis=0), verts.max(axis=0)
    X, Y = np.meshgrid(np.linspace(lo[0], hi[0], m), np.linspace(lo[1], hi[1], m), indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    # shrink boundary vertices slightly toward the centroid so thin hulls still get samples
    edge_t = np.linspace(0.0, 1.0, m, endpoint=False)
    rolled = np.roll(verts, -1, axis=0)
    edges = (verts[:, None, :] + edge_t[None, :, None] * (rolled - verts)[:, None, :]).reshape(-1, 2)
    centroid = verts.mean(axis=0)
    edges = centroid + (1.0 - 1e-6) * (edges - centroid)
    pts = np.vstack([pts[contains_many(hull, pts, EPS_GEO)], edges])
    vals = _flow_values(scenario, pts, mu, nu)
    vals = np.where(np.isfinite(vals), vals, -np.inf)
    order = np.argsort(-vals)
    picked = []
    min_gap = hull.diameter / m
    for i in order:
        if not np.isfinite(vals[i]):
            break
        if all(np.hypot(*(pts[i] - q)) > 2 * min_gap for q, _ in picked):
            picked.append((pts[i], float(vals[i])))
        if len(picked) == top:
            break
    return picked


# --------------------------------------------------------------------------- max-flow algorithm


def _bisector_runs(scenario, b, rho1, hull):
    """Sub-segments of the bisector of ``t_b`` and ``t_n`` inside the disk, the hull, and where that pair is farthest."""
    t = scenario.dest_array
    s = scenario.source_array
    n = len(t)
    line = perpendicular_bisector(Point(*t[b]), Point(*t[n - 1]))
    m = np.array([line.point.x, line.point.y])
    d = np.array(line.direction, dtype=float)
    # disk clip
    w = m - s
    bq = float(w @ d)
    cq = float(w @ w) - rho1 * rho1
    disc = bq * bq - cq
    if disc <= 0.0:
        return []
    u0, u1 = -bq - math.sqrt(disc), -bq + math.sqrt(disc)
    # hull clip
    verts = hull.as_array()
    if len(verts) >= 3:
        for i in range(len(verts)):
            a, c = verts[i], verts[(i + 1) % len(verts)]
            e = c - a
            nrm = np.array([e[1], -e[0]])  # outward for counterclockwise order
            num = float(nrm @ (a - m))
            den = float(nrm @ d)
            if abs(den) < 1e-15:
                if num < 0.0:
                    return []
                continue
            u = num / den
            if den > 0.0:
                u1 = min(u1, u)
            else:
                u0 = max(u0, u)
    if not u1 > u0:
        return []
    us = np.linspace(u0, u1, _SEGMENT_CHECKS)
    pts = m[None, :] + us[:, None] * d[None, :]
    dist = np.hypot(pts[:, None, 0] - t[None, :, 0], pts[:, None, 1] - t[None, :, 1])
    pair = dist[:, n - 1]
    far = pair >= dist.max(axis=1) - 1e-9 * np.maximum(1.0, pair)
    runs = []
    i = 0
    while i < len(us):
        if far[i]:
            j = i
            while j + 1 < len(us) and far[j + 1]:
                j += 1
            if j > i:
                runs.append((m, d, us[i], us[j]))
            i = j + 1
        else:
            i += 1
    return runs


def _best_on_run(scenario, run, mu, nu):
    m, d, lo, hi = run
    us = np.linspace(lo, hi, _SEGMENT_PRESCAN)
    vals = _flow_values(scenario, m[None, :] + us[:, None] * d[None, :], mu, nu)
    j = int(np.argmax(vals))

    def f(u):
        return _flow_at_point(scenario, m + u * d, mu, nu)

    a, b = us[max(j - 1, 0)], us[min(j + 1, len(us) - 1)]
    u, v = golden_max(f, a, b, tol=1e-12 * max(1.0, abs(hi - lo)))
    if vals[j] >= v:
        u, v = us[j], vals[j]
    return m + u * d, float(v)


def max_flow_place(
    scenario: Scenario,
    mu: Optional[float] = None,
    nu: Optional[float] = None,
    sweep: bool = True,
    polish: bool = True,
) -> PlacementResult:
    """Optimal relay position for the maximum multicast flow.

    Runs the three-step algorithm.  With ``sweep`` the answer is also compared
    against a direct search along the R-hat curve.  With ``polish`` as well,
    Nelder-Mead is started from the algorithm's point, the sweep's point and the
    best cells of a coarse hull lattice.  When either search finds strictly more
    flow its point is returned (branch ``RHatSweep`` or ``LocalPolish``) and the
    algorithm's own answer is kept in ``diagnostics``.
    """
    mu = scenario.mu if mu is None else float(mu)
    nu = scenario.nu if nu is None else float(nu)
    sc = scenario.with_powers(mu, nu)
    model = sc.model
    g_mu, g_nu = float(model.g(mu)), float(model.g(nu))
    s = sc.source_array
    t = sc.dest_array
    d_st = sc.source_distances()
    hull = _hull(sc)
    diag = {}

    def F(p):
        return _flow_at_point(sc, p)

    # Step 1
    p_star, p_val = compute_p_star(sc)
    ps = np.asarray(tuple(p_star))
    d_sp = float(np.hypot(*(ps - s)))
    d_pt = np.hypot(*(t - ps).T)
    lhs = g_nu * float(model.h(d_sp))
    rhs = g_mu * float(model.h(d_pt.max()))
    diag["step1_lhs"], diag["step1_rhs"] = lhs, rhs
    chosen = None
    try:
        sol = max_flow_at(sc.with_relay(p_star))
    except DegenerateGeometry:
        sol = None
    if sol is not None and approx_equal(lhs, rhs) and sol.residual_mu <= EPS_EQ * max(1.0, mu):
        chosen = (ps, sol.total_flow, "PStar")

    # Step 2
    if chosen is None:
        t_prime = np.nonzero(d_st < d_pt)[0]
        rest = np.setdiff1d(np.arange(len(t)), t_prime)
        diag["t_prime"] = [int(i) + 1 for i in t_prime]
        p2 = None
        if len(t_prime) and len(rest):
            p2, _ = compute_p_star(sc, t[rest])
            p2a = np.asarray(tuple(p2))
            d_sp2 = float(np.hypot(*(p2a - s)))
            printed = d_st[t_prime[-1]] <= d_sp2
            prose = bool(np.all(d_st[t_prime] <= d_sp2))
            if printed != prose:
                diag["step2_discrepancy"] = True
            if printed:
                try:
                    chosen = (p2a, F(p2a), "PStarFiltered")
                except DegenerateGeometry:
                    chosen = None
        # Step 3
        if chosen is None:
            rho1 = float(d_st[t_prime[-1]]) if len(t_prime) else float(d_st[-1])
            best1 = (-np.inf, None)
            for cand in [ps] + ([np.asarray(tuple(p2))] if p2 is not None else []):
                if np.hypot(*(cand - s)) < rho1:
                    v = F(cand)
                    if v > best1[0]:
                        best1 = (v, cand)
            for b in range(len(t) - 1):
                for run in _bisector_runs(sc, b, rho1, hull):
                    z, v = _best_on_run(sc, run, mu, nu)
                    if v > best1[0]:
                        best1 = (v, z)
            targets = t[rest] if len(rest) else t
            hat, _ = disk_constrained_centers(targets, s, [rho1])
            f2 = F(hat[0])
            diag["z1"] = None if best1[1] is None else [float(x) for x in best1[1]]
            diag["F1"], diag["F2"] = float(best1[0]), float(f2)
            if best1[0] >= f2:
                chosen = (best1[1], best1[0], "BisectorSegment")
            else:
                chosen = (hat[0], f2, "BoundaryHat")

    z, val, branch = chosen
    if sweep:
        sv, sp, _ = _sweep_max_flow(sc, mu, nu)
        alt = (sv, sp, "RHatSweep")
        if polish:
            starts = [(val, np.asarray(z, dtype=float), branch)]
            if sp is not None:
                starts.append((sv, sp, "RHatSweep"))
            starts += [(v, q, "LocalPolish") for q, v in _coarse_starts(sc, hull, mu, nu)]
            for v0, p0, label in starts:
                q, w = _polish(sc, p0, v0, hull, mu, nu)
                if w > v0 * (1.0 + 1e-9):
                    label = "LocalPolish"
                if w > alt[0]:
                    alt = (w, q, label)
        if alt[1] is not None and alt[0] > val * (1.0 + 1e-9):
            diag["algorithm_branch"] = branch
            diag["algorithm_objective"] = float(val)
            diag["algorithm_relay"] = [float(x) for x in z]
            z, val, branch = alt[1], alt[0], alt[2]

    if not contains(hull, z, EPS_GEO):
        z = np.asarray(tuple(project_to_polygon(hull, z)))
        diag["projected_to_hull"] = True
    relay = Point(*z)
    sol = max_flow_at(sc.with_relay(relay))
    relay_paths = [a for a in sol.allocations if not a.path.direct and a.flow > 0.0]
    if relay_paths:
        main = max(relay_paths, key=lambda a: a.flow)
        reach = (main.path.source_reach, main.path.relay_reach)
    else:
        reach = (float("nan"), float("nan"))
    return PlacementResult(
        relay, sol.total_flow, branch, sol, reach[0], reach[1], sol.source_power, sol.relay_power,
        diagnostics=diag,
    )


# --------------------------------------------------------------------------- min-cost algorithm


def _cost_fn(model, F):
    def c(pi):
        return np.asarray(model.g_inv(F * np.asarray(model.h(pi), dtype=float)), dtype=float)

    return c


def min_cost_place(scenario: Scenario, F: float) -> PlacementResult:
    """Cheapest relay position carrying ``F`` entirely on the best relay path.

    For each cut ``k`` the source radius ``rho`` is scanned over the feasible
    interval and refined by golden section; the cost is
    ``c(max(rho, D_s,tk)) + c(farthest remaining destination)`` with
    ``c(pi) = g_inv(F h(pi))``.  The exact two-path cost at the returned point is
    checked afterwards: the result is flagged ``heuristic`` if splitting the
    flow (or sending it direct) would be cheaper, and ``objective`` reports that
    exact cost.
    """
    F = float(F)
    if not F > 0.0:
        raise TargetInfeasible(f"target flow must be positive, got {F}")
    model = scenario.model
    s = scenario.source_array
    t = scenario.dest_array
    d_st = scenario.source_distances()
    pi_s_max = float(model.h_inv(float(model.g(scenario.mu)) / F))
    pi_r_max = float(model.h_inv(float(model.g(scenario.nu)) / F))
    d_s_tn = float(d_st[-1])
    tol_s = pi_s_max * (1.0 + 1e-12)
    tol_r = pi_r_max * (1.0 + 1e-12)
    # the feasible lens: relay within reach of the source budget and able to reach t_n.
    # At F equal to the maximum flow the lens is a single point, so allow rounding.
    if d_s_tn > tol_s + tol_r:
        raise TargetInfeasible(f"target flow {F} leaves an empty feasibility region")
    c = _cost_fn(model, F)

    best = (np.inf, None, None)
    for k in range(scenario.n):
        lo = float(d_st[k - 1]) if k > 0 else 1e-9 * max(1.0, d_s_tn)
        hi = pi_s_max
        if lo > tol_s:
            break
        hi = max(hi, lo)
        targets = t[k:]

        def cost(rho, k=k, targets=targets):
            rho = np.atleast_1d(rho)
            _, reach = disk_constrained_centers(targets, s, rho)
            pis = np.maximum(rho, float(d_st[k - 1]) if k > 0 else 0.0)
            val = c(pis) + c(reach)
            feas = (pis <= tol_s) & (reach <= tol_r)
            return np.where(feas, val, np.inf)

        radii = np.linspace(lo, min(hi, tol_s), _SWEEP_SAMPLES)
        vals = cost(radii)
        if not np.any(np.isfinite(vals)):
            continue
        j = int(np.argmin(vals))
        a, b = radii[max(j - 1, 0)], radii[min(j + 1, len(radii) - 1)]
        if b > a:
            rho, neg = golden_max(lambda r: -float(cost(r)[0]), a, b, tol=1e-13 * max(1.0, hi))
            v = -neg
        else:
            rho, v = radii[j], vals[j]
        if vals[j] <= v:
            rho, v = radii[j], vals[j]
        if v < best[0]:
            p, _ = disk_constrained_centers(targets, s, [rho])
            best = (float(v), p[0], k)
    if best[1] is None:
        raise TargetInfeasible(f"no relay position carries flow {F} on a single relay path")

    z = best[1]
    # report the cheapest valid single relay path at the chosen point
    table = path_table(scenario, z[None, :])
    n = scenario.n
    usable = table.valid[0, :n] & (table.reach_s[0, :n] <= tol_s) & (table.reach_r[0, :n] <= tol_r)
    costs = np.where(usable, c(table.reach_s[0, :n]) + c(table.reach_r[0, :n]), np.inf)
    kk = int(np.argmin(costs))
    pi_s, pi_r = float(table.reach_s[0, kk]), float(table.reach_r[0, kk])
    p_s = float(model.g_inv(float(model.h(pi_s)) * F))
    p_r = float(model.g_inv(float(model.h(pi_r)) * F))
    total = p_s + p_r
    if p_s > scenario.mu * (1.0 + 1e-9) or p_r > scenario.nu * (1.0 + 1e-9):
        raise ConsistencyError(f"chosen powers ({p_s}, {p_r}) exceed the budgets")

    relay = Point(*z)
    sc = scenario.with_relay(relay)
    fmax = max_flow_at(sc).total_flow
    if F > fmax * (1.0 + 1e-9):
        raise ConsistencyError(f"target {F} exceeds the maximum flow {fmax} at the chosen relay")
    exact = min_cost_at(sc, min(F, fmax))
    heuristic = exact.total_power < total * (1.0 - EPS_EQ)
    unit = lambda d: float(model.g_inv(float(model.h(d))))  # noqa: E731
    diag = {
        "cut": kk,
        "relay_path_cost": total,
        "single_path_inequality": unit(pi_s) + unit(pi_r) <= unit(d_s_tn) * (1.0 + 1e-12),
    }
    branch = "MinCostCenter" if kk == 0 else f"MinCostRing({kk})"
    # the objective is the true minimum cost at the chosen relay, which may
    # use the direct path or a split when that undercuts the single relay path
    return PlacementResult(
        relay, min(total, exact.total_power), branch, exact, pi_s, pi_r, p_s, p_r, heuristic, diag
    )


# --------------------------------------------------------------------------- duality


@dataclass(frozen=True)
class DualityEntry:
    flow: float
    min_cost_relay: Point
    gamma_hat: float
    max_flow_relay: Optional[Point]
    distance: float
    matched: bool
    note: str = ""


@dataclass(frozen=True)
class DualityReport:
    gamma: float
    gamma_bar: float
    max_flow: float
    entries: tuple
    monotone: bool
    failures: int
    tolerance: float


def _scaled_powers(scenario, gamma_hat):
    g = scenario.gamma
    if gamma_hat <= g:
        return scenario.mu, gamma_hat * scenario.mu
    return scenario.nu / gamma_hat, scenario.nu


def _max_flow_position(scenario, gamma_hat):
    mu, nu = _scaled_powers(scenario, gamma_hat)
    return np.asarray(tuple(max_flow_place(scenario, mu, nu, sweep=True, polish=False).relay))


def match_gamma(scenario: Scenario, target, lo=1e-6, hi=1e6, iters=60, tol=1e-3):
    """Power ratio whose max-flow relay matches ``target`` in distance from the source (bisection in log scale)."""
    s = scenario.source_array
    goal = float(np.hypot(*(np.asarray(target) - s)))

    def dist(gm):
        return float(np.hypot(*(_max_flow_position(scenario, gm) - s)))

    # the relay moves toward the source as the relay budget grows
    a, b = math.log(lo), math.log(hi)
    da, db = dist(lo) - goal, dist(hi) - goal
    if da < 0.0 or db > 0.0:
        best = lo if abs(da) < abs(db) else hi
        return best, _max_flow_position(scenario, best), False
    for _ in range(iters):
        m = 0.5 * (a + b)
        dm = dist(math.exp(m)) - goal
        if abs(dm) <= 1e-3 * tol:
            a = b = m
            break
        if dm > 0.0:
            a = m
        else:
            b = m
        if b - a < 1e-12:
            break
    # both ends of the final bracket are candidates: pick the closer position
    cands = sorted({math.exp(a), math.exp(b)})
    pos = [_max_flow_position(scenario, gm) for gm in cands]
    errs = [float(np.hypot(*(p - np.asarray(target)))) for p in pos]
    k = int(np.argmin(errs))
    return cands[k], pos[k], errs[k] <= tol


def duality_check(scenario: Scenario, flows: Sequence[float], tol: float = 1e-3) -> DualityReport:
    """For each target flow, find the power ratio whose max-flow relay coincides with the min-cost relay."""
    fstar = max_flow_place(scenario).objective
    unit = min_cost_place(scenario, 1e-6 * fstar)
    gamma_bar, _, _ = match_gamma(scenario, tuple(unit.relay), tol=tol)
    gam = scenario.gamma
    lo, hi = min(gamma_bar, gam), max(gamma_bar, gam)
    entries = []
    for F in flows:
        F = float(F)
        try:
            zc = min_cost_place(scenario, F)
        except (TargetInfeasible, ConsistencyError) as exc:
            entries.append(DualityEntry(F, Point(0.0, 0.0), float("nan"), None, float("inf"), False, str(exc)))
            continue
        target = np.asarray(tuple(zc.relay))
        gh, zm, ok = match_gamma(scenario, target, tol=tol)
        if not lo <= gh <= hi:
            # near F* the relay barely moves with the ratio; prefer the range end if it matches as well
            gc = min(max(gh, lo), hi)
            zc_pos = _max_flow_position(scenario, gc)
            if float(np.hypot(*(zc_pos - target))) <= tol:
                gh, zm = gc, zc_pos
        d = float(np.hypot(*(zm - target)))
        note = "heuristic min-cost point" if zc.heuristic else ""
        entries.append(DualityEntry(F, zc.relay, gh, Point(*zm), d, d <= tol, note))
    gs = [e.gamma_hat for e in entries if np.isfinite(e.gamma_hat)]
    inside = all(lo * (1 - _GAMMA_RTOL) <= x <= hi * (1 + _GAMMA_RTOL) for x in gs)
    slack = _GAMMA_RTOL * max(gs, default=1.0)
    diffs = np.diff(gs)
    mono = bool(np.all(diffs >= -slack) or np.all(diffs <= slack))
    failures = sum(1 for e in entries if not e.matched)
    return DualityReport(gam, gamma_bar, fstar, tuple(entries), mono and inside, failures, tol)
