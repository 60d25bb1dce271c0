"""Brute-force verifiers: power-split enumeration, hull grid search and Welzl's circle.

None of these share code paths with the solvers they check beyond the path
coefficients and the batch evaluators.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Union

import numpy as np

from .errors import InvalidScenario, OracleTooLarge
from .flow import max_flow_table, min_cost_table
from .geometry import EPS_GEO, Circle, Point, contains_many, convex_hull
from .hypergraph import Scenario, path_table, spanning_paths

MAX_ORACLE_PATHS = 6
_FD_SAMPLES = 4000


# --------------------------------------------------------------------------- enumeration


@dataclass(frozen=True)
class EnumerationResult:
    grid_flow: float  # best flow on the power grid (a lower bound on the optimum)
    best_flow: float  # after re-optimizing every support of size <= 2 on a finer grid
    support: int  # smallest support reaching best_flow
    grid_support: int  # support of the best grid point before re-optimization
    grid_split: tuple  # (source units, relay units) per path at the best grid point
    levels: int
    slack: float


def _path_flow_grid(lam1, lam2, g, mu, nu, xs, ys):
    src = lam1 * np.asarray(g(mu * xs), dtype=float)
    if np.isinf(lam2):
        return np.broadcast_to(src[:, None], (len(xs), len(ys)))
    rel = lam2 * np.asarray(g(nu * ys), dtype=float)
    return np.minimum(src[:, None], rel[None, :])


def enumerate_path_flows(
    scenario: Scenario,
    levels: Optional[int] = None,
    *,
    mu: Optional[float] = None,
    nu: Optional[float] = None,
    refine_levels: int = 512,
) -> EnumerationResult:
    """Exhaustive search over source and relay power splits across every path in L.

    Source and relay budgets are cut into ``levels`` equal units; a 2-D
    knapsack recursion finds the best assignment of units to paths exactly.
    """
    paths = spanning_paths(scenario)
    if len(paths) > MAX_ORACLE_PATHS:
        raise OracleTooLarge(f"{len(paths)} paths exceeds the enumeration limit of {MAX_ORACLE_PATHS}")
    mu = scenario.mu if mu is None else float(mu)
    nu = scenario.nu if nu is None else float(nu)
    g = scenario.model.g
    if levels is None:
        levels = 64 if len(paths) <= 3 else 16
    N = int(levels)
    units = np.arange(N + 1) / N
    tables = [_path_flow_grid(p.lam_source, p.lam_relay, g, mu, nu, units, units) for p in paths]

    value = np.zeros((N + 1, N + 1))
    choices = []
    for p, f in zip(paths, tables):
        new = value.copy()
        pick = np.zeros((N + 1, N + 1, 2), dtype=int)
        b_range = [0] if p.direct else range(N + 1)
        for a in range(N + 1):
            for b in b_range:
                if a == 0 and b == 0:
                    continue
                cand = value[: N + 1 - a, : N + 1 - b] + f[a, b]
                region = new[a:, b:]
                better = cand > region
                if np.any(better):
                    region[better] = cand[better]
                    pick[a:, b:][better] = (a, b)
        choices.append(pick)
        value = new

    # trace the best grid point back to a per-path split
    A, B = N, N
    split = []
    for pick in reversed(choices):
        a, b = pick[A, B]
        split.append((int(a), int(b)))
        A, B = A - a, B - b
    split.reverse()
    flows = [float(t[a, b]) for t, (a, b) in zip(tables, split)]
    grid_flow = float(value[N, N])
    grid_support = sum(1 for v in flows if v > 1e-9)

    best_by_size = {0: 0.0, 1: 0.0, 2: 0.0}
    M = int(refine_levels)
    fine = np.arange(M + 1) / M
    caps = []
    for p in paths:
        c = p.lam_source * float(g(mu))
        if not p.direct:
            c = min(c, p.lam_relay * float(g(nu)))
        caps.append(c)
    best_by_size[1] = max(caps)
    for i, j in combinations(range(len(paths)), 2):
        pa, pb = paths[i], paths[j]
        fa = _path_flow_grid(pa.lam_source, pa.lam_relay, g, mu, nu, fine, fine)
        fb = _path_flow_grid(pb.lam_source, pb.lam_relay, g, mu, nu, fine[::-1], fine[::-1])
        best_by_size[2] = max(best_by_size[2], float((fa + fb).max()))
    best_flow = max(grid_flow, best_by_size[1], best_by_size[2])
    tol = 1e-12 * max(1.0, best_flow)
    if best_by_size[1] >= best_flow - tol:
        support = 1
    elif best_by_size[2] >= best_flow - tol:
        support = 2
    else:
        support = grid_support
    slack = 2.0 * max(caps) / N
    return EnumerationResult(grid_flow, best_flow, support, grid_support, tuple(split), N, slack)


# --------------------------------------------------------------------------- smallest enclosing circle


def _circle_two(a, b):
    c = (a + b) / 2.0
    return c, float(np.hypot(*(a - c)))


def _circle_three(a, b, c):
    bx, by = b - a
    cx, cy = c - a
    d = 2.0 * (bx * cy - by * cx)
    if abs(d) < 1e-300:
        # collinear: the widest pair decides
        pairs = [_circle_two(a, b), _circle_two(a, c), _circle_two(b, c)]
        return max(pairs, key=lambda t: t[1])
    ux = (cy * (bx * bx + by * by) - by * (cx * cx + cy * cy)) / d
    uy = (bx * (cx * cx + cy * cy) - cx * (bx * bx + by * by)) / d
    center = a + np.array([ux, uy])
    return center, float(np.hypot(ux, uy))


def _inside(circle, p, eps=1e-12):
    c, r = circle
    return float(np.hypot(*(p - c))) <= r * (1.0 + eps) + eps


def smallest_enclosing_circle(points, seed: int = 0) -> Circle:
    """Welzl's randomized incremental algorithm (iterative form)."""
    pts = [np.asarray(tuple(Point.of(p)), dtype=float) for p in points]
    if not pts:
        raise InvalidScenario("smallest_enclosing_circle needs at least one point")
    random.Random(seed).shuffle(pts)
    circ = (pts[0], 0.0)
    for i, p in enumerate(pts):
        if _inside(circ, p):
            continue
        circ = (p, 0.0)
        for j in range(i):
            q = pts[j]
            if _inside(circ, q):
                continue
            circ = _circle_two(p, q)
            for k in range(j):
                r = pts[k]
                if not _inside(circ, r):
                    circ = _circle_three(p, q, r)
    return Circle(Point(*circ[0]), circ[1])


# --------------------------------------------------------------------------- hull grid search


@dataclass(frozen=True)
class GridSpec:
    resolution: int = 300
    refinement: int = 2

    def __post_init__(self):
        if int(self.resolution) < 8:
            raise InvalidScenario(f"grid resolution must be at least 8, got {self.resolution}", "resolution")
        if int(self.refinement) < 0:
            raise InvalidScenario("refinement passes must be non-negative", "refinement")


@dataclass(frozen=True)
class GridResult:
    point: Optional[Point]
    value: float  # refined optimum
    grid_point: Optional[Point]
    grid_value: float  # best value on the coarse grid
    slack: float
    lipschitz: float
    pitch: float
    evaluated: int


def _hull_grid(scenario: Scenario, resolution: int):
    nodes = scenario.nodes_array()
    hull = convex_hull([Point(*p) for p in nodes])
    lo, hi = nodes.min(axis=0), nodes.max(axis=0)
    xs = np.linspace(lo[0], hi[0], resolution)
    ys = np.linspace(lo[1], hi[1], resolution)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    inside = contains_many(hull, pts, EPS_GEO)
    pitch = float(max(hi[0] - lo[0], hi[1] - lo[1])) / (resolution - 1)
    if len(hull.vertices) <= 2:
        # collinear nodes: spend the same budget of samples along the segment
        a, b = hull.as_array()[0], hull.as_array()[-1]
        t = np.linspace(0.0, 1.0, resolution * resolution)
        pts = a[None, :] + t[:, None] * (b - a)[None, :]
        inside = np.ones(len(pts), dtype=bool)
        shape = (len(pts), 1)
        pitch = float(np.hypot(*(b - a))) / (len(pts) - 1)
    else:
        shape = (resolution, resolution)
    return hull, pts, inside, shape, pitch


def _evaluate(scenario, objective, pts, chunk=20000):
    out = np.empty(len(pts))
    for start in range(0, len(pts), chunk):
        sl = slice(start, start + chunk)
        table = path_table(scenario, pts[sl])
        if objective[0] == "max_flow":
            out[sl] = max_flow_table(table, scenario.model, scenario.mu, scenario.nu).value
        else:
            out[sl] = min_cost_table(table, scenario.model, scenario.mu, scenario.nu, objective[1]).value
    return out


def _sampled_lipschitz(scenario, objective, hull, step, samples=_FD_SAMPLES, seed=0):
    """Largest |f(p) - f(q)| / |p - q| over random hull points p and nearby q."""
    rng = np.random.default_rng(seed)
    verts = hull.as_array()
    # uniform points in the hull via random convex combinations of a fan triangulation
    if len(verts) >= 3:
        tri = rng.integers(1, len(verts) - 1, samples)
        a, b = rng.random(samples), rng.random(samples)
        flip = a + b > 1.0
        a[flip], b[flip] = 1.0 - a[flip], 1.0 - b[flip]
        p = verts[0] + a[:, None] * (verts[tri] - verts[0]) + b[:, None] * (verts[tri + 1] - verts[0])
    else:
        u = rng.random(samples)
        p = verts[0] + u[:, None] * (verts[-1] - verts[0])
    ang = rng.uniform(0.0, 2.0 * np.pi, samples)
    q = p + step * np.column_stack([np.cos(ang), np.sin(ang)])
    keep = contains_many(hull, q, EPS_GEO)
    if len(verts) < 3:
        direction = (verts[-1] - verts[0]) / np.hypot(*(verts[-1] - verts[0]))
        q = p + step * direction[None, :] * np.sign(np.cos(ang))[:, None]
        keep = np.ones(samples, dtype=bool)
    p, q = p[keep], q[keep]
    if not len(p):
        return 0.0
    fp = _evaluate(scenario, objective, p)
    fq = _evaluate(scenario, objective, q)
    with np.errstate(invalid="ignore"):
        d = np.abs(fp - fq) / np.hypot(*(p - q).T)
    d = d[np.isfinite(d)]
    return float(d.max()) if len(d) else 0.0


def _parse_objective(objective):
    if isinstance(objective, str):
        if objective == "max_flow":
            return ("max_flow", None)
        raise InvalidScenario(f"unknown objective {objective!r}", "objective")
    kind, F = objective
    if kind != "min_cost":
        raise InvalidScenario(f"unknown objective {kind!r}", "objective")
    return ("min_cost", float(F))


def grid_best_position(
    scenario: Scenario,
    objective: Union[str, tuple] = "max_flow",
    grid: Optional[GridSpec] = None,
) -> GridResult:
    """Best relay position over a grid covering the hull of the source and destinations.

    ``objective`` is ``"max_flow"`` (maximized) or ``("min_cost", F)``
    (minimized).  After the coarse pass, ``grid.refinement`` local passes each
    evaluate a 21x21 patch around the incumbent at a tenth of the previous pitch.
    """
    grid = grid or GridSpec()
    obj = _parse_objective(objective)
    sign = 1.0 if obj[0] == "max_flow" else -1.0
    hull, pts, inside, shape, pitch = _hull_grid(scenario, int(grid.resolution))
    vals = np.full(len(pts), np.nan)
    vals[inside] = _evaluate(scenario, obj, pts[inside])
    score = np.where(np.isfinite(vals), sign * vals, -np.inf)
    if obj[0] == "min_cost" and obj[1] == 0.0:
        score = np.where(np.isfinite(vals), 0.0, -np.inf)
    k = int(np.argmax(score))
    if not np.isfinite(score[k]):
        return GridResult(None, np.inf if sign < 0 else -np.inf, None, np.inf if sign < 0 else -np.inf, 0.0, 0.0, pitch, int(inside.sum()))

    # Lipschitz estimate: neighbouring grid cells plus sampled finite differences,
    # the latter so that thin hulls with few interior cells still get a bound
    grid_vals = vals.reshape(shape)
    lip = 0.0
    step = pitch
    for axis in range(grid_vals.ndim):
        if grid_vals.shape[axis] < 2:
            continue
        with np.errstate(invalid="ignore"):
            d = np.abs(np.diff(grid_vals, axis=axis))
        d = d[np.isfinite(d)]
        if len(d):
            lip = max(lip, float(d.max()) / step)
    lip = max(lip, _sampled_lipschitz(scenario, obj, hull, step, seed=int(grid.resolution)))
    slack = lip * hull.diameter / int(grid.resolution)

    best_p, best_s = pts[k], float(score[k])
    grid_point, grid_value = Point(*best_p), sign * best_s
    step = pitch
    offsets = np.linspace(-1.0, 1.0, 21)
    evaluated = int(inside.sum())
    for _ in range(int(grid.refinement)):
        OX, OY = np.meshgrid(offsets * step, offsets * step, indexing="ij")
        local = best_p[None, :] + np.column_stack([OX.ravel(), OY.ravel()])
        local = local[contains_many(hull, local, EPS_GEO)]
        if len(local):
            lv = _evaluate(scenario, obj, local)
            ls = np.where(np.isfinite(lv), sign * lv, -np.inf)
            j = int(np.argmax(ls))
            evaluated += len(local)
            if ls[j] > best_s:
                best_p, best_s = local[j], float(ls[j])
        step /= 10.0
    return GridResult(Point(*best_p), sign * best_s, grid_point, grid_value, slack, lip, pitch, evaluated)
