"""Planar primitives and the two optimization kernels the placement code reduces to.

Everything here is a pure function of immutable inputs.  Points are small frozen
dataclasses; heavy lifting happens on ``numpy`` arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .errors import DegenerateGeometry, InvalidScenario

EPS_GEO = 1e-9
EPS_EQ = 1e-7

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def approx_equal(a, b, rel=EPS_EQ):
    """Relative equality used wherever an analytic equality is tested in floating point."""
    return abs(a - b) <= rel * max(1.0, abs(a), abs(b))


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        x, y = float(self.x), float(self.y)
        if not (math.isfinite(x) and math.isfinite(y)):
            raise InvalidScenario(f"non-finite coordinate ({self.x}, {self.y})")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __iter__(self):
        yield self.x
        yield self.y

    def __array__(self, dtype=None, copy=None):
        return np.array([self.x, self.y], dtype=dtype or float)

    def dist(self, other) -> float:
        ox, oy = other
        return math.hypot(self.x - ox, self.y - oy)

    @classmethod
    def of(cls, p) -> "Point":
        if isinstance(p, Point):
            return p
        x, y = p
        return cls(x, y)


@dataclass(frozen=True)
class Segment:
    a: Point
    b: Point

    def __post_init__(self):
        if self.a.dist(self.b) <= EPS_GEO:
            raise DegenerateGeometry("segment endpoints coincide")

    @property
    def length(self) -> float:
        return self.a.dist(self.b)

    def at(self, t: float) -> Point:
        return Point(self.a.x + t * (self.b.x - self.a.x), self.a.y + t * (self.b.y - self.a.y))

    def distance_to(self, p) -> float:
        return _point_segment_distance(np.asarray(p, float), np.asarray(self.a), np.asarray(self.b))


@dataclass(frozen=True)
class ConvexPolygon:
    vertices: tuple

    def __post_init__(self):
        if len(self.vertices) < 1:
            raise InvalidScenario("polygon needs at least one vertex")
        object.__setattr__(self, "vertices", tuple(Point.of(v) for v in self.vertices))

    def as_array(self) -> np.ndarray:
        return np.array([[v.x, v.y] for v in self.vertices], dtype=float)

    @property
    def diameter(self) -> float:
        pts = self.as_array()
        if len(pts) == 1:
            return 0.0
        diff = pts[:, None, :] - pts[None, :, :]
        return float(np.sqrt((diff ** 2).sum(-1)).max())


@dataclass(frozen=True)
class Circle:
    center: Point
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", Point.of(self.center))
        if not (self.radius >= 0.0):
            raise InvalidScenario(f"negative circle radius {self.radius}")

    def contains(self, p, tol=EPS_GEO) -> bool:
        return self.center.dist(p) <= self.radius + tol


@dataclass(frozen=True)
class Line:
    point: Point
    direction: tuple  # unit vector

    def contains(self, p, tol=EPS_GEO) -> bool:
        dx, dy = self.direction
        px, py = p
        return abs((px - self.point.x) * dy - (py - self.point.y) * dx) <= tol


# --------------------------------------------------------------------------- hull


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points: Iterable) -> ConvexPolygon:
    """Andrew's monotone chain; counterclockwise, collinear points dropped."""
    pts = sorted({(float(x), float(y)) for x, y in points})
    if not pts:
        raise InvalidScenario("convex hull of an empty point set")
    if len(pts) == 1:
        return ConvexPolygon((Point(*pts[0]),))

    def chain(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and _cross(out[-2], out[-1], p) <= 0.0:
                out.pop()
            out.append(p)
        return out

    lower = chain(pts)
    upper = chain(reversed(pts))
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        # collinear input: keep the two extreme points
        hull = [pts[0], pts[-1]]
    return ConvexPolygon(tuple(Point(*p) for p in hull))


def _point_segment_distance(p, a, b):
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return float(np.hypot(*(p - a)))
    t = min(1.0, max(0.0, float((p - a) @ ab) / denom))
    return float(np.hypot(*(p - (a + t * ab))))


def contains(poly: ConvexPolygon, p, tol: float = EPS_GEO) -> bool:
    """True iff ``p`` lies inside ``poly`` or within ``tol`` of its boundary."""
    verts = poly.as_array()
    q = np.asarray(p, dtype=float)
    if len(verts) == 1:
        return float(np.hypot(*(q - verts[0]))) <= tol
    if len(verts) == 2:
        return _point_segment_distance(q, verts[0], verts[1]) <= tol
    nxt = np.roll(verts, -1, axis=0)
    edge = nxt - verts
    length = np.hypot(edge[:, 0], edge[:, 1])
    cross = edge[:, 0] * (q[1] - verts[:, 1]) - edge[:, 1] * (q[0] - verts[:, 0])
    return bool(np.all(cross / length >= -tol))


def contains_many(poly: ConvexPolygon, pts: np.ndarray, tol: float = EPS_GEO) -> np.ndarray:
    """Vectorized :func:`contains` for an ``(N, 2)`` array."""
    verts = poly.as_array()
    pts = np.asarray(pts, dtype=float)
    if len(verts) == 1:
        return np.hypot(*(pts - verts[0]).T) <= tol
    if len(verts) == 2:
        a, b = verts
        ab = b - a
        t = np.clip(((pts - a) @ ab) / (ab @ ab), 0.0, 1.0)
        proj = a + t[:, None] * ab
        return np.hypot(*(pts - proj).T) <= tol
    nxt = np.roll(verts, -1, axis=0)
    edge = nxt - verts
    length = np.hypot(edge[:, 0], edge[:, 1])
    cross = edge[None, :, 0] * (pts[:, None, 1] - verts[None, :, 1]) - edge[None, :, 1] * (
        pts[:, None, 0] - verts[None, :, 0]
    )
    return np.all(cross / length >= -tol, axis=1)


def project_to_polygon(poly: ConvexPolygon, p) -> Point:
    """Nearest point of ``poly`` to ``p``."""
    if contains(poly, p, tol=0.0):
        return Point.of(p)
    verts = poly.as_array()
    q = np.asarray(p, dtype=float)
    if len(verts) == 1:
        return Point(*verts[0])
    best, best_d = None, math.inf
    for a, b in zip(verts, np.roll(verts, -1, axis=0)):
        ab = b - a
        t = min(1.0, max(0.0, float((q - a) @ ab) / float(ab @ ab)))
        c = a + t * ab
        d = float(np.hypot(*(q - c)))
        if d < best_d:
            best, best_d = c, d
    return Point(*best)


# --------------------------------------------------------------------------- lines and regions


def perpendicular_bisector(a, b) -> Line:
    """Locus of points equidistant from ``a`` and ``b``."""
    a, b = Point.of(a), Point.of(b)
    dx, dy = b.x - a.x, b.y - a.y
    n = math.hypot(dx, dy)
    if n <= EPS_GEO:
        raise DegenerateGeometry("bisector of coincident points")
    return Line(Point((a.x + b.x) / 2.0, (a.y + b.y) / 2.0), (-dy / n, dx / n))


def _polygon_halfplanes(poly: ConvexPolygon) -> np.ndarray:
    """Rows ``(nx, ny, c)`` meaning ``nx*x + ny*y <= c``; unit normals."""
    v = poly.as_array()
    rows = []
    if len(v) == 1:
        x, y = v[0]
        rows = [(1, 0, x), (-1, 0, -x), (0, 1, y), (0, -1, -y)]
    elif len(v) == 2:
        a, b = v
        u = (b - a) / np.hypot(*(b - a))
        n = np.array([u[1], -u[0]])
        rows = [(*n, n @ a), (*-n, -(n @ a)), (*u, u @ b), (*-u, -(u @ a))]
    else:
        for a, b in zip(v, np.roll(v, -1, axis=0)):
            e = b - a
            n = np.array([e[1], -e[0]]) / np.hypot(*e)
            rows.append((*n, n @ a))
    return np.array(rows, dtype=float)


@dataclass(frozen=True)
class Region:
    """Intersection of closed disks and half-planes; no constraints means the whole plane."""

    disks: tuple = ()
    halfplanes: Optional[np.ndarray] = None
    anchor: Optional[Point] = None  # a point known to be feasible, if any

    @classmethod
    def plane(cls) -> "Region":
        return cls()

    @classmethod
    def from_polygon(cls, poly: ConvexPolygon) -> "Region":
        return cls(halfplanes=_polygon_halfplanes(poly), anchor=poly.vertices[0])

    @classmethod
    def disk(cls, center, radius) -> "Region":
        return cls(disks=(Circle(Point.of(center), float(radius)),))

    def intersect(self, other: "Region") -> "Region":
        hp = [h for h in (self.halfplanes, other.halfplanes) if h is not None and len(h)]
        return Region(
            disks=self.disks + other.disks,
            halfplanes=np.vstack(hp) if hp else None,
        )

    @property
    def unbounded(self) -> bool:
        return not self.disks and (self.halfplanes is None or not len(self.halfplanes))

    def _arrays(self):
        if self.disks:
            c = np.array([[d.center.x, d.center.y] for d in self.disks], dtype=float)
            r = np.array([d.radius for d in self.disks], dtype=float)
        else:
            c, r = np.zeros((0, 2)), np.zeros(0)
        hp = self.halfplanes if self.halfplanes is not None else np.zeros((0, 3))
        return c, r, hp

    def contains(self, p, tol: float = EPS_GEO) -> bool:
        c, r, hp = self._arrays()
        q = np.asarray(p, dtype=float)
        if len(c) and np.any(np.hypot(*(q - c).T) > r + tol):
            return False
        if len(hp) and np.any(hp[:, :2] @ q > hp[:, 2] + tol):
            return False
        return True

    def feasible_points(self, tol: float = EPS_GEO) -> np.ndarray:
        if self.unbounded:
            return np.zeros((1, 2))
        c, r, hp = self._arrays()
        pts = common_points(c, r, hp, tol)
        if not len(pts) and self.anchor is not None and self.contains(self.anchor, tol):
            pts = np.array([[self.anchor.x, self.anchor.y]])
        return pts

    def is_empty(self, tol: float = EPS_GEO) -> bool:
        return len(self.feasible_points(tol)) == 0

    def representative(self, tol: float = EPS_GEO) -> Optional[Point]:
        pts = self.feasible_points(tol)
        if not len(pts):
            return None
        return Point(*pts.mean(axis=0))


def circle_intersection_region(c1: Circle, c2: Circle) -> Region:
    """Lens-shaped intersection of two closed disks (possibly empty)."""
    return Region(disks=(c1, c2))


def _circle_circle(c, r, tol):
    """All pairwise boundary intersections of the disks in ``c``/``r``."""
    m = len(r)
    if m < 2:
        return np.zeros((0, 2))
    i, j = np.triu_indices(m, 1)
    d_vec = c[j] - c[i]
    d = np.hypot(d_vec[:, 0], d_vec[:, 1])
    ok = (d > 0.0) & (d <= r[i] + r[j] + tol) & (d >= np.abs(r[i] - r[j]) - tol)
    if not np.any(ok):
        return np.zeros((0, 2))
    i, j, d_vec, d = i[ok], j[ok], d_vec[ok], d[ok]
    a = (r[i] ** 2 - r[j] ** 2 + d ** 2) / (2.0 * d)
    hh = np.sqrt(np.maximum(r[i] ** 2 - a ** 2, 0.0))
    u = d_vec / d[:, None]
    base = c[i] + a[:, None] * u
    perp = np.stack([-u[:, 1], u[:, 0]], axis=1)
    return np.vstack([base + hh[:, None] * perp, base - hh[:, None] * perp])


def _circle_line(c, r, hp, tol):
    if not len(r) or not len(hp):
        return np.zeros((0, 2))
    n = hp[:, :2]
    off = hp[:, 2]
    # signed distance of each centre to each boundary line
    s = c @ n.T - off[None, :]
    ok = np.abs(s) <= r[:, None] + tol
    if not np.any(ok):
        return np.zeros((0, 2))
    ci, li = np.nonzero(ok)
    foot = c[ci] - s[ci, li][:, None] * n[li]
    half = np.sqrt(np.maximum(r[ci] ** 2 - s[ci, li] ** 2, 0.0))
    t = np.stack([-n[li, 1], n[li, 0]], axis=1)
    return np.vstack([foot + half[:, None] * t, foot - half[:, None] * t])


def _line_line(hp):
    k = len(hp)
    if k < 2:
        return np.zeros((0, 2))
    i, j = np.triu_indices(k, 1)
    det = hp[i, 0] * hp[j, 1] - hp[i, 1] * hp[j, 0]
    ok = np.abs(det) > 1e-14
    i, j, det = i[ok], j[ok], det[ok]
    x = (hp[i, 2] * hp[j, 1] - hp[i, 1] * hp[j, 2]) / det
    y = (hp[i, 0] * hp[j, 2] - hp[i, 2] * hp[j, 0]) / det
    return np.stack([x, y], axis=1)


def common_points(c, r, hp, tol) -> np.ndarray:
    """Candidate extreme points of the intersection that satisfy every constraint.

    A nonempty compact intersection of convex sets has a leftmost point; it is
    either the leftmost point of one disk or an intersection of two boundaries.
    The returned array is empty iff the intersection is (numerically) empty.
    """
    cands = [_circle_circle(c, r, tol), _circle_line(c, r, hp, tol), _line_line(hp)]
    if len(r):
        cands.append(c - np.stack([r, np.zeros_like(r)], axis=1))
    pts = np.vstack(cands)
    if not len(pts):
        return pts
    keep = np.ones(len(pts), dtype=bool)
    if len(r):
        d = np.hypot(pts[:, None, 0] - c[None, :, 0], pts[:, None, 1] - c[None, :, 1])
        keep &= np.all(d <= r[None, :] + tol, axis=1)
    if len(hp):
        keep &= np.all(pts @ hp[:, :2].T <= hp[None, :, 2] + tol, axis=1)
    return pts[keep]


# --------------------------------------------------------------------------- minimax kernel


def numeric_inverse(fun: Callable[[float], float], lo: float = 0.0, hi: float = 1.0):
    """Inverse of an increasing scalar map by bracketing + bisection (relative tolerance 1e-13)."""

    def inv(y):
        y = float(y)
        a, b = lo, hi
        while fun(b) < y:
            a, b = b, 2.0 * b + 1.0
            if b > 1e300:
                return math.inf
        for _ in range(200):
            m = 0.5 * (a + b)
            if fun(m) < y:
                a = m
            else:
                b = m
            if b - a <= 1e-13 * abs(b):
                break
        return 0.5 * (a + b)

    return inv


def _identity(v):
    return v


def vectorize(fun: Callable) -> Callable:
    """Wrap a scalar map so it accepts arrays, using numpy broadcasting when it can."""
    if getattr(fun, "_vectorized", False):
        return fun

    def call(x):
        x = np.asarray(x, dtype=float)
        try:
            with np.errstate(all="ignore"):
                out = np.asarray(fun(x), dtype=float)
            if out.shape == x.shape:
                return out
        except (TypeError, ValueError):
            pass
        return np.array([fun(float(v)) for v in x.ravel()], dtype=float).reshape(x.shape)

    call._vectorized = True
    return call


@dataclass(frozen=True)
class MinimaxResult:
    point: Point
    value: float
    active: tuple  # indices of anchors within EPS_EQ of the max


def weighted_minimax_point(
    anchors: Sequence,
    domain: Optional[Region | ConvexPolygon] = None,
    h: Callable = _identity,
    h_inv: Optional[Callable] = None,
    rel_tol: float = 1e-14,
) -> MinimaxResult:
    """Minimize ``max_i w_i * h(|p - a_i|)`` over ``domain``.

    Level-set bisection: for a level ``c`` the sublevel set is the intersection
    of disks of radius ``h_inv(c / w_i)`` with the domain, and feasibility is an
    exact candidate-point test.  ``h`` must be increasing; convexity is not
    needed because sublevel sets are disks regardless.
    """
    if not anchors:
        raise InvalidScenario("weighted_minimax_point needs at least one anchor")
    if h_inv is None:
        h_inv = _identity if h is _identity else numeric_inverse(h)
    h, h_inv = vectorize(h), vectorize(h_inv)
    if isinstance(domain, ConvexPolygon):
        domain = Region.from_polygon(domain)
    domain = domain or Region.plane()

    a = np.array([[*Point.of(p)] for p, _ in anchors], dtype=float)
    w = np.array([float(wt) for _, wt in anchors], dtype=float)
    if np.any(w <= 0.0):
        raise InvalidScenario("anchor weights must be positive")
    h0 = float(h(0.0))
    dc, dr, dhp = domain._arrays()
    scale = max(1.0, float(np.abs(a).max()), float(dr.max()) if len(dr) else 0.0)
    tol = 1e-12 * scale

    def objective(p):
        return float(np.max(w * h(np.hypot(*(a - p).T))))

    start = domain.feasible_points(EPS_GEO)
    if not len(start):
        raise DegenerateGeometry("minimax domain is empty")
    p0 = a[0] if domain.unbounded else start.mean(axis=0)
    if not domain.unbounded and not domain.contains(p0, EPS_GEO):
        p0 = start[0]
    hi = objective(p0)
    lo = float(np.max(w * h0))
    best_pts = np.array([p0])

    def radii(level):
        ratio = level / w
        return np.where(ratio >= h0, h_inv(np.maximum(ratio, h0)), -1.0)

    for _ in range(200):
        if hi - lo <= rel_tol * max(abs(hi), 1e-300):
            break
        mid = 0.5 * (lo + hi)
        r = radii(mid)
        if np.any(r < 0.0):
            lo = mid
            continue
        pts = common_points(np.vstack([a, dc]), np.concatenate([r, dr]), dhp, tol)
        if len(pts):
            hi, best_pts = mid, pts
        else:
            lo = mid

    cands = np.vstack([best_pts, best_pts.mean(axis=0, keepdims=True)])
    vals = [objective(p) for p in cands]
    k = int(np.argmin(vals))
    p = cands[k]
    val = vals[k]
    per = w * h(np.hypot(*(a - p).T))
    active = tuple(int(i) for i in np.nonzero(per >= val - EPS_EQ * max(1.0, abs(val)))[0])
    return MinimaxResult(Point(*p), val, active)


def constrained_center(targets: np.ndarray, center, radius: float) -> MinimaxResult:
    """Point of the disk ``(center, radius)`` minimizing the farthest distance to ``targets``."""
    anchors = [(Point(*t), 1.0) for t in np.atleast_2d(targets)]
    return weighted_minimax_point(anchors, Region.disk(center, max(radius, 0.0)))


# --------------------------------------------------------------------------- 1-D search


def golden_max(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-10, max_iter: int = 200):
    """Golden-section maximization of a unimodal function on ``[lo, hi]``."""
    a, b = float(lo), float(hi)
    x1 = b - _INV_PHI * (b - a)
    x2 = a + _INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INV_PHI * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INV_PHI * (b - a)
            f1 = f(x1)
    best = max([(f1, x1), (f2, x2), (f(lo), lo), (f(hi), hi)], key=lambda t: t[0])
    return best[1], best[0]


def maximize_on_segment(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    unimodal: bool = False,
    samples: int = 4096,
    tol: float = 1e-10,
):
    """Return ``(argmax, max)`` of a scalar function on ``[lo, hi]``.

    With ``unimodal`` set this is plain golden section; otherwise the interval is
    sampled densely and the best sample's neighbourhood refined by golden section.
    """
    if not lo < hi:
        raise InvalidScenario(f"empty search interval [{lo}, {hi}]")
    if unimodal:
        return golden_max(f, lo, hi, tol)
    xs = np.linspace(lo, hi, samples)
    vals = np.array([f(x) for x in xs])
    k = int(np.argmax(vals))
    a = xs[max(k - 1, 0)]
    b = xs[min(k + 1, samples - 1)]
    x, v = golden_max(f, a, b, tol)
    if vals[k] > v:
        return float(xs[k]), float(vals[k])
    return float(x), float(v)


# --------------------------------------------------------------------------- small exact 1-centers


def enclosing_center(points) -> tuple:
    """Exact minimax center of a small point set by enumerating pair midpoints and circumcenters.

    Returns ``(center, radius)`` as ``(ndarray, float)``.  Cost is O(m^4), meant for a handful of points.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    m = len(pts)
    if m == 1:
        return pts[0].copy(), 0.0
    cands = [(pts[i] + pts[j]) / 2.0 for i in range(m) for j in range(i + 1, m)]
    for i in range(m):
        for j in range(i + 1, m):
            for k in range(j + 1, m):
                a, b, c = pts[i], pts[j], pts[k]
                bx, by = b - a
                cx, cy = c - a
                d = 2.0 * (bx * cy - by * cx)
                if abs(d) <= 1e-15 * max(1.0, bx * bx + by * by, cx * cx + cy * cy):
                    continue
                ux = (cy * (bx * bx + by * by) - by * (cx * cx + cy * cy)) / d
                uy = (bx * (cx * cx + cy * cy) - cx * (bx * bx + by * by)) / d
                cands.append(a + np.array([ux, uy]))
    cands = np.array(cands)
    radius = np.hypot(cands[:, None, 0] - pts[None, :, 0], cands[:, None, 1] - pts[None, :, 1]).max(axis=1)
    k = int(np.argmin(radius))
    return cands[k], float(radius[k])


def disk_constrained_centers(targets, center, radii) -> tuple:
    """For each radius, the point of the disk around ``center`` nearest (in max distance) to all ``targets``.

    Vectorized over ``radii``.  When the unconstrained center lies outside the
    disk the optimum sits on the circle, at either the point nearest some
    target or where the circle meets the bisector of two targets; every such
    candidate is evaluated.  Returns ``(points (K, 2), values (K,))``.
    """
    t = np.atleast_2d(np.asarray(targets, dtype=float))
    s = np.asarray(center, dtype=float)
    rho = np.atleast_1d(np.asarray(radii, dtype=float))
    c, R = enclosing_center(t)
    inside = rho >= float(np.hypot(*(c - s)))

    cands = []
    for tj in t:
        v = tj - s
        dv = float(np.hypot(*v))
        if dv > 0.0:
            cands.append(s[None, :] + rho[:, None] * (v / dv)[None, :])
    m = len(t)
    for i in range(m):
        for j in range(i + 1, m):
            nvec = t[j] - t[i]
            nn = float(np.hypot(*nvec))
            if nn <= 0.0:
                continue
            nh = nvec / nn
            c0 = float(nvec @ (t[i] + t[j]) / 2.0)
            delta = (c0 - float(nvec @ s)) / nn
            perp = np.array([-nh[1], nh[0]])
            half2 = rho * rho - delta * delta
            ok = half2 >= 0.0
            half = np.sqrt(np.where(ok, half2, 0.0))
            foot = s + delta * nh
            for sign in (1.0, -1.0):
                p = foot[None, :] + sign * half[:, None] * perp[None, :]
                p[~ok] = np.nan
                cands.append(p)
    C = np.stack(cands, axis=1)  # (K, C, 2)
    dist = np.hypot(C[..., None, 0] - t[None, None, :, 0], C[..., None, 1] - t[None, None, :, 1]).max(axis=-1)
    dist = np.where(np.isnan(dist), np.inf, dist)
    k = np.argmin(dist, axis=1)
    rows = np.arange(len(rho))
    boundary = C[rows, k]
    bval = dist[rows, k]
    pts = np.where(inside[:, None], c[None, :], boundary)
    vals = np.where(inside, R, bval)
    return pts, vals
