"""Max-flow and min-cost power allocation for a relay at a fixed position.

Every path ``i`` is described by two coefficients: ``lam1`` for its source hop
and ``lam2`` for its relay hop (``inf`` for the direct path, which has no relay
hop).  Carrying flow ``f`` on the path costs ``g_inv(f / lam1)`` source power
and ``g_inv(f / lam2)`` relay power, and the budgets ``mu`` and ``nu`` are
shared by all paths.

Optimal flows are supported on at most two paths, so both solvers work over
pairs of paths.  For a pair the objective is piecewise convex in a monotone
reparameterization of the split, so the optimum sits at an endpoint or at a
breakpoint, and only those candidates are evaluated.  All kernels are
vectorized over relay positions.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Optional

import numpy as np

from .errors import ConsistencyError, TargetInfeasible
from .geometry import EPS_EQ
from .hypergraph import Path, PathTable, Scenario, best_relay_path, path_mincut, path_table, spanning_paths

SCAN_SCALAR = 257
SCAN_BATCH = 33
_BISECT = 64
_FEAS_TOL = 1e-9


@dataclass(frozen=True)
class PathFlow:
    path: Path
    flow: float
    source_power: float
    relay_power: float


@dataclass(frozen=True)
class FlowSolution:
    total_flow: float
    allocations: tuple
    residual_mu: float
    residual_nu: float
    closed_form_flow: Optional[float] = None

    @property
    def total_power(self) -> float:
        return sum(a.source_power + a.relay_power for a in self.allocations)

    @property
    def source_power(self) -> float:
        return sum(a.source_power for a in self.allocations)

    @property
    def relay_power(self) -> float:
        return sum(a.relay_power for a in self.allocations)

    @property
    def support(self) -> int:
        return sum(1 for a in self.allocations if a.flow > 1e-9)


# --------------------------------------------------------------------------- elementwise helpers


class _Ops:
    """``g``-dependent elementwise maps that tolerate ``lam = inf`` and tiny negative budgets."""

    def __init__(self, model):
        self.g = model.g
        self.g_inv = model.g_inv
        self.linear = bool(model.linear_power) and float(model.g(1.0)) == 1.0

    def G(self, p):
        return np.asarray(self.g(np.maximum(p, 0.0)), dtype=float)

    def Ginv(self, y):
        return np.asarray(self.g_inv(np.maximum(y, 0.0)), dtype=float)

    def use(self, f, lam):
        """Power a hop of coefficient ``lam`` needs to carry flow ``f``."""
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(np.isinf(lam), 0.0, f / np.where(np.isinf(lam), 1.0, lam))
        return self.Ginv(ratio)

    def cap(self, l1, l2, m, n):
        """Largest flow a path can carry with source budget ``m`` and relay budget ``n``."""
        a = l1 * self.G(m)
        with np.errstate(invalid="ignore"):
            b = np.where(np.isinf(l2), np.inf, np.where(np.isinf(l2), 0.0, l2) * self.G(n))
        return np.minimum(a, b)


def _bisect_roots(fun, lo, hi, flo, iters=_BISECT):
    """Vectorized bisection for sign changes already bracketed by ``lo``/``hi``."""
    a, b = lo.copy(), hi.copy()
    fa = flo.copy()
    for _ in range(iters):
        m = 0.5 * (a + b)
        fm = fun(m)
        left = np.sign(fm) == np.sign(fa)
        a = np.where(left, m, a)
        fa = np.where(left, fm, fa)
        b = np.where(left, b, m)
    return 0.5 * (a + b)


# --------------------------------------------------------------------------- max flow kernel


def _pair_max(ops, A, B, mu, nu, scan):
    """Best ``f_A`` for pair ``(A, B)``; ``A``/``B`` are ``(lam1, lam2)`` arrays of shape (K,)."""
    a1, a2 = A
    b1, b2 = B
    mu = np.broadcast_to(mu, a1.shape)
    nu = np.broadcast_to(nu, a1.shape)
    cap_a = ops.cap(a1, a2, mu, nu)

    def phi(f):
        m = mu - ops.use(f, a1)
        n = nu - ops.use(f, a2)
        return f + ops.cap(b1, b2, m, n)

    cands = [np.zeros_like(cap_a), cap_a]
    b_relay = ~np.isinf(b2)
    if np.any(b_relay):
        if ops.linear:
            inv_a2 = np.where(np.isinf(a2), 0.0, 1.0 / np.where(np.isinf(a2), 1.0, a2))
            with np.errstate(divide="ignore", invalid="ignore"):
                b2f = np.where(b_relay, b2, 0.0)
                denom = b1 / a1 - b2f * inv_a2
                root = (b1 * mu - b2f * nu) / denom
            root = np.where(b_relay & np.isfinite(root) & (root >= 0.0) & (root <= cap_a), root, 0.0)
            cands.append(root)
        else:
            b2f = np.where(b_relay, b2, 0.0)

            def kink(f):
                f = np.asarray(f)
                m = mu[..., None] if f.ndim > mu.ndim else mu
                n = nu[..., None] if f.ndim > nu.ndim else nu
                aa1 = a1[..., None] if f.ndim > a1.ndim else a1
                aa2 = a2[..., None] if f.ndim > a2.ndim else a2
                bb1 = b1[..., None] if f.ndim > b1.ndim else b1
                bb2 = b2f[..., None] if f.ndim > b2f.ndim else b2f
                return bb1 * ops.G(m - ops.use(f, aa1)) - bb2 * ops.G(n - ops.use(f, aa2))

            grid = cap_a[:, None] * np.linspace(0.0, 1.0, scan)[None, :]
            kv = kink(grid)
            change = (np.sign(kv[:, :-1]) != np.sign(kv[:, 1:])) & b_relay[:, None]
            if np.any(change):
                rows, cols = np.nonzero(change)
                lo, hi = grid[rows, cols], grid[rows, cols + 1]

                def sub(f):
                    return (
                        b1[rows] * ops.G(mu[rows] - ops.use(f, a1[rows]))
                        - b2f[rows] * ops.G(nu[rows] - ops.use(f, a2[rows]))
                    )

                roots = _bisect_roots(sub, lo, hi, kv[rows, cols])
                # scatter every root as its own candidate column
                counts = np.bincount(rows, minlength=len(cap_a))
                width = int(counts.max())
                slot = np.zeros(len(rows), dtype=int)
                seen = {}
                for i, r in enumerate(rows):
                    slot[i] = seen.get(r, 0)
                    seen[r] = slot[i] + 1
                extra = np.zeros((width, len(cap_a)))
                extra[slot, rows] = roots
                cands.extend(extra)
    cand = np.vstack(cands)  # (C, K)
    vals = np.vstack([phi(c) for c in cand])
    vals = np.where(np.isfinite(vals), vals, -np.inf)
    k = np.argmax(vals, axis=0)
    idx = np.arange(cand.shape[1])
    return vals[k, idx], cand[k, idx]


@dataclass(frozen=True)
class BatchMaxFlow:
    value: np.ndarray
    first: np.ndarray  # column of the path carrying f_a
    second: np.ndarray  # column of the second path (-1 if single)
    f_first: np.ndarray
    f_second: np.ndarray


def max_flow_table(table: PathTable, model, mu, nu, scan: int = SCAN_BATCH) -> BatchMaxFlow:
    """Maximum multicast flow for every row of a path table."""
    ops = _Ops(model)
    K, P = table.lam1.shape
    best = np.full(K, -np.inf)
    first = np.full(K, -1)
    second = np.full(K, -1)
    f_first = np.zeros(K)
    mu_a = np.broadcast_to(np.asarray(mu, dtype=float), (K,))
    nu_a = np.broadcast_to(np.asarray(nu, dtype=float), (K,))
    for i in range(P):
        v = np.where(table.valid[:, i], ops.cap(table.lam1[:, i], table.lam2[:, i], mu_a, nu_a), -np.inf)
        better = v > best
        best = np.where(better, v, best)
        first = np.where(better, i, first)
        second = np.where(better, -1, second)
        f_first = np.where(better, v, f_first)
    pairs = list(combinations(range(P), 2))
    if pairs:
        # all pairs in one kernel call: rows are laid out pair-major
        I = np.array([i for i, _ in pairs])
        J = np.array([j for _, j in pairs])
        both = (table.valid[:, I] & table.valid[:, J]).T.ravel()
        if np.any(both):
            pick = lambda a, idx: a[:, idx].T.ravel()[both]  # noqa: E731
            A = (pick(table.lam1, I), pick(table.lam2, I))
            B = (pick(table.lam1, J), pick(table.lam2, J))
            mu_p = np.tile(mu_a, len(pairs))[both]
            nu_p = np.tile(nu_a, len(pairs))[both]
            v, fa = _pair_max(ops, A, B, mu_p, nu_p, scan)
            vals = np.full(len(pairs) * K, -np.inf)
            fas = np.zeros(len(pairs) * K)
            vals[both] = v
            fas[both] = fa
            vals = vals.reshape(len(pairs), K)
            fas = fas.reshape(len(pairs), K)
            k = np.argmax(vals, axis=0)
            cols = np.arange(K)
            pv = vals[k, cols]
            better = pv > best * (1.0 + 1e-13) + 1e-300
            best = np.where(better, pv, best)
            first = np.where(better, I[k], first)
            second = np.where(better, J[k], second)
            f_first = np.where(better, fas[k, cols], f_first)
    f_second = np.where(second >= 0, best - f_first, 0.0)
    best = np.where(table.ok, best, np.nan)
    return BatchMaxFlow(best, first, second, f_first, np.maximum(f_second, 0.0))


def max_flow_many(scenario: Scenario, relays: np.ndarray, scan: int = SCAN_BATCH, mu=None, nu=None) -> np.ndarray:
    """``F*`` at each relay position (NaN where the relay coincides with a node)."""
    table = path_table(scenario, relays)
    mu = scenario.mu if mu is None else mu
    nu = scenario.nu if nu is None else nu
    return max_flow_table(table, scenario.model, mu, nu, scan).value


def closed_form_max_flow(scenario: Scenario, paths=None) -> float:
    """Two-branch closed form using only the best relay path and the direct path."""
    paths = paths if paths is not None else spanning_paths(scenario)
    g, g_inv = scenario.model.g, scenario.model.g_inv
    mu, nu = scenario.mu, scenario.nu
    direct = paths[-1]
    lam_t = direct.lam_source
    best = best_relay_path(scenario, paths)
    l1, l2 = best.lam_source, best.lam_relay
    if lam_t * float(g(mu)) > path_mincut(best, mu, nu, scenario.model):
        return lam_t * float(g(mu))
    if l1 * float(g(mu)) <= l2 * float(g(nu)):
        return l1 * float(g(mu))
    mu_p = float(g_inv(l2 * float(g(nu)) / l1))
    return l2 * float(g(nu)) + lam_t * float(g(max(mu - mu_p, 0.0)))


def _solution(scenario, cols, flows, paths_by_col, ops, closed=None):
    allocs = []
    for c, f in zip(cols, flows):
        if c < 0:
            continue
        p = paths_by_col[c]
        sp = float(ops.use(np.asarray(f), np.asarray(p.lam_source)))
        rp = float(ops.use(np.asarray(f), np.asarray(p.lam_relay))) if not p.direct else 0.0
        allocs.append(PathFlow(p, float(f), sp, rp))
    used_s = sum(a.source_power for a in allocs)
    used_r = sum(a.relay_power for a in allocs)
    return FlowSolution(
        total_flow=float(sum(a.flow for a in allocs)),
        allocations=tuple(allocs),
        residual_mu=max(scenario.mu - used_s, 0.0),
        residual_nu=max(scenario.nu - used_r, 0.0),
        closed_form_flow=closed,
    )


def _paths_by_column(scenario):
    paths = spanning_paths(scenario)
    return paths, {scenario.n if p.direct else p.cut: p for p in paths}


def max_flow_at(scenario: Scenario, scan: int = SCAN_SCALAR) -> FlowSolution:
    """Maximum multicast flow with the relay fixed at ``scenario.relay``.

    The returned solution is the exact optimum over all spanning paths; the
    two-branch closed form restricted to the best relay path and the direct
    path is attached as ``closed_form_flow`` for comparison.
    """
    paths, by_col = _paths_by_column(scenario)
    table = path_table(scenario, np.asarray(scenario.relay)[None, :])
    res = max_flow_table(table, scenario.model, scenario.mu, scenario.nu, scan)
    closed = closed_form_max_flow(scenario, paths)
    ops = _Ops(scenario.model)
    sol = _solution(
        scenario,
        [int(res.first[0]), int(res.second[0])],
        [float(res.f_first[0]), float(res.f_second[0])],
        by_col,
        ops,
        closed,
    )
    if closed > sol.total_flow * (1.0 + EPS_EQ) + 1e-12:
        raise ConsistencyError(f"closed form {closed} exceeds exact optimum {sol.total_flow}")
    return sol


# --------------------------------------------------------------------------- min cost kernel


def _concave_roots(fun, level, lo, hi, iters=_BISECT):
    """Roots of ``fun = level`` for a concave ``fun`` on ``[lo, hi]`` (vectorized).

    Returns two candidate arrays (left and right of the peak); entries are NaN
    where no crossing exists.
    """
    a, b = lo.copy(), hi.copy()
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    for _ in range(iters):
        x1 = b - invphi * (b - a)
        x2 = a + invphi * (b - a)
        up = fun(x1) < fun(x2)
        a = np.where(up, x1, a)
        b = np.where(up, b, x2)
    peak = 0.5 * (a + b)
    fp = fun(peak) - level
    out = []
    for end in (lo, hi):
        fe = fun(end) - level
        has = (fp > 0.0) & (fe < 0.0)
        r = _bisect_roots(lambda x: fun(x) - level, end, peak, fe)
        out.append(np.where(has, r, np.nan))
    return out


@dataclass(frozen=True)
class BatchMinCost:
    value: np.ndarray
    first: np.ndarray
    second: np.ndarray
    f_first: np.ndarray
    f_second: np.ndarray


def min_cost_table(table: PathTable, model, mu, nu, F: float) -> BatchMinCost:
    """Cheapest total power carrying flow ``F`` for every row (``inf`` where infeasible)."""
    ops = _Ops(model)
    K, P = table.lam1.shape
    F = float(F)
    best = np.full(K, np.inf)
    first = np.full(K, -1)
    second = np.full(K, -1)
    f_first = np.zeros(K)
    mu = float(mu)
    nu = float(nu)
    tol_m = _FEAS_TOL * max(1.0, mu)
    tol_n = _FEAS_TOL * max(1.0, nu)
    if F <= 0.0:
        zero = np.where(table.ok, 0.0, np.nan)
        return BatchMinCost(zero, np.full(K, -1), np.full(K, -1), np.zeros(K), np.zeros(K))

    for i in range(P):
        s = ops.use(np.full(K, F), table.lam1[:, i])
        r = ops.use(np.full(K, F), table.lam2[:, i])
        feas = table.valid[:, i] & (s <= mu + tol_m) & (r <= nu + tol_n)
        v = np.where(feas, s + r, np.inf)
        better = v < best
        best = np.where(better, v, best)
        first = np.where(better, i, first)
        f_first = np.where(better, F, f_first)

    for i, j in combinations(range(P), 2):
        rows = np.nonzero(table.valid[:, i] & table.valid[:, j])[0]
        if not len(rows):
            continue
        a1, a2 = table.lam1[rows, i], table.lam2[rows, i]
        b1, b2 = table.lam1[rows, j], table.lam2[rows, j]
        Fr = np.full(len(rows), F)

        def S(x):
            return ops.use(x, a1) + ops.use(Fr - x, b1)

        def R(x):
            return ops.use(x, a2) + ops.use(Fr - x, b2)

        zero = np.zeros(len(rows))
        cands = [zero, Fr]
        if ops.linear:
            with np.errstate(divide="ignore", invalid="ignore"):
                ia2 = np.where(np.isinf(a2), 0.0, 1.0 / np.where(np.isinf(a2), 1.0, a2))
                ib2 = np.where(np.isinf(b2), 0.0, 1.0 / np.where(np.isinf(b2), 1.0, b2))
                xs = (mu - F / b1) / (1.0 / a1 - 1.0 / b1)
                xr = (nu - F * ib2) / (ia2 - ib2)
            for x in (xs, xr):
                cands.append(np.where(np.isfinite(x) & (x >= 0.0) & (x <= F), x, np.nan))
        else:
            cands.extend(_concave_roots(S, mu, zero, Fr))
            cands.extend(_concave_roots(R, nu, zero, Fr))
        for x in cands:
            x = np.clip(np.nan_to_num(x, nan=0.0), 0.0, F)
            s, r = S(x), R(x)
            feas = (s <= mu + tol_m) & (r <= nu + tol_n)
            v = np.where(feas, s + r, np.inf)
            better = v < best[rows] * (1.0 - 1e-13)
            rr = rows[better]
            best[rr] = v[better]
            first[rr] = i
            second[rr] = j
            f_first[rr] = x[better]
    f_second = np.where(second >= 0, F - f_first, 0.0)
    best = np.where(table.ok, best, np.nan)
    return BatchMinCost(best, first, second, f_first, f_second)


def min_cost_many(scenario: Scenario, relays: np.ndarray, F: float, mu=None, nu=None) -> np.ndarray:
    table = path_table(scenario, relays)
    mu = scenario.mu if mu is None else mu
    nu = scenario.nu if nu is None else nu
    return min_cost_table(table, scenario.model, mu, nu, F).value


def min_cost_at(scenario: Scenario, F: float) -> FlowSolution:
    """Cheapest power allocation carrying multicast flow ``F`` with the relay at ``scenario.relay``."""
    if F < 0.0:
        raise TargetInfeasible(f"target flow must be non-negative, got {F}")
    paths, by_col = _paths_by_column(scenario)
    ops = _Ops(scenario.model)
    if F == 0.0:
        return FlowSolution(0.0, (), scenario.mu, scenario.nu)
    table = path_table(scenario, np.asarray(scenario.relay)[None, :])
    res = min_cost_table(table, scenario.model, scenario.mu, scenario.nu, F)
    if not np.isfinite(res.value[0]):
        fmax = max_flow_at(scenario).total_flow
        raise TargetInfeasible(f"target flow {F} exceeds the maximum flow {fmax}", fmax)
    return _solution(
        scenario,
        [int(res.first[0]), int(res.second[0])],
        [float(res.f_first[0]), float(res.f_second[0])],
        by_col,
        ops,
    )


def unit_costs(scenario: Scenario, paths=None) -> list:
    """Power needed to push a unit of flow over each two-hop path, in path order."""
    paths = paths if paths is not None else spanning_paths(scenario)
    ops = _Ops(scenario.model)
    out = []
    for p in paths:
        if p.direct:
            continue
        out.append((p, float(ops.use(np.asarray(1.0), np.asarray(p.lam_source)) + ops.use(np.asarray(1.0), np.asarray(p.lam_relay)))))
    return out


def oracle_max_flow(scenario: Scenario, levels: Optional[int] = None) -> float:
    """Brute-force grid maximum over power splits across all paths (a lower bound on ``F*``)."""
    from .oracle import enumerate_path_flows

    return enumerate_path_flows(scenario, levels=levels).grid_flow
