"""Distance-ordered hypergraph, the spanning path set and min-cut coefficients.

Node labels are ``"s"`` for the source, ``"r"`` for the relay and ``"t1" .. "tn"``
for destinations in the order of increasing distance from the source.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateGeometry, InvalidScenario
from .geometry import EPS_EQ, EPS_GEO, Point
from .rate_model import RateModel, make_low_snr


@dataclass(frozen=True)
class Scenario:
    """A problem instance: source, destinations, power budgets, rate model and an optional relay.

    Destinations are stored sorted by distance from the source (ties by input
    index); ``order[i]`` is the input index of ``destinations[i]``.
    """

    source: Point
    destinations: tuple
    mu: float
    nu: float
    model: RateModel = field(default_factory=make_low_snr)
    relay: Optional[Point] = None
    order: tuple = ()

    def __post_init__(self):
        src = Point.of(self.source)
        dests = tuple(Point.of(t) for t in self.destinations)
        if not dests:
            raise InvalidScenario("at least one destination is required", "destinations")
        for name in ("mu", "nu"):
            v = float(getattr(self, name))
            if not (np.isfinite(v) and v > 0.0):
                raise InvalidScenario(f"power budget must be positive and finite, got {v}", name)
            object.__setattr__(self, name, v)
        order = tuple(self.order) if self.order else tuple(range(len(dests)))
        if sorted(order) != list(range(len(dests))):
            raise InvalidScenario("order must be a permutation of destination indices", "order")
        # stable sort by distance from the source, ties by original index
        keyed = sorted(zip(dests, order), key=lambda pair: (src.dist(pair[0]), pair[1]))
        dests = tuple(p for p, _ in keyed)
        order = tuple(i for _, i in keyed)
        nodes = [src, *dests]
        relay = Point.of(self.relay) if self.relay is not None else None
        if relay is not None:
            nodes.append(relay)
        arr = np.array([[p.x, p.y] for p in nodes])
        diff = np.hypot(arr[:, None, 0] - arr[None, :, 0], arr[:, None, 1] - arr[None, :, 1])
        np.fill_diagonal(diff, np.inf)
        if np.any(diff <= EPS_GEO):
            i, j = np.argwhere(diff <= EPS_GEO)[0]
            raise DegenerateGeometry(f"nodes {_label(i, len(dests))} and {_label(j, len(dests))} coincide")
        object.__setattr__(self, "source", src)
        object.__setattr__(self, "destinations", dests)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "relay", relay)

    @property
    def n(self) -> int:
        return len(self.destinations)

    @property
    def gamma(self) -> float:
        return self.nu / self.mu

    @property
    def dest_array(self) -> np.ndarray:
        return np.array([[t.x, t.y] for t in self.destinations], dtype=float)

    @property
    def source_array(self) -> np.ndarray:
        return np.array([self.source.x, self.source.y], dtype=float)

    def nodes_array(self) -> np.ndarray:
        """Source followed by the sorted destinations."""
        return np.vstack([self.source_array, self.dest_array])

    def with_relay(self, relay) -> "Scenario":
        return replace(self, relay=Point.of(relay) if relay is not None else None)

    def with_powers(self, mu: float, nu: float) -> "Scenario":
        return replace(self, mu=mu, nu=nu)

    def source_distances(self) -> np.ndarray:
        return np.hypot(*(self.dest_array - self.source_array).T)


def _label(i, n):
    if i == 0:
        return "s"
    if i <= n:
        return f"t{i}"
    return "r"


@dataclass(frozen=True)
class Hyperarc:
    transmitter: str
    end_nodes: tuple
    reach: float
    lam: float

    def covers(self) -> frozenset:
        return frozenset(v for v in self.end_nodes if v.startswith("t"))


@dataclass(frozen=True)
class Path:
    """One or two hyperarcs from the source that together reach every destination."""

    hops: tuple
    spans_all: bool = True
    cut: Optional[int] = None  # number of destinations served by the source hop; None for the direct path

    @property
    def direct(self) -> bool:
        return len(self.hops) == 1

    @property
    def lam_source(self) -> float:
        return self.hops[0].lam

    @property
    def lam_relay(self) -> float:
        return self.hops[1].lam if len(self.hops) > 1 else np.inf

    @property
    def source_reach(self) -> float:
        return self.hops[0].reach

    @property
    def relay_reach(self) -> float:
        return self.hops[1].reach if len(self.hops) > 1 else 0.0

    def label(self) -> str:
        return " ".join(f"({h.transmitter},{''.join(h.end_nodes)})" for h in self.hops)


def _prefix_arcs(transmitter, xy, labels, others, model):
    """Hyperarcs of ``transmitter`` at ``xy`` to every prefix of ``others`` sorted by distance."""
    dists = [(float(np.hypot(*(np.asarray(p) - xy))), rank, lab) for rank, (lab, p) in enumerate(zip(labels, others))]
    dists.sort()
    arcs = []
    for k in range(1, len(dists) + 1):
        reach = dists[k - 1][0]
        if reach <= 0.0:
            raise DegenerateGeometry(f"{transmitter} coincides with {dists[k - 1][2]}")
        arcs.append(Hyperarc(transmitter, tuple(d[2] for d in dists[:k]), reach, 1.0 / float(model.h(reach))))
    return arcs


def build_hypergraph(scenario: Scenario) -> list:
    """All prefix hyperarcs of the source and of the relay."""
    if scenario.relay is None:
        raise InvalidScenario("hypergraph construction needs a relay position", "relay")
    n = scenario.n
    t_labels = [f"t{i + 1}" for i in range(n)]
    t_pts = [tuple(t) for t in scenario.destinations]
    r = tuple(scenario.relay)
    # the relay comes first among equidistant receivers of the source
    src = _prefix_arcs("s", scenario.source_array, ["r", *t_labels], [r, *t_pts], scenario.model)
    rel = _prefix_arcs("r", np.asarray(r), t_labels, t_pts, scenario.model)
    return src + rel


def spanning_paths(scenario: Scenario, arcs: Optional[Sequence[Hyperarc]] = None) -> list:
    """The set L: every two-hop path (ordered by cut) followed by the direct path."""
    arcs = list(arcs) if arcs is not None else build_hypergraph(scenario)
    everyone = frozenset(f"t{i + 1}" for i in range(scenario.n))
    src = [a for a in arcs if a.transmitter == "s"]
    rel = [a for a in arcs if a.transmitter == "r"]
    paths = []
    direct = None
    for a in src:
        covered = a.covers()
        if covered == everyone:
            if direct is None:
                direct = Path((a,), True, None)
            continue
        if "r" not in a.end_nodes:
            continue
        rest = everyone - covered
        second = next(b for b in rel if rest <= b.covers())
        paths.append(Path((a, second), covered | second.covers() == everyone, len(covered)))
    paths.sort(key=lambda p: p.cut)
    paths.append(direct)
    return paths


def path_mincut(path: Path, mu: float, nu: float, model: RateModel) -> float:
    """Rate of the path's weakest hyperarc when each hop gets its whole budget."""
    cut = path.lam_source * float(model.g(mu))
    if not path.direct:
        cut = min(cut, path.lam_relay * float(model.g(nu)))
    return cut


def best_relay_path(scenario: Scenario, paths: Optional[Sequence[Path]] = None) -> Path:
    """Two-hop path with the highest min-cut; ties go to the smaller source, then relay reach."""
    paths = paths if paths is not None else spanning_paths(scenario)
    best = None
    best_cut = -np.inf
    for p in paths:
        if p.direct:
            continue
        c = path_mincut(p, scenario.mu, scenario.nu, scenario.model)
        tie = abs(c - best_cut) <= EPS_EQ * max(1.0, abs(c), abs(best_cut)) if np.isfinite(best_cut) else False
        if tie:
            if (p.source_reach, p.relay_reach) < (best.source_reach, best.relay_reach):
                best, best_cut = p, max(c, best_cut)
        elif c > best_cut:
            best, best_cut = p, c
    if best is None:
        raise InvalidScenario("no two-hop path exists")
    return best


# --------------------------------------------------------------------------- batch form


@dataclass(frozen=True)
class PathTable:
    """Per-position coefficients of the n+1 candidate paths.

    Column ``k < n`` is the two-hop path whose source hop serves ``t1..tk`` and
    the relay; column ``n`` is the direct path.  ``valid[..., k]`` is false where
    the cut does not exist at that relay position.  Rows with ``ok`` false have
    the relay on top of another node.
    """

    lam1: np.ndarray
    lam2: np.ndarray
    valid: np.ndarray
    reach_s: np.ndarray
    reach_r: np.ndarray
    ok: np.ndarray


def path_table(scenario: Scenario, relays: np.ndarray) -> PathTable:
    """Vectorized counterpart of :func:`spanning_paths` for many relay positions at once."""
    z = np.atleast_2d(np.asarray(relays, dtype=float))
    s = scenario.source_array
    t = scenario.dest_array
    n = len(t)
    h = scenario.model.h
    d_st = np.hypot(*(t - s).T)  # sorted ascending
    d_sz = np.hypot(z[:, 0] - s[0], z[:, 1] - s[1])
    d_zt = np.hypot(z[:, None, 0] - t[None, :, 0], z[:, None, 1] - t[None, :, 1])
    ok = (d_sz > EPS_GEO) & np.all(d_zt > EPS_GEO, axis=1)

    prev = np.concatenate([[0.0], d_st[:-1]])  # D_{s t_k} for cut k (0 for k = 0)
    reach_s = np.empty((len(z), n + 1))
    reach_s[:, :n] = np.maximum(d_sz[:, None], prev[None, :])
    reach_s[:, n] = d_st[-1]
    # relay reach of cut k: farthest of t_{k+1}..t_n from the relay (suffix maximum)
    suffix = np.maximum.accumulate(d_zt[:, ::-1], axis=1)[:, ::-1]
    reach_r = np.zeros((len(z), n + 1))
    reach_r[:, :n] = suffix
    valid = np.ones((len(z), n + 1), dtype=bool)
    valid[:, :n] = d_sz[:, None] <= d_st[None, :]
    valid &= ok[:, None]

    with np.errstate(divide="ignore", invalid="ignore"):
        safe_s = np.where(reach_s > 0.0, reach_s, 1.0)
        safe_r = np.where(reach_r > 0.0, reach_r, 1.0)
        lam1 = 1.0 / np.asarray(h(safe_s), dtype=float)
        lam2 = 1.0 / np.asarray(h(safe_r), dtype=float)
    lam2[:, n] = np.inf
    return PathTable(lam1, lam2, valid, reach_s, reach_r, ok)


def table_row_paths(scenario: Scenario, relay) -> tuple:
    """Scalar paths matching one row of :func:`path_table`, keyed by column index."""
    sc = scenario.with_relay(relay)
    paths = spanning_paths(sc)
    out = {}
    for p in paths:
        out[scenario.n if p.direct else p.cut] = p
    return sc, out
