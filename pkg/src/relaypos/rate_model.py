"""Separable hyperarc rate law ``R = g(P) / h(D)`` and its power inverse."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateGeometry, InvalidScenario, ModelContract, RateInfeasible
from .geometry import numeric_inverse, vectorize

PROBE_GRID = np.geomspace(1e-6, 1e6, 64)
_ROUNDTRIP_TOL = 1e-9


@dataclass(frozen=True)
class LowSnrParams:
    n0: float = 1.0
    alpha: float = 2.0

    def __post_init__(self):
        if not self.n0 > 0.0:
            raise InvalidScenario(f"noise level must be positive, got {self.n0}", "model.n0")
        if not self.alpha >= 2.0:
            raise InvalidScenario(f"path-loss exponent must be >= 2, got {self.alpha}", "model.alpha")


@dataclass(frozen=True)
class RateModel:
    """Power map ``g``, attenuation ``h`` and their inverses.

    All four callables accept scalars or numpy arrays.  ``descriptor`` is the
    JSON-serializable description written into scenario and result files.
    ``linear_power`` marks models with ``g(P) = c * P`` so callers may take
    closed-form shortcuts.
    """

    g: Callable
    h: Callable
    g_inv: Callable
    h_inv: Callable
    descriptor: dict = field(default_factory=dict)
    linear_power: bool = False

    @property
    def name(self) -> str:
        return self.descriptor.get("type", "custom")

    def rate(self, power, distance):
        return rate(self, power, distance)

    def power_for_rate(self, value, distance):
        return power_for_rate(self, value, distance)

    def unit_cost(self, distance, flow=1.0):
        """Power needed to push ``flow`` over a hyperarc of reach ``distance``."""
        return self.g_inv(flow * self.h(distance))


def rate(model: RateModel, power, distance):
    if np.any(np.asarray(distance) <= 0.0):
        raise DegenerateGeometry("rate needs a positive distance")
    if np.any(np.asarray(power) < 0.0):
        raise InvalidScenario("power must be non-negative")
    out = model.g(power) / model.h(distance)
    return float(out) if np.ndim(out) == 0 else out


def power_for_rate(model: RateModel, value, distance):
    if np.any(np.asarray(distance) <= 0.0):
        raise DegenerateGeometry("power_for_rate needs a positive distance")
    if np.any(np.asarray(value) < 0.0):
        raise RateInfeasible(f"negative rate {value}")
    target = np.asarray(value, dtype=float) * model.h(distance)
    out = model.g_inv(target)
    if not np.all(np.isfinite(out)):
        raise RateInfeasible(f"rate {value} is outside the range of g/h({distance})")
    return float(out) if np.ndim(out) == 0 else out


# --------------------------------------------------------------------------- probes


def _finite_probe(fun, xs):
    with np.errstate(all="ignore"):
        ys = np.asarray(fun(xs), dtype=float)
    ok = np.isfinite(ys)
    # keep the leading finite run; overflow past it is outside the representable domain
    if not ok.all():
        stop = int(np.argmin(ok))
        return xs[:stop], ys[:stop]
    return xs, ys


def _check_increasing(name, xs, ys):
    bad = np.nonzero(np.diff(ys) <= 0.0)[0]
    if len(bad):
        i = int(bad[0])
        raise ModelContract(f"{name} is not increasing between {xs[i]:.3g} and {xs[i + 1]:.3g}", (xs[i], xs[i + 1]))


def _check_convex(name, xs, ys):
    slopes = np.diff(ys) / np.diff(xs)
    drop = slopes[:-1] - slopes[1:]
    bad = np.nonzero(drop > 1e-9 * np.maximum(1.0, np.abs(slopes[1:])))[0]
    if len(bad):
        i = int(bad[0])
        raise ModelContract(f"{name} is not convex around {xs[i + 1]:.3g}", (xs[i], xs[i + 2]))


def _check_roundtrip(name, fun, inv, xs):
    with np.errstate(all="ignore"):
        back = np.asarray(inv(fun(xs)), dtype=float)
    err = np.abs(back - xs) / np.maximum(np.abs(xs), 1e-300)
    bad = np.nonzero(~(err <= _ROUNDTRIP_TOL))[0]
    if len(bad):
        x = float(xs[bad[0]])
        raise ModelContract(f"{name} inverse round-trip fails at {x:.3g}", (x, float(back[bad[0]])))


def eq2_violations(model: RateModel, xs=PROBE_GRID):
    """Probe pairs on the diagonal ``P = D`` where the forward difference of ``g`` exceeds that of ``h``."""
    xs_g, gv = _finite_probe(model.g, xs)
    xs_h, hv = _finite_probe(model.h, xs)
    m = min(len(xs_g), len(xs_h))
    dg, dh = np.diff(gv[:m]), np.diff(hv[:m])
    bad = np.nonzero(dg > dh + 1e-9 * np.maximum(1.0, np.abs(dh)))[0]
    return [(float(xs[i]), float(xs[i + 1])) for i in bad]


def validate(model: RateModel, check_eq2: bool = True) -> RateModel:
    """Run the construction probes; raises :class:`ModelContract` on the first violation."""
    g0 = float(model.g(0.0))
    if g0 != 0.0:
        raise ModelContract(f"g(0) must be exactly 0, got {g0}", (0.0, g0))
    xs = np.concatenate([[0.0], PROBE_GRID])
    xg, gv = _finite_probe(model.g, xs)
    if len(xg) < 3:
        raise ModelContract("g overflows on the probe grid", None)
    _check_increasing("g", xg, gv)
    _check_convex("g", xg, gv)
    xh, hv = _finite_probe(model.h, PROBE_GRID)
    if len(xh) < 3:
        raise ModelContract("h overflows on the probe grid", None)
    if np.any(hv < 0.0):
        raise ModelContract("h must be non-negative", None)
    _check_increasing("h", xh, hv)
    _check_roundtrip("g", model.g, model.g_inv, xg[1:])
    _check_roundtrip("h", model.h, model.h_inv, xh)
    if check_eq2:
        bad = eq2_violations(model)
        if bad:
            lo, hi = bad[0]
            raise ModelContract(
                f"power growth of g exceeds distance growth of h between {lo:.3g} and {hi:.3g}", bad[0]
            )
    return model


# --------------------------------------------------------------------------- constructors


def make_low_snr(params: Optional[LowSnrParams] = None, *, n0: float = 1.0, alpha: float = 2.0) -> RateModel:
    """Wideband model ``R = P / (N0 * D**alpha)``."""
    p = params or LowSnrParams(n0, alpha)
    n0, alpha = float(p.n0), float(p.alpha)

    def h(d):
        return n0 * np.power(d, alpha)

    def h_inv(v):
        return np.power(np.asarray(v, dtype=float) / n0, 1.0 / alpha)

    model = RateModel(
        g=_identity,
        h=h,
        g_inv=_identity,
        h_inv=h_inv,
        descriptor={"type": "low_snr", "n0": n0, "alpha": alpha},
        linear_power=True,
    )
    return validate(model, check_eq2=False)


def make_power_law(g_exp: float = 1.0, h_exp: float = 2.0, h_scale: float = 1.0) -> RateModel:
    """``g(P) = P**g_exp`` and ``h(D) = h_scale * D**h_exp``."""
    g_exp, h_exp, h_scale = float(g_exp), float(h_exp), float(h_scale)
    if g_exp < 1.0:
        raise ModelContract(f"g_exp={g_exp} gives a concave power map", (g_exp,))
    if h_exp <= 0.0 or h_scale <= 0.0:
        raise InvalidScenario("power-law h needs positive exponent and scale", "model")

    def g(p):
        return np.power(p, g_exp)

    def g_inv(v):
        return np.power(v, 1.0 / g_exp)

    def h(d):
        return h_scale * np.power(d, h_exp)

    def h_inv(v):
        return np.power(np.asarray(v, dtype=float) / h_scale, 1.0 / h_exp)

    model = RateModel(
        g=g,
        h=h,
        g_inv=g_inv,
        h_inv=h_inv,
        descriptor={"type": "power_law", "g_exp": g_exp, "h_exp": h_exp, "h_scale": h_scale},
        linear_power=g_exp == 1.0,
    )
    return validate(model, check_eq2=False)


def make_custom(
    g: Callable,
    h: Callable,
    g_inv: Optional[Callable] = None,
    h_inv: Optional[Callable] = None,
    name: str = "custom",
) -> RateModel:
    """Validated model from user callables; missing inverses are built by bisection."""
    gv, hv = vectorize(g), vectorize(h)
    g_inv = vectorize(g_inv) if g_inv is not None else vectorize(numeric_inverse(g))
    h_inv = vectorize(h_inv) if h_inv is not None else vectorize(numeric_inverse(h))
    model = RateModel(g=gv, h=hv, g_inv=g_inv, h_inv=h_inv, descriptor={"type": name})
    return validate(model, check_eq2=True)


def from_descriptor(desc: dict) -> RateModel:
    kind = desc.get("type")
    try:
        if kind == "low_snr":
            return make_low_snr(n0=float(desc.get("n0", 1.0)), alpha=float(desc.get("alpha", 2.0)))
        if kind == "power_law":
            return make_power_law(
                float(desc.get("g_exp", 1.0)), float(desc.get("h_exp", 2.0)), float(desc.get("h_scale", 1.0))
            )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, (InvalidScenario, ModelContract)):
            raise
        raise InvalidScenario(str(exc), "model") from exc
    raise InvalidScenario(f"unknown model type {kind!r}", "model.type")


def _identity(x):
    return np.asarray(x, dtype=float) if np.ndim(x) else float(x)


_identity._vectorized = True


def superadditivity_gap(fun: Callable, xs: np.ndarray) -> np.ndarray:
    """``fun(sum x) - sum fun(x)`` per row of ``xs``; non-negative for increasing convex maps with f(0)=0."""
    xs = np.asarray(xs, dtype=float)
    return fun(xs.sum(axis=-1)) - fun(xs).sum(axis=-1)

