"""Command-line entry point: ``relaypos <command> ...`` or ``python -m relaypos``.

Exit codes: 0 success, 2 invalid input, 3 infeasible target, 4 internal
consistency failure.
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path as FsPath

import numpy as np

from .errors import (
    ConsistencyError,
    DegenerateGeometry,
    InvalidScenario,
    ModelContract,
    OracleTooLarge,
    RateInfeasible,
    TargetInfeasible,
)
from .flow import max_flow_at
from .hypergraph import Scenario
from .oracle import GridSpec, enumerate_path_flows, grid_best_position
from .placement import duality_check, max_flow_place, min_cost_place, trace_r_hat
from .rate_model import make_low_snr
from .records import (
    ResultRecord,
    dumps,
    hyperarc_powers,
    load_scenario,
    read_json,
    scenario_hash,
    scenario_to_dict,
    write_csv,
    write_json,
)
from .svg import render_svg

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INFEASIBLE = 3
EXIT_CONSISTENCY = 4


def _record(command, scenario, **kw) -> ResultRecord:
    return ResultRecord(command, scenario_hash(scenario), scenario_to_dict(scenario), **kw)


def _placement_record(command, scenario, res) -> ResultRecord:
    details = {
        "heuristic": res.heuristic,
        "source_reach": res.source_reach,
        "relay_reach": res.relay_reach,
        "source_power": res.source_power,
        "relay_power": res.relay_power,
        "total_flow": res.flow.total_flow,
        "diagnostics": res.diagnostics,
    }
    return _record(
        command, scenario, relay=list(res.relay), objective=res.objective,
        branch=res.branch, powers=hyperarc_powers(res.flow), details=details,
    )


def _cmd_maxflow(args, sc):
    res = max_flow_place(sc)
    print(f"relay ({res.relay.x:.10g}, {res.relay.y:.10g})")
    print(f"F* = {res.objective:.10g}")
    print(f"branch {res.branch}")
    return _placement_record("maxflow", sc, res)


def _cmd_mincost(args, sc):
    try:
        res = min_cost_place(sc, args.flow)
    except TargetInfeasible as exc:
        fstar = exc.max_flow if exc.max_flow is not None else max_flow_place(sc).objective
        raise TargetInfeasible(f"{exc} (F* = {fstar:.10g})", fstar) from exc
    print(f"relay ({res.relay.x:.10g}, {res.relay.y:.10g})")
    print(f"P* = {res.objective:.10g}  (source {res.source_power:.10g}, relay {res.relay_power:.10g})")
    print(f"branch {res.branch}" + ("  [a split flow is cheaper here]" if res.heuristic else ""))
    return _placement_record("mincost", sc, res)


def _cmd_flow_at(args, sc):
    if sc.relay is None:
        raise InvalidScenario("flow-at needs a scenario with fixed_relay", "fixed_relay")
    sol = max_flow_at(sc)
    print(f"F = {sol.total_flow:.10g} over {sol.support} path(s)")
    for a in sol.allocations:
        print(f"  {a.path.label()}: flow {a.flow:.10g}, source power {a.source_power:.10g}, relay power {a.relay_power:.10g}")
    details = {
        "closed_form_flow": sol.closed_form_flow,
        "residual_mu": sol.residual_mu,
        "residual_nu": sol.residual_nu,
        "support": sol.support,
    }
    return _record(
        "flow-at", sc, relay=list(sc.relay), objective=sol.total_flow,
        branch="FixedRelay", powers=hyperarc_powers(sol), details=details,
    )


def _cmd_trace_rhat(args, sc):
    curve = trace_r_hat(sc, args.samples)
    pieces = [
        {
            "start": list(p.start),
            "end": list(p.end),
            "active": list(p.active),
            "uncovered": list(p.uncovered),
            "radius_range": list(p.pi_range),
        }
        for p in curve.pieces
    ]
    print(f"{len(curve.radii)} samples in {len(pieces)} piece(s)")
    for p in pieces:
        print(f"  radius {p['radius_range'][0]:.6g}..{p['radius_range'][1]:.6g}: active {p['active']}")
    samples = [[float(r), float(x), float(y)] for r, (x, y) in zip(curve.radii, curve.points)]
    return _record("trace-rhat", sc, details={"pieces": pieces, "samples": samples})


def _parse_flows(text):
    try:
        flows = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise InvalidScenario(f"cannot parse flow list {text!r}", "flows") from exc
    if not flows or any(not (np.isfinite(f) and f > 0) for f in flows):
        raise InvalidScenario("flows must be a comma-separated list of positive numbers", "flows")
    return flows


def _cmd_duality(args, sc):
    flows = _parse_flows(args.flows)
    if args.relative:
        fstar = max_flow_place(sc).objective
        flows = [f * fstar for f in flows]
    rep = duality_check(sc, flows, tol=args.tol)
    print(f"gamma = {rep.gamma:.10g}, gamma_bar = {rep.gamma_bar:.10g}, F* = {rep.max_flow:.10g}")
    for e in rep.entries:
        status = "ok" if e.matched else "FAIL"
        print(f"  F = {e.flow:.6g}: gamma_hat {e.gamma_hat:.8g}, distance {e.distance:.3g} {status} {e.note}".rstrip())
    print(f"monotone within [gamma_bar, gamma]: {rep.monotone}; failures: {rep.failures}")
    entries = [
        {
            "flow": e.flow,
            "gamma_hat": e.gamma_hat,
            "min_cost_relay": list(e.min_cost_relay),
            "max_flow_relay": list(e.max_flow_relay) if e.max_flow_relay is not None else None,
            "distance": e.distance,
            "matched": e.matched,
            "note": e.note,
        }
        for e in rep.entries
    ]
    details = {
        "gamma": rep.gamma,
        "gamma_bar": rep.gamma_bar,
        "monotone": rep.monotone,
        "failures": rep.failures,
        "tolerance": rep.tolerance,
        "entries": entries,
    }
    return _record("duality", sc, objective=rep.max_flow, details=details)


def _cmd_oracle(args, sc):
    if args.objective == "paths":
        if sc.relay is None:
            raise InvalidScenario("path enumeration needs a scenario with fixed_relay", "fixed_relay")
        res = enumerate_path_flows(sc, args.levels)
        print(f"best flow {res.best_flow:.10g} (grid {res.grid_flow:.10g}), support {res.support}, slack {res.slack:.3g}")
        details = {
            "grid_flow": res.grid_flow,
            "support": res.support,
            "grid_support": res.grid_support,
            "levels": res.levels,
            "slack": res.slack,
        }
        return _record("oracle", sc, relay=list(sc.relay), objective=res.best_flow, branch="paths", details=details)
    if args.objective == "min_cost":
        if args.flow is None:
            raise InvalidScenario("--flow is required for the min_cost objective", "flow")
        objective = ("min_cost", args.flow)
    else:
        objective = "max_flow"
    res = grid_best_position(sc, objective, GridSpec(args.resolution, args.refinement))
    if res.point is None:
        raise TargetInfeasible(f"no grid point carries flow {args.flow}")
    print(f"best point ({res.point.x:.10g}, {res.point.y:.10g}), value {res.value:.10g}")
    print(f"coarse grid value {res.grid_value:.10g}, slack {res.slack:.3g}")
    details = {
        "grid_point": list(res.grid_point),
        "grid_value": res.grid_value,
        "slack": res.slack,
        "lipschitz": res.lipschitz,
        "pitch": res.pitch,
        "evaluated": res.evaluated,
        "resolution": args.resolution,
    }
    return _record("oracle", sc, relay=list(res.point), objective=res.value, branch=args.objective, details=details)


def _cmd_gen(args):
    rng = np.random.default_rng(args.seed)
    while True:
        src = rng.random(2)
        dests = rng.random((args.destinations, 2))
        try:
            sc = Scenario(
                tuple(src), [tuple(t) for t in dests],
                float(rng.uniform(0.1, 10.0)), float(rng.uniform(0.1, 10.0)),
                make_low_snr(alpha=float(args.alpha if args.alpha else rng.choice([2, 3, 4]))),
            )
            return sc
        except DegenerateGeometry:
            continue


def _emit(record, args):
    timing = not args.no_timing
    if args.out:
        write_json(record, args.out, timing)
    if args.csv:
        write_csv(record, args.csv, timing)


def _common(parser, suppress):
    d = {"default": argparse.SUPPRESS} if suppress else {}
    parser.add_argument("--out", metavar="FILE", help="write the result record as JSON", **(d or {"default": None}))
    parser.add_argument("--csv", metavar="FILE", help="write the result record as key,value CSV", **(d or {"default": None}))
    parser.add_argument(
        "--no-timing", action="store_true", help="leave timings out of the record (byte-stable output)",
        **(d or {"default": False}),
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relaypos", description="Relay placement for two-hop wireless multicast.")
    _common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    _common(common, suppress=True)

    p = sub.add_parser("maxflow", parents=[common], help="relay position maximizing the multicast flow")
    p.add_argument("scenario")
    p = sub.add_parser("mincost", parents=[common], help="relay position minimizing total power for a target flow")
    p.add_argument("scenario")
    p.add_argument("--flow", type=float, required=True)
    p = sub.add_parser("flow-at", parents=[common], help="max flow with the relay fixed at fixed_relay")
    p.add_argument("scenario")
    p = sub.add_parser("trace-rhat", parents=[common], help="sample the candidate relay curve")
    p.add_argument("scenario")
    p.add_argument("--samples", type=int, default=512)
    p = sub.add_parser("duality", parents=[common], help="match min-cost positions with max-flow positions")
    p.add_argument("scenario")
    p.add_argument("--flows", required=True, help="comma-separated target flows")
    p.add_argument("--relative", action="store_true", help="read --flows as fractions of F*")
    p.add_argument("--tol", type=float, default=1e-3, help="position match tolerance")
    p = sub.add_parser("oracle", parents=[common], help="brute-force reference solutions")
    p.add_argument("scenario")
    p.add_argument("--objective", choices=["max_flow", "min_cost", "paths"], default="max_flow")
    p.add_argument("--flow", type=float, help="target flow for min_cost")
    p.add_argument("--resolution", type=int, default=300)
    p.add_argument("--refinement", type=int, default=2)
    p.add_argument("--levels", type=int, default=None, help="power levels for path enumeration")
    p = sub.add_parser("render", parents=[common], help="draw a result record as SVG")
    p.add_argument("result")
    p.add_argument("-o", "--output", required=True, metavar="SVG")
    p = sub.add_parser("gen", parents=[common], help="random scenario in the unit square")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("-n", "--destinations", type=int, default=3)
    p.add_argument("--alpha", type=float, default=None, help="path-loss exponent (default: random of 2, 3, 4)")
    return parser


_HANDLERS = {
    "maxflow": _cmd_maxflow,
    "mincost": _cmd_mincost,
    "flow-at": _cmd_flow_at,
    "trace-rhat": _cmd_trace_rhat,
    "duality": _cmd_duality,
    "oracle": _cmd_oracle,
}


def _run(args) -> int:
    if args.command == "render":
        record = read_json(args.result)
        FsPath(args.output).write_text(render_svg(record))
        print(f"wrote {args.output}")
        return EXIT_OK
    if args.command == "gen":
        if args.destinations < 1:
            raise InvalidScenario("at least one destination is required", "destinations")
        text = dumps(scenario_to_dict(_cmd_gen(args)))
        if args.out:
            FsPath(args.out).write_text(text)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    sc = load_scenario(args.scenario)
    start = time.perf_counter()
    record = _HANDLERS[args.command](args, sc)
    record.timings = {"solve_seconds": time.perf_counter() - start}
    _emit(record, args)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except (InvalidScenario, DegenerateGeometry, ModelContract, OracleTooLarge) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (TargetInfeasible, RateInfeasible) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ConsistencyError as exc:
        print(f"consistency check failed: {exc}", file=sys.stderr)
        return EXIT_CONSISTENCY


if __name__ == "__main__":
    sys.exit(main())
