"""Joint relay positioning and multicast flow on the plane.

A source multicasts to a set of destinations with the help of one relay.  The
package finds where the relay should go to maximize the multicast flow for
given power budgets, or to minimize total power for a target flow, along with
brute-force oracles used to check those answers.
"""
from .errors import (
    ConsistencyError,
    DegenerateGeometry,
    InvalidScenario,
    ModelContract,
    OracleTooLarge,
    RateInfeasible,
    RelayPosError,
    TargetInfeasible,
)
from .flow import FlowSolution, PathFlow, closed_form_max_flow, max_flow_at, min_cost_at
from .geometry import Circle, ConvexPolygon, Point, Segment, convex_hull, weighted_minimax_point
from .hypergraph import Scenario, build_hypergraph, spanning_paths
from .oracle import GridSpec, enumerate_path_flows, grid_best_position, smallest_enclosing_circle
from .placement import (
    PlacementResult,
    compute_p_star,
    duality_check,
    max_flow_place,
    min_cost_place,
    trace_r_hat,
)
from .rate_model import RateModel, make_custom, make_low_snr, make_power_law
from .records import load_scenario, save_scenario, scenario_hash

__all__ = [
    "Circle",
    "ConsistencyError",
    "ConvexPolygon",
    "DegenerateGeometry",
    "FlowSolution",
    "GridSpec",
    "InvalidScenario",
    "ModelContract",
    "OracleTooLarge",
    "PathFlow",
    "PlacementResult",
    "Point",
    "RateInfeasible",
    "RateModel",
    "RelayPosError",
    "Scenario",
    "Segment",
    "TargetInfeasible",
    "build_hypergraph",
    "closed_form_max_flow",
    "compute_p_star",
    "convex_hull",
    "duality_check",
    "enumerate_path_flows",
    "grid_best_position",
    "load_scenario",
    "make_custom",
    "make_low_snr",
    "make_power_law",
    "max_flow_at",
    "max_flow_place",
    "min_cost_at",
    "min_cost_place",
    "save_scenario",
    "scenario_hash",
    "smallest_enclosing_circle",
    "spanning_paths",
    "trace_r_hat",
    "weighted_minimax_point",
]
