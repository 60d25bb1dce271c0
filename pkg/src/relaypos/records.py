"""Scenario files, result records and their JSON / CSV encodings.

Scenario files are JSON objects::

    {"version": 1,
     "source": [0, 0],
     "destinations": [[2, 0], [0, 1]],
     "mu": 1.0, "nu": 1.0,
     "model": {"type": "low_snr", "alpha": 2, "n0": 1},
     "fixed_relay": [1, 0]}            # optional

``model`` and ``fixed_relay`` may be omitted.  Floats are written with enough
digits to round-trip exactly, so a record read back compares equal.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Any, Optional, Union

import jsonschema

from .errors import InvalidScenario
from .flow import FlowSolution
from .hypergraph import Scenario
from .rate_model import from_descriptor, make_low_snr

SCHEMA_VERSION = 1

_XY = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

SCENARIO_SCHEMA = {
    "type": "object",
    "required": ["version", "source", "destinations", "mu", "nu"],
    "additionalProperties": False,
    "properties": {
        "version": {"const": SCHEMA_VERSION},
        "source": _XY,
        "destinations": {"type": "array", "items": _XY, "minItems": 1},
        "mu": {"type": "number", "exclusiveMinimum": 0},
        "nu": {"type": "number", "exclusiveMinimum": 0},
        "model": {
            "type": "object",
            "required": ["type"],
            "properties": {"type": {"enum": ["low_snr", "power_law"]}},
            "additionalProperties": {"type": "number"},
        },
        "fixed_relay": _XY,
    },
}


def _field_path(err: jsonschema.ValidationError) -> str:
    parts = list(err.absolute_path)
    if err.validator == "required":
        # the missing key is only named in the message
        missing = err.message.split("'")[1] if "'" in err.message else ""
        parts.append(missing)
    text = ""
    for p in parts:
        text += f"[{p}]" if isinstance(p, int) else (f".{p}" if text else str(p))
    return text or "<root>"


def scenario_from_dict(data: Any) -> Scenario:
    """Validate a parsed scenario object and build the :class:`Scenario`."""
    validator = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        err = errors[0]
        raise InvalidScenario(err.message, _field_path(err))
    model = from_descriptor(data["model"]) if "model" in data else make_low_snr()
    return Scenario(
        source=tuple(data["source"]),
        destinations=[tuple(t) for t in data["destinations"]],
        mu=data["mu"],
        nu=data["nu"],
        model=model,
        relay=tuple(data["fixed_relay"]) if "fixed_relay" in data else None,
    )


def scenario_to_dict(scenario: Scenario) -> dict:
    """Inverse of :func:`scenario_from_dict`; destinations come back in their input order."""
    original = [None] * scenario.n
    for pos, idx in enumerate(scenario.order):
        original[idx] = list(scenario.destinations[pos])
    out = {
        "version": SCHEMA_VERSION,
        "source": list(scenario.source),
        "destinations": original,
        "mu": scenario.mu,
        "nu": scenario.nu,
        "model": dict(scenario.model.descriptor),
    }
    if scenario.relay is not None:
        out["fixed_relay"] = list(scenario.relay)
    return out


def load_scenario(path: Union[str, FsPath]) -> Scenario:
    try:
        text = FsPath(path).read_text()
    except OSError as exc:
        raise InvalidScenario(f"cannot read {path}: {exc.strerror}", "file") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidScenario(f"not valid JSON ({exc.msg} at line {exc.lineno})", "file") from exc
    return scenario_from_dict(data)


def save_scenario(scenario: Scenario, path: Union[str, FsPath]) -> None:
    FsPath(path).write_text(dumps(scenario_to_dict(scenario)))


def scenario_hash(scenario: Scenario) -> str:
    """SHA-256 of the canonical JSON form (sorted keys, no whitespace)."""
    canon = json.dumps(_plain(scenario_to_dict(scenario)), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


# --------------------------------------------------------------------------- result records


@dataclass
class ResultRecord:
    command: str
    scenario_hash: str
    scenario: dict
    relay: Optional[list] = None
    objective: Optional[float] = None
    branch: Optional[str] = None
    powers: list = field(default_factory=list)  # one entry per hyperarc carrying flow
    details: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    def to_dict(self, timing: bool = True) -> dict:
        out = {
            "command": self.command,
            "scenario_hash": self.scenario_hash,
            "scenario": self.scenario,
            "relay": self.relay,
            "objective": self.objective,
            "branch": self.branch,
            "powers": self.powers,
            "details": self.details,
        }
        if timing:
            out["timings"] = self.timings
        return _plain(out)

    @classmethod
    def from_dict(cls, data: dict) -> "ResultRecord":
        data = _unplain(data)
        return cls(
            data["command"],
            data["scenario_hash"],
            data["scenario"],
            data.get("relay"),
            data.get("objective"),
            data.get("branch"),
            data.get("powers", []),
            data.get("details", {}),
            data.get("timings", {}),
        )


def hyperarc_powers(flow: FlowSolution) -> list:
    """Power and rate of every hyperarc on the paths that carry flow."""
    rows = []
    for alloc in flow.allocations:
        if alloc.flow <= 0.0:
            continue
        hops = alloc.path.hops
        for hop, power in zip(hops, (alloc.source_power, alloc.relay_power)):
            rows.append(
                {
                    "path": alloc.path.label(),
                    "transmitter": hop.transmitter,
                    "receivers": list(hop.end_nodes),
                    "reach": hop.reach,
                    "power": power,
                    "rate": alloc.flow,
                }
            )
    return rows


def _plain(obj):
    """Convert numpy scalars and non-finite floats into JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def _unplain(obj):
    if isinstance(obj, dict):
        return {k: _unplain(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_unplain(v) for v in obj]
    if obj in ("nan", "inf", "-inf"):
        return float(obj)
    return obj


def dumps(data: dict) -> str:
    """Deterministic JSON: sorted keys, shortest round-trip float repr, trailing newline."""
    return json.dumps(_plain(data), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(record: ResultRecord, path, timing: bool = True) -> None:
    FsPath(path).write_text(dumps(record.to_dict(timing)))


def read_json(path) -> ResultRecord:
    try:
        data = json.loads(FsPath(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidScenario(f"cannot read result file {path}: {exc}", "file") from exc
    if not isinstance(data, dict) or "command" not in data or "scenario" not in data:
        raise InvalidScenario("not a result record", "file")
    return ResultRecord.from_dict(data)


def flatten(data, prefix: str = "") -> list:
    """``(dotted.key, value)`` pairs for every leaf, in sorted key order."""
    rows = []
    if isinstance(data, dict):
        for k in sorted(data):
            rows += flatten(data[k], f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(data, list):
        if not data:
            rows.append((prefix, ""))
        for i, v in enumerate(data):
            rows += flatten(v, f"{prefix}.{i}")
    else:
        rows.append((prefix, data))
    return rows


def _csv_value(v):
    if isinstance(v, bool) or v is None:
        return "" if v is None else str(v).lower()
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def to_csv(record: ResultRecord, timing: bool = True) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["key", "value"])
    for key, value in flatten(record.to_dict(timing)):
        writer.writerow([key, _csv_value(value)])
    return buf.getvalue()


def write_csv(record: ResultRecord, path, timing: bool = True) -> None:
    FsPath(path).write_text(to_csv(record, timing))
