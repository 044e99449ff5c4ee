"""JSON round-tripping for scenarios, problems, records, solutions and reports.

Every document carries ``"schema"`` (the artifact type) and ``"version"``.
Floats are written with ``repr`` precision so values survive a round trip
exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

import yaml

from .bitcodec import BitString
from .errors import ConfigError
from .kolmogorov import WatermarkPayload
from .lfsr import LfsrKey
from .solver import Solution
from .trilateration import CoverMedium, SensorScenario, WatermarkConstraint
from .watermarklab import DetectionReport, EmbeddingRecord

SCHEMA_VERSION = 1


def scenario_to_dict(s: SensorScenario) -> dict:
    return {
        "anchors": [list(a) for a in s.anchors],
        "temperature": s.temperature,
        "times": list(s.times),
        "ground_truth": None if s.ground_truth is None else list(s.ground_truth),
    }


def scenario_from_dict(d: dict) -> SensorScenario:
    try:
        return SensorScenario(
            tuple(tuple(a) for a in d["anchors"]),
            d.get("temperature", 36.0),
            tuple(d["times"]),
            None if d.get("ground_truth") is None else tuple(d["ground_truth"]),
        )
    except KeyError as exc:
        raise ConfigError(f"scenario is missing field {exc.args[0]!r}") from None


def _constraint_to_dict(c: WatermarkConstraint) -> dict:
    return {
        "variables": sorted(c.variables),
        "tau": c.tau,
        "source_group": None if c.source_group is None else str(c.source_group),
    }


def _constraint_from_dict(d: dict) -> WatermarkConstraint:
    group = d.get("source_group")
    return WatermarkConstraint(frozenset(d["variables"]), d["tau"],
                               None if group is None else BitString.from_str(group))


def problem_to_dict(p: CoverMedium) -> dict:
    return {
        "schema": "cover_medium",
        "version": SCHEMA_VERSION,
        "scenario": scenario_to_dict(p.scenario),
        "objective_coefficients": list(p.objective_coefficients),
        "watermark_constraints": [_constraint_to_dict(c) for c in p.watermark_constraints],
        "lower": list(p.lower),
        "upper": list(p.upper),
    }


def problem_from_dict(d: dict) -> CoverMedium:
    _check(d, "cover_medium")
    return CoverMedium(
        scenario_from_dict(d["scenario"]),
        tuple(d["objective_coefficients"]),
        tuple(_constraint_from_dict(c) for c in d["watermark_constraints"]),
        tuple(d["lower"]),
        tuple(d["upper"]),
    )


def record_to_dict(r: EmbeddingRecord) -> dict:
    return {
        "schema": "embedding_record",
        "version": SCHEMA_VERSION,
        "signal": str(r.payload.signal),
        "key": {"register_length": r.key.register_length, "taps": list(r.key.taps)},
        "tau_values": list(r.tau_values),
        "repaired": r.repaired,
        "base_problem": problem_to_dict(r.base_problem),
        "watermarked_problem": problem_to_dict(r.watermarked_problem),
    }


def record_from_dict(d: dict) -> EmbeddingRecord:
    _check(d, "embedding_record")
    key = LfsrKey(d["key"]["register_length"], tuple(d["key"]["taps"]))
    return EmbeddingRecord(
        WatermarkPayload.from_signal(BitString.from_str(d["signal"])),
        tuple(d["tau_values"]),
        key,
        problem_from_dict(d["base_problem"]),
        problem_from_dict(d["watermarked_problem"]),
        bool(d.get("repaired", False)),
    )


def solution_to_dict(s: Solution) -> dict:
    return {
        "schema": "solution",
        "version": SCHEMA_VERSION,
        "position": list(s.position),
        "error_vector": list(s.error_vector),
        "objective_value": s.objective_value,
        "feasible": s.feasible,
        "max_constraint_violation": s.max_constraint_violation,
    }


def detection_to_dict(r: DetectionReport) -> dict:
    return {"schema": "detection_report", "version": SCHEMA_VERSION, **r.to_dict()}


def _check(d: dict, schema: str) -> None:
    if not isinstance(d, dict) or d.get("schema") != schema:
        found = d.get("schema") if isinstance(d, dict) else type(d).__name__
        raise ConfigError(f"expected a {schema} document, found {found!r}")
    if d.get("version") != SCHEMA_VERSION:
        raise ConfigError(f"unsupported {schema} version {d.get('version')!r}")


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def load_document(path) -> dict:
    """Read a JSON or YAML file into a dict."""
    text = Path(path).read_text()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML/JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected a mapping at top level")
    return doc


def load_problem(doc: dict) -> CoverMedium:
    """Accept a cover_medium document or an embedding_record (its watermarked problem)."""
    if doc.get("schema") == "embedding_record":
        return record_from_dict(doc).watermarked_problem
    return problem_from_dict(doc)
