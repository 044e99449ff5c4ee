"""Experiment orchestration, reports and the ``wsnmark`` command line.

Config files are YAML (JSON also parses). Recognized keys::

    scenario:
      mode: sampled      # or noise-free, or file
      file: scenario.yaml       # when mode is file
      temperature: 36.0
      time_interval: [0.02, 0.1]
    sensed_value: 120
    key: {taps: [1, 2, 5, 6], register_length: 8}
    solver: {multistart_count: 8}
    attacks:
      - {kind: deletion, intensity: 1}
    trials: 20
    base_seed: 0
    format: table               # table | json | csv
    output: null

A scenario file holds ``anchors``, ``temperature``, ``times`` and
optionally ``ground_truth``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .attacks import ATTACK_KINDS, DEFAULT_INTENSITY, AttackSpec, apply_attack
from .bitcodec import encode_value
from .errors import ConfigError, DetectionError, TamperError, UndefinedNormError, WatermarkError
from .kolmogorov import SIGNAL_LENGTH, WatermarkPayload
from .lfsr import LfsrKey, generate
from .serialize import (SCHEMA_VERSION, detection_to_dict, dumps, load_document, load_problem,
                        problem_to_dict, record_from_dict, record_to_dict, scenario_from_dict,
                        solution_to_dict)
from .solver import SolverConfig, solve
from .trilateration import (REFERENCE_TEMPERATURE, SAMPLED_TIME_INTERVAL, SensorScenario,
                            synthesize_scenario)
from .watermarklab import cached_solve, detect, embed, extract

FORMATS = ("table", "json", "csv")
SCENARIO_MODES = ("sampled", "noise-free", "file")
# fewer starts than the library default keeps a 100-trial run to a few minutes
EXPERIMENT_SOLVER = {"multistart_count": 8}


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from arbitrary printable parts."""
    digest = hashlib.sha256(":".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


@dataclass(frozen=True)
class AttackEntry:
    kind: str
    intensity: int


@dataclass(frozen=True)
class ExperimentConfig:
    scenario_mode: str = "sampled"
    scenario_file: Optional[str] = None
    temperature: float = REFERENCE_TEMPERATURE
    time_interval: tuple[float, float] = SAMPLED_TIME_INTERVAL
    sensed_value: int = 120
    taps: tuple[int, ...] = (1, 2, 5, 6)
    register_length: int = 8
    solver: dict = field(default_factory=lambda: dict(EXPERIMENT_SOLVER))
    attacks: tuple[AttackEntry, ...] = tuple(AttackEntry(k, DEFAULT_INTENSITY[k]) for k in ATTACK_KINDS)
    trials: int = 20
    base_seed: int = 0
    format: str = "table"
    output: Optional[str] = None

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.scenario_mode not in SCENARIO_MODES:
            raise ConfigError(f"unknown scenario mode {self.scenario_mode!r}")
        if self.scenario_mode == "file" and not self.scenario_file:
            raise ConfigError("scenario mode 'file' needs a scenario file")
        if self.format not in FORMATS:
            raise ConfigError(f"unknown format {self.format!r}; expected one of {FORMATS}")
        if not self.attacks:
            raise ConfigError("at least one attack is required")
        for a in self.attacks:
            if a.kind not in ATTACK_KINDS:
                raise ConfigError(f"unknown attack {a.kind!r}; expected one of {', '.join(ATTACK_KINDS)}")
            if a.intensity < 1:
                raise ConfigError(f"attack {a.kind} has intensity {a.intensity} < 1")
        try:
            self.key
            self.solver_config
            encode_value(self.sensed_value, self.register_length)
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from None
        if self.sensed_value == 0:
            raise ConfigError("sensed value 0 gives an all-zero watermark signal")

    @property
    def key(self) -> LfsrKey:
        return LfsrKey(self.register_length, tuple(self.taps))

    @property
    def solver_config(self) -> SolverConfig:
        return SolverConfig(**self.solver)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        kwargs = {}
        scenario = d.pop("scenario", {}) or {}
        if not isinstance(scenario, dict):
            raise ConfigError("scenario must be a mapping")
        for src, dst in (("mode", "scenario_mode"), ("file", "scenario_file"),
                         ("temperature", "temperature")):
            if src in scenario:
                kwargs[dst] = scenario.pop(src)
        if "time_interval" in scenario:
            kwargs["time_interval"] = tuple(scenario.pop("time_interval"))
        if scenario:
            raise ConfigError(f"unknown scenario keys: {sorted(scenario)}")
        key = d.pop("key", None)
        if key is not None:
            kwargs["taps"] = tuple(key.get("taps", cls.taps))
            kwargs["register_length"] = key.get("register_length", cls.register_length)
        if "attacks" in d:
            attacks = []
            for a in d.pop("attacks"):
                if isinstance(a, str):
                    a = {"kind": a}
                kind = a.get("kind")
                attacks.append(AttackEntry(kind, int(a.get("intensity", DEFAULT_INTENSITY.get(kind, 1)))))
            kwargs["attacks"] = tuple(attacks)
        if "solver" in d:
            kwargs["solver"] = {**EXPERIMENT_SOLVER, **(d.pop("solver") or {})}
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs.update(d)
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["attacks"] = [asdict(a) for a in self.attacks]
        d["time_interval"] = list(self.time_interval)
        d["taps"] = list(self.taps)
        return d


def _scenario(config: ExperimentConfig, seed: int) -> SensorScenario:
    if config.scenario_mode == "file":
        return scenario_from_dict(load_document(config.scenario_file))
    return synthesize_scenario(seed, config.scenario_mode, temperature=config.temperature,
                               time_interval=config.time_interval)


def run_trial(config: ExperimentConfig, attack: AttackEntry, trial: int) -> dict:
    seed = derive_seed(config.base_seed, attack.kind, trial)
    row = {"kind": attack.kind, "trial": trial, "seed": seed}
    solver_config = config.solver_config
    try:
        scenario = _scenario(config, derive_seed(seed, "scenario"))
        record = embed(scenario, config.sensed_value, config.key, derive_seed(seed, "tau"), solver_config)
        suspect = apply_attack(record.watermarked_problem,
                               AttackSpec(attack.kind, attack.intensity, derive_seed(seed, "attack")))
        report = detect(record, suspect, solver_config)
    except (DetectionError, UndefinedNormError, WatermarkError, ValueError) as exc:
        row.update(status="failed", error=str(exc))
        return row
    row.update(status="ok", threshold=report.threshold, similarity=report.similarity,
               present=report.watermark_present, robust=report.robust, repaired=record.repaired,
               detection=report.to_dict())
    return row


def _summary(kind: str, intensity: int, rows: list[dict]) -> dict:
    ok = [r for r in rows if r["status"] == "ok"]
    thresholds = [r["threshold"] for r in ok]
    sims = [r["similarity"] for r in ok]
    return {
        "kind": kind,
        "intensity": intensity,
        "trials": len(rows),
        "robust": sum(r["robust"] for r in ok),
        "not_robust": sum(not r["robust"] for r in ok),
        "failed": len(rows) - len(ok),
        "degenerate": not ok,
        "mean_similarity": float(np.mean(sims)) if ok else None,
        "threshold_mean": float(np.mean(thresholds)) if ok else None,
        "threshold_min": min(thresholds) if ok else None,
        "threshold_max": max(thresholds) if ok else None,
        "presence_rate": sum(r["present"] for r in ok) / len(ok) if ok else None,
    }


def run_experiment(config: ExperimentConfig) -> dict:
    trials, rows = [], []
    for attack in config.attacks:
        batch = [run_trial(config, attack, t) for t in range(config.trials)]
        trials.extend(batch)
        rows.append(_summary(attack.kind, attack.intensity, batch))
    return {
        "schema": "experiment_report",
        "version": SCHEMA_VERSION,
        "tool_version": __version__,
        "config": config.to_dict(),
        "rows": rows,
        "trials": trials,
    }


CSV_COLUMNS = ("kind", "trial", "seed", "status", "threshold", "similarity", "present", "robust")


def format_report(report: dict, fmt: str) -> str:
    if fmt == "json":
        return dumps(report)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        for t in report["trials"]:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in t.items()})
        return buf.getvalue()
    lines = [f"{'attack':<16}{'trials':>7}{'robust':>8}{'not':>6}{'failed':>8}"
             f"{'mean sim':>12}{'mean thr':>12}{'present':>9}  verdict"]
    for r in report["rows"]:
        if r["degenerate"]:
            lines.append(f"{r['kind']:<16}{r['trials']:>7}{'':>8}{'':>6}{r['failed']:>8}  degenerate")
            continue
        verdict = "Robust" if r["robust"] > r["not_robust"] else "Not robust"
        lines.append(f"{r['kind']:<16}{r['trials']:>7}{r['robust']:>8}{r['not_robust']:>6}{r['failed']:>8}"
                     f"{r['mean_similarity']:>12.4g}{r['threshold_mean']:>12.4g}"
                     f"{r['presence_rate']:>9.2f}  {verdict}")
    return "\n".join(lines) + "\n"


# command line

def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _key(args) -> LfsrKey:
    return LfsrKey.parse(args.taps, args.register_length)


def _cmd_generate(args) -> None:
    key = _key(args)
    payload = WatermarkPayload.from_signal(
        generate(encode_value(args.value, key.register_length), key, SIGNAL_LENGTH))
    if args.format == "json":
        _emit(dumps({
            "signal": str(payload.signal),
            "weight_factors": list(payload.weight_factors),
            "selections": [sorted(s.variables) for s in payload.selections],
        }), args.out)
        return
    selections = " ".join("{" + ",".join(map(str, sorted(s.variables))) + "}" for s in payload.selections)
    _emit(f"{payload.signal}\n{' '.join(map(str, payload.weight_factors))}\n{selections}\n", args.out)


def _cmd_embed(args) -> None:
    if args.scenario:
        scenario = scenario_from_dict(load_document(args.scenario))
    else:
        scenario = synthesize_scenario(args.scenario_seed, args.mode)
    record = embed(scenario, args.value, _key(args), args.seed)
    _emit(dumps(record_to_dict(record)), args.out)


def _cmd_solve(args) -> None:
    problem = load_problem(load_document(args.problem))
    _emit(dumps(solution_to_dict(solve(problem, SolverConfig(rng_seed=args.seed)))), args.out)


def _cmd_detect(args) -> None:
    record = record_from_dict(load_document(args.record))
    suspect = load_problem(load_document(args.suspect))
    _emit(dumps(detection_to_dict(detect(record, suspect))), args.out)


def _cmd_extract(args) -> None:
    problem = load_problem(load_document(args.artifact))
    _emit(f"{extract(problem, _key(args))}\n", args.out)


def _cmd_attack(args) -> None:
    problem = load_problem(load_document(args.problem))
    intensity = args.intensity if args.intensity is not None else DEFAULT_INTENSITY.get(args.kind, 1)
    attacked = apply_attack(problem, AttackSpec(args.kind, intensity, args.seed))
    _emit(dumps(problem_to_dict(attacked)), args.out)


def _cmd_experiment(args) -> None:
    doc = load_document(args.config) if args.config else {}
    config = ExperimentConfig.from_dict(doc)
    overrides = {k: v for k, v in (("trials", args.trials), ("base_seed", args.seed),
                                   ("format", args.format), ("output", args.out)) if v is not None}
    if overrides:
        config = replace(config, **overrides)
    report = run_experiment(config)
    _emit(format_report(report, config.format), config.output)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wsnmark", description="Constraint watermarking of a "
                                     "trilateration program: embed, attack, detect, extract.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_key(p):
        p.add_argument("--taps", default="1,2,5,6", help="LFSR taps, e.g. 1,2,5,6")
        p.add_argument("--register-length", type=int, default=8)

    def add_out(p):
        p.add_argument("--out", help="write output here instead of stdout")

    p = sub.add_parser("generate", help="watermark signal, factors and selections for a value")
    p.add_argument("--value", type=int, required=True)
    p.add_argument("--format", choices=("table", "json"), default="table")
    add_key(p), add_out(p)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("embed", help="embed a value into a scenario's cover medium")
    p.add_argument("--value", type=int, required=True)
    p.add_argument("--scenario", help="scenario YAML/JSON file")
    p.add_argument("--scenario-seed", type=int, default=0, help="seed when synthesizing")
    p.add_argument("--mode", choices=("sampled", "noise-free"), default="sampled")
    p.add_argument("--seed", type=int, default=0, help="tau sampling seed")
    add_key(p), add_out(p)
    p.set_defaults(func=_cmd_embed)

    p = sub.add_parser("solve", help="solve a problem or the watermarked problem of a record")
    p.add_argument("problem")
    p.add_argument("--seed", type=int, default=0)
    add_out(p)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("detect", help="compare a suspect problem against an embedding record")
    p.add_argument("--record", required=True)
    p.add_argument("--suspect", required=True)
    add_out(p)
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("extract", help="recover the sensed value from a record or problem")
    p.add_argument("artifact")
    add_key(p), add_out(p)
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("attack", help="apply one attack to a problem or record")
    p.add_argument("problem")
    p.add_argument("--kind", choices=ATTACK_KINDS, required=True)
    p.add_argument("--intensity", type=int)
    p.add_argument("--seed", type=int, default=0)
    add_out(p)
    p.set_defaults(func=_cmd_attack)

    p = sub.add_parser("experiment", help="run the seeded robustness experiment")
    p.add_argument("--config", help="experiment YAML/JSON file (defaults apply when omitted)")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--format", choices=FORMATS)
    add_out(p)
    p.set_defaults(func=_cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except TamperError as exc:
        print(f"wsnmark: tamper detected: {exc}", file=sys.stderr)
        return 3
    except (WatermarkError, ValueError, OSError) as exc:
        print(f"wsnmark: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
