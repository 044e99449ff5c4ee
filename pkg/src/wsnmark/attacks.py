"""Seeded adversarial transformations of a watermarked cover medium."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bitcodec import encode_value
from .kolmogorov import N_SELECTIONS, SIGNAL_LENGTH, WatermarkPayload
from .lfsr import LfsrKey, generate
from .trilateration import N_ERRORS, CoverMedium, WatermarkConstraint
from .watermarklab import sample_tau

ATTACK_KINDS = ("false_insertion", "modification", "deletion", "replication", "sybil")
DEFAULT_INTENSITY = {
    "false_insertion": 4,
    "modification": 2,
    "deletion": 1,
    "replication": 2,
    "sybil": 3,
}


@dataclass(frozen=True)
class AttackSpec:
    kind: str
    intensity: int
    rng_seed: int = 0

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ValueError(f"unknown attack {self.kind!r}; expected one of {', '.join(ATTACK_KINDS)}")
        if isinstance(self.intensity, bool) or int(self.intensity) != self.intensity or self.intensity < 1:
            raise ValueError(f"attack intensity must be a positive integer, got {self.intensity!r}")

    @classmethod
    def default(cls, kind: str, rng_seed: int = 0) -> "AttackSpec":
        if kind not in DEFAULT_INTENSITY:
            raise ValueError(f"unknown attack {kind!r}")
        return cls(kind, DEFAULT_INTENSITY[kind], rng_seed)


def random_key(rng: np.random.Generator, register_length: int = 8) -> LfsrKey:
    count = int(rng.integers(1, register_length + 1))
    taps = rng.choice(np.arange(1, register_length + 1), size=count, replace=False)
    return LfsrKey(register_length, tuple(int(t) for t in taps))


def _forged_constraints(rng, count: int, register_length: int = 8) -> list[WatermarkConstraint]:
    """Constraints from the attacker's own value and key."""
    out = []
    while len(out) < count:
        value = int(rng.integers(1, 1 << register_length))
        key = random_key(rng, register_length)
        payload = WatermarkPayload.from_signal(
            generate(encode_value(value, register_length), key, SIGNAL_LENGTH))
        taus = sample_tau(rng, N_SELECTIONS)
        out.extend(WatermarkConstraint(sel.variables, float(t), sel.source_group)
                   for sel, t in zip(payload.selections, taus))
    return out[:count]


def _random_mask(rng) -> frozenset[int]:
    mask = int(rng.integers(1, 1 << N_ERRORS))
    return frozenset(i + 1 for i in range(N_ERRORS) if mask >> (N_ERRORS - 1 - i) & 1)


def apply_attack(problem: CoverMedium, spec: AttackSpec) -> CoverMedium:
    """Return an attacked copy of ``problem``; the input is never modified."""
    rng = np.random.default_rng(spec.rng_seed)
    constraints = list(problem.watermark_constraints)
    n, k = len(constraints), int(spec.intensity)
    if spec.kind != "false_insertion" and n == 0:
        raise ValueError(f"{spec.kind} needs at least one watermark constraint")

    if spec.kind == "false_insertion":
        constraints += _forged_constraints(rng, k)
    elif spec.kind == "modification":
        if k > n:
            raise ValueError(f"cannot modify {k} of {n} watermark constraints")
        for i in sorted(int(j) for j in rng.choice(n, size=k, replace=False)):
            constraints[i] = WatermarkConstraint(_random_mask(rng), float(sample_tau(rng, 1)[0]))
    elif spec.kind == "deletion":
        if k > n:
            raise ValueError(f"cannot delete {k} of {n} watermark constraints")
        drop = set(int(j) for j in rng.choice(n, size=k, replace=False))
        constraints = [c for i, c in enumerate(constraints) if i not in drop]
    elif spec.kind == "replication":
        picks = rng.choice(n, size=k, replace=k > n)
        constraints += [constraints[int(j)] for j in picks]
    else:  # sybil
        picks = rng.choice(n, size=k, replace=True)
        taus = sample_tau(rng, k)
        constraints += [WatermarkConstraint(constraints[int(j)].variables, float(t),
                                            constraints[int(j)].source_group)
                        for j, t in zip(picks, taus)]
    return problem.with_constraints(constraints)
