"""Mapping between a 28-bit watermark signal, constraint selections and weight factors.

Variables are numbered 1..7 in the order
``eps_t, eps_DA, eps_DB, eps_DC, delta1, delta2, delta3``; bit ``i`` of a
7-bit group (1-based, left to right) selects variable ``i``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .bitcodec import BitString, concat, decode_bits, encode_value, partition

SIGNAL_LENGTH = 28
SELECTION_GROUP = 7
FACTOR_GROUP = 4
N_SELECTIONS = SIGNAL_LENGTH // SELECTION_GROUP
VARIABLE_NAMES = ("eps_t", "eps_DA", "eps_DB", "eps_DC", "delta1", "delta2", "delta3")


@dataclass(frozen=True)
class ConstraintSelection:
    variables: frozenset[int]
    source_group: BitString

    @classmethod
    def from_group(cls, group: BitString) -> "ConstraintSelection":
        if len(group) != SELECTION_GROUP:
            raise ValueError(f"selection groups have {SELECTION_GROUP} bits")
        return cls(frozenset(i + 1 for i, bit in enumerate(group) if bit), group)

    @property
    def is_vacuous(self) -> bool:
        return not self.variables


@dataclass(frozen=True)
class WatermarkPayload:
    signal: BitString
    selections: tuple[ConstraintSelection, ...]
    weight_factors: tuple[int, ...]

    @classmethod
    def from_signal(cls, signal: BitString) -> "WatermarkPayload":
        return cls(signal, tuple(constraint_selections(signal)), tuple(weight_factors(signal)))


def _check_signal(signal: BitString) -> None:
    if len(signal) != SIGNAL_LENGTH:
        raise ValueError(f"watermark signal must have {SIGNAL_LENGTH} bits, got {len(signal)}")


def constraint_selections(signal: BitString) -> list[ConstraintSelection]:
    _check_signal(signal)
    return [ConstraintSelection.from_group(g) for g in partition(signal, SELECTION_GROUP)]


def weight_factors(signal: BitString) -> list[int]:
    _check_signal(signal)
    return [decode_bits(g) for g in partition(signal, FACTOR_GROUP)]


def factors_to_signal(factors) -> BitString:
    factors = list(factors)
    if len(factors) != SIGNAL_LENGTH // FACTOR_GROUP:
        raise ValueError(f"expected {SIGNAL_LENGTH // FACTOR_GROUP} factors, got {len(factors)}")
    for f in factors:
        if isinstance(f, bool) or int(f) != f or not 0 <= f < 16:
            raise ValueError(f"weight factor {f!r} is not an integer in [0, 15]")
    return concat(encode_value(int(f), FACTOR_GROUP) for f in factors)
