"""Fibonacci linear feedback shift register used as the watermark generator.

Stages ``s1..sn`` hold the seed big-endian (``s1`` is the most significant
bit). Each clock emits ``sn``, XORs the tapped stages of the current state,
shifts every stage one place towards ``sn`` and loads the feedback into
``s1``. With this convention the first ``n`` output bits are the seed in
reverse order, which is what makes ``recover_seed`` a cheap operation.
"""

from __future__ import annotations

from dataclasses import dataclass

from .bitcodec import BitString
from .errors import TamperError


@dataclass(frozen=True)
class LfsrKey:
    register_length: int
    taps: tuple[int, ...]

    def __post_init__(self):
        taps = tuple(sorted(set(int(t) for t in self.taps)))
        if self.register_length < 2:
            raise ValueError("register_length must be at least 2")
        if not taps:
            raise ValueError("at least one tap is required")
        if taps[0] < 1 or taps[-1] > self.register_length:
            raise ValueError(f"taps {taps} outside [1, {self.register_length}]")
        object.__setattr__(self, "taps", taps)

    @classmethod
    def parse(cls, text: str, register_length: int = 8) -> "LfsrKey":
        """Parse ``"1,2,5,6"`` or ``"[1 2 5 6]"``."""
        cleaned = text.strip().strip("[]").replace(",", " ")
        return cls(register_length, tuple(int(t) for t in cleaned.split()))

    def __str__(self) -> str:
        return ",".join(map(str, self.taps))


REFERENCE_KEY = LfsrKey(8, (1, 2, 5, 6))


def generate(seed: BitString, key: LfsrKey, count: int) -> BitString:
    if len(seed) != key.register_length:
        raise ValueError(
            f"seed has {len(seed)} bits but the register has {key.register_length} stages")
    if count < 1:
        raise ValueError("count must be at least 1")
    state = list(seed.bits)
    out = []
    for _ in range(count):
        out.append(state[-1])
        feedback = 0
        for tap in key.taps:
            feedback ^= state[tap - 1]
        state = [feedback] + state[:-1]
    return BitString(tuple(out))


def recover_seed(signal: BitString, key: LfsrKey) -> BitString:
    """Invert :func:`generate`, checking every bit of ``signal``.

    Raises :class:`TamperError` when the signal is not the output of this
    register.
    """
    n = key.register_length
    if len(signal) < n:
        raise ValueError(f"signal shorter than the register ({len(signal)} < {n})")
    seed = signal[:n].reversed()
    if generate(seed, key, len(signal)) != signal:
        raise TamperError("signal is not consistent with the watermark key")
    return seed
