"""Fixed-width bit strings (most-significant bit first)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import BitRangeError, PartitionError


@dataclass(frozen=True)
class BitString:
    bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise ValueError(f"bits must be 0 or 1, got {self.bits!r}")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_str(cls, text: str) -> "BitString":
        text = text.replace(" ", "")
        if set(text) - {"0", "1"}:
            raise ValueError(f"not a binary string: {text!r}")
        return cls(tuple(int(c) for c in text))

    @classmethod
    def zeros(cls, length: int) -> "BitString":
        return cls((0,) * length)

    @property
    def length(self) -> int:
        return len(self.bits)

    def __len__(self) -> int:
        return len(self.bits)

    def __iter__(self) -> Iterator[int]:
        return iter(self.bits)

    def __getitem__(self, index):
        if isinstance(index, slice):
            return BitString(self.bits[index])
        return self.bits[index]

    def __add__(self, other: "BitString") -> "BitString":
        return BitString(self.bits + other.bits)

    def __xor__(self, other: "BitString") -> "BitString":
        if len(self) != len(other):
            raise ValueError("xor of bit strings with different lengths")
        return BitString(tuple(a ^ b for a, b in zip(self.bits, other.bits)))

    def __str__(self) -> str:
        return "".join(map(str, self.bits))

    def reversed(self) -> "BitString":
        return BitString(self.bits[::-1])

    def flip(self, position: int) -> "BitString":
        """Return a copy with the bit at 0-based ``position`` inverted."""
        bits = list(self.bits)
        bits[position] ^= 1
        return BitString(tuple(bits))


def encode_value(value: int, width: int) -> BitString:
    """Big-endian ``width``-bit representation of ``value``.

    >>> str(encode_value(120, 8))
    '01111000'
    """
    if width < 1:
        raise ValueError("width must be positive")
    if not 0 <= value < (1 << width):
        raise BitRangeError(f"{value} does not fit in {width} bits")
    return BitString(tuple((value >> (width - 1 - i)) & 1 for i in range(width)))


def decode_bits(b: BitString) -> int:
    if len(b) == 0:
        raise ValueError("cannot decode an empty bit string")
    value = 0
    for bit in b:
        value = (value << 1) | bit
    return value


def partition(b: BitString, group_size: int) -> list[BitString]:
    if group_size < 1 or len(b) % group_size:
        raise PartitionError(f"length {len(b)} is not divisible by {group_size}")
    return [b[i:i + group_size] for i in range(0, len(b), group_size)]


def concat(groups: Iterable[BitString]) -> BitString:
    bits: tuple[int, ...] = ()
    for g in groups:
        bits += g.bits
    return BitString(bits)
