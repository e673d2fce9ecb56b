"""Bit strings, permutations and the OneMax / BinaryValue objective families.

A bit string of length ``n`` is stored as a Python ``int`` whose bit ``i``
holds position ``i + 1``.  The text form lists positions left to right, so
``BitString.from_str("10110")`` has ``x_1 = 1`` and ``x_5 = 0``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class DimensionError(ValueError):
    """Operands of a bitwise operation have different lengths."""


def _check_same(n: int, m: int) -> None:
    if n != m:
        raise DimensionError(f"dimension mismatch: {n} != {m}")


@dataclass(frozen=True, slots=True)
class BitString:
    bits: int
    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"n must be positive, got {self.n}")
        if self.bits < 0 or self.bits >> self.n:
            raise ValueError(f"bits {self.bits:#x} do not fit in {self.n} positions")

    @classmethod
    def from_str(cls, text: str) -> BitString:
        if not text or set(text) - {"0", "1"}:
            raise ValueError(f"not a bit string: {text!r}")
        return cls(int(text[::-1], 2), len(text))

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> BitString:
        values = list(bits)
        if any(b not in (0, 1) for b in values):
            raise ValueError("bits must be 0 or 1")
        return cls(sum(b << i for i, b in enumerate(values)), len(values))

    @classmethod
    def zeros(cls, n: int) -> BitString:
        return cls(0, n)

    @classmethod
    def ones(cls, n: int) -> BitString:
        return cls((1 << n) - 1, n)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> BitString:
        return cls.from_bits(rng.integers(0, 2, size=n).tolist())

    @property
    def mask(self) -> int:
        return (1 << self.n) - 1

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int) -> int:
        if not -self.n <= i < self.n:
            raise IndexError(i)
        return (self.bits >> (i % self.n)) & 1

    def __iter__(self):
        return (self[i] for i in range(self.n))

    def __str__(self) -> str:
        return format(self.bits, f"0{self.n}b")[::-1]

    def __repr__(self) -> str:
        return f"BitString('{self}')"

    def __xor__(self, other: BitString) -> BitString:
        _check_same(self.n, other.n)
        return BitString(self.bits ^ other.bits, self.n)

    def complement(self) -> BitString:
        return BitString(self.bits ^ self.mask, self.n)

    def weight(self) -> int:
        return self.bits.bit_count()

    def flip(self, positions: Iterable[int]) -> BitString:
        out = self.bits
        for i in positions:
            out ^= 1 << i
        return BitString(out, self.n)


def xor(x: BitString, y: BitString) -> BitString:
    return x ^ y


def complement(x: BitString) -> BitString:
    return x.complement()


def hamming(x: BitString, y: BitString) -> int:
    _check_same(x.n, y.n)
    return (x.bits ^ y.bits).bit_count()


def positions(bits: int) -> list[int]:
    """Indices of the set bits of ``bits`` in increasing order."""
    out = []
    while bits:
        low = bits & -bits
        out.append(low.bit_length() - 1)
        bits ^= low
    return out


@dataclass(frozen=True, slots=True)
class Permutation:
    """A bijection on ``range(n)``; ``mapping[i]`` is the image of ``i``."""

    mapping: tuple[int, ...]

    def __post_init__(self) -> None:
        if sorted(self.mapping) != list(range(len(self.mapping))):
            raise ValueError(f"not a permutation: {self.mapping}")

    @classmethod
    def identity(cls, n: int) -> Permutation:
        return cls(tuple(range(n)))

    @classmethod
    def from_one_based(cls, mapping: Sequence[int]) -> Permutation:
        return cls(tuple(i - 1 for i in mapping))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> Permutation:
        return cls(tuple(int(i) for i in rng.permutation(n)))

    @property
    def n(self) -> int:
        return len(self.mapping)

    def __call__(self, i: int) -> int:
        return self.mapping[i]

    def is_identity(self) -> bool:
        return all(i == j for i, j in enumerate(self.mapping))

    def apply(self, x: BitString) -> BitString:
        """Return ``sigma(x) = x_sigma(1) ... x_sigma(n)``."""
        _check_same(self.n, x.n)
        return BitString(permute_bits(x.bits, self.mapping), x.n)


def permute_bits(bits: int, mapping: Sequence[int]) -> int:
    out = 0
    for i, j in enumerate(mapping):
        out |= ((bits >> j) & 1) << i
    return out


def om_value(z: BitString, x: BitString) -> int:
    """Number of positions in which ``x`` agrees with the target ``z``."""
    _check_same(z.n, x.n)
    return z.n - (z.bits ^ x.bits).bit_count()


def bv_value(z: BitString, sigma: Permutation, x: BitString) -> int:
    """Sum over i of ``2**(i-1) * [x_sigma(i) == z_sigma(i)]``."""
    _check_same(z.n, x.n)
    _check_same(z.n, sigma.n)
    agree = ~(z.bits ^ x.bits) & z.mask
    if sigma.is_identity():
        return agree
    return permute_bits(agree, sigma.mapping)


class InstanceKind(enum.Enum):
    ONEMAX = "onemax"
    BINARY_VALUE = "binaryvalue"
    BINARY_VALUE_STAR = "binaryvalue_star"


@dataclass(frozen=True)
class ProblemInstance:
    """A hidden objective together with its unique optimum."""

    kind: InstanceKind
    target: BitString
    perm: Permutation = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.perm is None:
            object.__setattr__(self, "perm", Permutation.identity(self.target.n))
        _check_same(self.target.n, self.perm.n)
        if self.kind is not InstanceKind.BINARY_VALUE_STAR and not self.perm.is_identity():
            raise ValueError(f"{self.kind.value} instances use the identity permutation")

    @classmethod
    def onemax(cls, z: BitString) -> ProblemInstance:
        return cls(InstanceKind.ONEMAX, z)

    @classmethod
    def binary_value(cls, z: BitString, sigma: Permutation | None = None) -> ProblemInstance:
        if sigma is None:
            return cls(InstanceKind.BINARY_VALUE, z)
        return cls(InstanceKind.BINARY_VALUE_STAR, z, sigma)

    @classmethod
    def random(cls, kind: InstanceKind, n: int, rng: np.random.Generator) -> ProblemInstance:
        z = BitString.random(n, rng)
        if kind is InstanceKind.BINARY_VALUE_STAR:
            return cls(kind, z, Permutation.random(n, rng))
        return cls(kind, z)

    @property
    def n(self) -> int:
        return self.target.n

    @property
    def max_value(self) -> int:
        if self.kind is InstanceKind.ONEMAX:
            return self.n
        return (1 << self.n) - 1

    def __call__(self, x: BitString) -> int:
        if self.kind is InstanceKind.ONEMAX:
            return om_value(self.target, x)
        return bv_value(self.target, self.perm, x)

    def is_optimum(self, x: BitString) -> bool:
        return x == self.target
