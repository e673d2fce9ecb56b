"""Brute-force checks of the combinatorial facts behind the lower bound and the sampling analysis."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Sequence

import numpy as np

from .bitstring import BitString
from .consistency import ENUMERATION_CAP


class CapExceeded(ValueError):
    pass


@dataclass
class EllStatistics:
    strings: list[BitString]
    ell_values: list[int]

    @property
    def distinct_count(self) -> int:
        return len(set(self.ell_values))


def ell(x: BitString, y: BitString) -> int:
    """Highest (1-based) position where ``x`` and ``y`` differ."""
    d = x.bits ^ y.bits
    if not d:
        raise ValueError("ell is undefined for equal strings")
    return d.bit_length()


def ell_statistics(strings: Sequence[BitString]) -> EllStatistics:
    items = list(strings)
    if len(items) < 2:
        raise ValueError("need at least two strings")
    if len({s.bits for s in items}) != len(items):
        raise ValueError("strings must be pairwise distinct")
    return EllStatistics(items, [ell(a, b) for a, b in combinations(items, 2)])


def distinct_ell_count(strings: Sequence[BitString]) -> int:
    return ell_statistics(strings).distinct_count


def exhaustive_ell_check(n: int, t: int) -> tuple[bool, list[BitString] | None]:
    """Check the ``t - 1`` bound over every size-``t`` subset of the n-cube."""
    cube = [BitString(v, n) for v in range(1 << n)]
    for subset in combinations(cube, t):
        if distinct_ell_count(subset) > t - 1:
            return False, list(subset)
    return True, None


def random_ell_check(n: int, t_max: int, trials: int, rng: np.random.Generator) -> tuple[bool, list[BitString] | None]:
    for _ in range(trials):
        t = int(rng.integers(2, t_max + 1))
        values = rng.choice(1 << n, size=t, replace=False)
        subset = [BitString(int(v), n) for v in values]
        if distinct_ell_count(subset) > t - 1:
            return False, subset
    return True, None


# -- consistent BinaryValue targets ---------------------------------------------

def _bv_values(candidates: np.ndarray, point: int, n: int) -> np.ndarray:
    # identity permutation: the value is the agreement mask read as a number
    return ~(candidates ^ candidates.dtype.type(point)) & candidates.dtype.type((1 << n) - 1)


def consistent_targets_bv(points: Sequence[BitString], n: int, ranks: Sequence[int] | None = None) -> int:
    """Number of targets ``z'`` whose BinaryValue ranks the points exactly as observed.

    ``ranks`` is the rank vector the oracle reported; it may be omitted only
    for transcripts of at most one query.
    """
    if n > ENUMERATION_CAP:
        raise CapExceeded(f"n={n} exceeds the enumeration cap of {ENUMERATION_CAP}")
    if len(points) <= 1:
        return 1 << n
    if ranks is None or len(ranks) != len(points):
        raise ValueError("a rank vector matching the points is required")
    counts = consistent_prefix_counts(points, n, ranks)
    return counts[-1]


def consistent_prefix_counts(points: Sequence[BitString], n: int, ranks: Sequence[int]) -> list[int]:
    """Consistent-target counts after each prefix of the transcript.

    The rank vector of a prefix is the restriction of the full rank order,
    so one pass over the points refines the candidate set prefix by prefix.
    """
    if n > ENUMERATION_CAP:
        raise CapExceeded(f"n={n} exceeds the enumeration cap of {ENUMERATION_CAP}")
    dtype = np.uint32 if n <= 32 else np.uint64
    alive = np.arange(1 << n, dtype=dtype)
    seen: list[tuple[int, int]] = []  # (point, rank)
    counts = []
    for p, r in zip(points, ranks):
        v = _bv_values(alive, p.bits, n)
        keep = np.ones(len(alive), dtype=bool)
        for q, rq in seen:
            w = _bv_values(alive, q, n)
            if r > rq:
                keep &= v > w
            elif r < rq:
                keep &= v < w
            else:
                keep &= v == w
        alive = alive[keep]
        seen.append((p.bits, r))
        counts.append(len(alive))
    return counts


def prefix_bound_holds(counts: Sequence[int], n: int) -> tuple[bool, int | None]:
    """``counts[t-1] >= 2**(n-t+1)`` wherever the exponent is non-negative; else the failing t."""
    for t, c in enumerate(counts, start=1):
        if n - t + 1 >= 0 and c < (1 << (n - t + 1)):
            return False, t
    return True, None


# -- binomial lower bound --------------------------------------------------------

def window_beta(kappa: float) -> float:
    return math.exp(-4 * kappa * kappa) / (2 * math.sqrt(math.pi))


@dataclass
class BinomialCheck:
    passed: bool
    n: int
    worst_ell: int
    worst_ratio: float
    violating_ell: int | None = None


def check_binomial_window_bound(n: int, kappa: float = 2, beta: float | None = None) -> BinomialCheck:
    """``C(n, l) / 2**n >= beta / sqrt(n)`` for every ``l`` within ``kappa*sqrt(n)`` of ``ceil(n/2)``.

    Binomials are exact integers; the comparison squares both sides so the
    only inexact quantity is ``beta`` itself.
    """
    if beta is None:
        beta = window_beta(kappa)
    beta_q = Fraction(beta)
    centre = (n + 1) // 2
    radius = math.floor(kappa * math.sqrt(n))
    worst_ell, worst_ratio, bad = centre, math.inf, None
    for ell_ in range(max(0, centre - radius), min(n, centre + radius) + 1):
        p = Fraction(math.comb(n, ell_), 1 << n)
        ok = p * p * n >= beta_q * beta_q
        ratio = float(p) * math.sqrt(n) / beta
        if ratio < worst_ratio:
            worst_ell, worst_ratio = ell_, ratio
        if not ok and bad is None:
            bad = ell_
    return BinomialCheck(bad is None, n, worst_ell, worst_ratio, bad)
