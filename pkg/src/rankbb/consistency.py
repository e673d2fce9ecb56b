"""Recovering OneMax values from ranking answers, and the feasible target set.

The n-ary and blockwise OneMax algorithms all share one routine: draw a
batch of uniform (or block-uniform) samples, locate the perturbed value of
the central OneMax level with a single complement probe, read off the exact
OneMax value of every sample near the centre by walking the sorted distinct
answers, and finally enumerate every string that agrees with those values.

Values are always relative to the block: with relevant positions ``R`` of
size ``k`` a decoded value is the number of positions of ``R`` on which the
sample agrees with the target.  In full-cube mode ``R`` is everything.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .bitstring import BitString, positions
from .operators import op_block_complement, op_complement, uniform_sample
from .oracle import Oracle

KAPPA = 2
ALPHA = 9
ENUMERATION_CAP = 24
_CHUNK = 1 << 21


class DecodeFailure(RuntimeError):
    """The batch did not cover the levels needed to read off OneMax values."""


class InconsistentBatch(RuntimeError):
    """No candidate target agrees with the decoded values."""


def sample_size(k: int, alpha: float = ALPHA) -> int:
    """``ceil(alpha * k / ln k)`` samples per batch."""
    if k < 2:
        raise ValueError("sample size needs k >= 2")
    return math.ceil(alpha * k / math.log(k))


def window_radius(k: int, kappa: float = KAPPA) -> int:
    return math.floor(kappa * math.sqrt(k))


def multiset_median(values: Sequence):
    """Smallest ``v`` in the multiset with at least half the entries ``<= v``."""
    if not values:
        raise ValueError("median of an empty multiset")
    ordered = sorted(values)
    return ordered[math.ceil(len(ordered) / 2) - 1]


@dataclass
class SampleBatch:
    """Sampled points and their answers.

    In block mode ``markers = (x, x1)``: the relevant positions are those where
    the two differ, and every point agrees with ``x`` elsewhere.
    """

    points: list[BitString]
    g_values: list[Fraction]
    markers: tuple[BitString, BitString] | None = None

    @property
    def n(self) -> int:
        return self.points[0].n

    @property
    def block_mask(self) -> int:
        if self.markers is None:
            return (1 << self.n) - 1
        x, x1 = self.markers
        return x.bits ^ x1.bits

    @property
    def size(self) -> int:
        return self.block_mask.bit_count()


@dataclass
class DecodedBatch:
    anchor_g: Fraction
    probe: BitString
    probe_g: Fraction
    size: int
    # sample index -> relative OneMax value, and its signed level off the centre
    decoded: dict[int, int] = field(default_factory=dict)
    levels: dict[int, int] = field(default_factory=dict)

    @property
    def in_window(self) -> list[int]:
        return sorted(self.decoded)

    @property
    def centre(self) -> int:
        return (self.size + 1) // 2


def draw_batch(oracle: Oracle, count: int, rng: np.random.Generator) -> SampleBatch:
    """Query ``count`` uniform samples."""
    points, gs = [], []
    for _ in range(count):
        x = uniform_sample(oracle.n, rng)
        points.append(x)
        gs.append(oracle.query_g(x))
    return SampleBatch(points, gs)


def identify_g_half(
    batch: SampleBatch,
    oracle: Oracle,
    rng: np.random.Generator,
    kappa: float = KAPPA,
) -> DecodedBatch:
    """Find the answer of the central level and decode the samples around it.

    One sample carrying the median answer is complemented on the relevant
    positions and queried.  Its value and the probe's value sum to the block
    size, so the centre is the middle entry of the chain of distinct answers
    lying between the two (inclusive).  An even block needs an odd chain and
    an odd block an even one; any other length means a level in between was
    never sampled.  For odd blocks a chain of two is the adjacency case and
    yields the upper of the two answers.
    """
    gs = batch.g_values
    m = multiset_median(gs)
    holders = [i for i, g in enumerate(gs) if g == m]
    i = holders[int(rng.integers(0, len(holders)))]
    x_i = batch.points[i]
    if batch.markers is None:
        probe = op_complement(x_i)
    else:
        probe = op_block_complement(x_i, *batch.markers)
    g_probe = oracle.query_g(probe)
    size = batch.size

    distinct = sorted(set(gs) | {g_probe})
    if g_probe == m:
        if size % 2:
            raise DecodeFailure("complement pair tied on an odd block")
        anchor = m
    else:
        lo, hi = min(m, g_probe), max(m, g_probe)
        chain = [g for g in distinct if lo <= g <= hi]
        if len(chain) % 2 == size % 2:
            raise DecodeFailure(f"chain of {len(chain)} answers has a gap")
        anchor = chain[len(chain) // 2]

    out = DecodedBatch(anchor, probe, g_probe, size)
    index = {g: r for r, g in enumerate(distinct)}
    a = index[anchor]
    radius = window_radius(size, kappa)
    for j, g in enumerate(gs):
        level = index[g] - a
        value = out.centre + level
        if abs(level) <= radius and 0 <= value <= size:
            out.decoded[j] = value
            out.levels[j] = level
    return out


# -- feasible set --------------------------------------------------------------

def _project(bits: int, rel: Sequence[int]) -> int:
    return sum(((bits >> p) & 1) << j for j, p in enumerate(rel))


def _candidate_chunks(k: int):
    """All ``2**k`` block assignments, as compact codes, in chunks."""
    if k > ENUMERATION_CAP:
        raise ValueError(f"feasible-set enumeration over {k} positions exceeds the cap of {ENUMERATION_CAP}")
    for lo in range(0, 1 << k, _CHUNK):
        yield np.arange(lo, min(lo + _CHUNK, 1 << k), dtype=np.uint32)


def _filter(codes: np.ndarray, constraints, k: int) -> np.ndarray:
    """Keep the codes that agree with each ``(projected point, value)`` in exactly ``value`` places."""
    for point, value in constraints:
        keep = np.bitwise_count(codes ^ np.uint32(point)) == k - value
        codes = codes[keep]
        if not len(codes):
            break
    return codes


@dataclass
class FeasibleSet:
    """Candidates that agree with ``base`` outside the block positions ``rel``.

    ``codes`` holds the block part of each candidate, bit ``j`` standing for
    position ``rel[j]``.
    """

    codes: np.ndarray
    n: int
    constraints_used: int
    base: int = 0
    rel: tuple[int, ...] = ()

    def __len__(self) -> int:
        return len(self.codes)

    def expand(self, code: int) -> int:
        out = self.base
        for j, p in enumerate(self.rel):
            out = (out & ~(1 << p)) | (((code >> j) & 1) << p)
        return out

    @property
    def members(self) -> list[int]:
        return [self.expand(int(c)) for c in self.codes]

    def strings(self) -> list[BitString]:
        return [BitString(v, self.n) for v in self.members]


def _constraints(decoded: DecodedBatch, batch: SampleBatch, indices, rel) -> list[tuple[int, int]]:
    return [(_project(batch.points[i].bits, rel), decoded.decoded[i]) for i in indices]


def _base(batch: SampleBatch, base: BitString | None) -> int:
    if base is not None:
        return base.bits
    if batch.markers is not None:
        return batch.markers[0].bits
    return 0


def feasible_set(
    decoded: DecodedBatch,
    batch: SampleBatch,
    base: BitString | None = None,
    grow: bool = False,
) -> FeasibleSet:
    """All candidates consistent with every decoded value.

    Candidates range over the whole cube, or in block mode over the
    ``2**k`` strings that agree with ``base`` outside the block.

    With ``grow=True`` the decode window is widened one level at a time,
    alternating above and below the centre, and each side stops at the
    first level that leaves no candidate.  A missing level shifts every
    decoded value beyond it, so the first inconsistent level marks where
    the decode went wrong; without it the result is the same as the full
    window.
    """
    n = batch.n
    rel = tuple(positions(batch.block_mask))
    k = len(rel)
    start = _base(batch, base)
    if not decoded.decoded:
        raise InconsistentBatch("no decoded samples")
    by_level: dict[int, list[int]] = {}
    for i, level in decoded.levels.items():
        by_level.setdefault(level, []).append(i)

    if grow:
        core = [i for lv in (0, 1, -1) for i in by_level.get(lv, [])]
    else:
        core = sorted(decoded.decoded, key=lambda i: abs(decoded.levels[i]))
    constraints = _constraints(decoded, batch, core, rel)
    members = np.concatenate([_filter(c, constraints, k) for c in _candidate_chunks(k)])
    used = len(core)
    if not len(members):
        raise InconsistentBatch("no candidate matches the decoded values")

    if grow:
        top = max(abs(lv) for lv in by_level) if by_level else 0
        open_sides = {1, -1}
        for r in range(2, top + 1):
            for side in (1, -1):
                if side not in open_sides:
                    continue
                idx = by_level.get(side * r, [])
                if not idx:
                    continue
                trial = _filter(members, _constraints(decoded, batch, idx, rel), k)
                if len(trial):
                    members = trial
                    used += len(idx)
                else:
                    open_sides.discard(side)
    return FeasibleSet(members, n, used, start, rel)


def uniform_from_feasible(
    feasible: FeasibleSet | Sequence[BitString], n: int, rng: np.random.Generator
) -> BitString:
    """Uniform member of the set, or a uniform string when the set is empty."""
    if isinstance(feasible, FeasibleSet):
        if len(feasible):
            code = int(feasible.codes[int(rng.integers(0, len(feasible)))])
            return BitString(feasible.expand(code), n)
        return uniform_sample(n, rng)
    items = list(feasible)
    if items:
        return items[int(rng.integers(0, len(items)))]
    return uniform_sample(n, rng)
