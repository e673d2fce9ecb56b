from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rankbb import operators as ops
from rankbb.bitstring import BitString, InstanceKind, ProblemInstance, om_value
from rankbb.consistency import (
    DecodedBatch, DecodeFailure, InconsistentBatch, SampleBatch, draw_batch, feasible_set,
    identify_g_half, multiset_median, sample_size, uniform_from_feasible, window_radius,
)
from rankbb.oracle import AccessMode, Oracle

B = BitString.from_str


def test_constants():
    assert sample_size(16) == 52
    assert sample_size(20) == 61
    assert sample_size(24) == 68
    assert window_radius(16) == 8


def test_multiset_median_examples():
    assert multiset_median([0, 1, 1, 2]) == 1
    assert multiset_median([7]) == 7
    assert multiset_median([1, 2, 2, 3]) == 2
    assert multiset_median([Fraction(3, 2), Fraction(1, 2)]) == Fraction(1, 2)
    with pytest.raises(ValueError):
        multiset_median([])


@given(st.lists(st.integers(-50, 50), min_size=1, max_size=40), st.integers(0, 2**32))
def test_median_commutes_with_monotone_maps(values, seed):
    # any strictly increasing relabelling (here the oracle's g) keeps the median element
    g = {v: Fraction(3 * v + 1, 7) for v in values}
    assert multiset_median([g[v] for v in values]) == g[multiset_median(values)]


def _batch(z: str, points: list[str]):
    o = Oracle(ProblemInstance.onemax(B(z)), AccessMode.RANKING)
    pts = [B(p) for p in points]
    return o, SampleBatch(pts, [o.query_g(p) for p in pts])


def test_tie_with_complement_gives_median():
    # n=4, median holder has value 2 and so does its complement
    o, batch = _batch("1111", ["1000", "1100", "1110", "0011", "1010"])
    d = identify_g_half(batch, o, np.random.default_rng(0))
    assert d.probe_g == d.anchor_g == multiset_median(batch.g_values)
    assert d.decoded == {0: 1, 1: 2, 2: 3, 3: 2, 4: 2}


def test_even_chain_middle():
    # median holder has value 1, its complement 3, value 2 is present
    o, batch = _batch("1111", ["0000", "1000", "0100", "1100", "1110"])
    d = identify_g_half(batch, o, np.random.default_rng(0))
    g2 = batch.g_values[3]
    assert d.anchor_g == g2
    assert d.decoded == {0: 0, 1: 1, 2: 1, 3: 2, 4: 3}


def test_gap_is_reported():
    # values 1 and 3 only: the centre level was never sampled
    o, batch = _batch("1111", ["1000", "0100", "1110"])
    with pytest.raises(DecodeFailure):
        identify_g_half(batch, o, np.random.default_rng(0))


def test_two_position_toy():
    o, batch = _batch("11", ["00", "10", "11"])
    d = identify_g_half(batch, o, np.random.default_rng(0))
    assert d.anchor_g == batch.g_values[1]


def test_odd_adjacency_takes_upper():
    # n=3: median value 1, complement value 2 are adjacent; centre is 2
    o, batch = _batch("111", ["100", "010", "110"])
    d = identify_g_half(batch, o, np.random.default_rng(0))
    assert d.anchor_g == batch.g_values[2]
    assert d.decoded == {0: 1, 1: 1, 2: 2}


def test_decode_round_trip_when_flooded():
    # samples inside the unbroken run of levels around the centre decode exactly
    rng = np.random.default_rng(7)
    checked = 0
    for _ in range(60):
        n = int(rng.integers(8, 21))
        inst = ProblemInstance.random(InstanceKind.ONEMAX, n, rng)
        o = Oracle(inst, AccessMode.RANKING)
        batch = draw_batch(o, sample_size(n), rng)
        values = {inst(p) for p in batch.points}
        centre = (n + 1) // 2
        lo = hi = centre
        if centre not in values:
            continue
        while lo - 1 in values:
            lo -= 1
        while hi + 1 in values:
            hi += 1
        try:
            d = identify_g_half(batch, o, rng)
        except DecodeFailure:
            continue
        if not lo <= inst(d.probe) <= hi:
            continue
        for i, v in d.decoded.items():
            if lo <= inst(batch.points[i]) <= hi:
                assert inst(batch.points[i]) == v
                checked += 1
    assert checked > 500


def _manual(points, values, n, markers=None):
    pts = [B(p) for p in points]
    batch = SampleBatch(pts, [Fraction(v) for v in values], markers)
    size = batch.size
    d = DecodedBatch(Fraction(0), pts[0], Fraction(0), size,
                     {i: v for i, v in enumerate(values)},
                     {i: v - (size + 1) // 2 for i, v in enumerate(values)})
    return d, batch


def test_feasible_set_examples():
    d, b = _manual(["00"], [2], 2)
    assert feasible_set(d, b).strings() == [B("00")]
    d, b = _manual(["000"], [1], 3)
    assert sorted(map(str, feasible_set(d, b).strings())) == ["011", "101", "110"]
    d, b = _manual(["000", "111"], [1, 1], 3)
    with pytest.raises(InconsistentBatch):
        feasible_set(d, b)


def test_feasible_set_pins_target_from_unit_vectors():
    z = B("10110")
    pts = [BitString(1 << i, 5) for i in range(5)] + [BitString.zeros(5)]
    vals = [om_value(z, p) for p in pts]
    batch = SampleBatch(pts, [Fraction(v) for v in vals])
    d = DecodedBatch(Fraction(0), pts[0], Fraction(0), 5, dict(enumerate(vals)), {i: 0 for i in range(6)})
    assert feasible_set(d, batch).strings() == [z]


def test_block_mode_feasible_set_keeps_outside_fixed(rng):
    n = 10
    z = BitString.random(n, rng)
    x = BitString.random(n, rng)
    x1 = BitString(x.bits ^ 0b0000111100, n)
    pts = [ops.op_sample_block_uniform(x, x1, rng) for _ in range(12)]
    mask = 0b0000111100
    vals = [4 - ((p.bits ^ z.bits) & mask).bit_count() for p in pts]
    batch = SampleBatch(pts, [Fraction(v) for v in vals], markers=(x, x1))
    d = DecodedBatch(Fraction(0), pts[0], Fraction(0), 4, dict(enumerate(vals)), {i: 0 for i in range(12)})
    F = feasible_set(d, batch)
    want = (x.bits & ~mask) | (z.bits & mask)
    assert want in F.members
    assert all(m & ~mask == x.bits & ~mask for m in F.members)


def test_full_cube_feasible_set_is_usually_a_singleton():
    rng = np.random.default_rng(3)
    singletons = 0
    for _ in range(100):
        inst = ProblemInstance.random(InstanceKind.ONEMAX, 16, rng)
        o = Oracle(inst, AccessMode.RANKING)
        batch = draw_batch(o, sample_size(16), rng)
        try:
            F = feasible_set(identify_g_half(batch, o, rng), batch, grow=True)
        except (DecodeFailure, InconsistentBatch):
            continue
        singletons += len(F) == 1 and F.members[0] == inst.target.bits
    assert singletons >= 90


def test_uniform_from_feasible():
    rng = np.random.default_rng(1)
    one = [B("101")]
    assert uniform_from_feasible(one, 3, rng) == B("101")
    three = [B("100"), B("010"), B("001")]
    counts = {}
    for _ in range(3000):
        s = str(uniform_from_feasible(three, 3, rng))
        counts[s] = counts.get(s, 0) + 1
    assert set(counts) == {"100", "010", "001"}
    assert all(abs(c - 1000) < 120 for c in counts.values())
    seen = {str(uniform_from_feasible([], 3, rng)) for _ in range(400)}
    assert len(seen) == 8
