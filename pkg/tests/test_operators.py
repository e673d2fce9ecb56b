from collections import Counter
from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from rankbb import operators as ops
from rankbb.bitstring import BitString, hamming, om_value

B = BitString.from_str


def empirical(fn, draws, rng):
    return Counter(str(fn(rng)) for _ in range(draws))


def test_uniform_density():
    x = B("0110")
    assert ops.UNIFORM.density(x) == Fraction(1, 16)


def test_complement_examples():
    assert ops.op_complement(B("0000")) == B("1111")
    x = B("10110")
    assert ops.op_complement(ops.op_complement(x)) == x
    assert ops.COMPLEMENT.density(B("01001"), x) == 1
    assert ops.COMPLEMENT.density(x, x) == 0


def test_flip_one_where_different(rng):
    x, y = B("00"), B("11")
    assert ops.FLIP_ONE_WHERE_DIFFERENT.density(B("10"), x, y) == Fraction(1, 2)
    assert ops.FLIP_ONE_WHERE_DIFFERENT.density(B("01"), x, y) == Fraction(1, 2)
    counts = empirical(lambda r: ops.op_flip_one_where_different(x, y, r), 2000, rng)
    assert set(counts) == {"10", "01"}
    assert abs(counts["10"] - 1000) < 150
    assert ops.FLIP_ONE_WHERE_DIFFERENT.density(B("1"), B("0"), B("1")) == Fraction(1, 2)
    with pytest.raises(ValueError):
        ops.op_flip_one_where_different(x, x, rng)
    a, b = B("101100"), B("011010")
    for _ in range(50):
        w = ops.op_flip_one_where_different(a, b, rng)
        assert 1 in (hamming(w, a), hamming(w, b))


def test_dist1_examples():
    assert ops.op_dist1(B("000"), B("001")) == B("000")
    assert ops.op_dist1(B("000"), B("011")) == B("011")
    assert ops.op_dist1(B("101"), B("101")) == B("101")


def test_flip_k_where_different(rng):
    assert ops.op_flip_k_where_different(B("0000"), B("1111"), 4, rng) == B("1111")
    assert ops.op_flip_k_where_different(B("00"), B("01"), 5, rng) == B("01")
    op = ops.flip_k_where_different(2)
    for s in ("1100", "1010", "1001", "0110", "0101", "0011"):
        assert op.density(B(s), B("0000"), B("1111")) == Fraction(1, 6)
    assert op.density(B("1000"), B("0000"), B("1111")) == 0
    with pytest.raises(ValueError):
        ops.op_flip_k_where_different(B("01"), B("01"), 1, rng)


def test_block_uniform(rng):
    x = B("0101")
    assert ops.op_sample_block_uniform(x, x, rng) == x
    assert ops.BLOCK_UNIFORM.density(x, x, x) == 1
    anchor = B("0110")
    for _ in range(30):
        w = ops.op_sample_block_uniform(x, anchor, rng)
        assert w.bits & ~(x.bits ^ anchor.bits) == x.bits & ~(x.bits ^ anchor.bits)


def test_block_complement_examples():
    a = B("1010")
    assert ops.op_block_complement(a, B("0110"), B("0110")) == a
    assert ops.op_block_complement(a, B("0110"), B("1001")) == ops.op_complement(a)
    assert ops.op_block_complement(a, B("1100"), B("1111")) == B("1001")


def test_update4_examples():
    y, zj = B("0000"), B("1111")
    assert ops.op_update4(y, B("0110"), B("0110"), zj) == y
    assert ops.op_update4(y, B("0110"), B("1001"), zj) == zj
    assert ops.op_update4(B("0000"), B("0011"), B("0000"), B("1111")) == B("0011")


def test_update2_examples():
    assert ops.op_update2(B("0110"), B("1010"), B("1010")) == B("0110")
    assert ops.op_update2(B("00"), B("01"), B("00")) == B("01")
    assert ops.op_update2(B("0110"), B("1010"), B("0101")) == B("1010")


def test_initialize_examples():
    xp = B("1011")
    assert ops.op_initialize1(xp, xp) == ops.op_complement(xp)
    assert ops.op_initialize2(xp, xp) == ops.op_complement(xp)
    yp = ops.op_complement(xp)
    assert ops.op_initialize1(xp, yp) == xp and ops.op_initialize2(xp, yp) == yp
    assert ops.op_initialize1(B("10"), B("11")) == B("00")
    assert ops.op_initialize2(B("10"), B("11")) == B("01")


def test_test5_examples():
    zj, x = B("0110"), B("1100")
    assert ops.op_test5(zj, B("1010"), B("0101"), x, x) == zj
    assert ops.op_test5(zj, B("1010"), B("1010"), x, x) == ops.op_complement(zj)
    # agreement set {1}, marker difference at {3}
    assert ops.op_test5(B("0000"), B("1000"), B("1111"), B("0000"), B("0010")) == B("1010")


def test_finish_examples():
    x = B("1111")
    assert ops.op_finish(x, B("1010"), B("0101")) == x
    assert ops.op_finish(x, B("1010"), B("1010")) == B("0000")
    assert ops.op_finish(x, B("0000"), B("1010")) == B("1010")


def test_flip_half_examples(rng):
    y1 = B("0000")
    op1 = ops.flip_half(1)
    for s in ("1100", "1010", "1001", "0110", "0101", "0011"):
        assert op1.density(B(s), y1) == Fraction(1, 6)
    hist = [y1]
    for _ in range(2):
        hist.append(ops.op_flip_half(hist, rng))
    assert all(c.bit_count() == 1 for c in ops.half_cells(4, [h.bits for h in hist]))
    assert ops.op_flip_half(hist, rng) == hist[-1]


def test_test5_separates_correct_blocks():
    # n=8: reference block {0..3}, work block {4..7}, every target and block candidate
    n, k = 8, 4
    ref, work = 0x0F, 0xF0
    x_rest = 0b10110000
    for z in range(1 << n):
        xp = BitString(z & ref | 0b01010000, n)
        yp = BitString(xp.bits ^ work, n)  # agrees with xp exactly on the reference block
        x = ops.op_initialize1(xp, yp)
        x = BitString((x.bits & ref) | x_rest, n)
        x1 = BitString(x.bits ^ work, n)
        for cand in range(16):
            zj = BitString((x.bits & ~work) | (cand << 4), n)
            probe = ops.op_test5(zj, xp, yp, x, x1)
            target = BitString(z, n)
            same = om_value(target, probe) == om_value(target, zj)
            assert same == ((zj.bits ^ z) & work == 0)


def test_feasible_uniform_example():
    # agreeing with 000 in exactly one place means weight two
    members = ops.feasible_members(3, [0b000], [1])
    assert sorted(str(BitString(v, 3)) for v in members) == ["011", "101", "110"]
    op = ops.feasible_uniform([1])
    for v in members:
        assert op.density(BitString(v, 3), B("000")) == Fraction(1, 3)
    # weight one strings agree in two places
    assert sorted(ops.feasible_members(3, [0b000], [2])) == [0b001, 0b010, 0b100]
    assert ops.feasible_uniform([3]).density(B("000"), B("000")) == 1


def test_feasible_uniform_empty_is_uniform():
    op = ops.feasible_uniform([5])  # value above n: no member
    for v in range(8):
        assert op.density(BitString(v, 3), B("000")) == Fraction(1, 8)


def test_densities_match_sampling(rng):
    x, y = B("0011"), B("0110")
    op = ops.flip_k_where_different(1)
    counts = empirical(lambda r: op.sample(r, x, y), 3000, rng)
    for s, c in counts.items():
        p = float(op.density(B(s), x, y))
        assert abs(c / 3000 - p) < 0.05


@pytest.mark.parametrize("n", [2, 3])
def test_catalogue_is_unbiased(n):
    for op in ops.catalogue(n):
        res = ops.check_unbiased(op, n)
        assert res, (op.name, res.counterexample)


def test_biased_control_fails_with_counterexample():
    res = ops.check_unbiased(ops.ALL_ZEROS, 3)
    assert not res
    assert res.counterexample["condition"] == "xor-invariance"


def test_statistical_mode_on_larger_n(rng):
    assert ops.check_unbiased(ops.flip_k_where_different(3), 12, rng=rng, trials=200)
    assert ops.check_unbiased(ops.BLOCK_UNIFORM, 12, rng=rng, trials=200)


def test_kernel_and_density_checks_agree():
    # the same deterministic operator through both exhaustive paths
    op = ops.UPDATE2
    dens = ops.VariationOperator("update2-by-density", 3, op.sampler, op.density_fn)
    assert ops.check_unbiased(op, 2) and ops.check_unbiased(dens, 2)
