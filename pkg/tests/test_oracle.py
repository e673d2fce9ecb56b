from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rankbb.bitstring import BitString, DimensionError, InstanceKind, ProblemInstance
from rankbb.oracle import AccessMode, BudgetExceeded, ModeError, Oracle, ranking_of

B = BitString.from_str


def test_ranking_examples():
    assert ranking_of([5, 2, 2, 9]) == (3, 1, 1, 4)
    assert ranking_of([7]) == (1,)
    assert ranking_of([1, 2, 3]) == (1, 2, 3)
    with pytest.raises(ValueError):
        ranking_of([])


def test_rank_vectors_grow_with_queries():
    o = Oracle(ProblemInstance.onemax(B("111")), AccessMode.RANKING)
    assert o.query_count == 0
    assert o.query(B("000")) == (1,)
    assert o.query(B("110")) == (1, 2)
    assert o.query(B("111")) == (1, 2, 3)
    assert o.is_optimum_found()


def test_repeated_point_shares_rank():
    o = Oracle(ProblemInstance.onemax(B("101")), AccessMode.RANKING)
    o.query(B("000"))
    assert o.query(B("000")) == (1, 1)


def test_value_mode():
    z = B("1011")
    o = Oracle(ProblemInstance.binary_value(z), AccessMode.VALUE)
    assert o.query(z) == 15 and o.optimum_hit and o.first_hit == 1
    with pytest.raises(ModeError):
        o.query_g(z)
    r = Oracle(ProblemInstance.onemax(z), AccessMode.RANKING)
    with pytest.raises(ModeError):
        r.query_value(z)


def test_g_construction_examples():
    o = Oracle(ProblemInstance.onemax(B("1111")), AccessMode.RANKING)
    assert o.query_g(B("0000")) == 0
    assert o.query_g(B("1100")) == 16
    assert o.query_g(B("1000")) == 8
    assert o.query_g(B("0001")) == 8  # tie
    assert o.query_g(B("1111")) == 32
    assert o.query_g(B("0000")) == 0
    assert o.ranks() == (1, 5, 3, 3, 6, 1)


def test_new_minimum_goes_down():
    o = Oracle(ProblemInstance.onemax(B("1111")), AccessMode.RANKING)
    o.query_g(B("1100"))
    assert o.query_g(B("0000")) == -16


def test_counters_and_errors():
    o = Oracle(ProblemInstance.onemax(B("111")), AccessMode.RANKING, budget=3)
    assert (o.is_optimum_found(), o.queries_used()) == (False, 0)
    for s in ("000", "001", "010"):
        o.query(B(s))
    assert (o.is_optimum_found(), o.queries_used()) == (False, 3)
    with pytest.raises(BudgetExceeded):
        o.query(B("111"))
    with pytest.raises(DimensionError):
        Oracle(ProblemInstance.onemax(B("111")), AccessMode.RANKING).query(B("11"))


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 16), st.integers(1, 50), st.sampled_from(list(InstanceKind)), st.integers(0, 2**32))
def test_g_is_order_isomorphic_to_f(n, length, kind, seed):
    rng = np.random.default_rng(seed)
    o = Oracle(ProblemInstance.random(kind, n, rng), AccessMode.RANKING)
    for _ in range(length):
        o.query_g(BitString.random(n, rng))
    fs = [r.f_value for r in o.history]
    gs = o.g_values()
    assert all(isinstance(g, Fraction) for g in gs)
    assert ranking_of(gs) == ranking_of(fs) == o.ranks()
    for a, c in zip(fs, gs):
        for b, d in zip(fs, gs):
            assert (a < b) == (c < d)
