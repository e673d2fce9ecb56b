"""Black-box optimisers built only from the unbiased operator catalogue.

Every ranking-based algorithm talks to the oracle through ``query_g`` and
therefore only ever sees perturbed values ``g(f(x))``; the BinaryValue
solver is the one value-based algorithm.  Runs end at the first query of
the optimum (the oracle, not the algorithm, notices this), except for
:func:`run_bv_logn` which always plays its fixed schedule to the end.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import operators as ops
from .bitstring import BitString, InstanceKind, positions
from .consistency import (
    ALPHA,
    KAPPA,
    ENUMERATION_CAP,
    DecodeFailure,
    InconsistentBatch,
    SampleBatch,
    draw_batch,
    feasible_set,
    identify_g_half,
    sample_size,
    uniform_from_feasible,
)
from .oracle import AccessMode, ModeError, Oracle

DEFAULT_RESTART_CAP = 50


class ConfigError(ValueError):
    """The algorithm cannot run with this instance, mode or parameter."""


class RestartCapExceeded(RuntimeError):
    pass


class InvariantViolation(RuntimeError):
    pass


@dataclass
class Transcript:
    algorithm: str
    queries: list[tuple[BitString, object]] = field(default_factory=list)
    success: bool = False
    restarts: int = 0
    first_hit: int | None = None
    attempts: list[dict] = field(default_factory=list)
    operator_arity: Counter = field(default_factory=Counter)
    extra: dict = field(default_factory=dict)

    @property
    def total_queries(self) -> int:
        return len(self.queries)

    def used(self, name: str, arity: int) -> None:
        self.operator_arity[name] = max(self.operator_arity[name], arity)


class _Done(Exception):
    """Raised internally once the optimum has been queried."""


class _Channel:
    """Query front end that logs to the transcript and halts at the optimum."""

    def __init__(self, oracle: Oracle, transcript: Transcript, stop_on_hit: bool = True) -> None:
        self.oracle = oracle
        self.transcript = transcript
        self.stop_on_hit = stop_on_hit

    @property
    def n(self) -> int:
        return self.oracle.n

    @property
    def count(self) -> int:
        return self.oracle.query_count

    def _after(self, x: BitString, answer) -> None:
        self.transcript.queries.append((x, answer))
        if self.oracle.optimum_hit and self.stop_on_hit:
            raise _Done

    def query_g(self, x: BitString) -> Fraction:
        g = self.oracle.query_g(x)
        self._after(x, g)
        return g

    def query_value(self, x: BitString) -> int:
        v = self.oracle.query_value(x)
        self._after(x, v)
        return v


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def _require(oracle: Oracle, mode: AccessMode, kinds: set[InstanceKind], name: str) -> None:
    if oracle.mode is not mode:
        raise ModeError(f"{name} needs a {mode.value}-mode oracle")
    if oracle.instance.kind not in kinds:
        raise ConfigError(f"{name} does not handle {oracle.instance.kind.value} instances")


def _drive(name: str, oracle: Oracle, body: Callable[[_Channel, Transcript], None], stop_on_hit: bool = True) -> Transcript:
    transcript = Transcript(name)
    try:
        body(_Channel(oracle, transcript, stop_on_hit), transcript)
    except _Done:
        pass
    transcript.success = oracle.optimum_hit
    transcript.first_hit = oracle.first_hit
    return transcript


_RANKED_KINDS = {InstanceKind.ONEMAX, InstanceKind.BINARY_VALUE, InstanceKind.BINARY_VALUE_STAR}


# -- random local search ------------------------------------------------------

def run_rls(oracle: Oracle, rng=None) -> Transcript:
    """Flip one uniform bit, keep the offspring unless it ranks lower."""
    _require(oracle, AccessMode.RANKING, _RANKED_KINDS, "rls")
    rng = _as_rng(rng)

    def body(q: _Channel, t: Transcript) -> None:
        x = ops.uniform_sample(q.n, rng)
        gx = q.query_g(x)
        t.used("flip_one", 1)
        while True:
            y = ops.op_flip_one(x, rng)
            gy = q.query_g(y)
            if gy >= gx:
                x, gx = y, gy

    return _drive("rls", oracle, body)


# -- linear-time optimiser for monotone classes ------------------------------

def run_monotone_linear(oracle: Oracle, rng=None, watch: Callable | None = None) -> Transcript:
    """Keep two strings that agree only where they are already correct.

    ``watch(x, y)`` is called after every accepted update (tests use it to
    check the agreement invariant against the hidden target).
    """
    _require(oracle, AccessMode.RANKING, _RANKED_KINDS, "monotone_linear")
    rng = _as_rng(rng)

    def body(q: _Channel, t: Transcript) -> None:
        x = ops.uniform_sample(q.n, rng)
        gx = q.query_g(x)
        y = ops.op_complement(x)
        gy = q.query_g(y)
        t.used("complement", 1)
        t.used("flip_one_where_different", 2)
        t.used("dist1", 2)
        while True:
            w = ops.op_flip_one_where_different(x, y, rng)
            gw = q.query_g(w)
            if gw > gx:
                probe = ops.op_dist1(x, w)
                if q.query_g(probe) == gx:
                    x, gx = w, gw
                elif gw > gy:
                    y, gy = w, gw
                else:
                    continue
            elif gw > gy:
                probe = ops.op_dist1(y, w)
                if q.query_g(probe) == gy:
                    y, gy = w, gw
                else:
                    continue
            else:
                continue
            if watch is not None:
                watch(x, y)

    return _drive("monotone_linear", oracle, body)


# -- n-ary OneMax --------------------------------------------------------------

def _check_cap(size: int) -> None:
    if size > ENUMERATION_CAP:
        raise ConfigError(f"feasible-set enumeration over {size} positions exceeds the cap of {ENUMERATION_CAP}")


def run_onemax_nary(
    oracle: Oracle,
    rng=None,
    alpha: float = ALPHA,
    kappa: float = KAPPA,
    restart_cap: int = DEFAULT_RESTART_CAP,
    grow: bool = True,
) -> Transcript:
    """Sample, decode, enumerate the consistent targets, query one of them.

    Every attempt costs exactly ``s + 2`` queries: ``s`` uniform samples,
    one complement probe and one candidate.  When decoding fails the
    candidate is a uniform string, as the feasible-set operator prescribes
    for an empty set.  Attempts repeat until the optimum is hit.
    """
    _require(oracle, AccessMode.RANKING, {InstanceKind.ONEMAX}, "onemax_nary")
    n = oracle.n
    _check_cap(n)
    if n < 2:
        raise ConfigError("onemax_nary needs n >= 2")
    rng = _as_rng(rng)
    s = sample_size(n, alpha)

    def body(q: _Channel, t: Transcript) -> None:
        t.extra["s"] = s
        t.used("uniform", 0)
        t.used("complement", 1)
        for attempt in range(restart_cap + 1):
            if attempt:
                t.restarts += 1
            start = q.count
            record = {"queries": 0, "outcome": "miss"}
            t.attempts.append(record)
            try:
                batch = draw_batch(q, s, rng)
                try:
                    decoded = identify_g_half(batch, q, rng, kappa)
                    feasible = feasible_set(decoded, batch, grow=grow)
                    record["feasible_size"] = len(feasible)
                    t.used("feasible_uniform", feasible.constraints_used)
                except DecodeFailure:
                    record["outcome"] = "decode_failure"
                    feasible = None
                except InconsistentBatch:
                    record["outcome"] = "inconsistent"
                    feasible = None
                if feasible is None:
                    candidate = ops.uniform_sample(n, rng)
                else:
                    candidate = uniform_from_feasible(feasible, n, rng)
                q.query_g(candidate)
            except _Done:
                record["queries"] = q.count - start
                record["outcome"] = "hit"
                raise
            finally:
                record["queries"] = q.count - start
        raise RestartCapExceeded(f"no success after {restart_cap} restarts")

    return _drive("onemax_nary", oracle, body)


# -- blockwise OneMax ----------------------------------------------------------

def _block_attempt(q: _Channel, t: Transcript, x: BitString, y: BitString, k: int, s: int,
                   rng: np.random.Generator, kappa: float, grow: bool):
    """Mark a block, flood it and decode it.  Returns ``(x1, candidate)``.

    Raises ``DecodeFailure`` / ``InconsistentBatch`` when the block must be
    redone.
    """
    x1 = ops.op_flip_k_where_different(x, y, k, rng)
    points, gs = [x1], [q.query_g(x1)]
    for _ in range(s - 1):
        p = ops.op_sample_block_uniform(x, x1, rng)
        points.append(p)
        gs.append(q.query_g(p))
    batch = SampleBatch(points, gs, markers=(x, x1))
    decoded = identify_g_half(batch, q, rng, kappa)
    feasible = feasible_set(decoded, batch, grow=grow)
    t.used("feasible_uniform", feasible.constraints_used + 2)
    return x1, uniform_from_feasible(feasible, q.n, rng)


def _block_ops(t: Transcript) -> None:
    t.used("uniform", 0)
    t.used("complement", 1)
    t.used("flip_k_where_different", 2)
    t.used("sample_block_uniform", 2)
    t.used("block_complement", 3)
    t.used("update4", 4)


def run_onemax_blockwise(
    oracle: Oracle,
    k: int,
    rng=None,
    alpha: float = ALPHA,
    kappa: float = KAPPA,
    restart_cap: int = DEFAULT_RESTART_CAP,
    grow: bool = True,
) -> Transcript:
    """Optimise ``ceil(n/k)`` blocks of ``k`` positions one after another.

    The pair ``(x, y)`` agrees exactly on the positions already settled.
    Each phase costs ``s + 3`` queries: the block marker, ``s - 1``
    block-uniform samples, the block-complement probe, the candidate, and
    the updated ``y``.  A phase whose decode fails is redone; if the last
    phase ends without the optimum (a wrong block went unnoticed) the whole
    run starts over.
    """
    _require(oracle, AccessMode.RANKING, {InstanceKind.ONEMAX}, "onemax_blockwise")
    n = oracle.n
    if not 4 <= k <= n:
        raise ConfigError(f"onemax_blockwise needs 4 <= k <= n, got k={k}, n={n}")
    _check_cap(k)
    rng = _as_rng(rng)
    s = sample_size(k, alpha)

    def body(q: _Channel, t: Transcript) -> None:
        t.extra.update(s=s, k=k, block_costs=[], block_restarts=0)
        _block_ops(t)
        budget_left = restart_cap
        while True:
            x = ops.uniform_sample(n, rng)
            q.query_g(x)
            y = ops.op_complement(x)
            q.query_g(y)
            while x != y:
                while True:
                    start = q.count
                    try:
                        x1, zj = _block_attempt(q, t, x, y, k, s, rng, kappa, grow)
                    except (DecodeFailure, InconsistentBatch):
                        t.extra["block_costs"].append(q.count - start)
                        t.extra["block_restarts"] += 1
                        t.restarts += 1
                        budget_left -= 1
                        if budget_left < 0:
                            raise RestartCapExceeded(f"no success after {restart_cap} restarts")
                        continue
                    try:
                        q.query_g(zj)
                        y = ops.op_update4(y, x, x1, zj)
                        q.query_g(y)
                    finally:
                        t.extra["block_costs"].append(q.count - start)
                    x = zj
                    break
            t.restarts += 1
            budget_left -= 1
            if budget_left < 0:
                raise RestartCapExceeded(f"no success after {restart_cap} restarts")

    return _drive("onemax_blockwise", oracle, body)


# -- small-k OneMax with a reference block -------------------------------------

def run_onemax_smallk(
    oracle: Oracle,
    k: int,
    rng=None,
    alpha: float = ALPHA,
    kappa: float = KAPPA,
    restart_cap: int = DEFAULT_RESTART_CAP,
    grow: bool = True,
) -> Transcript:
    """Blockwise optimisation whose blocks are verified against a reference block.

    Phase one settles ``k`` positions exactly in ``k + 2`` queries.  Phase two
    starts from a pair that is deliberately wrong on those positions; a
    block candidate is accepted only if flipping it together with the
    reference block leaves its rank unchanged, which happens exactly when
    the candidate is right on the whole block.  Positions left over after
    the last full block (fewer than ``k``) are settled one at a time.
    """
    _require(oracle, AccessMode.RANKING, {InstanceKind.ONEMAX}, "onemax_smallk")
    n = oracle.n
    if k < 4 or 2 * k > n:
        raise ConfigError(f"onemax_smallk needs 4 <= k <= n/2, got k={k}, n={n}")
    _check_cap(k)
    rng = _as_rng(rng)
    s = sample_size(k, alpha)

    def body(q: _Channel, t: Transcript) -> None:
        t.extra.update(s=s, k=k, block_costs=[], block_restarts=0, phase1_queries=None)
        _block_ops(t)
        t.used("update2", 3)
        t.used("initialize1", 2)
        t.used("initialize2", 2)
        t.used("test5", 5)
        t.used("finish", 3)

        # phase one: reference pair agreeing (correctly) on exactly k positions
        xp = ops.uniform_sample(n, rng)
        gxp = q.query_g(xp)
        yp = ops.op_complement(xp)
        q.query_g(yp)
        for _ in range(k):
            w = ops.op_flip_k_where_different(xp, yp, 1, rng)
            gw = q.query_g(w)
            if gw > gxp:
                xp, gxp = w, gw
            else:
                yp = ops.op_update2(yp, xp, w)
        t.extra["phase1_queries"] = q.count

        # phase two
        x = ops.op_initialize1(xp, yp)
        gx = q.query_g(x)
        y = ops.op_initialize2(xp, yp)
        q.query_g(y)
        failures = 0
        while (x.bits ^ y.bits).bit_count() >= k:
            while True:
                start = q.count
                try:
                    x1, zj = _block_attempt(q, t, x, y, k, s, rng, kappa, grow)
                    g_zj = q.query_g(zj)
                    g_test = q.query_g(ops.op_test5(zj, xp, yp, x, x1))
                    ok = g_zj == g_test
                except (DecodeFailure, InconsistentBatch):
                    ok = False
                t.extra["block_costs"].append(q.count - start)
                if ok:
                    break
                t.extra["block_restarts"] += 1
                t.restarts += 1
                failures += 1
                if failures > restart_cap * max(1, n // k):
                    raise RestartCapExceeded("block verification keeps failing")
            y = ops.op_update4(y, x, x1, zj)
            q.query_g(y)
            x, gx = zj, g_zj

        # leftover positions, one at a time
        for _ in range((x.bits ^ y.bits).bit_count()):
            w = ops.op_flip_k_where_different(x, y, 1, rng)
            gw = q.query_g(w)
            if gw > gx:
                x, gx = w, gw
            else:
                y = ops.op_update2(y, x, w)
        q.query_g(ops.op_finish(x, xp, yp))
        raise InvariantViolation("finish() did not produce the target")

    return _drive("onemax_smallk", oracle, body)


# -- BinaryValue in logarithmically many queries --------------------------------

def bv_schedule_length(n: int) -> int:
    """``ceil(log2 n) + 2``."""
    return (n - 1).bit_length() + 2


def run_bv_logn(oracle: Oracle, rng=None) -> Transcript:
    """Recover the hidden permutation by repeated halving, then query the target.

    Each exact BinaryValue answer tells, for every weight ``2**(i-1)``,
    whether the queried string is right at position ``sigma(i)``.  Comparing
    consecutive answers bit by bit therefore places ``sigma(i)`` in a cell of
    the halving tree; after ``ceil(log2 n)`` halvings every cell holds at most
    one position, which pins ``sigma`` and then ``z``.
    """
    _require(oracle, AccessMode.VALUE, {InstanceKind.BINARY_VALUE, InstanceKind.BINARY_VALUE_STAR}, "bv_logn")
    rng = _as_rng(rng)
    n = oracle.n
    t_len = bv_schedule_length(n) - 1

    def body(q: _Channel, t: Transcript) -> None:
        xs = [ops.uniform_sample(n, rng)]
        vals = [q.query_value(xs[0])]
        t.used("uniform", 0)
        while len(xs) < t_len:
            t.used("flip_half", len(xs))
            xs.append(ops.op_flip_half(xs, rng))
            vals.append(q.query_value(xs[-1]))

        cell_of: dict[tuple[int, ...], int] = {}
        for p in range(n):
            sig = tuple(((a.bits ^ b.bits) >> p) & 1 for a, b in zip(xs, xs[1:]))
            if sig in cell_of:
                raise InvariantViolation(f"cell {sig} holds more than one position")
            cell_of[sig] = p
        sigma = []
        for i in range(n):
            sig = tuple(((a ^ b) >> i) & 1 for a, b in zip(vals, vals[1:]))
            if sig not in cell_of:
                raise InvariantViolation(f"no position matches weight index {i}")
            sigma.append(cell_of[sig])
        if sorted(sigma) != list(range(n)):
            raise InvariantViolation("decoded permutation is not a bijection")
        z = xs[0].bits
        for i, p in enumerate(sigma):
            if not (vals[0] >> i) & 1:
                z ^= 1 << p
        t.extra["sigma"] = tuple(sigma)
        t.used("consistent", len(xs))
        q.query_value(BitString(z, n))

    return _drive("bv_logn", oracle, body, stop_on_hit=False)


# -- registry ------------------------------------------------------------------

@dataclass(frozen=True)
class AlgorithmSpec:
    id: str
    required_mode: AccessMode
    arity: str
    kinds: frozenset
    runner: Callable
    needs_k: bool = False
    bound: str = ""

    def max_arity(self, n: int, k: int | None = None) -> int:
        if self.id == "rls":
            return 1
        if self.id == "monotone_linear":
            return 2
        if self.id == "onemax_nary":
            return sample_size(n)
        if self.id in ("onemax_blockwise", "onemax_smallk"):
            return max(5, sample_size(k) + 2)
        return (n - 1).bit_length() + 1

    def check(self, kind: InstanceKind, n: int, k: int | None) -> None:
        if kind not in self.kinds:
            raise ConfigError(f"{self.id} does not handle {kind.value} instances")
        if n < 1:
            raise ConfigError("n must be positive")
        if self.id == "onemax_nary":
            if n < 2 or n > ENUMERATION_CAP:
                raise ConfigError(f"onemax_nary needs 2 <= n <= {ENUMERATION_CAP}")
        if self.needs_k:
            if k is None:
                raise ConfigError(f"{self.id} needs --k")
            if self.id == "onemax_blockwise" and not 4 <= k <= min(n, ENUMERATION_CAP):
                raise ConfigError(f"onemax_blockwise needs 4 <= k <= min(n, {ENUMERATION_CAP})")
            if self.id == "onemax_smallk" and not (1 <= k and 2 * k <= n and k <= ENUMERATION_CAP):
                raise ConfigError(f"onemax_smallk needs k <= n/2 and k <= {ENUMERATION_CAP}")


_ALL = frozenset(_RANKED_KINDS)
_OM = frozenset({InstanceKind.ONEMAX})
_BV = frozenset({InstanceKind.BINARY_VALUE, InstanceKind.BINARY_VALUE_STAR})

ALGORITHMS: dict[str, AlgorithmSpec] = {
    a.id: a
    for a in (
        AlgorithmSpec("rls", AccessMode.RANKING, "1", _ALL, run_rls, bound="n_ln_n"),
        AlgorithmSpec("monotone_linear", AccessMode.RANKING, "2", _ALL, run_monotone_linear, bound="4n-5"),
        AlgorithmSpec("onemax_nary", AccessMode.RANKING, "s", _OM, run_onemax_nary, bound="n/ln_n"),
        AlgorithmSpec("onemax_blockwise", AccessMode.RANKING, "k", _OM, run_onemax_blockwise, True, bound="n/ln_k"),
        AlgorithmSpec("onemax_smallk", AccessMode.RANKING, "k", _OM, run_onemax_smallk, True, bound="n/ln_k"),
        AlgorithmSpec("bv_logn", AccessMode.VALUE, "ceil(log2 n)+1", _BV, run_bv_logn, bound="log2_n+2"),
    )
}


def theoretical_bound(algorithm: str, n: int, k: int | None = None) -> float:
    """The reference formula each algorithm's mean query count is compared to."""
    if algorithm == "rls":
        return n * math.log(n) if n > 1 else 1.0
    if algorithm == "monotone_linear":
        return 4 * n - 5
    if algorithm == "bv_logn":
        return bv_schedule_length(n)
    if algorithm == "onemax_nary":
        return n / math.log(n)
    return n / math.log(k)


def run_algorithm(algorithm: str, oracle: Oracle, rng=None, k: int | None = None,
                  restart_cap: int = DEFAULT_RESTART_CAP) -> Transcript:
    """Dispatch by id.  ``onemax_smallk`` with ``k <= 3`` runs the linear optimiser."""
    spec = ALGORITHMS[algorithm]
    if algorithm == "onemax_smallk" and k is not None and k <= 3:
        return run_monotone_linear(oracle, rng)
    if algorithm in ("onemax_blockwise", "onemax_smallk"):
        return spec.runner(oracle, k, rng, restart_cap=restart_cap)
    if algorithm == "onemax_nary":
        return spec.runner(oracle, rng, restart_cap=restart_cap)
    return spec.runner(oracle, rng)
