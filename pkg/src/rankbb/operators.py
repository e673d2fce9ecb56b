"""Unbiased variation operators with exact densities, and an invariance checker.

Every operator works on raw integer bit masks internally.  Deterministic
operators are written as a bitwise ``kernel`` that accepts either Python
ints or numpy ``uint64`` arrays, which lets :func:`check_unbiased` test all
input tuples at once.  Random operators carry an exact ``density`` in
``Fraction`` form.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Callable, Sequence

import numpy as np

from .bitstring import BitString, permute_bits, positions


def _full(n: int) -> int:
    return (1 << n) - 1


# -- deterministic kernels: (mask, *inputs) -> output -------------------------

def _k_complement(m, x):
    return x ^ m


def _k_dist1(m, x, w):
    if isinstance(x, np.ndarray):
        return np.where(np.bitwise_count(x ^ w) == 1, x, w)
    return x if (x ^ w).bit_count() == 1 else w


def _k_block_complement(m, a, b, c):
    return a ^ (b ^ c)


def _k_update4(m, y, x, x1, zj):
    d = x ^ x1
    return (y & ~d & m) | (zj & d)


def _k_update2(m, yp, xp, w):
    d = xp ^ w
    return (yp & ~d & m) | (xp & d)


def _k_initialize1(m, xp, yp):
    return xp ^ (~(xp ^ yp) & m)


def _k_initialize2(m, xp, yp):
    agree = ~(xp ^ yp) & m
    return (~xp & agree) | (yp & ~agree & m)


def _k_test5(m, zj, xp, yp, x, x1):
    return zj ^ ((~(xp ^ yp) & m) | (x ^ x1))


def _k_finish(m, x, xp, yp):
    return x ^ (~(xp ^ yp) & m)


def _k_all_zeros(m, x):
    return x & 0


@dataclass(frozen=True)
class VariationOperator:
    """A ``k``-ary sampler paired with its exact distribution.

    ``sampler(n, rng, *inputs)`` and ``density_fn(n, candidate, *inputs)`` act
    on integer masks; ``defined(n, *inputs)`` says where the operator is
    defined at all.
    """

    name: str
    arity: int
    sampler: Callable
    density_fn: Callable
    kernel: Callable | None = None
    defined: Callable = field(default=lambda n, *inputs: True)

    @property
    def deterministic(self) -> bool:
        return self.kernel is not None

    def sample(self, rng: np.random.Generator | None, *inputs: BitString, n: int | None = None) -> BitString:
        if len(inputs) != self.arity:
            raise TypeError(f"{self.name} takes {self.arity} inputs, got {len(inputs)}")
        if n is None:
            if not inputs:
                raise TypeError(f"{self.name} needs an explicit dimension")
            n = inputs[0].n
        raw = [x.bits for x in inputs]
        for x in inputs:
            if x.n != n:
                raise ValueError("dimension mismatch")
        if not self.defined(n, *raw):
            raise ValueError(f"{self.name} is undefined on these inputs")
        return BitString(int(self.sampler(n, rng, *raw)), n)

    def density(self, candidate: BitString, *inputs: BitString) -> Fraction:
        return self.density_fn(candidate.n, candidate.bits, *(x.bits for x in inputs))


def _deterministic(name: str, arity: int, kernel: Callable) -> VariationOperator:
    def sampler(n, rng, *raw):
        return kernel(_full(n), *raw)

    def density(n, c, *raw):
        return Fraction(int(c == kernel(_full(n), *raw)))

    return VariationOperator(name, arity, sampler, density, kernel=kernel)


# -- random samplers and densities on raw masks --------------------------------

def _choose(rng: np.random.Generator, items: Sequence[int], k: int) -> list[int]:
    return [items[i] for i in rng.choice(len(items), size=k, replace=False)]


def _random_bits(rng: np.random.Generator, free: int) -> int:
    idx = positions(free)
    coins = rng.integers(0, 2, size=len(idx))
    return sum(1 << i for i, c in zip(idx, coins) if c)


def _uniform_sample(n, rng):
    return _random_bits(rng, _full(n))


def _uniform_density(n, c):
    return Fraction(1, 1 << n)


def _flip_one_sample(n, rng, x):
    return x ^ (1 << int(rng.integers(0, n)))


def _flip_one_density(n, c, x):
    return Fraction(int((c ^ x).bit_count() == 1), n)


def _fowd_sample(n, rng, x, y):
    j = _choose(rng, positions(x ^ y), 1)[0]
    base = x if rng.integers(0, 2) == 0 else y
    return base ^ (1 << j)


def _fowd_density(n, c, x, y):
    diff = positions(x ^ y)
    hits = sum((c == x ^ (1 << j)) + (c == y ^ (1 << j)) for j in diff)
    return Fraction(hits, 2 * len(diff))


def _distinct(n, x, y):
    return x != y


def _flip_k_sampler(k: int):
    def sample(n, rng, x, y):
        diff = positions(x ^ y)
        out = x
        for j in _choose(rng, diff, min(k, len(diff))):
            out ^= 1 << j
        return out

    return sample


def _flip_k_density(k: int):
    def density(n, c, x, y):
        diff = x ^ y
        d = diff.bit_count()
        kk = min(k, d)
        moved = c ^ x
        if moved & ~diff or moved.bit_count() != kk:
            return Fraction(0)
        return Fraction(1, comb(d, kk))

    return density


def _block_uniform_sample(n, rng, x, anchor):
    free = x ^ anchor
    return (x & ~free) | _random_bits(rng, free)


def _block_uniform_density(n, c, x, anchor):
    free = x ^ anchor
    if (c ^ x) & ~free:
        return Fraction(0)
    return Fraction(1, 1 << free.bit_count())


def half_cells(n: int, history: Sequence[int]) -> list[int]:
    """Cells of the halving tree for ``history`` as position masks.

    Positions are grouped by their pattern of agree/disagree between every
    pair of consecutive history entries; with a single entry there is one
    cell holding all positions.
    """
    cells = [_full(n)]
    for prev, cur in zip(history, history[1:]):
        d = prev ^ cur
        split = []
        for cell in cells:
            for part in (cell & d, cell & ~d):
                if part:
                    split.append(part)
        cells = split
    return cells


def _flip_half_sample(n, rng, *history):
    last = history[-1]
    out = last
    for cell in half_cells(n, history):
        idx = positions(cell)
        for j in _choose(rng, idx, len(idx) // 2):
            out ^= 1 << j
    return out


def _flip_half_density(n, c, *history):
    moved = c ^ history[-1]
    total = 1
    for cell in half_cells(n, history):
        size = cell.bit_count()
        if (moved & cell).bit_count() != size // 2:
            return Fraction(0)
        total *= comb(size, size // 2)
    return Fraction(1, total)


def _om_raw(n, z, x):
    return n - (z ^ x).bit_count()


def feasible_members(n: int, samples: Sequence[int], values: Sequence[int]) -> list[int]:
    """All ``y`` with ``OM_y(samples[i]) == values[i]`` for every ``i`` (brute force)."""
    return [
        y for y in range(1 << n)
        if all(_om_raw(n, y, w) == v for w, v in zip(samples, values))
    ]


def _feasible_sampler(values: Sequence[int]):
    def sample(n, rng, *samples):
        members = feasible_members(n, samples, values)
        if not members:
            return _uniform_sample(n, rng)
        return members[int(rng.integers(0, len(members)))]

    return sample


def _feasible_density(values: Sequence[int]):
    def density(n, c, *samples):
        members = feasible_members(n, samples, values)
        if not members:
            return Fraction(1, 1 << n)
        return Fraction(int(c in members), len(members))

    return density


# -- catalogue -----------------------------------------------------------------

UNIFORM = VariationOperator("uniform", 0, _uniform_sample, _uniform_density)
COMPLEMENT = _deterministic("complement", 1, _k_complement)
FLIP_ONE = VariationOperator("flip_one", 1, _flip_one_sample, _flip_one_density)
FLIP_ONE_WHERE_DIFFERENT = VariationOperator(
    "flip_one_where_different", 2, _fowd_sample, _fowd_density, defined=_distinct
)
DIST1 = _deterministic("dist1", 2, _k_dist1)
BLOCK_UNIFORM = VariationOperator("sample_block_uniform", 2, _block_uniform_sample, _block_uniform_density)
BLOCK_COMPLEMENT = _deterministic("block_complement", 3, _k_block_complement)
UPDATE4 = _deterministic("update4", 4, _k_update4)
UPDATE2 = _deterministic("update2", 3, _k_update2)
INITIALIZE1 = _deterministic("initialize1", 2, _k_initialize1)
INITIALIZE2 = _deterministic("initialize2", 2, _k_initialize2)
TEST5 = _deterministic("test5", 5, _k_test5)
FINISH = _deterministic("finish", 3, _k_finish)

# control operator for the checker: a point mass on the all-zeros string
ALL_ZEROS = _deterministic("all_zeros", 1, _k_all_zeros)


def flip_k_where_different(k: int) -> VariationOperator:
    return VariationOperator(
        f"flip_k_where_different[k={k}]", 2, _flip_k_sampler(k), _flip_k_density(k), defined=_distinct
    )


def flip_half(arity: int) -> VariationOperator:
    return VariationOperator(f"flip_half[{arity}]", arity, _flip_half_sample, _flip_half_density)


def feasible_uniform(values: Sequence[int]) -> VariationOperator:
    values = tuple(values)
    return VariationOperator(
        f"feasible_uniform{list(values)}", len(values), _feasible_sampler(values), _feasible_density(values)
    )


def catalogue(n: int) -> list[VariationOperator]:
    """Every operator the algorithms use, instantiated for dimension ``n``."""
    half = (n + 1) // 2
    return [
        UNIFORM,
        COMPLEMENT,
        FLIP_ONE,
        FLIP_ONE_WHERE_DIFFERENT,
        DIST1,
        flip_k_where_different(1),
        flip_k_where_different(2),
        flip_k_where_different(n + 1),
        BLOCK_UNIFORM,
        BLOCK_COMPLEMENT,
        UPDATE4,
        UPDATE2,
        INITIALIZE1,
        INITIALIZE2,
        TEST5,
        FINISH,
        flip_half(1),
        flip_half(2),
        flip_half(3),
        feasible_uniform([half]),
        feasible_uniform([half, half]),
    ]


# -- functional front ends -----------------------------------------------------

def uniform_sample(n: int, rng: np.random.Generator) -> BitString:
    return UNIFORM.sample(rng, n=n)


def op_complement(x: BitString) -> BitString:
    return COMPLEMENT.sample(None, x)


def op_flip_one(x: BitString, rng: np.random.Generator) -> BitString:
    return FLIP_ONE.sample(rng, x)


def op_flip_one_where_different(x: BitString, y: BitString, rng: np.random.Generator) -> BitString:
    return FLIP_ONE_WHERE_DIFFERENT.sample(rng, x, y)


def op_dist1(x: BitString, w: BitString) -> BitString:
    return DIST1.sample(None, x, w)


def op_flip_k_where_different(x: BitString, y: BitString, k: int, rng: np.random.Generator) -> BitString:
    return flip_k_where_different(k).sample(rng, x, y)


def op_sample_block_uniform(x: BitString, anchor: BitString, rng: np.random.Generator) -> BitString:
    return BLOCK_UNIFORM.sample(rng, x, anchor)


def op_block_complement(a: BitString, b: BitString, c: BitString) -> BitString:
    return BLOCK_COMPLEMENT.sample(None, a, b, c)


def op_update4(y: BitString, x: BitString, x1: BitString, zj: BitString) -> BitString:
    return UPDATE4.sample(None, y, x, x1, zj)


def op_update2(yp: BitString, xp: BitString, w: BitString) -> BitString:
    return UPDATE2.sample(None, yp, xp, w)


def op_initialize1(xp: BitString, yp: BitString) -> BitString:
    return INITIALIZE1.sample(None, xp, yp)


def op_initialize2(xp: BitString, yp: BitString) -> BitString:
    return INITIALIZE2.sample(None, xp, yp)


def op_test5(zj: BitString, xp: BitString, yp: BitString, x: BitString, x1: BitString) -> BitString:
    return TEST5.sample(None, zj, xp, yp, x, x1)


def op_finish(x: BitString, xp: BitString, yp: BitString) -> BitString:
    return FINISH.sample(None, x, xp, yp)


def op_flip_half(history: Sequence[BitString], rng: np.random.Generator) -> BitString:
    if not history:
        raise ValueError("flip_half needs at least one previous point")
    return flip_half(len(history)).sample(rng, *history)


# -- unbiasedness --------------------------------------------------------------

@dataclass
class UnbiasednessResult:
    operator: str
    n: int
    passed: bool
    checked: int = 0
    counterexample: dict | None = None

    def __bool__(self) -> bool:
        return self.passed


def _permute_array(values: np.ndarray, mapping: Sequence[int]) -> np.ndarray:
    out = np.zeros_like(values)
    for i, j in enumerate(mapping):
        out |= ((values >> np.uint64(j)) & np.uint64(1)) << np.uint64(i)
    return out


def _fmt(n: int, v: int) -> str:
    return str(BitString(int(v), n))


def _check_kernel(op: VariationOperator, n: int) -> UnbiasednessResult:
    m = np.uint64(_full(n))
    k = op.arity
    size = 1 << n
    grid = np.arange(size ** k, dtype=np.uint64)
    inputs = [(grid >> np.uint64(n * i)) & m for i in range(k)]
    out = op.kernel(m, *inputs)
    checked = 0
    for z in range(size):
        zz = np.uint64(z)
        shifted = op.kernel(m, *(a ^ zz for a in inputs))
        bad = np.nonzero(shifted != (out ^ zz))[0]
        checked += len(grid)
        if len(bad):
            i = int(bad[0])
            return UnbiasednessResult(op.name, n, False, checked, {
                "condition": "xor-invariance",
                "inputs": [_fmt(n, a[i]) for a in inputs],
                "shift": _fmt(n, z),
                "output": _fmt(n, out[i]),
                "expected_on_shifted_inputs": _fmt(n, out[i] ^ zz),
                "output_on_shifted_inputs": _fmt(n, shifted[i]),
            })
    for mapping in itertools.permutations(range(n)):
        permuted = op.kernel(m, *(_permute_array(a, mapping) for a in inputs))
        bad = np.nonzero(permuted != _permute_array(out, mapping))[0]
        checked += len(grid)
        if len(bad):
            i = int(bad[0])
            return UnbiasednessResult(op.name, n, False, checked, {
                "condition": "permutation-invariance",
                "inputs": [_fmt(n, a[i]) for a in inputs],
                "permutation": list(mapping),
                "output": _fmt(n, out[i]),
                "output_on_permuted_inputs": _fmt(n, permuted[i]),
            })
    return UnbiasednessResult(op.name, n, True, checked)


def _check_densities(op: VariationOperator, n: int) -> UnbiasednessResult:
    size = 1 << n
    cube = range(size)
    tuples = [t for t in itertools.product(cube, repeat=op.arity) if op.defined(n, *t)]
    domain = set(tuples)
    dist = {}
    for t in tuples:
        row = [op.density_fn(n, c, *t) for c in cube]
        if sum(row) != 1:
            return UnbiasednessResult(op.name, n, False, 0, {
                "condition": "normalisation",
                "inputs": [_fmt(n, a) for a in t],
                "total": str(sum(row)),
            })
        dist[t] = row

    shifts = [("xor-invariance", z, lambda v, z=z: v ^ z) for z in cube]
    perms = [
        ("permutation-invariance", p, lambda v, p=p: permute_bits(v, p))
        for p in itertools.permutations(range(n))
    ]
    checked = 0
    for condition, param, act in shifts + perms:
        for t in tuples:
            image = tuple(act(a) for a in t)
            if image not in domain:
                return UnbiasednessResult(op.name, n, False, checked, {
                    "condition": condition + " (domain)",
                    "inputs": [_fmt(n, a) for a in t],
                    "group_element": param if isinstance(param, tuple) else _fmt(n, param),
                })
            row, moved = dist[t], dist[image]
            for c in cube:
                checked += 1
                if row[c] != moved[act(c)]:
                    return UnbiasednessResult(op.name, n, False, checked, {
                        "condition": condition,
                        "inputs": [_fmt(n, a) for a in t],
                        "group_element": list(param) if isinstance(param, tuple) else _fmt(n, param),
                        "candidate": _fmt(n, c),
                        "density": str(row[c]),
                        "density_after_action": str(moved[act(c)]),
                    })
    return UnbiasednessResult(op.name, n, True, checked)


def _check_statistical(op: VariationOperator, n: int, rng: np.random.Generator, trials: int) -> UnbiasednessResult:
    full = _full(n)
    checked = 0
    for _ in range(trials):
        t = tuple(_random_bits(rng, full) for _ in range(op.arity))
        if not op.defined(n, *t):
            continue
        c = op.sampler(n, rng, *t)
        base = op.density_fn(n, c, *t)
        z = _random_bits(rng, full)
        p = tuple(int(i) for i in rng.permutation(n))
        for condition, act in (
            ("xor-invariance", lambda v: v ^ z),
            ("permutation-invariance", lambda v: permute_bits(v, p)),
        ):
            checked += 1
            moved = op.density_fn(n, act(c), *(act(a) for a in t))
            if moved != base:
                return UnbiasednessResult(op.name, n, False, checked, {
                    "condition": condition,
                    "inputs": [_fmt(n, a) for a in t],
                    "candidate": _fmt(n, c),
                    "density": str(base),
                    "density_after_action": str(moved),
                })
    return UnbiasednessResult(op.name, n, True, checked)


def check_unbiased(
    op: VariationOperator,
    n: int,
    exhaustive: bool | None = None,
    rng: np.random.Generator | None = None,
    trials: int = 2000,
) -> UnbiasednessResult:
    """Check xor- and permutation-invariance of ``op`` on ``{0,1}^n``.

    Exhaustive mode (default for ``n <= 5``) compares exact densities for
    every input tuple against every shift and every permutation.  Above that
    a randomised spot check compares exact densities at random points.
    """
    if exhaustive is None:
        exhaustive = n <= 5
    if exhaustive:
        if op.deterministic:
            return _check_kernel(op, n)
        return _check_densities(op, n)
    return _check_statistical(op, n, rng or np.random.default_rng(0), trials)
