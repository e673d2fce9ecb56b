"""Query oracle for value-based and ranking-based black-box access.

In ranking mode the oracle never hands out objective values.  It either
returns the rank vector of everything queried so far, or the equivalent
adaptively perturbed value ``g(f(x))``.  ``g`` is built on the fly: the first
answer is 0, a new maximum sits ``2**n`` above the previous maximum, a new
minimum ``2**n`` below the previous minimum, and a value strictly between
two known values gets the midpoint of its neighbours' answers.  All answers
are dyadic rationals, so ``Fraction`` keeps them exact.
"""
from __future__ import annotations

import enum
from bisect import bisect_left
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .bitstring import BitString, DimensionError, ProblemInstance

DEFAULT_BUDGET = 10**6


class AccessMode(enum.Enum):
    VALUE = "value"
    RANKING = "ranking"


class ModeError(RuntimeError):
    """An algorithm asked for information its access mode does not provide."""


class BudgetExceeded(RuntimeError):
    """The per-run query budget ran out before the optimum was hit."""


def ranking_of(values: Sequence) -> tuple[int, ...]:
    """Rank of each entry: one plus the number of strictly smaller entries."""
    if not values:
        raise ValueError("ranking of an empty collection")
    ordered = sorted(values)
    return tuple(bisect_left(ordered, v) + 1 for v in values)


@dataclass(frozen=True)
class QueryRecord:
    point: BitString
    f_value: int
    g_value: Fraction


class Oracle:
    """Gatekeeper between one algorithm run and one hidden instance."""

    def __init__(
        self,
        instance: ProblemInstance,
        mode: AccessMode,
        budget: int = DEFAULT_BUDGET,
    ) -> None:
        self.instance = instance
        self.mode = mode
        self.budget = budget
        self.history: list[QueryRecord] = []
        self.optimum_hit = False
        self.first_hit: int | None = None
        # distinct f-values seen so far, sorted, with their g-values
        self._fs: list[int] = []
        self._gs: list[Fraction] = []
        self._step = Fraction(1 << instance.n)

    @property
    def n(self) -> int:
        return self.instance.n

    @property
    def query_count(self) -> int:
        return len(self.history)

    def queries_used(self) -> int:
        return len(self.history)

    def is_optimum_found(self) -> bool:
        return self.optimum_hit

    def _record(self, x: BitString) -> QueryRecord:
        if x.n != self.n:
            raise DimensionError(f"query of length {x.n} on a dimension-{self.n} instance")
        if len(self.history) >= self.budget:
            raise BudgetExceeded(f"query budget of {self.budget} exhausted")
        f = self.instance(x)
        rec = QueryRecord(x, f, self._assign_g(f))
        self.history.append(rec)
        if not self.optimum_hit and self.instance.is_optimum(x):
            self.optimum_hit = True
            self.first_hit = len(self.history)
        return rec

    def _assign_g(self, f: int) -> Fraction:
        fs, gs = self._fs, self._gs
        if not fs:
            fs.append(f)
            gs.append(Fraction(0))
            return gs[0]
        pos = bisect_left(fs, f)
        if pos < len(fs) and fs[pos] == f:
            return gs[pos]
        if pos == len(fs):
            g = gs[-1] + self._step
        elif pos == 0:
            g = gs[0] - self._step
        else:
            g = (gs[pos - 1] + gs[pos]) / 2
        fs.insert(pos, f)
        gs.insert(pos, g)
        return g

    def query(self, x: BitString):
        """Value mode: ``f(x)``.  Ranking mode: the updated rank vector."""
        rec = self._record(x)
        if self.mode is AccessMode.VALUE:
            return rec.f_value
        return self.ranks()

    def query_g(self, x: BitString) -> Fraction:
        """Ranking mode only: the perturbed value ``g(f(x))``."""
        if self.mode is not AccessMode.RANKING:
            raise ModeError("g-values are only served in ranking mode")
        return self._record(x).g_value

    def query_value(self, x: BitString) -> int:
        if self.mode is not AccessMode.VALUE:
            raise ModeError("objective values are not available in ranking mode")
        return self._record(x).f_value

    def ranks(self) -> tuple[int, ...]:
        """Rank vector of all points queried so far."""
        return ranking_of([rec.f_value for rec in self.history])

    def g_values(self) -> list[Fraction]:
        if self.mode is not AccessMode.RANKING:
            raise ModeError("g-values are only served in ranking mode")
        return [rec.g_value for rec in self.history]


def g_assign(oracle: Oracle, x: BitString) -> Fraction:
    return oracle.query_g(x)


def new_oracle(
    instance: ProblemInstance, mode: AccessMode, budget: int = DEFAULT_BUDGET
) -> Oracle:
    return Oracle(instance, mode, budget)
