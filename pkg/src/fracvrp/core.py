"""Route and solution value objects shared by the whole solver.

Everything here is exact: objective values are kept as integer ratios so
that comparisons and termination tests never depend on float tolerances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np


class InfeasibleRouteError(ValueError):
    """Raised when a vertex sequence exceeds the working-time limit."""


class InfeasibleSolutionError(ValueError):
    """Raised when a route set violates coverage or fleet constraints."""


@dataclass(frozen=True, order=False)
class Ratio:
    """Exact value of a fractional objective, numerator over denominator.

    Stored in canonical form (gcd 1, positive denominator).  The numerator
    carries route-cost units and may be negative (profit objectives are
    solved as minimisation of a negated numerator).
    """

    num: int
    den: int

    def __post_init__(self):
        if self.den == 0:
            raise ZeroDivisionError("ratio denominator must be positive")
        n, d = self.num, self.den
        if d < 0:
            n, d = -n, -d
        g = math.gcd(n, d)
        if g > 1:
            n //= g
            d //= g
        object.__setattr__(self, "num", n)
        object.__setattr__(self, "den", d)

    # Comparisons are exact cross-multiplications (den > 0 on both sides).
    def __lt__(self, other: "Ratio") -> bool:
        return self.num * other.den < other.num * self.den

    def __le__(self, other: "Ratio") -> bool:
        return self.num * other.den <= other.num * self.den

    def __gt__(self, other: "Ratio") -> bool:
        return other < self

    def __ge__(self, other: "Ratio") -> bool:
        return other <= self

    def __float__(self) -> float:
        return self.num / self.den

    def __neg__(self) -> "Ratio":
        return Ratio(-self.num, self.den)

    def as_fraction(self) -> Fraction:
        return Fraction(self.num, self.den)

    def __str__(self) -> str:
        return f"{self.num}/{self.den}"


@dataclass(frozen=True)
class Route:
    """A depot-to-depot circuit with its cost, working time and visit counts.

    ``visits[i]`` counts how often customer ``i`` is visited; counts above 1
    occur only for ng-relaxed (non-elementary) routes produced by pricing.
    """

    vertices: tuple[int, ...]
    cost: int
    time: int
    visits: tuple[int, ...]
    elementary: bool

    @property
    def customers(self) -> tuple[int, ...]:
        return self.vertices[1:-1]

    def __len__(self) -> int:
        return len(self.vertices) - 2


def route_from_sequence(inst, seq: Sequence[int]) -> Route:
    """Build a Route from a vertex sequence, checking feasibility.

    ``seq`` must start and end at the depot and visit at least one customer.
    Cost is the sum of arc costs, working time the sum of service and travel
    times; a route longer than the working-time limit is rejected.
    """
    seq = tuple(int(v) for v in seq)
    if len(seq) < 3 or seq[0] != 0 or seq[-1] != 0:
        raise ValueError(f"sequence must be a depot-to-depot circuit, got {seq}")
    n = inst.n
    if any(not 1 <= v <= n for v in seq[1:-1]):
        raise ValueError(f"interior vertices must be customers in 1..{n}: {seq}")
    visits = [0] * (n + 1)
    cost = 0
    time = 0
    for a, b in zip(seq, seq[1:]):
        cost += int(inst.d[a, b])
        time += int(inst.t[a, b])
        if b != 0:
            time += int(inst.s[b])
            visits[b] += 1
    if time > inst.T:
        raise InfeasibleRouteError(
            f"route time {time} exceeds limit {inst.T}: {seq}"
        )
    elementary = all(v <= 1 for v in visits)
    return Route(seq, cost, time, tuple(visits), elementary)


@dataclass(frozen=True)
class Solution:
    """A feasible selection of elementary routes with its exact value."""

    routes: tuple[Route, ...]
    value: Ratio

    def __str__(self) -> str:
        lines = [
            f"{r.cost} {r.time} : " + " ".join(str(v) for v in r.customers)
            for r in self.routes
        ]
        lines.append(f"VALUE {self.value}")
        return "\n".join(lines)


def solution_value(inst, routes: Iterable[Route]) -> Ratio:
    """Exact objective of a route set; validates the Solution invariants."""
    routes = tuple(routes)
    if not routes:
        raise InfeasibleSolutionError("a solution needs at least one route")
    if len(routes) > inst.m:
        raise InfeasibleSolutionError(
            f"{len(routes)} routes exceed the fleet limit {inst.m}"
        )
    counts = np.zeros(inst.n + 1, dtype=int)
    for r in routes:
        if not r.elementary:
            raise InfeasibleSolutionError(f"non-elementary route in solution: {r.vertices}")
        counts += np.asarray(r.visits)
    for i in inst.mandatory:
        if counts[i] != 1:
            raise InfeasibleSolutionError(f"mandatory customer {i} covered {counts[i]} times")
    for i in inst.optional:
        if counts[i] > 1:
            raise InfeasibleSolutionError(f"optional customer {i} covered {counts[i]} times")
    num = sum(r.cost for r in routes)
    den = sum(r.time for r in routes)
    if den <= 0:
        raise InfeasibleSolutionError("total working time must be positive")
    return Ratio(num, den)


def make_solution(inst, seqs: Iterable[Sequence[int]]) -> Solution:
    routes = tuple(route_from_sequence(inst, s) for s in seqs)
    return Solution(routes, solution_value(inst, routes))


def parse_solution(inst, text: str) -> Solution:
    """Inverse of ``str(Solution)``."""
    routes = []
    value = None
    for line in text.strip().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("VALUE"):
            num, den = line.split()[1].split("/")
            value = Ratio(int(num), int(den))
            continue
        head, _, tail = line.partition(":")
        custs = [int(v) for v in tail.split()]
        routes.append(route_from_sequence(inst, (0, *custs, 0)))
    sol = Solution(tuple(routes), solution_value(inst, routes))
    if value is not None and sol.value != value:
        raise ValueError(f"declared value {value} does not match routes ({sol.value})")
    return sol
