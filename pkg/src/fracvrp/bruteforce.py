"""Exhaustive reference implementations used to validate the solver.

These deliberately avoid the solver's machinery: routes come from permutation
enumeration, optima from subset DP over exact rationals, and ng quantities
from a dictionary DP written directly against the memory-set definition.
Everything here is exponential and meant for n <= 8.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Iterable, Optional

import numpy as np

from .core import Ratio, Route, route_from_sequence
from .instance import Instance, Objective, bpp_min_bins, euclid2d_cost, objective_structure


def enumerate_elementary_routes(inst) -> list[Route]:
    """Every feasible elementary route, by DFS over partial sequences."""
    routes: list[Route] = []
    n = inst.n

    def extend(seq: list[int], time: int, visited: set[int]) -> None:
        last = seq[-1]
        if last != 0:
            back = time + int(inst.t[last, 0])
            if back <= inst.T:
                routes.append(route_from_sequence(inst, seq + [0]))
        for j in range(1, n + 1):
            if j in visited:
                continue
            tj = time + int(inst.t[last, j]) + int(inst.s[j])
            if tj > inst.T:
                continue
            visited.add(j)
            extend(seq + [j], tj, visited)
            visited.remove(j)

    extend([0], 0, set())
    return routes


_structure = objective_structure


def _block_tables(inst) -> tuple[dict[int, int], dict[int, int]]:
    """Per customer-subset minimum route cost and minimum working time.

    Subsets are bit masks over customers 1..n (bit i-1 for customer i).
    Infeasible subsets are absent.
    """
    n = inst.n
    best_cost: dict[int, int] = {}
    best_time: dict[int, int] = {}
    for mask in range(1, 1 << n):
        members = [i + 1 for i in range(n) if mask >> i & 1]
        if sum(int(inst.s[i]) for i in members) > inst.T:
            continue  # service alone exceeds the limit; travel only adds
        for perm in itertools.permutations(members):
            path = (0, *perm, 0)
            time = sum(int(inst.s[v]) for v in perm) + sum(
                int(inst.t[a, b]) for a, b in zip(path, path[1:])
            )
            if time > inst.T:
                continue
            cost = sum(int(inst.d[a, b]) for a, b in zip(path, path[1:]))
            if mask not in best_cost or cost < best_cost[mask]:
                best_cost[mask] = cost
            if mask not in best_time or time < best_time[mask]:
                best_time[mask] = time
    return best_cost, best_time


def best_solution(inst) -> Optional[tuple[Ratio, list[Route]]]:
    """Exact optimum by exhaustive partition DP; None if infeasible.

    Works for the two benchmark shapes, where within a fixed visited set one
    of the two route quantities is order-invariant, so the other can be
    minimised block by block.
    """
    shape = _structure(inst)
    if shape == "general":
        return best_solution_general(inst)
    best_cost, best_time = _block_tables(inst)
    per_block = best_cost if shape == "load" else best_time
    n = inst.n
    full = (1 << n) - 1
    f_mask = (1 << inst.n1) - 1

    # part[mask][k] = min sum of per-block values partitioning mask into k routes
    part: list[dict[int, int]] = [dict() for _ in range(1 << n)]
    part[0][0] = 0
    for mask in range(1, 1 << n):
        low = mask & -mask
        sub = mask
        while sub:
            if sub & low and sub in per_block:
                rest = mask ^ sub
                for k, v in part[rest].items():
                    if k + 1 <= inst.m:
                        cur = part[mask].get(k + 1)
                        nv = v + per_block[sub]
                        if cur is None or nv < cur:
                            part[mask][k + 1] = nv
            sub = (sub - 1) & mask
        if not part[mask]:
            part[mask] = {}

    best: Optional[Fraction] = None
    best_mask = -1
    best_k = -1
    for mask in range(1, 1 << n):
        if mask & f_mask != f_mask or not part[mask]:
            continue
        if shape == "load":
            den = sum(int(inst.s[i + 1]) for i in range(n) if mask >> i & 1)
            for k, num in part[mask].items():
                val = Fraction(num, den)
                if best is None or val < best:
                    best, best_mask, best_k = val, mask, k
        else:
            num = sum(int(inst.d[0, i + 1]) for i in range(n) if mask >> i & 1)
            for k, den in part[mask].items():
                val = Fraction(num, den)
                if best is None or val < best:
                    best, best_mask, best_k = val, mask, k
    if best is None:
        return None
    routes = _backtrack_partition(inst, per_block, part, best_mask, best_k, shape)
    return Ratio(best.numerator, best.denominator), routes


def _backtrack_partition(inst, per_block, part, mask, k, shape) -> list[Route]:
    routes: list[Route] = []
    while mask:
        low = mask & -mask
        sub = mask
        done = False
        while sub and not done:
            if sub & low and sub in per_block:
                rest = mask ^ sub
                prev = part[rest].get(k - 1)
                if prev is not None and prev + per_block[sub] == part[mask][k]:
                    routes.append(_best_route_for(inst, sub, shape))
                    mask, k = rest, k - 1
                    done = True
            if not done:
                sub = (sub - 1) & mask
        if not done:
            raise AssertionError("partition backtrack failed")
    return routes


def _best_route_for(inst, mask: int, shape: str) -> Route:
    members = [i + 1 for i in range(inst.n) if mask >> i & 1]
    best = None
    for perm in itertools.permutations(members):
        path = (0, *perm, 0)
        time = sum(int(inst.s[v]) for v in perm) + sum(
            int(inst.t[a, b]) for a, b in zip(path, path[1:])
        )
        if time > inst.T:
            continue
        cost = sum(int(inst.d[a, b]) for a, b in zip(path, path[1:]))
        key = cost if shape == "load" else time
        if best is None or key < best[0]:
            best = (key, path)
    return route_from_sequence(inst, best[1])


def optimal_columns(inst) -> tuple[Optional[Ratio], set[tuple[int, int, int]]]:
    """The optimum plus every optimal solution's columns as (visit mask, cost, time).

    Used by the reduction-safety check: a pruned column is only a violation
    if no identically-valued column survives.
    """
    res = best_solution(inst)
    if res is None:
        return None, set()
    best_val = res[0].as_fraction()
    shape = _structure(inst)
    best_cost, best_time = _block_tables(inst)
    per_block = best_cost if shape == "load" else best_time
    n = inst.n
    f_mask = (1 << inst.n1) - 1
    cols: set[tuple[int, int, int]] = set()

    part: list[dict[int, int]] = [dict() for _ in range(1 << n)]
    part[0][0] = 0
    for mask in range(1, 1 << n):
        low = mask & -mask
        sub = mask
        while sub:
            if sub & low and sub in per_block:
                rest = mask ^ sub
                for k, v in part[rest].items():
                    if k + 1 <= inst.m:
                        cur = part[mask].get(k + 1)
                        nv = v + per_block[sub]
                        if cur is None or nv < cur:
                            part[mask][k + 1] = nv
            sub = (sub - 1) & mask

    def collect(mask: int, k: int, acc: list[int]) -> None:
        if mask == 0:
            for sub in acc:
                members = [i + 1 for i in range(n) if sub >> i & 1]
                for perm in itertools.permutations(members):
                    path = (0, *perm, 0)
                    time = sum(int(inst.s[v]) for v in perm) + sum(
                        int(inst.t[a, b]) for a, b in zip(path, path[1:])
                    )
                    if time > inst.T:
                        continue
                    cost = sum(int(inst.d[a, b]) for a, b in zip(path, path[1:]))
                    want = per_block[sub]
                    got = cost if shape == "load" else time
                    if got == want:
                        cols.add((sub, cost, time))
            return
        low = mask & -mask
        sub = mask
        while sub:
            if sub & low and sub in per_block:
                rest = mask ^ sub
                prev = part[rest].get(k - 1)
                if prev is not None and prev + per_block[sub] == part[mask].get(k):
                    collect(rest, k - 1, acc + [sub])
            sub = (sub - 1) & mask

    for mask in range(1, 1 << n):
        if mask & f_mask != f_mask or not part[mask]:
            continue
        for k in part[mask]:
            if shape == "load":
                den = sum(int(inst.s[i + 1]) for i in range(n) if mask >> i & 1)
                val = Fraction(part[mask][k], den)
            else:
                num = sum(int(inst.d[0, i + 1]) for i in range(n) if mask >> i & 1)
                val = Fraction(num, part[mask][k])
            if val == best_val:
                collect(mask, k, [])
    return res[0], cols


def best_solution_general(inst) -> Optional[tuple[Ratio, list[Route]]]:
    """Route-subset enumeration for arbitrary instances; n <= 5 only."""
    if inst.n > 5:
        raise ValueError("general brute force is limited to n <= 5")
    routes = enumerate_elementary_routes(inst)
    f_mask = (1 << inst.n1) - 1
    masks = []
    for r in routes:
        mask = 0
        for v in r.customers:
            mask |= 1 << (v - 1)
        masks.append(mask)
    best: Optional[Fraction] = None
    best_sel: list[int] = []

    def rec(start: int, used: int, sel: list[int], cost: int, time: int) -> None:
        nonlocal best, best_sel
        if sel and used & f_mask == f_mask:
            val = Fraction(cost, time)
            if best is None or val < best:
                best = val
                best_sel = sel[:]
        if len(sel) == inst.m:
            return
        for idx in range(start, len(routes)):
            if masks[idx] & used:
                continue
            sel.append(idx)
            rec(idx + 1, used | masks[idx], sel, cost + routes[idx].cost, time + routes[idx].time)
            sel.pop()

    rec(0, 0, [], 0, 0)
    if best is None:
        return None
    return Ratio(best.numerator, best.denominator), [routes[i] for i in best_sel]


# ---------------------------------------------------------------------------
# ng-path references


def ng_memory_after(ng_sets, memory: frozenset, j: int) -> frozenset:
    return frozenset(set(memory) & set(ng_sets.members(j))) | {j}


def min_ng_route_cost(inst, ng_sets, arc_cost: np.ndarray) -> float:
    """Least arc-cost sum over all feasible ng-routes, by dictionary DP on
    (vertex, time, memory) states taken straight from the definition."""
    best = math.inf
    states: dict[tuple[int, int, frozenset], float] = {}
    for j in inst.customers:
        t0 = int(inst.t[0, j] + inst.s[j])
        if t0 <= inst.T:
            key = (j, t0, frozenset({j}))
            c = float(arc_cost[0, j])
            if c < states.get(key, math.inf):
                states[key] = c
    frontier = dict(states)
    while frontier:
        nxt: dict[tuple[int, int, frozenset], float] = {}
        for (i, t, mem), c in frontier.items():
            if t + int(inst.t[i, 0]) <= inst.T:
                best = min(best, c + float(arc_cost[i, 0]))
            for j in inst.customers:
                if j == i or j in mem:
                    continue
                tj = t + int(inst.t[i, j]) + int(inst.s[j])
                if tj > inst.T:
                    continue
                key = (j, tj, ng_memory_after(ng_sets, mem, j))
                cj = c + float(arc_cost[i, j])
                if cj < states.get(key, math.inf) - 1e-12:
                    states[key] = cj
                    nxt[key] = cj
        frontier = nxt
    return best


def min_elementary_route_cost(inst, arc_cost: np.ndarray) -> float:
    best = math.inf
    for r in enumerate_elementary_routes(inst):
        c = sum(float(arc_cost[a, b]) for a, b in zip(r.vertices, r.vertices[1:]))
        best = min(best, c)
    return best


# ---------------------------------------------------------------------------
# Random instances for the oracle suite


def random_instance(rng: np.random.Generator, kind: Objective, n_max: int = 7, t_max: int = 30):
    """A feasible random instance mirroring the benchmark class structure."""
    for _ in range(200):
        n = int(rng.integers(1, n_max + 1))
        n1 = int(rng.integers(1, n + 1))
        n2 = n - n1
        coords = rng.integers(0, 9, size=(n + 1, 2))
        q = rng.integers(1, 9, size=n + 1)
        q[0] = 0
        base = np.zeros((n + 1, n + 1), dtype=np.int64)
        for i in range(n + 1):
            for j in range(n + 1):
                if i != j:
                    base[i, j] = euclid2d_cost(coords[i], coords[j])
        if kind is Objective.COST_OVER_LOAD:
            s = q.copy()
            t = np.zeros_like(base)
            d = base
            T = int(rng.integers(max(8, q.max()), t_max + 1))
            m = int(rng.integers(1, 4))
            try:
                if bpp_min_bins(q[1 : n1 + 1], T) > m:
                    continue
            except ValueError:
                continue
        else:
            s = np.zeros(n + 1, dtype=np.int64)
            s[1:] = (q[1:] + 1) // 2
            t = base
            d = np.zeros_like(base)
            for j in range(1, n + 1):
                d[:, j] = -int(q[j])
            np.fill_diagonal(d, 0)
            lo = max(int(s[i] + t[0, i] + t[i, 0]) for i in range(1, n1 + 1))
            if lo > t_max:
                continue
            T = int(rng.integers(lo, t_max + 1))
            m = int(rng.integers(1, 4))
        try:
            inst = Instance(
                name=f"rand-{kind.value}-{n}",
                n1=n1,
                n2=n2,
                s=s.astype(np.int64),
                d=d.astype(np.int64),
                t=t.astype(np.int64),
                m=m,
                T=T,
                objective=kind,
            )
        except ValueError:
            continue
        if best_solution(inst) is None:
            continue
        return inst
    raise RuntimeError("could not generate a feasible random instance")
