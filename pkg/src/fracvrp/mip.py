"""Exact branch-and-bound for the parametric set-partitioning problems.

Each Dinkelbach step minimises sum((c_l - r*w_l) x_l) over selections that
cover every mandatory customer exactly once, optional customers at most
once, and use a vehicle count inside [m_min, m_max].  Branching fixes a
route in or out; fixing in removes every column sharing a customer.
"""

from __future__ import annotations

import math
import time as _time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .lp import LinearProgram, LpStatus, solve_lp


class NoCoverError(ValueError):
    """The column set admits no feasible selection."""


@dataclass
class MipResult:
    x: list[int]  # selected column indices
    objective: float
    proven_optimal: bool
    elapsed: float
    nodes: int


def solve_fp(
    visits: np.ndarray,
    costs: np.ndarray,
    n1: int,
    m_min: int,
    m_max: int,
    warm: Optional[Sequence[int]] = None,
    tlim: float = 3600.0,
) -> MipResult:
    """Branch and bound over route columns.

    ``visits`` is the (n_cols, n+1) visit matrix, ``costs`` the parametric
    objective.  ``warm`` seeds the incumbent with column indices and must be
    feasible.  On timeout the incumbent is returned unproven.
    """
    t0 = _time.monotonic()
    n_cols, width = visits.shape
    n = width - 1
    costs = np.asarray(costs, dtype=float)
    vis_f = visits.astype(float)
    vis_any = visits[:, 1:].any(axis=1)
    if not vis_any.all():
        raise ValueError("every column must visit at least one customer")

    inc_idx: Optional[list[int]] = None
    inc_obj = math.inf
    if warm is not None:
        inc_idx = list(warm)
        inc_obj = float(costs[inc_idx].sum())

    # node: (fixed tuple, banned frozenset, parent bound)
    stack: list[tuple[tuple[int, ...], frozenset, float]] = [((), frozenset(), -math.inf)]
    nodes = 0
    timed_out = False

    def node_lp(fixed: tuple[int, ...], banned: frozenset):
        sel = np.zeros(width)
        for q in fixed:
            sel += vis_f[q]
        overlap = vis_f[:, 1:] @ sel[1:]
        active = (overlap == 0) & vis_any
        if banned:
            active[list(banned)] = False
        for q in fixed:
            active[q] = False
        act_idx = np.flatnonzero(active)
        residual = [i for i in range(1, n + 1) if sel[i] == 0]
        mand_missing = [i for i in residual if i <= n1]
        rows, rels, rhs = [], [], []
        sub = vis_f[act_idx]
        for i in residual:
            if i <= n1:
                rows.append(sub[:, i])
                rels.append("=")
                rhs.append(1.0)
            elif sub[:, i].any():
                rows.append(sub[:, i])
                rels.append("<=")
                rhs.append(1.0)
        ones = np.ones(len(act_idx))
        hi = m_max - len(fixed)
        lo = m_min - len(fixed)
        if hi < 0 or (not mand_missing and lo > len(act_idx)):
            return None, act_idx
        rows.append(ones)
        rels.append("<=")
        rhs.append(float(hi))
        if lo > 0:
            rows.append(ones)
            rels.append(">=")
            rhs.append(float(lo))
        if not act_idx.size:
            if mand_missing or lo > 0:
                return None, act_idx
            return "empty", act_idx
        lp = LinearProgram(costs[act_idx], np.array(rows), rels, np.array(rhs))
        return solve_lp(lp), act_idx

    while stack:
        if _time.monotonic() - t0 > tlim:
            timed_out = True
            break
        nodes += 1
        if nodes % 1000 == 0:
            # best-bound restart: continue from the most promising open node
            stack.sort(key=lambda e: -e[2])
        fixed, banned, _ = stack.pop()
        fixed_cost = float(costs[list(fixed)].sum()) if fixed else 0.0
        res, act_idx = node_lp(fixed, banned)
        if res is None:
            continue
        if res == "empty":
            if fixed_cost < inc_obj - 1e-9 * (1.0 + abs(inc_obj)):
                inc_obj = fixed_cost
                inc_idx = list(fixed)
            continue
        if res.status is not LpStatus.OPTIMAL:
            continue
        bound = res.objective + fixed_cost
        if bound >= inc_obj - 1e-9 * (1.0 + abs(inc_obj)):
            continue
        x = res.x
        frac = np.where((x > 1e-6) & (x < 1.0 - 1e-6))[0]
        if frac.size == 0:
            chosen = list(fixed) + [int(act_idx[k]) for k in np.flatnonzero(x > 0.5)]
            obj = float(costs[chosen].sum())
            if obj < inc_obj - 1e-12:
                inc_obj = obj
                inc_idx = chosen
            continue
        pick = frac[np.argmin(np.abs(x[frac] - 0.5))]
        q = int(act_idx[pick])
        # dive on the fixed branch first
        stack.append((fixed, banned | {q}, bound))
        stack.append((fixed + (q,), banned, bound))

    if inc_idx is None:
        if timed_out:
            return MipResult([], math.inf, False, _time.monotonic() - t0, nodes)
        raise NoCoverError("no feasible cover exists for the mandatory customers")
    return MipResult(
        x=sorted(inc_idx),
        objective=inc_obj,
        proven_optimal=not timed_out and not stack,
        elapsed=_time.monotonic() - t0,
        nodes=nodes,
    )
