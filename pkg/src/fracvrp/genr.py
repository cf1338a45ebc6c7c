"""Best-first enumeration of the reduced route set.

Forward paths are expanded in order of a completion bound DB(P) built from
backward ng labels under the reduced arc costs; a path whose bound clears the
variable-reduction threshold can never produce a useful route, and dominated
same-set prefixes are dropped.  The result is the largest route set whose
members could still appear in an improving solution, plus a lower bound
(gapmin) on the reduced cost of everything left out.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels as K
from .bounds import DualSolution
from .instance import Instance, objective_structure
from .ngpath import NgGraph, NgSets, build_ng_sets, cg_arc_costs


@dataclass(frozen=True)
class ForwardPath:
    vertices: tuple[int, ...]
    end: int
    time: int
    cost: float  # reduced-cost prefix (sum of modified arc costs)
    visited_mask: int  # bit i-1 set when customer i is on the path


@dataclass(eq=False)
class ReducedSet:
    seqs: list[tuple[int, ...]]
    cost: np.ndarray
    time: np.ndarray
    visits: np.ndarray  # (n_routes, n+1) uint8
    rcost: np.ndarray
    gapmin: float
    optimal_flag: bool
    frontier_peak: int = 0

    def __len__(self) -> int:
        return len(self.seqs)


class CompletionBounds:
    """Backward ng labels condensed into O(1) completion-bound lookups.

    For each end vertex: a running minimum over completion time, then a
    subset-minimum transform over memory masks, so the bound for "complete
    within tau avoiding the prefix customers" is a single table read.
    """

    def __init__(self, inst: Instance, ng: NgSets, dbar: np.ndarray):
        self.inst = inst
        self.ng = ng
        self.dbar = dbar
        graph = NgGraph(inst, ng, tt=np.ascontiguousarray(inst.t.T))
        table = graph.run(np.ascontiguousarray(dbar.T))
        self.tables: list[Optional[np.ndarray]] = [None] * (inst.n + 1)
        self.full_mask = [0] * (inst.n + 1)
        for e in inst.customers:
            bits = int(ng.n_mem[e])
            width = 1 << bits
            block = table.f[e, :, :width].copy()
            block = K.cummin_time(block)
            block = K.subset_min_zeta(block, bits)
            self.tables[e] = block
            self.full_mask[e] = width - 1

    def complete(self, end: int, tau_max: int, visited_mask: int) -> float:
        """Least backward completion cost from ``end`` within ``tau_max``
        time units (completion includes the service at ``end``), over
        memories disjoint from the visited prefix."""
        if tau_max < 0:
            return math.inf
        tau_max = min(tau_max, self.inst.T)
        allowed = self.full_mask[end]
        for b in range(int(self.ng.n_mem[end])):
            j = int(self.ng.neigh[end, b])
            if visited_mask >> (j - 1) & 1:
                allowed &= ~(1 << b)
        return float(self.tables[end][tau_max, allowed])

    def db(self, path: ForwardPath) -> float:
        """Completion bound DB(P); exact reduced cost if P already closed.

        The forward time and the backward completion both include the shared
        end vertex's service, hence the + s_e in the admissible window.
        """
        inst = self.inst
        if path.end == 0:
            if len(path.vertices) > 1:
                return path.cost  # closed route: the bound is its reduced cost
            best = math.inf
            for j in inst.customers:
                tau = inst.T - int(inst.t[0, j])
                v = self.dbar[0, j] + self.complete(j, tau, 0)
                best = min(best, v)
            return best
        tau_max = inst.T - path.time + int(inst.s[path.end])
        mask = path.visited_mask & ~(1 << (path.end - 1))
        return path.cost + self.complete(path.end, tau_max, mask)


def db_of_path(path: ForwardPath, comp: CompletionBounds) -> float:
    return comp.db(path)


def corollary1_gamma(w: float, z_star: float, db_ccg: float, c_bar_0: float, m_max: int, T: int) -> float:
    """Reduced-cost threshold: routes at or above it cannot improve on z*."""
    alpha = w + (m_max - 1) * T
    return alpha * z_star - (alpha * db_ccg + c_bar_0)


_SLACK = 1e-6  # keep borderline routes: harmless for exactness, cheap


def generate_reduced_set(
    inst: Instance,
    duals: DualSolution,
    z_star: float,
    db_ccg: float,
    c_bar_0: float,
    m_max: int,
    delta_max: int = 300_000,
    nstatb: int = 200_000_000,
    ng_delta: int = 12,
    use_dominance: bool = True,
) -> ReducedSet:
    """Largest route set with reduced cost below the per-route threshold.

    Terminates early when delta_max routes have been produced or the frontier
    overflows nstatb; gapmin then reports the smallest completion bound still
    open, +inf if the enumeration ran to completion.
    """
    if duals.mu is None:
        raise ValueError("route generation needs the transformed (mu, omega) duals")
    dbar = cg_arc_costs(inst, duals.mu, duals.omega)
    ng = build_ng_sets(inst, min(ng_delta, inst.n), metric=dbar)
    comp = CompletionBounds(inst, ng, dbar)
    n = inst.n
    T = inst.T
    finite_gamma = math.isfinite(z_star) and math.isfinite(db_ccg)
    gamma_path = (
        corollary1_gamma(T, z_star, db_ccg, c_bar_0, m_max, T) if finite_gamma else math.inf
    )
    # Same-set dominance compares the route quantity that still varies with
    # the visit order; when both vary no rule is safe and pruning is off.
    structure = objective_structure(inst)
    if structure == "general":
        use_dominance = False

    seqs: list[tuple[int, ...]] = []
    costs: list[int] = []
    times: list[int] = []
    masks: list[int] = []
    rcosts: list[float] = []

    # path store (append-only, parents by index)
    p_parent = [-1]
    p_vertex = [0]
    p_time = [0]
    p_cost = [0.0]
    p_mask = [0]
    p_len = [0]

    heap: list[tuple[float, int, int, int]] = []
    incumbent: dict[tuple[int, int], float] = {}
    truncated = False
    gapmin = math.inf
    peak = 1

    def push(db: float, pid: int) -> None:
        heapq.heappush(heap, (db, p_len[pid], p_vertex[pid], pid))

    def dominated(end: int, mask: int, c: float, t: int) -> bool:
        # strictly-worse prefixes die; ties survive so alternative optima do
        if not use_dominance:
            return False
        key = (end, mask)
        val = c if structure == "load" else float(t)
        cur = incumbent.get(key)
        if cur is None or val < cur:
            incumbent[key] = val
            return False
        return val > cur

    def sequence_of(pid: int) -> tuple[int, ...]:
        out = []
        while pid >= 0:
            out.append(p_vertex[pid])
            pid = p_parent[pid]
        return tuple(reversed(out))

    push(-math.inf, 0)
    tt = inst.t
    s = inst.s
    d_int = inst.d

    while heap:
        if len(seqs) >= delta_max or len(heap) > nstatb:
            truncated = True
            gapmin = heap[0][0]
            break
        db, _, _, pid = heapq.heappop(heap)
        if finite_gamma and db >= gamma_path + _SLACK:
            # best-first: every remaining path clears the threshold, so the
            # enumeration is complete in the variable-reduction sense
            break
        end = p_vertex[pid]
        t = p_time[pid]
        c = p_cost[pid]
        mask = p_mask[pid]
        if end != 0:
            t_route = t + int(tt[end, 0])
            if t_route <= T:
                rc = c + dbar[end, 0]
                gamma_r = (
                    corollary1_gamma(t_route, z_star, db_ccg, c_bar_0, m_max, T)
                    if finite_gamma
                    else math.inf
                )
                if rc < gamma_r + _SLACK:
                    seq = sequence_of(pid) + (0,)
                    seqs.append(seq)
                    costs.append(sum(int(d_int[a, b]) for a, b in zip(seq, seq[1:])))
                    times.append(t_route)
                    masks.append(mask)
                    rcosts.append(rc)
                    if len(seqs) >= delta_max:
                        truncated = True
                        gapmin = min(db, heap[0][0]) if heap else db
                        break
        for j in range(1, n + 1):
            if mask >> (j - 1) & 1:
                continue
            tj = t + int(tt[end, j]) + int(s[j])
            if tj > T:
                continue
            cj = c + dbar[end, j]
            mj = mask | (1 << (j - 1))
            if dominated(j, mj, cj, tj):
                continue
            dbj = cj + comp.complete(j, T - tj + int(s[j]), mj & ~(1 << (j - 1)))
            if not math.isfinite(dbj):
                continue
            if finite_gamma and dbj >= gamma_path + _SLACK:
                continue
            p_parent.append(pid)
            p_vertex.append(j)
            p_time.append(tj)
            p_cost.append(cj)
            p_mask.append(mj)
            p_len.append(p_len[pid] + 1)
            push(dbj, len(p_parent) - 1)
        if len(heap) > peak:
            peak = len(heap)

    visits = np.zeros((len(seqs), n + 1), dtype=np.uint8)
    for r, mask in enumerate(masks):
        for j in range(1, n + 1):
            if mask >> (j - 1) & 1:
                visits[r, j] = 1
    return ReducedSet(
        seqs=seqs,
        cost=np.array(costs, dtype=np.int64),
        time=np.array(times, dtype=np.int64),
        visits=visits,
        rcost=np.array(rcosts, dtype=float),
        gapmin=gapmin if truncated else math.inf,
        optimal_flag=not truncated,
        frontier_peak=peak,
    )
