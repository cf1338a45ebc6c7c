"""ng-route relaxation: neighbour sets, label tables, route-cost floors, pricing.

An ng-path may revisit a customer once that customer has dropped out of the
running memory set, so the label DP is polynomial while still dominating the
cost of every elementary route.  States are (memory set, completion time at
vertex, vertex); times strictly increase along arcs because service times are
positive, which makes the state graph a DAG layered by time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernels as K
from .core import Route, route_from_sequence


@dataclass(frozen=True, eq=False)
class NgSets:
    """Per-vertex neighbour sets N_i (i itself is implied, carries no bit)."""

    delta: int
    neigh: np.ndarray  # (n+1, width) member vertex ids, padded with 0
    n_mem: np.ndarray  # (n+1,) member count per vertex (excluding i)
    pos_in: np.ndarray  # (n+1, n+1) bit position of j within N_i, -1 if absent

    def members(self, i: int) -> list[int]:
        return sorted([i] + [int(v) for v in self.neigh[i, : self.n_mem[i]]])

    @property
    def m_width(self) -> int:
        return 1 << int(self.n_mem.max(initial=0))


def build_ng_sets(inst, delta: int, metric: Optional[np.ndarray] = None) -> NgSets:
    """N_i = {i} plus the delta-1 metric-nearest customers, ties to lower index.

    Bits are assigned in increasing vertex order so masks are canonical.
    """
    if delta < 1:
        raise ValueError("delta must be at least 1")
    if metric is None:
        metric = inst.d
    n = inst.n
    width = max(1, min(delta - 1, n - 1))
    neigh = np.zeros((n + 1, width), dtype=np.int16)
    n_mem = np.zeros(n + 1, dtype=np.int8)
    pos_in = np.full((n + 1, n + 1), -1, dtype=np.int8)
    for i in inst.customers:
        others = [j for j in inst.customers if j != i]
        others.sort(key=lambda j: (metric[i, j], j))
        chosen = sorted(others[: delta - 1])
        n_mem[i] = len(chosen)
        for b, j in enumerate(chosen):
            neigh[i, b] = j
            pos_in[i, j] = b
    return NgSets(delta=delta, neigh=neigh, n_mem=n_mem, pos_in=pos_in)


class NgGraph:
    """Reachable ng-state structure for one (instance, ng-sets, time matrix).

    The reachable set depends only on travel/service times, so one discovery
    pass serves every subsequent cost vector (penalised costs, duals, ...).
    """

    def __init__(self, inst, ng: NgSets, tt: Optional[np.ndarray] = None):
        self.inst = inst
        self.ng = ng
        self.T = inst.T
        self.tt = inst.t if tt is None else tt
        self.m_width = ng.m_width
        nv = inst.n + 1
        self.proj = K.build_projections(
            ng.neigh.astype(np.int16), ng.n_mem.astype(np.int8), ng.pos_in, self.m_width
        )
        tt64 = self.tt.astype(np.int64)
        s64 = inst.s.astype(np.int64)
        reach = K.discover_states(
            ng.neigh.astype(np.int16), ng.n_mem, ng.pos_in, self.proj, tt64, s64, self.T, self.m_width
        )
        flat = np.flatnonzero(reach.reshape(-1))
        span = (self.T + 1) * self.m_width
        t_of = (flat % span) // self.m_width
        i_of = flat // span
        ng_of = flat % self.m_width
        order = np.lexsort((ng_of, i_of, t_of))
        self.order = flat[order].astype(np.int64)
        self.reach = reach
        self._tt64 = tt64
        self._s64 = s64

    def run(self, arc_cost: np.ndarray) -> "NgLabelTable":
        """Compute least-cost labels for every reachable state."""
        inst = self.inst
        nv = inst.n + 1
        f = np.full((nv, self.T + 1, self.m_width), K.INF)
        pred_v = np.full((nv, self.T + 1, self.m_width), -1, dtype=np.int16)
        pred_ng = np.zeros((nv, self.T + 1, self.m_width), dtype=np.int16)
        cost = np.ascontiguousarray(arc_cost, dtype=np.float64)
        for j in inst.customers:
            t0 = int(self._tt64[0, j] + self._s64[j])
            if t0 <= self.T:
                f[j, t0, 0] = cost[0, j]
                pred_v[j, t0, 0] = 0
        K.relax_states(
            self.order, f, pred_v, pred_ng, cost, self._tt64, self._s64,
            self.ng.pos_in, self.proj, self.T, self.m_width, nv,
        )
        return NgLabelTable(graph=self, f=f, pred_v=pred_v, pred_ng=pred_ng, arc_cost=cost)


@dataclass(eq=False)
class NgLabelTable:
    """Least ng-path cost f(NG, t, i) plus predecessor links for backtracking."""

    graph: NgGraph
    f: np.ndarray
    pred_v: np.ndarray
    pred_ng: np.ndarray
    arc_cost: np.ndarray

    def backtrack(self, i: int, t: int, ng: int) -> list[int]:
        """Vertex sequence (0, ..., i) of the optimal label at this state."""
        inst = self.graph.inst
        seq = []
        while True:
            seq.append(i)
            j = int(self.pred_v[i, t, ng])
            if j < 0:
                raise ValueError(f"state ({ng},{t},{i}) is unreachable")
            if j == 0:
                break
            png = int(self.pred_ng[i, t, ng])
            t = t - int(inst.s[i]) - int(self.graph.tt[j, i])
            i, ng = j, png
        seq.append(0)
        return seq[::-1]

    def route_states(self) -> tuple[np.ndarray, np.ndarray]:
        """All states that can close a route: returns (flat_indices, rc_values).

        The closing arc cost into the depot is added, so values are complete
        route costs under the table's arc costs.
        """
        inst = self.graph.inst
        T = self.graph.T
        vals = []
        idxs = []
        span = (T + 1) * self.graph.m_width
        for i in inst.customers:
            tmax = T - int(self.graph.tt[i, 0])
            if tmax < 0:
                continue
            block = self.f[i, : tmax + 1, :] + self.arc_cost[i, 0]
            flat = np.flatnonzero(np.isfinite(block.reshape(-1)))
            if flat.size:
                idxs.append(i * span + flat)
                vals.append(block.reshape(-1)[flat])
        if not idxs:
            return np.empty(0, dtype=np.int64), np.empty(0)
        return np.concatenate(idxs), np.concatenate(vals)


def forward_ng_dp(inst, ng: NgSets, arc_cost: np.ndarray) -> NgLabelTable:
    """Forward label table over the instance's own time matrix."""
    return NgGraph(inst, ng).run(arc_cost)


def backward_ng_dp(inst, ng: NgSets, arc_cost: np.ndarray) -> NgLabelTable:
    """Backward labels: the forward DP on transposed cost and time matrices."""
    graph = NgGraph(inst, ng, tt=np.ascontiguousarray(inst.t.T))
    return graph.run(np.ascontiguousarray(np.asarray(arc_cost).T))


def working_time_floor(inst) -> int:
    """Lower bound on the total working time of any feasible solution:
    every mandatory customer is served and entered by some arc."""
    total = int(inst.s[1 : inst.n1 + 1].sum())
    for i in inst.mandatory:
        total += int(min(inst.t[j, i] for j in range(inst.n + 1) if j != i))
    return total


@dataclass(eq=False)
class PhiTable:
    """Per (customer, route working time) lower bounds on modified route cost."""

    phi: np.ndarray  # (n+1, T+1)
    best_ng: np.ndarray  # argmin memory mask per (i, t), -1 where infinite
    table: NgLabelTable
    t_floor: int

    def route_for(self, i: int, t: int) -> list[int]:
        """Backtrack the ng-route attaining phi[i, t]."""
        ng = int(self.best_ng[i, t])
        if ng < 0:
            raise ValueError(f"phi[{i},{t}] is infinite")
        t_state = t - int(self.table.graph.tt[i, 0])
        return self.table.backtrack(i, t_state, ng) + [0]


def phi_table(inst, ng: NgSets, lam: np.ndarray, graph: Optional[NgGraph] = None) -> PhiTable:
    """Route-cost floors phi_i^t under penalised costs d_ij - lambda_j.

    ``t`` indexes the route's total working time including the return leg;
    entries below the reachable-time floor are +inf.
    """
    lam = np.asarray(lam, dtype=float)
    cost = inst.d.astype(float).copy()
    cost[:, 1:] -= lam[1:][None, :]
    if graph is None:
        graph = NgGraph(inst, ng)
    table = graph.run(cost)
    T = inst.T
    n = inst.n
    phi = np.full((n + 1, T + 1), K.INF)
    best_ng = np.full((n + 1, T + 1), -1, dtype=np.int32)
    floor = max(1, working_time_floor(inst) - (inst.m - 1) * T)
    for i in inst.customers:
        ti0 = int(graph.tt[i, 0])
        width = 1 << int(ng.n_mem[i])
        fi = table.f[i, :, :width]
        best = fi.min(axis=1)
        arg = fi.argmin(axis=1)
        for t_state in range(T - ti0 + 1):
            t_route = t_state + ti0
            if t_route < floor or not np.isfinite(best[t_state]):
                continue
            v = best[t_state] + cost[i, 0]
            if v < phi[i, t_route]:
                phi[i, t_route] = v
                best_ng[i, t_route] = arg[t_state]
    return PhiTable(phi=phi, best_ng=best_ng, table=table, t_floor=floor)


# ---------------------------------------------------------------------------
# Pricing


def da_arc_costs(inst, v: np.ndarray, beta: int) -> np.ndarray:
    """Arc decomposition of the dual-ascent reduced costs.

    omega_hat folds the per-route time terms; the per-route constant
    -beta*v_0 rides on the depot-entry arc so that route reduced cost is the
    plain arc sum.
    """
    v = np.asarray(v, dtype=float)
    omega_hat = v[1:].sum() + inst.m * v[0]
    cost = inst.d.astype(float).copy()
    for j in inst.customers:
        extra = inst.s[j] if j > inst.n1 else 0
        cost[:, j] -= beta * v[j] + omega_hat * (inst.t[:, j] + extra)
    cost[:, 0] = inst.d[:, 0] - beta * v[0] - omega_hat * inst.t[:, 0]
    return cost


def cg_arc_costs(inst, mu: np.ndarray, omega: float) -> np.ndarray:
    """Arc decomposition of the Charnes-Cooper reduced costs."""
    mu = np.asarray(mu, dtype=float)
    cost = inst.d.astype(float).copy()
    for j in inst.customers:
        cost[:, j] -= mu[j] + omega * (inst.t[:, j] + inst.s[j])
    cost[:, 0] = inst.d[:, 0] - mu[0] - omega * inst.t[:, 0]
    return cost


def price_ng_routes(
    inst,
    ng: NgSets,
    duals,
    cutoff: float = 0.0,
    limit: int = 100,
    graph: Optional[NgGraph] = None,
) -> list[Route]:
    """Up to ``limit`` distinct ng-routes with reduced cost below ``cutoff``,
    cheapest first.  An empty list certifies dual feasibility over the
    relaxed route set."""
    if duals.mu is not None:
        cost = cg_arc_costs(inst, duals.mu, duals.omega)
    else:
        cost = da_arc_costs(inst, duals.v, duals.beta)
    if graph is None:
        graph = NgGraph(inst, ng)
    table = graph.run(cost)
    idxs, vals = table.route_states()
    keep = vals < cutoff
    idxs, vals = idxs[keep], vals[keep]
    if idxs.size == 0:
        return []
    order = np.argsort(vals, kind="stable")
    span = (inst.T + 1) * graph.m_width
    routes: list[Route] = []
    seen: set[tuple[int, ...]] = set()
    for k in order:
        if len(routes) >= limit:
            break
        flat = int(idxs[k])
        i = flat // span
        t = (flat % span) // graph.m_width
        mask = flat % graph.m_width
        seq = tuple(table.backtrack(i, t, mask) + [0])
        if seq in seen:
            continue
        seen.add(seq)
        routes.append(_ng_route(inst, seq))
    return routes


def _ng_route(inst, seq: Sequence[int]) -> Route:
    """Like route_from_sequence but permits repeated visits (ng relaxation)."""
    visits = [0] * (inst.n + 1)
    cost = 0
    time = 0
    for a, b in zip(seq, seq[1:]):
        cost += int(inst.d[a, b])
        time += int(inst.t[a, b])
        if b != 0:
            time += int(inst.s[b])
            visits[b] += 1
    return Route(tuple(seq), cost, time, tuple(visits), all(v <= 1 for v in visits))
