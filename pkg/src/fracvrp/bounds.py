"""Dual bounding procedures (DK, CG, DA, CB) and the shared primal heuristic.

All four bound the same fractional set-partitioning value: DK runs the
parametric algorithm on the continuous relaxation, CG solves its scaled
linearisation by column generation, DA drives a dual-ascent heuristic on the
alternative linearisation whose duals later feed route reduction, and CB
relaxes an integer reformulation over (total time, vehicle count) cells.
"""

from __future__ import annotations

import math
import time as _time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from . import _kernels as K
from .core import InfeasibleRouteError, Ratio, Route, Solution, route_from_sequence, solution_value
from .instance import Instance, Objective
from .lp import LinearProgram, LpStatus, solve_lp
from .ngpath import (
    NgGraph,
    NgSets,
    build_ng_sets,
    da_arc_costs,
    phi_table,
    price_ng_routes,
    working_time_floor,
)


class InfeasibleInstanceError(ValueError):
    """No feasible vehicle assignment exists."""


@dataclass
class DualSolution:
    """Duals of the alternative linearisation (v) and/or the scaled one (mu, omega)."""

    beta: int
    v: Optional[np.ndarray] = None
    mu: Optional[np.ndarray] = None
    omega: Optional[float] = None
    value: float = math.nan


@dataclass
class BoundReport:
    name: str
    procedure: str
    dual_bound: float
    primal_bound: Optional[Ratio] = None
    primal_solution: Optional[Solution] = None
    duals: Optional[DualSolution] = None
    m_min: Optional[int] = None
    m_max: Optional[int] = None
    elapsed: float = 0.0
    column_count: int = 0
    iterations: int = 0

    def csv_row(self, z_star: Optional[float] = None) -> str:
        def pct(v):
            if v is None or z_star in (None, 0.0):
                return ""
            x = v if isinstance(v, float) else float(v)
            return f"{100.0 * x / z_star:.1f}"

        pb = float(self.primal_bound) if self.primal_bound is not None else None
        return ",".join(
            [
                self.name,
                self.procedure,
                pct(self.dual_bound),
                pct(pb),
                str(self.column_count),
                str(self.iterations),
                f"{self.elapsed:.1f}",
            ]
        )


CSV_HEADER = "name,procedure,%B,%PB,columns,iterations,time"


# ---------------------------------------------------------------------------
# Column pools


class ColumnPool:
    """Deduplicated route columns with cached numpy views."""

    def __init__(self, inst: Instance):
        self.inst = inst
        self.routes: list[Route] = []
        self._seen: set[tuple[int, ...]] = set()
        self._dirty = True

    def add(self, route: Route) -> bool:
        if route.vertices in self._seen:
            return False
        self._seen.add(route.vertices)
        self.routes.append(route)
        self._dirty = True
        return True

    def add_all(self, routes: Iterable[Route]) -> int:
        return sum(1 for r in routes if self.add(r))

    def __len__(self) -> int:
        return len(self.routes)

    def arrays(self):
        if self._dirty:
            n = self.inst.n
            self._cost = np.array([r.cost for r in self.routes], dtype=float)
            self._time = np.array([r.time for r in self.routes], dtype=float)
            self._visits = np.array([r.visits for r in self.routes], dtype=float)
            self._dirty = False
        return self._cost, self._time, self._visits


def seed_routes(inst: Instance) -> list[Route]:
    """Feasible singleton routes; optional customers that cannot be served
    alone are simply never seeded."""
    out = []
    for i in inst.customers:
        try:
            out.append(route_from_sequence(inst, (0, i, 0)))
        except InfeasibleRouteError:
            if i <= inst.n1:
                raise InfeasibleInstanceError(f"mandatory customer {i} unroutable")
    return out


# ---------------------------------------------------------------------------
# Theorem machinery


def theorem1_evaluate(
    inst: Instance, lam: np.ndarray, pi: np.ndarray, pool: ColumnPool
) -> tuple[np.ndarray, float, np.ndarray]:
    """Dual-ascent evaluation: a feasible dual vector of the alternative
    linearisation from penalties ``lam`` and weights ``pi`` over a core pool.

    Returns (v, value, argmin route index per mandatory customer).
    """
    n1 = inst.n1
    beta = int(inst.s[1 : n1 + 1].sum())
    cost, w, a = pool.arrays()
    if len(pool) == 0:
        raise ValueError("core pool may not be empty")
    s_f = inst.s[1 : n1 + 1].astype(float)
    wbar = w - a[:, 1 : n1 + 1] @ s_f
    bbar = beta + inst.m * wbar
    lam = np.asarray(lam, dtype=float)
    pi = np.asarray(pi, dtype=float)
    lam_r = beta * (a[:, 1:] @ lam[1:]) + wbar * lam[1:].sum()
    pi_r = beta * (a[:, 1 : n1 + 1] @ pi[1 : n1 + 1]) + wbar * pi[1 : n1 + 1].sum()
    if (pi_r <= 0).any():
        raise ValueError("every route must carry positive mandatory weight")
    ratio = (cost - lam_r - bbar * lam[0]) / pi_r

    covered = a[:, 1 : n1 + 1] > 0
    has_wbar = wbar > 0
    global_min = np.inf
    global_arg = -1
    if has_wbar.any():
        masked = np.where(has_wbar, ratio, np.inf)
        global_arg = int(np.argmin(masked))
        global_min = masked[global_arg]
    v = np.zeros(inst.n + 1)
    argmins = np.full(n1 + 1, -1, dtype=int)
    for i in range(1, n1 + 1):
        masked = np.where(covered[:, i - 1], ratio, np.inf)
        arg = int(np.argmin(masked))
        best = masked[arg]
        if global_min < best:
            best, arg = global_min, global_arg
        if not np.isfinite(best):
            raise ValueError(f"mandatory customer {i} is uncovered in the core pool")
        v[i] = pi[i] * best + lam[i]
        argmins[i] = arg
    v[n1 + 1 :] = lam[n1 + 1 :]
    v[0] = lam[0]
    value = float(v[1:].sum() + inst.m * v[0])
    return v, value, argmins


def theorem2_transform(
    v: np.ndarray, beta: int, s: np.ndarray, m: int, n1: int
) -> tuple[np.ndarray, float]:
    """Map a feasible dual of the alternative linearisation to one of the
    scaled linearisation with the same objective."""
    v = np.asarray(v, dtype=float)
    omega = float(v[1:].sum() + m * v[0])
    mu = np.empty_like(v)
    mu[0] = beta * v[0]
    mu[1:] = beta * v[1:]
    mu[1 : n1 + 1] -= s[1 : n1 + 1] * omega
    return mu, omega


def dccf_column_slacks(inst: Instance, mu: np.ndarray, omega: float, pool: ColumnPool) -> np.ndarray:
    """Reduced costs c_l - sum(a*mu) - mu_0 - w*omega for every pool column."""
    cost, w, a = pool.arrays()
    return cost - a[:, 1:] @ mu[1:] - mu[0] - w * omega


def dncf_column_slacks(inst: Instance, v: np.ndarray, pool: ColumnPool) -> np.ndarray:
    n1 = inst.n1
    beta = int(inst.s[1 : n1 + 1].sum())
    cost, w, a = pool.arrays()
    wbar = w - a[:, 1 : n1 + 1] @ inst.s[1 : n1 + 1].astype(float)
    abar_v = beta * (a[:, 1:] @ v[1:]) + wbar * v[1:].sum()
    bbar = beta + inst.m * wbar
    return cost - abar_v - bbar * v[0]


# ---------------------------------------------------------------------------
# Primal heuristic


def elementarize(inst: Instance, seq: Sequence[int]) -> Optional[Route]:
    """Shortcut repeated visits (keep first occurrence); None if infeasible."""
    seen: set[int] = set()
    out = [0]
    for vtx in seq[1:-1]:
        if vtx not in seen:
            seen.add(vtx)
            out.append(vtx)
    out.append(0)
    if len(out) < 3:
        return None
    try:
        return route_from_sequence(inst, out)
    except (InfeasibleRouteError, ValueError):
        return None


def _ratio_of(routes: Sequence[Route]) -> Fraction:
    return Fraction(sum(r.cost for r in routes), sum(r.time for r in routes))


def lagrangian_heuristic(
    inst: Instance, candidates: Iterable[Route], incumbent: Optional[Solution] = None
) -> Optional[Solution]:
    """Greedy cover by exact-ratio improvement, insertion repair, then local
    optional-customer polishing.  Returns the better of the result and the
    incumbent, or None when no feasible cover was found."""
    pool: list[Route] = []
    seen: set[tuple[int, ...]] = set()
    for r in candidates:
        el = r if r.elementary else elementarize(inst, r.vertices)
        if el is not None and el.vertices not in seen and len(el) > 0:
            seen.add(el.vertices)
            pool.append(el)
    for r in seed_routes(inst):
        if r.vertices not in seen:
            seen.add(r.vertices)
            pool.append(r)

    mandatory = set(inst.mandatory)
    selected: list[Route] = []
    used: set[int] = set()

    def conflicts(route: Route) -> bool:
        return any(v in used for v in route.customers)

    # greedy cover of the mandatory customers
    while True:
        uncovered = mandatory - used
        if not uncovered or len(selected) >= inst.m:
            break
        best_key = None
        best_route = None
        for idx, r in enumerate(pool):
            if conflicts(r) or not (set(r.customers) & uncovered):
                continue
            trial = selected + [r]
            key = (_ratio_of(trial), -len(set(r.customers) & uncovered), idx)
            if best_key is None or key < best_key:
                best_key = key
                best_route = r
        if best_route is None:
            break
        selected.append(best_route)
        used.update(best_route.customers)

    # insertion repair for whatever mandatory coverage is still missing
    for i in sorted(mandatory - used):
        best = None
        for ridx, r in enumerate(selected):
            seq = list(r.vertices)
            for pos in range(1, len(seq)):
                trial_seq = seq[:pos] + [i] + seq[pos:]
                try:
                    nr = route_from_sequence(inst, trial_seq)
                except (InfeasibleRouteError, ValueError):
                    continue
                trial = selected[:ridx] + [nr] + selected[ridx + 1 :]
                key = (_ratio_of(trial), ridx, pos)
                if best is None or key < best[0]:
                    best = (key, ridx, nr)
        if best is None and len(selected) < inst.m:
            try:
                nr = route_from_sequence(inst, (0, i, 0))
                selected.append(nr)
                used.add(i)
                continue
            except InfeasibleRouteError:
                return incumbent
        if best is None:
            return incumbent
        _, ridx, nr = best
        selected[ridx] = nr
        used.update(nr.customers)

    if not selected or (mandatory - used):
        return incumbent

    # polish: insert/remove optional customers while the exact ratio improves
    for _ in range(60):
        current = _ratio_of(selected)
        best = None
        for j in inst.optional:
            if j in used:
                continue
            for ridx, r in enumerate(selected):
                seq = list(r.vertices)
                for pos in range(1, len(seq)):
                    try:
                        nr = route_from_sequence(inst, seq[:pos] + [j] + seq[pos:])
                    except (InfeasibleRouteError, ValueError):
                        continue
                    trial = selected[:ridx] + [nr] + selected[ridx + 1 :]
                    val = _ratio_of(trial)
                    if val < current and (best is None or val < best[0]):
                        best = (val, ridx, nr, j, None)
        for ridx, r in enumerate(selected):
            for j in r.customers:
                if j <= inst.n1 or len(r) == 1:
                    continue
                seq = [v for v in r.vertices if v != j or v == 0]
                try:
                    nr = route_from_sequence(inst, seq)
                except (InfeasibleRouteError, ValueError):
                    continue
                trial = selected[:ridx] + [nr] + selected[ridx + 1 :]
                val = _ratio_of(trial)
                if val < current and (best is None or val < best[0]):
                    best = (val, ridx, nr, None, j)
        if best is None:
            break
        _, ridx, nr, added, removed = best
        selected[ridx] = nr
        if added is not None:
            used.add(added)
        if removed is not None:
            used.discard(removed)

    sol = Solution(tuple(selected), solution_value(inst, selected))
    if incumbent is not None and incumbent.value <= sol.value:
        return incumbent
    return sol


# ---------------------------------------------------------------------------
# Procedure CB


def cb_g_recursion(phi: np.ndarray, T: int, m: int, t_lb: int) -> np.ndarray:
    """DP over (customers, total time, vehicle count); returns all levels."""
    n = phi.shape[0] - 1
    return K.g_recursion(np.ascontiguousarray(phi), n, m, T, m * T, t_lb)


def _cb_backtrack(g: np.ndarray, phi: np.ndarray, t_star: int, m_star: int) -> list[tuple[int, int]]:
    """Recover the (customer, route time) pairs of a DP cell."""
    n = g.shape[0] - 1
    picks = []
    i, t, k = n, t_star, m_star
    while k > 0:
        if i > 0 and g[i, t, k] == g[i - 1, t, k]:
            i -= 1
            continue
        found = False
        tmax = min(t, phi.shape[1] - 1)
        for tp in range(1, tmax + 1):
            if not np.isfinite(phi[i, tp]):
                continue
            prev = g[i - 1, t - tp, k - 1]
            if np.isfinite(prev) and prev + phi[i, tp] == g[i, t, k]:
                picks.append((i, tp))
                t -= tp
                k -= 1
                i -= 1
                found = True
                break
        if not found:
            raise AssertionError("inconsistent DP backtrack")
    return picks


@dataclass
class CbParams:
    maxit: int = 200  # outer subgradient iterations
    eps: float = 1.0  # subgradient step scale
    delta_ng: int = 12


def run_cb(inst: Instance, ng: Optional[NgSets] = None, params: Optional[CbParams] = None) -> BoundReport:
    """Bounding over the integer (time, vehicles) relaxation with penalty ascent."""
    t0 = _time.monotonic()
    params = params or CbParams()
    if ng is None:
        ng = build_ng_sets(inst, min(params.delta_ng, inst.n))
    graph = NgGraph(inst, ng)
    n, m, T = inst.n, inst.m, inst.T
    t_lb = working_time_floor(inst)
    if t_lb > m * T:
        raise InfeasibleInstanceError("mandatory workload exceeds total fleet time")
    lam = np.zeros(n + 1)
    TT = m * T
    db_table = np.full((TT + 1, m + 1), -np.inf)
    db_cb = -np.inf
    best_sol: Optional[Solution] = None

    window = [
        (t, k)
        for t in range(t_lb, TT + 1)
        for k in range(max(1, -(-t // T)), m + 1)
    ]
    if not window:
        raise InfeasibleInstanceError("empty (time, vehicles) window")
    # cells with no route-time combination at all stay infeasible for every
    # penalty vector; they are excluded from the minima below
    feasible = None

    for _ in range(params.maxit):
        pt = phi_table(inst, ng, lam, graph=graph)
        g = cb_g_recursion(pt.phi, T, m, t_lb)
        lam_sum = lam[1:].sum()
        gz = g[n]
        if feasible is None:
            feasible = [(t, k) for t, k in window if np.isfinite(gz[t, k])]
            if not feasible:
                raise InfeasibleInstanceError("no feasible (time, vehicles) cell")
        z_star = math.inf
        cur_best = math.inf
        bt = bk = -1
        for t, k in feasible:
            cur = (gz[t, k] + lam_sum) / t
            if cur > db_table[t, k]:
                db_table[t, k] = cur
            if db_table[t, k] < z_star:
                z_star = db_table[t, k]
            if cur < cur_best:
                cur_best = cur
                bt, bk = t, k
        if z_star > db_cb:
            db_cb = z_star

        # backtrack the argmin cell of *this* iteration for the subgradient
        picks = _cb_backtrack(g, pt.phi, bt, bk)
        theta = np.zeros(n + 1)
        routes = []
        for i, tp in picks:
            seq = pt.route_for(i, tp)
            routes.append(seq)
            for vtx in seq[1:-1]:
                theta[vtx] += 1
        cand = []
        for seq in routes:
            el = elementarize(inst, seq)
            if el is not None:
                cand.append(el)
        best_sol = lagrangian_heuristic(inst, cand, incumbent=best_sol)

        dev = theta[1:] - 1.0
        denom = float(dev @ dev)
        if denom <= 0:
            continue
        # step magnitude in penalty (cost) units: the bound value at the
        # argmin cell is z* * t, not the dimensionless ratio itself
        gamma = abs(0.2 * (gz[bt, bk] + lam_sum)) / denom
        if gamma == 0.0:
            continue
        lam[1:] -= params.eps * gamma * dev
        lam[inst.n1 + 1 :] = np.minimum(0.0, lam[inst.n1 + 1 :])

    ub = float(best_sol.value) if best_sol is not None else math.inf
    m_lo = max(1, -(-t_lb // T))
    m_min = m_max = None
    by_k: dict[int, float] = {}
    for t, k in feasible:
        by_k[k] = min(by_k.get(k, math.inf), db_table[t, k])
    for k in range(m_lo, m + 1):
        # non-strict with slack: a heuristic that already hit the optimum
        # must not discard the optimal vehicle count
        if by_k.get(k, math.inf) <= ub + 1e-9:
            if m_min is None:
                m_min = k
            m_max = k
    if m_min is None:
        m_min, m_max = m_lo, m
    return BoundReport(
        name=inst.name,
        procedure="CB",
        dual_bound=db_cb,
        primal_bound=best_sol.value if best_sol else None,
        primal_solution=best_sol,
        m_min=m_min,
        m_max=m_max,
        elapsed=_time.monotonic() - t0,
        iterations=params.maxit,
    )


# ---------------------------------------------------------------------------
# Procedure DA


@dataclass
class DaParams:
    maxit: int = 300
    time_limit: float = 100.0
    non_improving: int = 20  # halve the step multiplier after this many
    price_limit: int = 120
    inner_rounds: int = 60
    delta_ng: int = 12


def run_da(inst: Instance, ng: Optional[NgSets] = None, params: Optional[DaParams] = None) -> BoundReport:
    """Dual ascent on the alternative linearisation with ng-route pricing.

    Bounds are recorded only at iterations whose dual vector priced out
    clean, i.e. is feasible for the relaxed dual.
    """
    t0 = _time.monotonic()
    params = params or DaParams()
    if ng is None:
        ng = build_ng_sets(inst, min(params.delta_ng, inst.n))
    graph = NgGraph(inst, ng)
    n1 = inst.n1
    beta = int(inst.s[1 : n1 + 1].sum())
    pi = inst.s.astype(float).copy()  # default weights: service times
    pool = ColumnPool(inst)
    pool.add_all(seed_routes(inst))

    lam = np.zeros(inst.n + 1)
    best_value = -math.inf
    best_v: Optional[np.ndarray] = None
    best_sol: Optional[Solution] = None
    mult = 1.0
    since_improve = 0

    for it in range(params.maxit):
        if _time.monotonic() - t0 > params.time_limit:
            break
        v = None
        for _ in range(params.inner_rounds):
            v, value, argmins = theorem1_evaluate(inst, lam, pi, pool)
            duals = DualSolution(beta=beta, v=v)
            new = price_ng_routes(
                inst, ng, duals, cutoff=-1e-7, limit=params.price_limit, graph=graph
            )
            if not new:
                break
            added = pool.add_all(new)
            if added == 0:
                break
        else:
            v = None  # pricing never converged: dual vector unproven
        if v is not None:
            if value > best_value:
                best_value = value
                best_v = v.copy()
                since_improve = 0
                cand = [pool.routes[i] for i in argmins[1:] if i >= 0]
                best_sol = lagrangian_heuristic(inst, cand + pool.routes[-40:], incumbent=best_sol)
            else:
                since_improve += 1
                if since_improve >= params.non_improving:
                    mult *= 0.5
                    since_improve = 0

        # subgradient of the penalised dual value
        _, _, argmins = theorem1_evaluate(inst, lam, pi, pool)
        cost, w, a = pool.arrays()
        wbar = w - a[:, 1 : n1 + 1] @ inst.s[1 : n1 + 1].astype(float)
        bbar = beta + inst.m * wbar
        pi_r = beta * (a[:, 1 : n1 + 1] @ pi[1 : n1 + 1]) + wbar * pi[1 : n1 + 1].sum()
        theta = np.zeros(inst.n + 1)
        theta_0 = 0.0
        for i in range(1, n1 + 1):
            ell = argmins[i]
            share = pi[i] / pi_r[ell]
            theta[1:] += share * (beta * a[ell, 1:] + wbar[ell])
            theta_0 += share * bbar[ell]
        grad = np.empty(inst.n + 1)
        grad[1:] = 1.0 - theta[1:]
        grad[0] = inst.m - theta_0
        norm = float(grad @ grad)
        if norm <= 1e-14:
            break
        if best_sol is not None:
            pb = float(best_sol.value)
            target = pb + 0.02 * abs(pb)  # slightly above the incumbent
        else:
            target = best_value + 1.0
        step = mult * max(1e-9, target - best_value) / norm
        lam += step * grad
        lam[n1 + 1 :] = np.minimum(0.0, lam[n1 + 1 :])
        lam[0] = min(0.0, lam[0])

    if best_v is None:
        raise RuntimeError("dual ascent never produced a priced-out dual vector")
    mu, omega = theorem2_transform(best_v, beta, inst.s.astype(float), inst.m, n1)
    # the mapped duals must keep every priced column feasible and the value
    slacks = dccf_column_slacks(inst, mu, omega, pool)
    scale = 1e-6 * (1.0 + float(np.abs(inst.d).max()))
    if slacks.min(initial=0.0) < -scale:
        raise AssertionError("mapped duals violate a priced column")
    if abs(omega - best_value) > 1e-7 * (1.0 + abs(best_value)):
        raise AssertionError("dual transformation changed the objective")
    duals = DualSolution(beta=beta, v=best_v, mu=mu, omega=omega, value=best_value)
    return BoundReport(
        name=inst.name,
        procedure="DA",
        dual_bound=best_value,
        primal_bound=best_sol.value if best_sol else None,
        primal_solution=best_sol,
        duals=duals,
        elapsed=_time.monotonic() - t0,
        column_count=len(pool),
        iterations=params.maxit,
    )


# ---------------------------------------------------------------------------
# Procedures CG and DK (column generation on the scaled linearisation)


@dataclass
class CgParams:
    max_rounds: int = 400
    price_limit: int = 300
    delta_ng: int = 12


_BIG = 1e6


def _ccf_master(inst: Instance, pool: ColumnPool):
    """LP data for the scaled linearisation over the pool plus artificials."""
    cost, w, a = pool.arrays()
    n, n1, m = inst.n, inst.n1, inst.m
    n_cols = len(pool)
    n_art = n1
    tot = n_cols + 1 + n_art  # routes, u, artificials
    c = np.zeros(tot)
    c[:n_cols] = cost
    c[n_cols + 1 :] = _BIG
    rows = []
    rels = []
    rhs = []
    for i in range(1, n + 1):
        row = np.zeros(tot)
        row[:n_cols] = a[:, i]
        row[n_cols] = -1.0
        if i <= n1:
            row[n_cols + 1 + (i - 1)] = 1.0
        rows.append(row)
        rels.append("=" if i <= n1 else "<=")
        rhs.append(0.0)
    fleet = np.zeros(tot)
    fleet[:n_cols] = 1.0
    fleet[n_cols] = -m
    rows.append(fleet)
    rels.append("<=")
    rhs.append(0.0)
    norm = np.zeros(tot)
    norm[:n_cols] = w
    rows.append(norm)
    rels.append("=")
    rhs.append(1.0)
    return LinearProgram(c, np.array(rows), rels, np.array(rhs))


def ccf_program(inst: Instance, pool: ColumnPool) -> LinearProgram:
    """The scaled linearisation over a fixed pool (artificials included)."""
    return _ccf_master(inst, pool)


def ncf_program(inst: Instance, pool: ColumnPool) -> LinearProgram:
    """The alternative linearisation over a fixed pool: same rows and columns
    as the plain relaxation, no scaling variable."""
    cost, w, a = pool.arrays()
    n, n1, m = inst.n, inst.n1, inst.m
    beta = float(inst.s[1 : n1 + 1].sum())
    wbar = w - a[:, 1 : n1 + 1] @ inst.s[1 : n1 + 1].astype(float)
    rows = []
    rels = []
    rhs = []
    for i in range(1, n + 1):
        rows.append(beta * a[:, i] + wbar)
        rels.append("=" if i <= n1 else "<=")
        rhs.append(1.0)
    rows.append(beta + m * wbar)
    rels.append("<=")
    rhs.append(float(m))
    return LinearProgram(cost, np.array(rows), rels, np.array(rhs))


def _ccf_duals(inst: Instance, res) -> tuple[np.ndarray, float]:
    mu = np.empty(inst.n + 1)
    mu[1:] = res.duals[: inst.n]
    mu[0] = res.duals[inst.n]  # fleet row
    return mu, float(res.duals[inst.n + 1])  # scaling row


def run_cg(inst: Instance, ng: Optional[NgSets] = None, params: Optional[CgParams] = None) -> BoundReport:
    """Column generation on the scaled linearisation of the relaxation."""
    t0 = _time.monotonic()
    params = params or CgParams()
    if ng is None:
        ng = build_ng_sets(inst, min(params.delta_ng, inst.n))
    graph = NgGraph(inst, ng)
    pool = ColumnPool(inst)
    pool.add_all(seed_routes(inst))
    rounds = 0
    res = None
    for rounds in range(1, params.max_rounds + 1):
        n_solved = len(pool)
        res = solve_lp(_ccf_master(inst, pool))
        if res.status is not LpStatus.OPTIMAL:
            raise InfeasibleInstanceError(f"master LP is {res.status.value}")
        mu, omega = _ccf_duals(inst, res)
        duals = DualSolution(beta=0, mu=mu, omega=omega)
        new = price_ng_routes(inst, ng, duals, cutoff=-1e-7, limit=params.price_limit, graph=graph)
        if not new or pool.add_all(new) == 0:
            break
    if res.x[n_solved + 1 :].sum() > 1e-6:
        raise InfeasibleInstanceError("artificial columns remain in the relaxation optimum")
    mu, omega = _ccf_duals(inst, res)
    return BoundReport(
        name=inst.name,
        procedure="CG",
        dual_bound=float(res.objective),
        duals=DualSolution(beta=0, mu=mu, omega=omega, value=float(res.objective)),
        elapsed=_time.monotonic() - t0,
        column_count=len(pool),
        iterations=rounds,
    )


def _x_master(inst: Instance, pool: ColumnPool, r: float):
    """LP data for the plain relaxation with parametric costs c - r*w."""
    cost, w, a = pool.arrays()
    n, n1, m = inst.n, inst.n1, inst.m
    n_cols = len(pool)
    tot = n_cols + n1
    c = np.zeros(tot)
    c[:n_cols] = cost - r * w
    c[n_cols:] = _BIG
    rows = []
    rels = []
    rhs = []
    for i in range(1, n + 1):
        row = np.zeros(tot)
        row[:n_cols] = a[:, i]
        if i <= n1:
            row[n_cols + i - 1] = 1.0
        rows.append(row)
        rels.append("=" if i <= n1 else "<=")
        rhs.append(1.0)
    fleet = np.zeros(tot)
    fleet[:n_cols] = 1.0
    rows.append(fleet)
    rels.append("<=")
    rhs.append(float(m))
    return LinearProgram(c, np.array(rows), rels, np.array(rhs))


def run_dk(inst: Instance, ng: Optional[NgSets] = None, params: Optional[CgParams] = None) -> BoundReport:
    """Parametric (Dinkelbach) solution of the continuous relaxation, each
    linear program solved by column generation."""
    t0 = _time.monotonic()
    params = params or CgParams()
    if ng is None:
        ng = build_ng_sets(inst, min(params.delta_ng, inst.n))
    graph = NgGraph(inst, ng)
    pool = ColumnPool(inst)
    pool.add_all(seed_routes(inst))
    r = 0.0
    total_cols = 0
    outer = 0
    x = None
    for outer in range(1, 60):
        res = None
        for _ in range(params.max_rounds):
            n_solved = len(pool)
            res = solve_lp(_x_master(inst, pool, r))
            if res.status is not LpStatus.OPTIMAL:
                raise InfeasibleInstanceError(f"master LP is {res.status.value}")
            eta = np.empty(inst.n + 1)
            eta[1:] = res.duals[: inst.n]
            eta[0] = res.duals[inst.n]
            duals = DualSolution(beta=0, mu=eta, omega=r)
            new = price_ng_routes(
                inst, ng, duals, cutoff=-1e-7, limit=params.price_limit, graph=graph
            )
            if not new or pool.add_all(new) == 0:
                break
        if res.x[n_solved:].sum() > 1e-6:
            raise InfeasibleInstanceError("artificial columns remain in the relaxation optimum")
        total_cols += n_solved
        cost, w, a = pool.arrays()
        x = np.zeros(len(pool))
        x[:n_solved] = res.x[:n_solved]
        value = float(res.objective)
        if outer == 1 and r == 0.0:
            pass  # first pass just seeds the ratio
        elif value >= -1e-9:
            break
        num = float(cost @ x)
        den = float(w @ x)
        if den <= 1e-12:
            raise InfeasibleInstanceError("relaxation selects zero working time")
        new_r = num / den
        if outer > 1 and new_r >= r - 1e-15:
            break
        r = new_r
    return BoundReport(
        name=inst.name,
        procedure="DK",
        dual_bound=r,
        elapsed=_time.monotonic() - t0,
        column_count=total_cols,
        iterations=outer,
    )
