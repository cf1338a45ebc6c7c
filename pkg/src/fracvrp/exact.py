"""The full exact method: bounds, route reduction, integer parametric loop.

Flow per run: the integer-relaxation bound supplies vehicle-count limits, the
dual-ascent bound supplies transformed duals and reduced costs, route
enumeration keeps only columns below the variable-reduction threshold, and
the parametric loop solves set-partitioning problems until the exact sign
test certifies the ratio.  Optimality follows either from a complete route
set or from the induced bound on the excluded columns.
"""

from __future__ import annotations

import math
import time as _time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .bounds import (
    BoundReport,
    CbParams,
    DaParams,
    DualSolution,
    InfeasibleInstanceError,
    run_cb,
    run_da,
)
from .core import Ratio, Route, Solution, route_from_sequence, solution_value
from .genr import ReducedSet, corollary1_gamma, generate_reduced_set
from .instance import Instance
from .mip import MipResult, NoCoverError, solve_fp
from .ngpath import build_ng_sets


class CertificateError(AssertionError):
    """A convergence property that must hold was violated at runtime."""


def corollary1_threshold(
    w_ell: float, z_star: float, db_ccg: float, c_bar_0: float, m_max: int, T: int
) -> float:
    """Reduced-cost elimination threshold for a route of working time w_ell."""
    return corollary1_gamma(w_ell, z_star, db_ccg, c_bar_0, m_max, T)


@dataclass
class ExactParams:
    itermax: int = 3
    delta_max: int = 300_000
    tlim: float = 3600.0
    gapmax: float = math.inf
    eps1: float = 5.0
    eps2: float = 3600.0
    nstatb: int = 200_000_000
    ng_delta: int = 12
    cb: CbParams = field(default_factory=CbParams)
    da: DaParams = field(default_factory=DaParams)

    def __post_init__(self):
        if self.eps1 <= 1:
            raise ValueError("eps1 must exceed 1")
        if self.eps2 <= 0:
            raise ValueError("eps2 must be positive")


@dataclass
class IterationTrace:
    n_routes: int
    saturated: str  # '', 'delta_max' or 'nstatb'
    value: Optional[Ratio]
    dk_iterations: int
    ip_timeout: bool
    db_new: float
    elapsed: float
    rbar_optimal: bool
    fp_optimal: bool


@dataclass
class DinkelbachCertificates:
    """Per-iteration data backing the convergence assertions.

    Entry k describes solution y_k: y_0 is the starting incumbent, y_k for
    k >= 1 the (possibly time-limited) solution of the k-th parametric
    problem, solved at ratio(y_{k-1}).  Every stored y_k for k >= 1 had a
    strictly negative parametric value; the terminal solution is kept apart.
    """

    ratios: list[Fraction] = field(default_factory=list)
    denominators: list[int] = field(default_factory=list)
    numerators: list[int] = field(default_factory=list)
    proven: list[bool] = field(default_factory=list)
    terminal_sign: Optional[Fraction] = None
    final_denominator: Optional[int] = None
    final_proven: bool = False

    def check_monotone(self) -> None:
        for a, b in zip(self.ratios, self.ratios[1:]):
            if not b < a:
                raise CertificateError(f"ratio sequence not strictly decreasing: {a} -> {b}")

    def check_denominators(self) -> None:
        # d(y_{k+1}) < d(y_k) needs y_k optimal for its parametric problem
        # and the next parametric value negative (true for every stored k+1)
        for k in range(1, len(self.denominators) - 1):
            if self.proven[k]:
                if not self.denominators[k + 1] < self.denominators[k]:
                    raise CertificateError(
                        f"denominators not decreasing: {self.denominators[k]} -> "
                        f"{self.denominators[k + 1]}"
                    )

    def check_terminal(self) -> None:
        if self.terminal_sign is None or self.terminal_sign < 0:
            raise CertificateError(f"terminal parametric value negative: {self.terminal_sign}")

    def check_contraction(self) -> None:
        # superlinear contraction towards the final ratio, for iterations
        # whose parametric problem was solved to proven optimality
        if not self.final_proven or self.final_denominator is None:
            return
        r_bar = self.ratios[-1]
        d_bar = self.final_denominator
        for a in range(len(self.ratios) - 1):
            if not self.proven[a + 1] or self.ratios[a] == r_bar:
                continue
            lhs = (r_bar - self.ratios[a + 1]) / (r_bar - self.ratios[a])
            rhs = 1 - Fraction(d_bar, self.denominators[a + 1])
            if lhs > rhs:
                raise CertificateError(f"contraction violated at step {a}: {lhs} > {rhs}")

    def verify(self) -> None:
        self.check_monotone()
        self.check_denominators()
        self.check_terminal()
        self.check_contraction()


@dataclass
class ExactResult:
    status: str  # 'Optimal' | 'GapReached' | 'IterLimit'
    solution: Optional[Solution]
    value: Optional[Ratio]
    db_new: float
    db_ccg: float
    trace: list[IterationTrace]
    cb_report: BoundReport
    da_report: BoundReport
    certificates: list[DinkelbachCertificates]
    elapsed: float

    def trace_csv(self) -> str:
        lines = ["iter,Rbar,saturated,%z,Iter,IP,%B,time,Rbar_optimal,FP_optimal"]
        z = float(self.value) if self.value is not None else math.nan
        for k, tr in enumerate(self.trace, start=1):
            pz = 100.0 * float(tr.value) / z if tr.value is not None and z else math.nan
            pb = 100.0 * tr.db_new / z if math.isfinite(tr.db_new) and z else math.nan
            lines.append(
                f"{k},{tr.n_routes},{tr.saturated},{pz:.1f},{tr.dk_iterations},"
                f"{'*' if tr.ip_timeout else ''},{pb:.1f},{tr.elapsed:.1f},"
                f"{int(tr.rbar_optimal)},{int(tr.fp_optimal)}"
            )
        return "\n".join(lines)


@dataclass
class _Columns:
    """Reduced set plus injected incumbent columns, indexable by sequence."""

    seqs: list[tuple[int, ...]]
    cost: np.ndarray
    time: np.ndarray
    visits: np.ndarray
    index: dict[tuple[int, ...], int]

    @classmethod
    def from_reduced(cls, inst: Instance, rset: ReducedSet) -> "_Columns":
        cols = cls(
            seqs=list(rset.seqs),
            cost=rset.cost.copy(),
            time=rset.time.copy(),
            visits=rset.visits.copy(),
            index={seq: k for k, seq in enumerate(rset.seqs)},
        )
        return cols

    def inject(self, inst: Instance, routes) -> None:
        new_rows = []
        for r in routes:
            if r.vertices in self.index:
                continue
            self.index[r.vertices] = len(self.seqs) + len(new_rows)
            new_rows.append(r)
        if not new_rows:
            return
        add_vis = np.zeros((len(new_rows), inst.n + 1), dtype=np.uint8)
        for k, r in enumerate(new_rows):
            for v in r.customers:
                add_vis[k, v] = 1
        self.seqs.extend(r.vertices for r in new_rows)
        self.cost = np.concatenate([self.cost, [r.cost for r in new_rows]])
        self.time = np.concatenate([self.time, [r.time for r in new_rows]])
        self.visits = np.vstack([self.visits, add_vis])

    def solution(self, inst: Instance, idx) -> Solution:
        routes = tuple(route_from_sequence(inst, self.seqs[k]) for k in idx)
        return Solution(routes, solution_value(inst, routes))


def dinkelbach_reduced(
    inst: Instance,
    cols: _Columns,
    x0: Solution,
    m_min: int,
    m_max: int,
    tlim: float,
) -> tuple[Ratio, Solution, bool, int, DinkelbachCertificates]:
    """Parametric loop over a fixed column set, exact rational sign test.

    ``x0`` must be representable inside ``cols`` (the caller injects it).
    """
    warm = [cols.index[r.vertices] for r in x0.routes]
    r = x0.value.as_fraction()
    certs = DinkelbachCertificates()
    certs.ratios.append(r)
    certs.numerators.append(sum(rt.cost for rt in x0.routes))
    certs.denominators.append(sum(rt.time for rt in x0.routes))
    certs.proven.append(False)  # the start incumbent solves no parametric problem
    best_idx = warm
    fp_optimal = False
    iters = 0
    for _ in range(1000):
        iters += 1
        costs = cols.cost.astype(float) - float(r) * cols.time.astype(float)
        res = solve_fp(cols.visits, costs, inst.n1, m_min, m_max, warm=best_idx, tlim=tlim)
        sel = res.x
        num = int(cols.cost[sel].sum())
        den = int(cols.time[sel].sum())
        z_sign = Fraction(num) - r * den  # exact parametric value of the incumbent
        if z_sign >= 0:
            fp_optimal = res.proven_optimal
            certs.terminal_sign = z_sign
            certs.final_proven = res.proven_optimal
            if den > 0:
                best_idx = sel
                certs.final_denominator = den
            else:
                certs.final_denominator = certs.denominators[-1]
            break
        new_r = Fraction(num, den)
        if not new_r < r:
            raise CertificateError(f"parametric ratio failed to decrease: {r} -> {new_r}")
        r = new_r
        best_idx = sel
        certs.ratios.append(r)
        certs.numerators.append(num)
        certs.denominators.append(den)
        certs.proven.append(res.proven_optimal)
    else:
        raise CertificateError("parametric loop failed to terminate")
    certs.verify()
    sol = cols.solution(inst, best_idx)
    return Ratio(r.numerator, r.denominator), sol, fp_optimal, iters, certs


def _theorem3_check(inst: Instance, sol: Solution, duals: DualSolution, c_bar_0: float) -> None:
    """Every feasible solution sits above the dual value plus its own
    reduced-cost mass over its working time."""
    mu, omega = duals.mu, duals.omega
    rc_sum = 0.0
    w_sum = 0
    for r in sol.routes:
        rc = r.cost - sum(mu[v] for v in r.customers) - mu[0] - r.time * omega
        rc_sum += rc
        w_sum += r.time
    lhs = float(sol.value)
    rhs = omega + (rc_sum + c_bar_0) / w_sum
    scale = 1e-6 * (1.0 + abs(lhs))
    if lhs < rhs - scale:
        raise CertificateError(f"primal value {lhs} below its dual gap bound {rhs}")


def solve_exact(inst: Instance, params: Optional[ExactParams] = None) -> ExactResult:
    """Run the complete pipeline to proven optimality (or a bounded gap)."""
    params = params or ExactParams()
    t0 = _time.monotonic()
    ng = build_ng_sets(inst, min(params.ng_delta, inst.n))
    cb = run_cb(inst, ng=ng, params=params.cb)
    da = run_da(inst, ng=ng, params=params.da)
    duals = da.duals
    db_ccg = da.dual_bound
    mu, omega = duals.mu, duals.omega
    c_bar_0 = float(mu[1:].sum() + inst.m * mu[0])
    m_min = cb.m_min or 1
    m_max = cb.m_max or inst.m

    best: Optional[Solution] = None
    for rep in (cb, da):
        if rep.primal_solution is not None:
            _theorem3_check(inst, rep.primal_solution, duals, c_bar_0)
            if best is None or rep.primal_solution.value < best.value:
                best = rep.primal_solution

    delta_max = params.delta_max
    tlim = params.tlim
    trace: list[IterationTrace] = []
    certs_all: list[DinkelbachCertificates] = []
    status = "IterLimit"
    db_new = -math.inf
    for it in range(1, max(1, params.itermax) + 1):
        it_start = _time.monotonic()
        z_float = float(best.value) if best is not None else math.inf
        rset = generate_reduced_set(
            inst,
            duals,
            z_float,
            db_ccg,
            c_bar_0,
            m_max,
            delta_max=delta_max,
            nstatb=params.nstatb,
            ng_delta=params.ng_delta,
        )
        saturated = ""
        if not rset.optimal_flag:
            saturated = "delta_max" if len(rset) >= delta_max else "nstatb"
        cols = _Columns.from_reduced(inst, rset)
        if best is not None:
            cols.inject(inst, [r for r in best.routes])
        if best is None:
            # no heuristic start: look for any feasible cover at r = 0
            try:
                res = solve_fp(
                    cols.visits,
                    cols.cost.astype(float),
                    inst.n1,
                    m_min,
                    m_max,
                    warm=None,
                    tlim=tlim,
                )
                best = cols.solution(inst, res.x)
            except NoCoverError:
                if rset.optimal_flag:
                    raise InfeasibleInstanceError(
                        "no feasible solution exists within the fleet limits"
                    )
                delta_max = int(math.ceil(params.eps1 * delta_max))
                tlim += params.eps2
                continue
        value, sol, fp_optimal, dk_iters, certs = dinkelbach_reduced(
            inst, cols, best, m_min, m_max, tlim
        )
        certs_all.append(certs)
        timed_out = not fp_optimal
        if value < best.value:
            best = sol
        if math.isfinite(rset.gapmin):
            db_new = db_ccg + (rset.gapmin + c_bar_0) / (m_max * inst.T)
        else:
            db_new = math.inf
        trace.append(
            IterationTrace(
                n_routes=len(rset),
                saturated=saturated,
                value=value,
                dk_iterations=dk_iters,
                ip_timeout=timed_out,
                db_new=db_new,
                elapsed=_time.monotonic() - it_start,
                rbar_optimal=rset.optimal_flag,
                fp_optimal=fp_optimal,
            )
        )
        if fp_optimal and rset.optimal_flag:
            status = "Optimal"
            break
        if fp_optimal and float(best.value) <= db_new + 1e-9:
            status = "Optimal"
            break
        if it >= params.itermax:
            status = "IterLimit"
            break
        gap_ref = db_new if math.isfinite(db_new) else db_ccg
        if math.isfinite(params.gapmax) and gap_ref != 0:
            if (float(best.value) - gap_ref) / abs(gap_ref) <= params.gapmax:
                status = "GapReached"
                break
        delta_max = int(math.ceil(params.eps1 * delta_max))
        tlim += params.eps2

    return ExactResult(
        status=status,
        solution=best,
        value=best.value if best is not None else None,
        db_new=db_new,
        db_ccg=db_ccg,
        trace=trace,
        cb_report=cb,
        da_report=da,
        certificates=certs_all,
        elapsed=_time.monotonic() - t0,
    )
