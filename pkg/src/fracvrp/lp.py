"""Dense revised-simplex LP oracle.

Master problems in this solver have at most a few hundred rows, so each
iteration refactorises the basis with a fresh ``numpy.linalg.solve``; that is
slower than updating a factorisation but immune to drift.  Entering variables
are picked by the Dantzig rule over column chunks and the solver switches to
Bland's rule permanently once it detects stalling, which keeps runs finite
and deterministic.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
_CHUNK = 4096


class LpStatus(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


@dataclass
class LinearProgram:
    """min c.x  s.t.  A x (rel) b,  0 <= x (<= upper where given)."""

    costs: np.ndarray
    a: np.ndarray  # (n_rows, n_vars) dense coefficients
    rels: Sequence[str]  # '<=', '>=', '=' per row
    rhs: np.ndarray
    upper: Optional[np.ndarray] = None  # np.inf where unbounded above

    def __post_init__(self):
        self.costs = np.asarray(self.costs, dtype=float)
        self.a = np.asarray(self.a, dtype=float)
        self.rhs = np.asarray(self.rhs, dtype=float)
        if self.a.ndim != 2 or self.a.shape != (len(self.rhs), len(self.costs)):
            raise ValueError("inconsistent LP dimensions")
        if len(self.rels) != len(self.rhs):
            raise ValueError("one relation per row required")
        for r in self.rels:
            if r not in ("<=", ">=", "="):
                raise ValueError(f"unknown relation {r!r}")
        if not (np.isfinite(self.a).all() and np.isfinite(self.rhs).all() and np.isfinite(self.costs).all()):
            raise ValueError("LP coefficients must be finite")


@dataclass
class LpResult:
    status: LpStatus
    x: Optional[np.ndarray] = None
    duals: Optional[np.ndarray] = None
    objective: Optional[float] = None


def solve_lp(lp: LinearProgram) -> LpResult:
    """Two-phase revised simplex; duals are reported for the original rows."""
    n = len(lp.costs)
    a = lp.a
    rels = list(lp.rels)
    b = lp.rhs.copy()

    # Optional upper bounds become explicit rows; the routing masters never
    # use them, so the extra rows cost nothing in practice.
    ub_rows = []
    if lp.upper is not None:
        for j, u in enumerate(np.asarray(lp.upper, dtype=float)):
            if np.isfinite(u):
                row = np.zeros(n)
                row[j] = 1.0
                ub_rows.append((row, u))
    if ub_rows:
        a = np.vstack([a] + [r for r, _ in ub_rows])
        b = np.concatenate([b, [u for _, u in ub_rows]])
        rels = rels + ["<="] * len(ub_rows)

    m = len(b)
    sign = np.ones(m)
    neg = b < 0
    sign[neg] = -1.0
    a = a * sign[:, None]
    b = b * sign
    flipped_rels = []
    for r, s in zip(rels, sign):
        if s < 0:
            r = {"<=": ">=", ">=": "<=", "=": "="}[r]
        flipped_rels.append(r)

    # Standard form: append one slack/surplus column per inequality row.
    slack_cols = []
    slack_row = []
    for i, r in enumerate(flipped_rels):
        if r == "<=":
            slack_cols.append(1.0)
            slack_row.append(i)
        elif r == ">=":
            slack_cols.append(-1.0)
            slack_row.append(i)
    n_slack = len(slack_cols)
    full = np.zeros((m, n + n_slack + m))
    full[:, :n] = a
    for k, (i, v) in enumerate(zip(slack_row, slack_cols)):
        full[i, n + k] = v
    art0 = n + n_slack
    for i in range(m):
        full[i, art0 + i] = 1.0

    basis = list(range(art0, art0 + m))
    # Slack columns of '<=' rows can seed the basis directly.
    for k, (i, v) in enumerate(zip(slack_row, slack_cols)):
        if v > 0:
            basis[i] = n + k

    # Artificials may leave the basis but never re-enter it.
    used = np.zeros(full.shape[1], dtype=bool)
    used[: n + n_slack] = True

    phase1_cost = np.zeros(full.shape[1])
    phase1_cost[art0:] = 1.0
    status, basis = _simplex_core(full, b, phase1_cost, basis, used)
    if status is LpStatus.UNBOUNDED:  # cannot happen with bounded phase-1 objective
        return LpResult(LpStatus.INFEASIBLE)
    xb = _basic_solution(full, b, basis)
    if phase1_cost[basis] @ xb > 1e-7 * (1.0 + abs(b).max(initial=0.0)):
        return LpResult(LpStatus.INFEASIBLE)

    keep = _purge_artificials(full, b, basis, art0)
    if keep is not None:
        full = full[keep][:, : art0]
        b = b[keep]
        row_map = np.flatnonzero(keep)
        basis = [basis[i] for i in range(m) if keep[i]]
        m2 = len(b)
    else:
        full = full[:, :art0]
        row_map = np.arange(m)
        m2 = m

    phase2_cost = np.zeros(full.shape[1])
    phase2_cost[:n] = lp.costs
    used2 = np.ones(full.shape[1], dtype=bool)
    status, basis = _simplex_core(full, b, phase2_cost, basis, used2)
    if status is LpStatus.UNBOUNDED:
        return LpResult(LpStatus.UNBOUNDED)

    xb = _basic_solution(full, b, basis)
    x = np.zeros(full.shape[1])
    x[basis] = xb
    bmat = full[:, basis]
    y = np.linalg.solve(bmat.T, phase2_cost[basis])
    duals_full = np.zeros(m)
    duals_full[row_map] = y
    duals = duals_full[: len(lp.rhs)] * sign[: len(lp.rhs)]
    obj = float(phase2_cost[basis] @ xb)
    return LpResult(LpStatus.OPTIMAL, x=x[:n].copy(), duals=duals, objective=obj)


def _basic_solution(full: np.ndarray, b: np.ndarray, basis: list[int]) -> np.ndarray:
    xb = np.linalg.solve(full[:, basis], b)
    xb[np.abs(xb) < FEAS_TOL] = 0.0
    return xb


def _simplex_core(full, b, cost, basis, allowed) -> tuple[LpStatus, list[int]]:
    """Revised simplex on equality-standard form; mutates and returns the basis."""
    m = len(b)
    ncols = full.shape[1]
    bland = False
    stall = 0
    last_obj = np.inf
    max_iter = 20000 + 200 * (m + ncols // 64)
    for _ in range(max_iter):
        bmat = full[:, basis]
        xb = np.linalg.solve(bmat, b)
        y = np.linalg.solve(bmat.T, cost[basis])
        obj = cost[basis] @ xb
        if obj < last_obj - 1e-12:
            stall = 0
        else:
            stall += 1
            if stall > 2 * (m + 20):
                bland = True
        last_obj = obj

        in_basis = np.zeros(ncols, dtype=bool)
        in_basis[basis] = True
        entering = -1
        if bland:
            for j in range(ncols):
                if allowed[j] and not in_basis[j]:
                    rc = cost[j] - y @ full[:, j]
                    if rc < -OPT_TOL:
                        entering = j
                        break
        else:
            for start in range(0, ncols, _CHUNK):
                stop = min(start + _CHUNK, ncols)
                rc = cost[start:stop] - y @ full[:, start:stop]
                rc[in_basis[start:stop]] = np.inf
                rc[~allowed[start:stop]] = np.inf
                k = int(np.argmin(rc))
                if rc[k] < -OPT_TOL:
                    entering = start + k
                    break
        if entering < 0:
            return LpStatus.OPTIMAL, basis

        w = np.linalg.solve(bmat, full[:, entering])
        pos = w > 1e-10
        if not pos.any():
            return LpStatus.UNBOUNDED, basis
        ratios = np.full(m, np.inf)
        ratios[pos] = np.maximum(xb[pos], 0.0) / w[pos]
        rmin = ratios.min()
        cand = np.flatnonzero(ratios <= rmin + 1e-12)
        # Bland-compatible leaving rule: smallest basic variable index.
        leaving = cand[int(np.argmin(np.asarray([basis[i] for i in cand])))]
        basis[leaving] = entering
    raise RuntimeError("simplex iteration limit exceeded")


def _purge_artificials(full, b, basis, art0):
    """Pivot basic artificials out after phase 1; returns a row mask if any
    row turned out redundant, else None."""
    m = len(b)
    redundant = np.zeros(m, dtype=bool)
    for i in range(m):
        if basis[i] < art0:
            continue
        bmat = full[:, basis]
        e = np.zeros(m)
        e[i] = 1.0
        # (B^-1 A)[i, j] for all structural/slack columns in one solve.
        row = np.linalg.solve(bmat.T, e) @ full[:, :art0]
        in_basis = np.zeros(art0, dtype=bool)
        for v in basis:
            if v < art0:
                in_basis[v] = True
        row[in_basis] = 0.0
        cand = np.flatnonzero(np.abs(row) > 1e-7)
        if cand.size:
            basis[i] = int(cand[0])
        else:
            redundant[i] = True
    if redundant.any():
        return ~redundant
    return None


def export_cplex_lp(lp: LinearProgram, name: str = "lp") -> str:
    """Fixed-point text export in CPLEX LP grammar, for external cross-checks."""
    out = [f"\\ {name}", "Minimize", " obj: " + _expr(lp.costs)]
    out.append("Subject To")
    for i, (row, rel, rhs) in enumerate(zip(lp.a, lp.rels, lp.rhs)):
        op = {"<=": "<=", ">=": ">=", "=": "="}[rel]
        out.append(f" c{i}: " + _expr(row) + f" {op} {rhs:.12g}")
    out.append("Bounds")
    for j in range(len(lp.costs)):
        if lp.upper is not None and np.isfinite(lp.upper[j]):
            out.append(f" 0 <= x{j} <= {lp.upper[j]:.12g}")
        else:
            out.append(f" 0 <= x{j}")
    out.append("End")
    return "\n".join(out) + "\n"


def _expr(coeffs: np.ndarray) -> str:
    terms = []
    for j, c in enumerate(coeffs):
        if c == 0:
            continue
        sign = "+" if c >= 0 else "-"
        terms.append(f"{sign} {abs(c):.12g} x{j}")
    if not terms:
        return "0 x0"
    first = terms[0]
    if first.startswith("+ "):
        first = first[2:]
    return " ".join([first] + terms[1:])
