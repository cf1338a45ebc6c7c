"""TSPLIB ingestion and generation of the two fractional-objective benchmark classes.

Class ``CA`` instances minimise cost over load (the logistic ratio); class
``PA`` instances maximise profit over time.  Both are derived from CVRP base
instances with EUC_2D integer costs.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class ParseError(ValueError):
    """Malformed instance file; the message names the offending line."""


class UnsupportedFormatError(ValueError):
    """Instance uses a feature outside the supported TSPLIB subset."""


class Objective(enum.Enum):
    COST_OVER_LOAD = "CostOverLoad"
    PROFIT_OVER_TIME = "ProfitOverTime"


def euclid2d_cost(p: Sequence[float], q: Sequence[float]) -> int:
    """TSPLIB EUC_2D distance: round half away from zero (the nint rule)."""
    dx = p[0] - q[0]
    dy = p[1] - q[1]
    return int(math.sqrt(dx * dx + dy * dy) + 0.5)


@dataclass(frozen=True, eq=False)
class CvrpInstance:
    """A capacitated VRP instance with depot relabelled to vertex 0."""

    name: str
    coords: np.ndarray  # (n_vertices, 2)
    demands: np.ndarray  # (n_vertices,) with demands[0] == 0
    capacity: int
    n_vehicles: int

    def __post_init__(self):
        self.coords.setflags(write=False)
        self.demands.setflags(write=False)
        if self.demands[0] != 0:
            raise ParseError("depot demand must be zero")
        if (self.demands > self.capacity).any():
            raise ParseError("a demand exceeds the vehicle capacity")

    @property
    def n_vertices(self) -> int:
        return len(self.demands)

    @property
    def cost_matrix(self) -> np.ndarray:
        n = self.n_vertices
        c = np.zeros((n, n), dtype=np.int64)
        for i in range(n):
            for j in range(i + 1, n):
                c[i, j] = c[j, i] = euclid2d_cost(self.coords[i], self.coords[j])
        return c


def parse_tsplib(text: str) -> CvrpInstance:
    """Parse a TSPLIB ``.vrp`` file (EUC_2D only) into a CvrpInstance.

    The depot from DEPOT_SECTION is relabelled to index 0 and the vehicle
    count is read from the ``-k<K>`` suffix of NAME.
    """
    name = ""
    dimension = None
    capacity = None
    ew_type = None
    coords: dict[int, tuple[float, float]] = {}
    demands: dict[int, int] = {}
    depot_ids: list[int] = []
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line == "EOF":
            section = None
            continue
        key = line.split(":")[0].strip().upper()
        if ":" in line and key.isidentifier() and not line[0].isdigit() and section != "DEPOT":
            value = line.split(":", 1)[1].strip()
            if key == "NAME":
                name = value
            elif key == "DIMENSION":
                dimension = int(value)
            elif key == "CAPACITY":
                capacity = int(value)
            elif key == "EDGE_WEIGHT_TYPE":
                ew_type = value
            section = None
            continue
        upper = line.upper()
        if upper.startswith("NODE_COORD_SECTION"):
            section = "COORD"
            continue
        if upper.startswith("DEMAND_SECTION"):
            section = "DEMAND"
            continue
        if upper.startswith("DEPOT_SECTION"):
            section = "DEPOT"
            continue
        if upper.endswith("_SECTION"):
            raise UnsupportedFormatError(f"line {lineno}: unsupported section {line!r}")
        parts = line.split()
        try:
            if section == "COORD":
                coords[int(parts[0])] = (float(parts[1]), float(parts[2]))
            elif section == "DEMAND":
                demands[int(parts[0])] = int(parts[1])
            elif section == "DEPOT":
                v = int(parts[0])
                if v != -1:
                    depot_ids.append(v)
            else:
                raise ParseError(f"line {lineno}: unexpected data {line!r}")
        except (IndexError, ValueError) as exc:
            raise ParseError(f"line {lineno}: cannot parse {line!r}") from exc

    if ew_type != "EUC_2D":
        raise UnsupportedFormatError(f"EDGE_WEIGHT_TYPE must be EUC_2D, got {ew_type}")
    if dimension is None or capacity is None:
        raise ParseError("missing DIMENSION or CAPACITY header")
    if not coords:
        raise ParseError("missing NODE_COORD_SECTION")
    if not demands:
        raise ParseError("missing DEMAND_SECTION")
    if not depot_ids:
        raise ParseError("missing DEPOT_SECTION")
    if len(coords) != dimension or len(demands) != dimension:
        raise ParseError(
            f"expected {dimension} vertices, parsed {len(coords)} coords / {len(demands)} demands"
        )
    depot = depot_ids[0]
    order = [depot] + [v for v in sorted(coords) if v != depot]
    k = _vehicles_from_name(name)
    return CvrpInstance(
        name=name,
        coords=np.array([coords[v] for v in order], dtype=float),
        demands=np.array([demands[v] for v in order], dtype=np.int64),
        capacity=capacity,
        n_vehicles=k,
    )


def _vehicles_from_name(name: str) -> int:
    for token in reversed(name.replace("-", " ").split()):
        if token.lower().startswith("k") and token[1:].isdigit():
            return int(token[1:])
    raise ParseError(f"cannot read the vehicle count from NAME {name!r} (missing -k suffix)")


def bpp_min_bins(weights: Sequence[int], capacity: int) -> int:
    """Exact minimum number of capacity-limited bins (branch and bound).

    First-fit decreasing supplies the initial upper bound and the total-weight
    ceiling the lower bound; sizes here are small enough for exact search.
    """
    weights = sorted((int(w) for w in weights), reverse=True)
    if not weights:
        return 0
    if weights[0] > capacity:
        raise ValueError(f"item of weight {weights[0]} exceeds bin capacity {capacity}")
    lower = -(-sum(weights) // capacity)

    def ffd() -> int:
        bins: list[int] = []
        for w in weights:
            for b in range(len(bins)):
                if bins[b] + w <= capacity:
                    bins[b] += w
                    break
            else:
                bins.append(w)
        return len(bins)

    best = ffd()
    if best == lower:
        return best

    n = len(weights)

    def search(idx: int, bins: list[int]) -> None:
        nonlocal best
        if len(bins) >= best:
            return
        if idx == n:
            best = len(bins)
            return
        remaining = sum(weights[idx:])
        used = len(bins)
        slack = sum(capacity - b for b in bins)
        need = used + max(0, -(-(remaining - slack) // capacity))
        if need >= best:
            return
        w = weights[idx]
        seen = set()
        for b in range(len(bins)):
            if bins[b] + w <= capacity and bins[b] not in seen:
                seen.add(bins[b])
                bins[b] += w
                search(idx + 1, bins)
                bins[b] -= w
                if best == lower:
                    return
        bins.append(w)
        search(idx + 1, bins)
        bins.pop()

    search(0, [])
    return best


@dataclass(frozen=True, eq=False)
class Instance:
    """A fractional-objective routing instance.

    Customers 1..n1 are mandatory, n1+1..n1+n2 optional.  All costs and times
    are integers; ``d`` may hold negative entries for profit objectives.
    """

    name: str
    n1: int
    n2: int
    s: np.ndarray  # service times, s[0] == 0
    d: np.ndarray  # arc costs
    t: np.ndarray  # arc travel times
    m: int
    T: int
    objective: Objective

    def __post_init__(self):
        for arr in (self.s, self.d, self.t):
            arr.setflags(write=False)
        n = self.n1 + self.n2
        if self.n1 <= 0:
            raise ValueError("at least one mandatory customer is required")
        if len(self.s) != n + 1 or self.d.shape != (n + 1, n + 1) or self.t.shape != (n + 1, n + 1):
            raise ValueError("inconsistent instance dimensions")
        if self.s[0] != 0:
            raise ValueError("depot service time must be zero")
        if (self.s[1:] <= 0).any():
            raise ValueError("customer service times must be positive")
        if (self.t < 0).any():
            raise ValueError("travel times must be nonnegative")
        if self.T <= 0 or self.m <= 0:
            raise ValueError("fleet size and working-time limit must be positive")
        for i in range(1, self.n1 + 1):
            if self.s[i] + self.t[0, i] + self.t[i, 0] > self.T:
                raise ValueError(f"mandatory customer {i} cannot be served within T={self.T}")

    @property
    def n(self) -> int:
        return self.n1 + self.n2

    @property
    def mandatory(self) -> range:
        return range(1, self.n1 + 1)

    @property
    def optional(self) -> range:
        return range(self.n1 + 1, self.n + 1)

    @property
    def customers(self) -> range:
        return range(1, self.n + 1)


def objective_structure(inst: Instance) -> str:
    """Which route quantity is order-invariant within a fixed visited set.

    'load': travel times are all zero, so same-set routes share their working
    time (cost-over-load shape).  'time': arc costs depend only on the head,
    so same-set routes share their cost (profit-over-time shape).  'general'
    otherwise.
    """
    if not inst.t.any():
        return "load"
    d = inst.d
    for j in inst.customers:
        col = d[:, j]
        if not ((col == col[0]) | (np.arange(inst.n + 1) == j)).all():
            return "general"
    return "time"


def make_class_ca(cvrp: CvrpInstance, alpha: float) -> Instance:
    """Cost-over-load instance: capacity plays the working-time limit.

    The fleet limit adds one spare vehicle to the minimum bin count of the
    mandatory demands, capped at the CVRP vehicle count (this reproduces the
    published fleet sizes).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0,1)")
    nbar = cvrp.n_vertices
    n = nbar - 1
    n1 = int(alpha * n)
    if n1 < 1:
        raise ValueError("alpha too small: no mandatory customers")
    if (cvrp.demands[1:] == 0).any():
        raise ValueError("all customers need positive demand (service time)")
    c = cvrp.cost_matrix
    bins = bpp_min_bins(cvrp.demands[1 : n1 + 1], cvrp.capacity)
    m = min(bins + 1, cvrp.n_vehicles)
    return Instance(
        name=f"{cvrp.name}{'a' if alpha == 0.5 else 'b' if alpha == 0.75 else f'@{alpha:g}'}",
        n1=n1,
        n2=n - n1,
        s=cvrp.demands.astype(np.int64).copy(),
        d=c,
        t=np.zeros_like(c),
        m=m,
        T=cvrp.capacity,
        objective=Objective.COST_OVER_LOAD,
    )


def _sweep_routes(cvrp: CvrpInstance) -> list[list[int]]:
    """Deterministic sweep: customers by polar angle, routes cut at capacity."""
    depot = cvrp.coords[0]
    angles = []
    for i in range(1, cvrp.n_vertices):
        dx = cvrp.coords[i][0] - depot[0]
        dy = cvrp.coords[i][1] - depot[1]
        angles.append((math.atan2(dy, dx), i))
    angles.sort()
    routes: list[list[int]] = [[]]
    load = 0
    for _, i in angles:
        q = int(cvrp.demands[i])
        if load + q > cvrp.capacity and routes[-1]:
            routes.append([])
            load = 0
        routes[-1].append(i)
        load += q
    return routes


def make_class_pa(cvrp: CvrpInstance, alpha: float) -> Instance:
    """Profit-over-time instance: profit q_j is collected on entering j.

    Service times, the working-time limit and the fleet size come from a
    deterministic sweep of the base CVRP (the published generation heuristic
    is unavailable), so these instances are reproducible but not comparable
    with published profit values.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0,1)")
    nbar = cvrp.n_vertices
    n = nbar - 1
    n1 = int(alpha * n)
    if n1 < 1:
        raise ValueError("alpha too small: no mandatory customers")
    c = cvrp.cost_matrix
    s = np.zeros(nbar, dtype=np.int64)
    s[1:] = -(-cvrp.demands[1:] // 2)
    routes = _sweep_routes(cvrp)
    durations = []
    for r in routes:
        path = [0] + r + [0]
        dur = sum(int(s[v]) for v in r)
        dur += sum(int(c[a, b]) for a, b in zip(path, path[1:]))
        durations.append(dur)
    T = math.ceil(1.05 * max(durations))
    d = np.zeros_like(c)
    for j in range(1, nbar):
        d[:, j] = -int(cvrp.demands[j])
    np.fill_diagonal(d, 0)
    return Instance(
        name=f"{cvrp.name}{'a' if alpha == 0.5 else 'b' if alpha == 0.75 else f'@{alpha:g}'}",
        n1=n1,
        n2=n - n1,
        s=s,
        d=d,
        t=c.copy(),
        m=len(routes),
        T=T,
        objective=Objective.PROFIT_OVER_TIME,
    )


def write_vrpfo(inst: Instance) -> str:
    """Serialise to the line-oriented VRPFO v1 text format."""
    lines = ["VRPFO v1", f"{inst.n1} {inst.n2} {inst.m} {inst.T} {inst.objective.value}"]
    for i in range(inst.n + 1):
        lines.append(f"{i} {int(inst.s[i])}")
    lines.append("D")
    for row in inst.d:
        lines.append(" ".join(str(int(x)) for x in row))
    lines.append("Tt")
    for row in inst.t:
        lines.append(" ".join(str(int(x)) for x in row))
    return "\n".join(lines) + "\n"


def read_vrpfo(text: str, name: str = "") -> Instance:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "VRPFO v1":
        raise ParseError("missing 'VRPFO v1' header")
    try:
        n1_s, n2_s, m_s, t_s, obj_s = lines[1].split()
        n1, n2, m, T = int(n1_s), int(n2_s), int(m_s), int(t_s)
        objective = Objective(obj_s)
    except (IndexError, ValueError) as exc:
        raise ParseError(f"bad VRPFO header line: {lines[1]!r}") from exc
    n = n1 + n2
    s = np.zeros(n + 1, dtype=np.int64)
    pos = 2
    for _ in range(n + 1):
        i_s, si = lines[pos].split()
        s[int(i_s)] = int(si)
        pos += 1

    def read_matrix(tag: str, at: int) -> tuple[np.ndarray, int]:
        if lines[at] != tag:
            raise ParseError(f"expected matrix tag {tag!r}, got {lines[at]!r}")
        rows = []
        for r in range(n + 1):
            rows.append([int(x) for x in lines[at + 1 + r].split()])
            if len(rows[-1]) != n + 1:
                raise ParseError(f"matrix {tag} row {r} has wrong length")
        return np.array(rows, dtype=np.int64), at + n + 2

    d, pos = read_matrix("D", pos)
    t, pos = read_matrix("Tt", pos)
    return Instance(name=name, n1=n1, n2=n2, s=s, d=d, t=t, m=m, T=T, objective=objective)
