import math

import numpy as np
import pytest

from fracvrp import bruteforce as bf
from fracvrp.instance import Objective
from fracvrp.mip import MipResult, NoCoverError, solve_fp


def columns_from_routes(inst, routes):
    visits = np.zeros((len(routes), inst.n + 1), dtype=np.uint8)
    for k, r in enumerate(routes):
        for v in r.customers:
            visits[k, v] = 1
    cost = np.array([r.cost for r in routes], dtype=np.int64)
    time = np.array([r.time for r in routes], dtype=np.int64)
    return visits, cost, time


def test_disjoint_cover_is_found():
    visits = np.zeros((3, 7), dtype=np.uint8)
    visits[0, [1, 2]] = 1
    visits[1, [3, 4]] = 1
    visits[2, [5, 6]] = 1
    res = solve_fp(visits, np.array([5.0, 6.0, 7.0]), n1=6, m_min=1, m_max=3)
    assert res.proven_optimal
    assert res.x == [0, 1, 2]
    assert res.objective == pytest.approx(18.0)


def test_root_integral_means_single_node():
    visits = np.zeros((2, 3), dtype=np.uint8)
    visits[0, 1] = 1
    visits[1, 2] = 1
    res = solve_fp(visits, np.array([1.0, 1.0]), n1=2, m_min=1, m_max=2)
    assert res.proven_optimal and res.nodes == 1


def test_infeasible_cover():
    visits = np.zeros((1, 3), dtype=np.uint8)
    visits[0, 1] = 1
    with pytest.raises(NoCoverError):
        solve_fp(visits, np.array([1.0]), n1=2, m_min=1, m_max=1)


def test_timeout_returns_incumbent_unproven():
    rng = np.random.default_rng(0)
    inst = bf.random_instance(rng, Objective.COST_OVER_LOAD, n_max=6, t_max=25)
    routes = bf.enumerate_elementary_routes(inst)
    visits, cost, time = columns_from_routes(inst, routes)
    best, sol = bf.best_solution(inst)
    warm = []
    for r in sol:
        for k, rr in enumerate(routes):
            if rr.vertices == r.vertices:
                warm.append(k)
                break
    res = solve_fp(visits, cost.astype(float), inst.n1, 1, inst.m, warm=warm, tlim=0.0)
    assert not res.proven_optimal
    assert res.x == sorted(warm)


@pytest.mark.parametrize("seed", range(10))
def test_parametric_zero_at_optimum(seed):
    # at the optimal ratio the parametric problem has value exactly zero
    kind = Objective.PROFIT_OVER_TIME if seed % 2 else Objective.COST_OVER_LOAD
    rng = np.random.default_rng(seed)
    inst = bf.random_instance(rng, kind, n_max=6, t_max=25)
    routes = bf.enumerate_elementary_routes(inst)
    visits, cost, time = columns_from_routes(inst, routes)
    best, _ = bf.best_solution(inst)
    r = best.as_fraction()
    costs = cost.astype(float) - float(r) * time.astype(float)
    res = solve_fp(visits, costs, inst.n1, 1, inst.m)
    assert res.proven_optimal
    num = int(cost[res.x].sum())
    den = int(time[res.x].sum())
    assert num * r.denominator - r.numerator * den == 0


@pytest.mark.parametrize("seed", range(8))
def test_matches_bruteforce_min_cost_cover(seed):
    # plain weighted set partitioning (r = 0) against subset-DP reference
    rng = np.random.default_rng(100 + seed)
    inst = bf.random_instance(rng, Objective.COST_OVER_LOAD, n_max=5, t_max=22)
    routes = bf.enumerate_elementary_routes(inst)
    visits, cost, time = columns_from_routes(inst, routes)
    res = solve_fp(visits, cost.astype(float), inst.n1, 1, inst.m)
    # reference: best cover over all route subsets
    best = math.inf
    f_mask = (1 << inst.n1) - 1
    masks = []
    for r in routes:
        mk = 0
        for v in r.customers:
            mk |= 1 << (v - 1)
        masks.append(mk)

    def rec(start, used, count, acc):
        nonlocal best
        if used & f_mask == f_mask and count >= 1:
            best = min(best, acc)
        if count == inst.m:
            return
        for idx in range(start, len(routes)):
            if masks[idx] & used:
                continue
            rec(idx + 1, used | masks[idx], count + 1, acc + routes[idx].cost)

    rec(0, 0, 0, 0.0)
    assert res.objective == pytest.approx(best)


def test_deterministic():
    rng = np.random.default_rng(4)
    inst = bf.random_instance(rng, Objective.COST_OVER_LOAD, n_max=6, t_max=25)
    routes = bf.enumerate_elementary_routes(inst)
    visits, cost, time = columns_from_routes(inst, routes)
    a = solve_fp(visits, cost.astype(float), inst.n1, 1, inst.m)
    b = solve_fp(visits, cost.astype(float), inst.n1, 1, inst.m)
    assert a.x == b.x and a.objective == b.objective
