import math

import numpy as np
import pytest

from fracvrp import bruteforce as bf
from fracvrp.bounds import (
    CbParams,
    CgParams,
    ColumnPool,
    DaParams,
    DualSolution,
    ccf_program,
    dccf_column_slacks,
    dncf_column_slacks,
    lagrangian_heuristic,
    ncf_program,
    run_cb,
    run_cg,
    run_da,
    run_dk,
    theorem1_evaluate,
    theorem2_transform,
)
from fracvrp.core import Ratio, route_from_sequence
from fracvrp.instance import Instance, Objective
from fracvrp.lp import LpStatus, solve_lp
from fracvrp.ngpath import build_ng_sets

FAST_CB = CbParams(maxit=25)
FAST_DA = DaParams(maxit=40, time_limit=20.0)


def random_inst(seed, kind=Objective.COST_OVER_LOAD, n_max=5):
    rng = np.random.default_rng(seed)
    return bf.random_instance(rng, kind, n_max=n_max, t_max=25)


def full_pool(inst):
    pool = ColumnPool(inst)
    pool.add_all(bf.enumerate_elementary_routes(inst))
    return pool


def one_customer_instance():
    d = np.array([[0, 10], [10, 0]])
    t = np.zeros((2, 2), dtype=int)
    return Instance(
        name="one",
        n1=1,
        n2=0,
        s=np.array([0, 7]),
        d=d,
        t=t,
        m=1,
        T=10,
        objective=Objective.COST_OVER_LOAD,
    )


class TestTheorem1:
    def test_single_route_core(self):
        inst = one_customer_instance()
        pool = ColumnPool(inst)
        pool.add(route_from_sequence(inst, (0, 1, 0)))
        v, value, arg = theorem1_evaluate(inst, np.zeros(2), inst.s.astype(float), pool)
        # one route, pi_1 = s_1 = beta = 7: phi_1 = 7 * 20/(7*7)
        assert v[1] == pytest.approx(20.0 / 7.0)
        assert value == pytest.approx(20.0 / 7.0)
        assert arg[1] == 0

    @pytest.mark.parametrize("seed", range(8))
    def test_value_below_ncf_optimum(self, seed):
        inst = random_inst(seed)
        pool = full_pool(inst)
        rng = np.random.default_rng(seed)
        lam = np.zeros(inst.n + 1)
        lam[1 : inst.n1 + 1] = rng.normal(0, 2, size=inst.n1)
        lam[inst.n1 + 1 :] = -np.abs(rng.normal(0, 2, size=inst.n2))
        lam[0] = -abs(rng.normal(0, 1))
        v, value, _ = theorem1_evaluate(inst, lam, inst.s.astype(float), pool)
        res = solve_lp(ncf_program(inst, pool))
        assert res.status is LpStatus.OPTIMAL
        assert value <= res.objective + 1e-7
        # v must be feasible for the dual over the very same pool
        assert dncf_column_slacks(inst, v, pool).min() >= -1e-7

    def test_uncovered_mandatory_raises(self):
        # a mandatory-only route in a zero-travel-time instance has wbar = 0,
        # so it covers nothing else: customer 2 stays uncovered
        d = np.array([[0, 3, 4], [3, 0, 2], [4, 2, 0]])
        t = np.zeros((3, 3), dtype=int)
        inst = Instance(
            name="pair", n1=2, n2=0, s=np.array([0, 2, 3]), d=d, t=t, m=2, T=10,
            objective=Objective.COST_OVER_LOAD,
        )
        pool = ColumnPool(inst)
        pool.add(route_from_sequence(inst, (0, 1, 0)))
        with pytest.raises(ValueError):
            theorem1_evaluate(inst, np.zeros(3), inst.s.astype(float), pool)


class TestTheorem2:
    def test_zero_maps_to_zero(self):
        mu, omega = theorem2_transform(np.zeros(4), 5, np.array([0, 2, 2, 1.0]), 2, 2)
        assert omega == 0.0
        assert (mu == 0).all()

    @pytest.mark.parametrize("seed", range(10))
    def test_feasibility_and_value_on_full_enumeration(self, seed):
        kind = Objective.PROFIT_OVER_TIME if seed % 2 else Objective.COST_OVER_LOAD
        inst = random_inst(seed, kind)
        pool = full_pool(inst)
        res = solve_lp(ncf_program(inst, pool))
        assert res.status is LpStatus.OPTIMAL
        v = np.empty(inst.n + 1)
        v[1:] = res.duals[: inst.n]
        v[0] = res.duals[inst.n]
        beta = int(inst.s[1 : inst.n1 + 1].sum())
        mu, omega = theorem2_transform(v, beta, inst.s.astype(float), inst.m, inst.n1)
        slacks = dccf_column_slacks(inst, mu, omega, pool)
        assert slacks.min() >= -1e-6
        assert omega == pytest.approx(res.objective, abs=1e-7)


class TestNcfEqualsCcf:
    @pytest.mark.parametrize("seed", range(10))
    def test_equal_lp_values(self, seed):
        kind = Objective.PROFIT_OVER_TIME if seed % 2 else Objective.COST_OVER_LOAD
        inst = random_inst(seed + 20, kind)
        pool = full_pool(inst)
        ncf = solve_lp(ncf_program(inst, pool))
        ccf = solve_lp(ccf_program(inst, pool))
        assert ncf.status is LpStatus.OPTIMAL and ccf.status is LpStatus.OPTIMAL
        assert ncf.objective == pytest.approx(ccf.objective, abs=1e-7)


class TestCb:
    def test_one_customer_exact(self):
        inst = one_customer_instance()
        rep = run_cb(inst, params=CbParams(maxit=3))
        assert rep.dual_bound == pytest.approx(20.0 / 7.0)
        assert rep.primal_bound == Ratio(20, 7)
        assert rep.m_min == 1 and rep.m_max == 1

    @pytest.mark.parametrize("seed", range(8))
    def test_bound_below_optimum(self, seed):
        kind = Objective.PROFIT_OVER_TIME if seed % 2 else Objective.COST_OVER_LOAD
        inst = random_inst(seed + 40, kind)
        best, routes = bf.best_solution(inst)
        rep = run_cb(inst, params=FAST_CB)
        assert rep.dual_bound <= float(best) + 1e-7
        if rep.primal_bound is not None:
            assert float(rep.primal_bound) >= float(best) - 1e-9

    @pytest.mark.parametrize("seed", range(8))
    def test_vehicle_window_brackets_optimum(self, seed):
        inst = random_inst(seed + 60)
        best, routes = bf.best_solution(inst)
        rep = run_cb(inst, params=FAST_CB)
        assert rep.m_min <= len(routes) <= rep.m_max

    def test_db_monotone(self):
        # the recorded bound is a running max by construction; re-running with
        # more iterations can only improve it
        inst = random_inst(99)
        r1 = run_cb(inst, params=CbParams(maxit=5))
        r2 = run_cb(inst, params=CbParams(maxit=30))
        assert r2.dual_bound >= r1.dual_bound - 1e-12


class TestDa:
    def test_one_customer_exact(self):
        inst = one_customer_instance()
        rep = run_da(inst, params=FAST_DA)
        assert rep.dual_bound == pytest.approx(20.0 / 7.0, abs=1e-6)
        assert rep.primal_bound == Ratio(20, 7)

    @pytest.mark.parametrize("seed", range(6))
    def test_da_below_cg(self, seed):
        kind = Objective.PROFIT_OVER_TIME if seed % 2 else Objective.COST_OVER_LOAD
        inst = random_inst(seed + 80, kind)
        da = run_da(inst, params=FAST_DA)
        cg = run_cg(inst)
        assert da.dual_bound <= cg.dual_bound + 1e-6

    @pytest.mark.parametrize("seed", range(6))
    def test_da_below_optimum_with_feasible_duals(self, seed):
        inst = random_inst(seed + 100)
        best, _ = bf.best_solution(inst)
        rep = run_da(inst, params=FAST_DA)
        assert rep.dual_bound <= float(best) + 1e-7
        pool = full_pool(inst)
        slacks = dccf_column_slacks(inst, rep.duals.mu, rep.duals.omega, pool)
        assert slacks.min() >= -1e-6


class TestCgDk:
    @pytest.mark.parametrize("seed", range(6))
    def test_cg_equals_dk(self, seed):
        kind = Objective.PROFIT_OVER_TIME if seed % 2 else Objective.COST_OVER_LOAD
        inst = random_inst(seed + 120, kind)
        cg = run_cg(inst)
        dk = run_dk(inst)
        assert cg.dual_bound == pytest.approx(dk.dual_bound, abs=1e-6)

    @pytest.mark.parametrize("seed", range(6))
    def test_cg_below_optimum(self, seed):
        inst = random_inst(seed + 140)
        best, _ = bf.best_solution(inst)
        cg = run_cg(inst)
        assert cg.dual_bound <= float(best) + 1e-7

    def test_full_enumeration_prices_out(self):
        # with every elementary route given up front and delta = n, the first
        # pricing round finds nothing and z equals the NCF optimum
        inst = random_inst(10)
        ng = build_ng_sets(inst, inst.n)
        pool = full_pool(inst)
        ncf = solve_lp(ncf_program(inst, pool))
        cg = run_cg(inst, ng=ng)
        assert cg.dual_bound == pytest.approx(ncf.objective, abs=1e-6)


class TestHeuristic:
    @pytest.mark.parametrize("seed", range(10))
    def test_feasible_and_above_optimum(self, seed):
        kind = Objective.PROFIT_OVER_TIME if seed % 2 else Objective.COST_OVER_LOAD
        inst = random_inst(seed + 160, kind)
        sol = lagrangian_heuristic(inst, bf.enumerate_elementary_routes(inst)[:40])
        if sol is None:
            return
        best, _ = bf.best_solution(inst)
        assert sol.value >= best
