import math

import numpy as np
import pytest

from fracvrp import bruteforce as bf
from fracvrp.bounds import DaParams, DualSolution, run_da
from fracvrp.genr import (
    CompletionBounds,
    ForwardPath,
    corollary1_gamma,
    db_of_path,
    generate_reduced_set,
)
from fracvrp.instance import Objective
from fracvrp.ngpath import build_ng_sets, cg_arc_costs


def random_inst(seed, kind=Objective.COST_OVER_LOAD, n_max=5):
    rng = np.random.default_rng(seed)
    return bf.random_instance(rng, kind, n_max=n_max, t_max=25)


def zero_duals(inst):
    return DualSolution(beta=0, mu=np.zeros(inst.n + 1), omega=0.0)


def enumerate_set(inst):
    return {r.vertices for r in bf.enumerate_elementary_routes(inst)}


class TestCompleteness:
    @pytest.mark.parametrize("seed", range(12))
    def test_full_enumeration_matches_bruteforce(self, seed):
        kind = Objective.PROFIT_OVER_TIME if seed % 2 else Objective.COST_OVER_LOAD
        inst = random_inst(seed, kind)
        rset = generate_reduced_set(
            inst,
            zero_duals(inst),
            z_star=math.inf,
            db_ccg=-math.inf,
            c_bar_0=0.0,
            m_max=inst.m,
            delta_max=10**9,
            nstatb=10**9,
            use_dominance=False,
        )
        assert rset.optimal_flag
        assert rset.gapmin == math.inf
        assert set(rset.seqs) == enumerate_set(inst)

    def test_reduced_costs_match_route_sums(self):
        inst = random_inst(40)
        rng = np.random.default_rng(1)
        mu = np.concatenate([[-(rng.random())], rng.normal(0, 2, inst.n)])
        mu[inst.n1 + 1 :] = -np.abs(mu[inst.n1 + 1 :])
        duals = DualSolution(beta=0, mu=mu, omega=rng.random())
        rset = generate_reduced_set(
            inst, duals, math.inf, -math.inf, 0.0, inst.m, use_dominance=False
        )
        dbar = cg_arc_costs(inst, duals.mu, duals.omega)
        for seq, rc in zip(rset.seqs, rset.rcost):
            assert rc == pytest.approx(sum(dbar[a, b] for a, b in zip(seq, seq[1:])))


class TestTruncation:
    def test_delta_max_one(self):
        inst = random_inst(5)
        rset = generate_reduced_set(
            inst, zero_duals(inst), math.inf, -math.inf, 0.0, inst.m, delta_max=1
        )
        assert len(rset) == 1
        assert not rset.optimal_flag
        assert math.isfinite(rset.gapmin)

    def test_gapmin_bounds_missing_routes(self):
        for seed in range(8):
            inst = random_inst(seed + 60)
            rset = generate_reduced_set(
                inst, zero_duals(inst), math.inf, -math.inf, 0.0, inst.m, delta_max=3
            )
            if rset.optimal_flag:
                continue
            have = set(rset.seqs)
            dbar = cg_arc_costs(inst, np.zeros(inst.n + 1), 0.0)
            for r in bf.enumerate_elementary_routes(inst):
                if r.vertices in have:
                    continue
                rc = sum(dbar[a, b] for a, b in zip(r.vertices, r.vertices[1:]))
                assert rc >= rset.gapmin - 1e-9


class TestDbOfPath:
    def test_closed_route_is_exact(self):
        inst = random_inst(9)
        dbar = cg_arc_costs(inst, np.zeros(inst.n + 1), 0.0)
        ng = build_ng_sets(inst, inst.n, metric=dbar)
        comp = CompletionBounds(inst, ng, dbar)
        r = bf.enumerate_elementary_routes(inst)[0]
        cost = sum(dbar[a, b] for a, b in zip(r.vertices, r.vertices[1:]))
        path = ForwardPath(r.vertices, 0, r.time, cost, 0)
        assert db_of_path(path, comp) == pytest.approx(cost)

    def test_root_bound_is_min_ng_route(self):
        inst = random_inst(23)
        dbar = cg_arc_costs(inst, np.zeros(inst.n + 1), 0.0)
        ng = build_ng_sets(inst, 3, metric=dbar)
        comp = CompletionBounds(inst, ng, dbar)
        root = ForwardPath((0,), 0, 0, 0.0, 0)
        want = bf.min_ng_route_cost(inst, ng, dbar)
        assert db_of_path(root, comp) == pytest.approx(want)

    @pytest.mark.parametrize("seed", range(8))
    def test_bounds_every_elementary_completion(self, seed):
        kind = Objective.PROFIT_OVER_TIME if seed % 2 else Objective.COST_OVER_LOAD
        inst = random_inst(seed + 80, kind)
        rng = np.random.default_rng(seed)
        mu = np.concatenate([[-(rng.random())], rng.normal(0, 1, inst.n)])
        mu[inst.n1 + 1 :] = -np.abs(mu[inst.n1 + 1 :])
        omega = float(rng.random())
        dbar = cg_arc_costs(inst, mu, omega)
        ng = build_ng_sets(inst, 3, metric=dbar)
        comp = CompletionBounds(inst, ng, dbar)
        for r in bf.enumerate_elementary_routes(inst):
            rc = sum(dbar[a, b] for a, b in zip(r.vertices, r.vertices[1:]))
            # every proper prefix of the route must bound its own completion
            seq = r.vertices
            for cut in range(1, len(seq) - 1):
                prefix = seq[: cut + 1]
                t = sum(int(inst.s[v]) for v in prefix) + sum(
                    int(inst.t[a, b]) for a, b in zip(prefix, prefix[1:])
                )
                c = sum(dbar[a, b] for a, b in zip(prefix, prefix[1:]))
                mask = 0
                for v in prefix[1:]:
                    mask |= 1 << (v - 1)
                path = ForwardPath(prefix, prefix[-1], t, c, mask)
                assert db_of_path(path, comp) <= rc + 1e-9


class TestDominance:
    @pytest.mark.parametrize("seed", range(25))
    def test_same_routes_with_and_without(self, seed):
        kind = Objective.PROFIT_OVER_TIME if seed % 2 else Objective.COST_OVER_LOAD
        inst = random_inst(seed + 200, kind)
        da = run_da(inst, params=DaParams(maxit=15, time_limit=10.0))
        z = float(da.primal_bound) if da.primal_bound is not None else math.inf
        c0 = float(da.duals.mu[1:].sum() + inst.m * da.duals.mu[0])
        kw = dict(
            z_star=z, db_ccg=da.dual_bound, c_bar_0=c0, m_max=inst.m,
            delta_max=10**9, nstatb=10**9,
        )
        with_dom = generate_reduced_set(inst, da.duals, use_dominance=True, **kw)
        without = generate_reduced_set(inst, da.duals, use_dominance=False, **kw)
        # dominance may only drop routes that have an equal-or-better twin
        # on the same visit set; the best value per visit set must survive
        best = {}
        for seq, c, t in zip(without.seqs, without.cost, without.time):
            key = frozenset(seq[1:-1])
            val = (c, t) if inst.objective is Objective.COST_OVER_LOAD else (t, c)
            if key not in best or val < best[key]:
                best[key] = val
        kept = {}
        for seq, c, t in zip(with_dom.seqs, with_dom.cost, with_dom.time):
            key = frozenset(seq[1:-1])
            val = (c, t) if inst.objective is Objective.COST_OVER_LOAD else (t, c)
            if key not in kept or val < kept[key]:
                kept[key] = val
        for key, val in best.items():
            assert key in kept and kept[key] == val


def test_gamma_threshold_algebra():
    # zero gap collapses the threshold to -c_bar_0
    assert corollary1_gamma(10, 2.0, 2.0, 3.0, 4, 100) == pytest.approx(-3.0)
    # with one vehicle alpha reduces to the route's own working time
    assert corollary1_gamma(10, 3.0, 2.0, 0.0, 1, 100) == pytest.approx(10.0)
