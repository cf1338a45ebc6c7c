from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fracvrp.instance import (
    Objective,
    ParseError,
    UnsupportedFormatError,
    bpp_min_bins,
    euclid2d_cost,
    make_class_ca,
    make_class_pa,
    parse_tsplib,
    read_vrpfo,
    write_vrpfo,
)

DATA = Path(__file__).resolve().parent.parent / "data"

TWO_VERTEX = """\
NAME : toy-k1
TYPE : CVRP
DIMENSION : 2
EDGE_WEIGHT_TYPE : EUC_2D
CAPACITY : 10
NODE_COORD_SECTION
1 0 0
2 3 4
DEMAND_SECTION
1 0
2 7
DEPOT_SECTION
1
-1
EOF
"""


@pytest.mark.parametrize(
    "p,q,expected",
    [((0, 0), (3, 4), 5), ((0, 0), (1, 1), 1), ((0, 0), (0, 0), 0), ((0, 0), (2, 0), 2)],
)
def test_euclid2d_examples(p, q, expected):
    assert euclid2d_cost(p, q) == expected


@given(
    st.tuples(st.integers(-500, 500), st.integers(-500, 500)),
    st.tuples(st.integers(-500, 500), st.integers(-500, 500)),
)
def test_euclid2d_symmetric_nonnegative(p, q):
    assert euclid2d_cost(p, q) == euclid2d_cost(q, p) >= 0


class TestParseTsplib:
    def test_two_vertex(self):
        cvrp = parse_tsplib(TWO_VERTEX)
        assert cvrp.n_vertices == 2
        assert cvrp.n_vehicles == 1
        assert list(cvrp.demands) == [0, 7]
        assert cvrp.cost_matrix[0, 1] == 5

    def test_a_n32_k5(self):
        cvrp = parse_tsplib((DATA / "A-n32-k5.vrp").read_text())
        assert cvrp.n_vertices == 32
        assert cvrp.n_vehicles == 5
        assert cvrp.capacity == 100
        assert cvrp.demands.sum() == 410

    def test_missing_demands(self):
        broken = TWO_VERTEX.replace("DEMAND_SECTION\n1 0\n2 7\n", "")
        with pytest.raises(ParseError):
            parse_tsplib(broken)

    def test_rejects_explicit_weights(self):
        bad = TWO_VERTEX.replace("EUC_2D", "EXPLICIT")
        with pytest.raises(UnsupportedFormatError):
            parse_tsplib(bad)

    def test_depot_relabelled_to_zero(self):
        moved = TWO_VERTEX.replace("DEPOT_SECTION\n1\n-1", "DEPOT_SECTION\n2\n-1")
        moved = moved.replace("DEMAND_SECTION\n1 0\n2 7", "DEMAND_SECTION\n1 7\n2 0")
        cvrp = parse_tsplib(moved)
        # vertex listed in DEPOT_SECTION becomes index 0
        assert tuple(cvrp.coords[0]) == (3.0, 4.0)
        assert list(cvrp.demands) == [0, 7]


class TestBpp:
    @pytest.mark.parametrize(
        "weights,cap,expected",
        [([60, 60, 60], 100, 3), ([50, 50], 100, 1), ([1, 1, 1], 10, 1), ([], 5, 0)],
    )
    def test_examples(self, weights, cap, expected):
        assert bpp_min_bins(weights, cap) == expected

    def test_overweight_item(self):
        with pytest.raises(ValueError):
            bpp_min_bins([101], 100)

    def test_a32_mandatory_demands(self):
        # The published fleet size for A-n32-k5a is min{b+1, 5} = 4.
        cvrp = parse_tsplib((DATA / "A-n32-k5.vrp").read_text())
        b = bpp_min_bins(cvrp.demands[1:16], cvrp.capacity)
        assert min(b + 1, cvrp.n_vehicles) == 4

    @given(
        st.lists(st.integers(1, 30), min_size=1, max_size=12),
        st.integers(30, 60),
    )
    def test_bounds_sandwich(self, weights, cap):
        b = bpp_min_bins(weights, cap)
        assert -(-sum(weights) // cap) <= b <= len(weights)


@pytest.fixture(scope="module")
def cvrp():
    return parse_tsplib((DATA / "A-n32-k5.vrp").read_text())


class TestClassGenerators:
    def test_ca_alpha_half(self, cvrp):
        inst = make_class_ca(cvrp, 0.5)
        assert (inst.n1, inst.n2, inst.m, inst.T) == (15, 16, 4, 100)
        assert inst.objective is Objective.COST_OVER_LOAD
        assert not inst.t.any()
        assert (inst.s[1:] == cvrp.demands[1:]).all()

    def test_ca_alpha_three_quarters(self, cvrp):
        inst = make_class_ca(cvrp, 0.75)
        assert (inst.n1, inst.n2) == (23, 8)

    def test_ca_floor_arithmetic(self):
        toy = parse_tsplib(
            TWO_VERTEX.replace("DIMENSION : 2", "DIMENSION : 3").replace(
                "NODE_COORD_SECTION\n1 0 0\n2 3 4",
                "NODE_COORD_SECTION\n1 0 0\n2 3 4\n3 6 0",
            ).replace("DEMAND_SECTION\n1 0\n2 7", "DEMAND_SECTION\n1 0\n2 7\n3 2")
        )
        inst = make_class_ca(toy, 0.5)
        assert (inst.n1, inst.n2) == (1, 1)

    def test_ca_total_service_capacity(self, cvrp):
        inst = make_class_ca(cvrp, 0.5)
        assert inst.m * inst.T >= inst.s[1 : inst.n1 + 1].sum()

    def test_ca_rejects_zero_demand(self):
        toy = parse_tsplib(TWO_VERTEX.replace("2 7", "2 0"))
        with pytest.raises(ValueError):
            make_class_ca(toy, 0.5)

    def test_pa_structure(self, cvrp):
        inst = make_class_pa(cvrp, 0.5)
        assert (inst.n1, inst.n2) == (15, 16)
        assert inst.objective is Objective.PROFIT_OVER_TIME
        # profit collected on arc entry: every column j equals -q_j
        for j in inst.customers:
            col = np.delete(inst.d[:, j], j)
            assert (col == -cvrp.demands[j]).all()
        assert (inst.d[:, 0] == 0).all()
        assert (inst.t == cvrp.cost_matrix).all()

    def test_pa_sweep_is_feasible(self, cvrp):
        inst = make_class_pa(cvrp, 0.5)
        for i in inst.mandatory:
            assert inst.s[i] + inst.t[0, i] + inst.t[i, 0] <= inst.T

    def test_generation_deterministic(self, cvrp):
        a = make_class_pa(cvrp, 0.5)
        b = make_class_pa(cvrp, 0.5)
        assert write_vrpfo(a) == write_vrpfo(b)


def test_vrpfo_round_trip():
    cvrp = parse_tsplib((DATA / "A-n32-k5.vrp").read_text())
    inst = make_class_ca(cvrp, 0.5)
    text = write_vrpfo(inst)
    back = read_vrpfo(text, name=inst.name)
    assert back.n1 == inst.n1 and back.n2 == inst.n2
    assert back.m == inst.m and back.T == inst.T
    assert (back.d == inst.d).all() and (back.t == inst.t).all()
    assert (back.s == inst.s).all()
    assert back.objective is inst.objective
    assert write_vrpfo(back) == text
