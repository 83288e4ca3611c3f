import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gsr.constructions import (ConstructionError, FParams, complete_design, construct_complete,
                               construct_g4, construct_g4_minus, construct_grid,
                               construct_hub_based, construct_line_1, construct_line_k,
                               construct_tree, f_rows, sample_markov_rows, tree_hub)
from gsr.graph import (Graph, gen_g4, gen_g4_minus, gen_grid, gen_line, gen_ring, gen_star,
                       gen_tree_random)
from gsr.plan import MeasurementPlan, PlanError, dense_from_csv, dense_to_csv
from gsr.verification import (check_feasibility, check_identifiability, distinct_nonzero_columns,
                              kernel_search_identifiable)


def test_f_rows_frozen_values():
    assert [f_rows(n, 1) for n in (1, 2, 3, 7, 8, 500)] == [1, 2, 2, 3, 4, 9]
    # ceil(8 log2(n/4 + 2)) for k = 2, capped at n
    assert [f_rows(n, 2) for n in (4, 10, 12, 45, 100)] == [4, 10, 12, 30, 39]
    assert [f_rows(n, 3) for n in (6, 20, 100)] == [6, 20, 51]
    with pytest.raises(ConstructionError):
        f_rows(0, 1)


def test_line_k_examples():
    p = construct_line_k(12, 2)
    assert p.m == 9 and p.rows[0] == (0, 1, 2, 3)
    p = construct_line_k(8, 2)
    assert p.m == 7 and check_identifiability(p, 2).verdict
    p = construct_line_k(6, 5)
    assert p.m == 6 and all(len(r) == 1 for r in p.rows)
    with pytest.raises(ConstructionError):
        construct_line_k(5, 1)
    with pytest.raises(ConstructionError):
        construct_line_k(2, 2)


@pytest.mark.parametrize("n,k", [(n, k) for k in (2, 3) for n in range(k + 1, 13)])
def test_line_k_kernel_vectors_are_dense(n, k):
    # independent oracle: sympy kernel basis, then a support search
    p = construct_line_k(n, k)
    assert kernel_search_identifiable(p.dense(), k)
    assert check_feasibility(gen_line(n), p) and check_feasibility(gen_ring(n), p)


def test_line_1():
    assert construct_line_1(5).rows == [(0, 1), (1, 2, 3), (3, 4)]
    assert construct_line_1(2).m == 2
    assert construct_line_1(4).m == 3
    for n in range(2, 40):
        p = construct_line_1(n)
        assert p.m == math.ceil((n + 1) / 2)
        assert all(r[-1] - r[0] + 1 == len(r) for r in p.rows)
        assert distinct_nonzero_columns(p.dense())


def test_complete_k1_binary_columns():
    p = construct_complete(7, 1)
    A = p.dense()
    assert p.m == 3 and A[:, 0].tolist() == [1, 0, 0]
    codes = sorted(sum(int(A[b, j]) << b for b in range(p.m)) for j in range(7))
    assert codes == list(range(1, 8))
    assert construct_complete(1, 1).rows == [(0,)]


def test_complete_random_design_verified():
    rows, verified = complete_design(12, 2, FParams(c=1.0, seed=4))
    assert verified is True and len(rows) == f_rows(12, 2, 1.0) == 10
    A = np.zeros((len(rows), 12), dtype=int)
    for i, r in enumerate(rows):
        A[i, r] = 1
    assert kernel_search_identifiable(A, 2)
    assert construct_complete(12, 2).verified is True
    # far too large to check: flagged rather than claimed
    assert complete_design(200, 3, FParams(seed=1))[1] is None


def test_hub_based():
    g = gen_g4(10)
    p = construct_hub_based(g, [1, 3, 5, 7, 9], [0, 2, 4, 6, 8], 1)
    assert p.m == 1 + math.ceil(math.log2(6))
    assert check_feasibility(g, p)
    star = gen_star(3)
    assert construct_hub_based(star, [2], [0], 1).m == 2
    with pytest.raises(ConstructionError):
        construct_hub_based(gen_line(5), [1], [0, 2], 1)
    p = construct_g4(20, 2)
    assert p.m == 2 * f_rows(10, 2) + 2


def test_g4():
    p = construct_g4(8, 1)
    assert p.m == 2 * math.ceil(math.log2(5)) + 2 == 8
    assert check_feasibility(gen_g4(8), p)
    assert [g.label for g in p.groups] == ["evens", "odds"]
    p = construct_g4(9, 1)
    sizes = sorted(len(g.members) for g in p.groups)
    assert sizes == [4, 5] and check_identifiability(p, 1).verdict
    for n in range(5, 40):
        for k in (1, 2):
            p = construct_g4(n, k)
            assert p.m == f_rows(n // 2, k) + f_rows(-(-n // 2), k) + 2
            assert check_feasibility(gen_g4(n), p)


def test_g4_minus_three_deleted_chords():
    D = [3, 8, 9]
    p = construct_g4_minus(12, D, 1)
    assert check_feasibility(gen_g4_minus(12, D), p)
    direct = p.groups[0]
    assert direct.label == "direct" and direct.members == (3, 8, 9)
    assert len(p.groups) == 3 and sum(1 for m in p.row_meta if m.is_hub_sum) == 2
    assert check_identifiability(p, 1).verdict
    assert construct_g4_minus(12, [], 1).rows == construct_g4(12, 1).rows


def test_g4_minus_bound_random():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = int(rng.integers(8, 40))
        h = int(rng.integers(0, n // 3))
        D = sorted(rng.choice(n, size=h, replace=False).tolist())
        for k in (1, 2):
            p = construct_g4_minus(n, D, k)
            assert check_feasibility(gen_g4_minus(n, D), p)
            assert p.m <= 2 * f_rows(-(-n // 2), k) + h + 2


def test_grid():
    p = construct_grid(4, 1)
    assert [len(g.members) for g in p.groups] == [6, 6, 4]
    assert [g.recovery_order for g in p.groups] == [0, 1, 2]
    assert p.groups[2].hub_sum_row is None
    assert check_feasibility(gen_grid(4), p) and check_identifiability(p, 1).verdict
    p2 = construct_grid(2, 1)
    assert check_feasibility(gen_grid(2), p2)
    p10 = construct_grid(10, 2)
    assert p10.m <= 2 * f_rows(45, 2) + f_rows(10, 2) + 2
    assert check_feasibility(gen_grid(10), p10)


def test_tree_star_and_path():
    star = gen_star(6)
    p = construct_tree(star, 0, 1)
    assert p.m == 1 + math.ceil(math.log2(7))
    assert all(m.hub_nodes == (0,) for m in p.row_meta[1:])
    path = gen_line(5)
    p = construct_tree(path, 0, 1)
    assert p.m == 5 and [g.recovery_order for g in p.groups] == list(range(5))
    with pytest.raises(ConstructionError):
        construct_tree(gen_ring(5), 0, 1)


def test_tree_hub_traces_to_meeting_node():
    # root 0; children 1, 2; 1 -> 3, 4; 2 -> 5, 6
    parent = {0: None, 1: 0, 2: 0, 3: 1, 4: 1, 5: 2, 6: 2}
    assert tree_hub(parent, [4, 6]) == {0, 1, 2}
    assert tree_hub(parent, [3, 4]) == {1}
    g = Graph(7, [(1, 0), (2, 0), (3, 1), (4, 1), (5, 2), (6, 2)])
    p = construct_tree(g, 0, 1)
    assert check_feasibility(g, p)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 60), st.integers(0, 10_000), st.sampled_from([1, 2]))
def test_tree_row_count_and_feasibility(n, seed, k):
    g = gen_tree_random(n, seed)
    p = construct_tree(g, 0, k)
    assert check_feasibility(g, p)
    sizes = [len(grp.members) for grp in p.groups]
    assert p.m == sum(f_rows(s, k) for s in sizes)


def test_markov_rows():
    p = sample_markov_rows(100, 300, seed=1)
    assert check_feasibility(gen_g4(100), p)
    for row in p.rows:
        assert row[0] == 0
        s = set(row)
        assert all(v in s or v + 1 in s for v in range(99))
    assert p.verified is None


def test_apply():
    p = construct_g4(8, 1)
    assert not p.apply(np.zeros(8)).any()
    e3 = np.zeros(8)
    e3[3] = 1
    assert p.apply(e3).tolist() == p.dense()[:, 3].tolist()
    with pytest.raises(PlanError):
        p.apply(np.zeros(7))
    noise = np.arange(p.m, dtype=float)
    assert np.allclose(p.apply_noisy(e3, noise), p.apply(e3) + noise)


def test_plan_round_trips(tmp_path):
    for p in (construct_g4(11, 2), construct_grid(5, 1), construct_line_k(9, 3)):
        assert MeasurementPlan.from_json(p.to_json()) == p
        assert MeasurementPlan.from_json(p.to_json()).to_json() == p.to_json()
        assert np.array_equal(dense_from_csv(dense_to_csv(p.dense())), p.dense())
    path = tmp_path / "p.json"
    p.save(path)
    assert MeasurementPlan.load(path) == p
