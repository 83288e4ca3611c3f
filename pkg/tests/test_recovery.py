import numpy as np
import pytest

from gsr.constructions import (FParams, construct_complete, construct_g4, construct_grid,
                               construct_line_k, construct_tree)
from gsr.graph import gen_tree_random, radius_and_center
from gsr.plan import PlanBuilder
from gsr.recovery import (RecoveryError, SparseVector, compare, decode_1sparse_binary,
                          dumps_dense, dumps_sparse, load_vector, loads_dense, loads_sparse,
                          recover_groupwise, recover_with_hub_errors, solve_basis_pursuit)


def _sparse_x(rng, n, k):
    x = np.zeros(n)
    x[rng.choice(n, size=k, replace=False)] = rng.standard_normal(k)
    return x


def test_bp_trivial():
    A = np.eye(4)
    sol = solve_basis_pursuit(A, np.zeros(4))
    assert sol.converged and np.allclose(sol.x, 0)
    y = np.array([1.0, 0, -2.0, 0])
    assert np.allclose(solve_basis_pursuit(A, y).x, y)
    assert np.allclose(solve_basis_pursuit(A, y, method="admm").x, y, atol=1e-6)


def test_bp_l1_not_larger_than_truth():
    rng = np.random.default_rng(3)
    for _ in range(20):
        A = rng.integers(0, 2, size=(6, 12)).astype(float)
        x0 = _sparse_x(rng, 12, 2)
        sol = solve_basis_pursuit(A, A @ x0)
        assert np.abs(sol.x).sum() <= np.abs(x0).sum() + 1e-7
        assert np.allclose(A @ sol.x, A @ x0, atol=1e-7)


def test_bp_inconsistent_is_projected():
    A = np.array([[1.0, 0.0], [1.0, 0.0]])
    sol = solve_basis_pursuit(A, np.array([1.0, 3.0]))
    assert sol.projected
    assert sol.x[0] == pytest.approx(2.0)


def test_bp_bad_method():
    with pytest.raises(RecoveryError):
        solve_basis_pursuit(np.eye(2), np.ones(2), method="omp")


def test_g4_one_sparse():
    plan = construct_g4(8, 1)
    x = np.zeros(8)
    x[2] = 1.0
    res = recover_groupwise(plan, plan.apply(x))
    assert res.ok
    assert res.x_recovered.support == [2]
    assert compare(res.x_recovered, x)["l2_error"] < 1e-8


def test_tree_zero_vector():
    g = gen_tree_random(30, 4)
    _, center = radius_and_center(g)
    plan = construct_tree(g, center, 1)
    res = recover_groupwise(plan, np.zeros(plan.m))
    assert res.x_recovered.norm0 == 0 and res.residual_l2 < 1e-12


@pytest.mark.parametrize("make,k", [
    (lambda: construct_grid(4, 1), 1),
    (lambda: construct_g4(20, 2), 2),
    (lambda: construct_line_k(14, 2), 2),
    (lambda: construct_complete(15, 1), 1),
])
def test_end_to_end_exact(make, k):
    plan = make()
    rng = np.random.default_rng(11)
    for _ in range(100):
        x0 = _sparse_x(rng, plan.n, k)
        res = recover_groupwise(plan, plan.apply(x0))
        c = compare(res.x_recovered, x0)
        assert c["support_match"] and c["l2_error"] < 1e-6


def test_hub_subtraction_algebra():
    # group {0,1,2} with hub {3}; rows are W + hub
    b = PlanBuilder(4, 1, "manual")
    g0 = b.add_group([0, 1, 2])
    b.add_hub_sum_row(g0, [3])
    b.add_row(g0, [0], [3])
    b.add_row(g0, [1], [3])
    b.add_row(g0, [2], [3])
    g1 = b.add_group([3], recovery_order=1)
    b.add_row(g1, [3])
    plan = b.build()
    x = np.array([0.0, 2.5, 0.0, 7.0])
    res = recover_groupwise(plan, plan.apply(x))
    assert np.allclose(res.x_recovered.to_dense(), x)


def test_ordering_violation():
    b = PlanBuilder(3, 1, "manual")
    g0 = b.add_group([0, 1])
    b.add_row(g0, [0], [2])
    b.add_row(g0, [1], [2])
    g1 = b.add_group([2], recovery_order=1)
    b.add_row(g1, [2])
    plan = b.build()
    with pytest.raises(RecoveryError, match="hub nodes"):
        recover_groupwise(plan, np.zeros(plan.m))


def test_hub_errors_zero_error_consistent():
    plan = construct_g4(24, 1)
    rng = np.random.default_rng(5)
    for _ in range(10):
        x0 = _sparse_x(rng, plan.n, 1)
        plain = recover_groupwise(plan, plan.apply(x0))
        aug = recover_with_hub_errors(plan, plan.apply(x0))
        assert all(abs(e) < 1e-8 for e in aug.hub_error_estimates.values())
        assert compare(aug.x_recovered, plain.x_recovered)["l2_error"] < 1e-8


def test_hub_errors_needs_hub_rows():
    plan = construct_line_k(10, 2)
    with pytest.raises(RecoveryError):
        recover_with_hub_errors(plan, np.zeros(plan.m))


def test_measurement_shape_checked():
    plan = construct_g4(8, 1)
    with pytest.raises(RecoveryError):
        recover_groupwise(plan, np.zeros(plan.m + 1))


def test_decode_1sparse_binary():
    plan = construct_complete(7, 1)
    x = np.zeros(7)
    x[2] = 5.0
    v = decode_1sparse_binary(plan, plan.apply(x))
    assert v.entries == {2: 5.0}
    assert decode_1sparse_binary(plan, np.zeros(plan.m)).norm0 == 0
    with pytest.raises(RecoveryError):
        decode_1sparse_binary(plan, np.array([1.0, 2.0, 0.0]))
    with pytest.raises(RecoveryError):
        decode_1sparse_binary(construct_g4(8, 1), np.zeros(construct_g4(8, 1).m))


def test_compare():
    assert compare([1.0, 0.0], [1.0, 0.0]) == {"l2_error": 0.0, "support_match": True}
    c = compare([1.0, 1e-3], [1.0, 0.0])
    assert not c["support_match"] and c["l2_error"] == pytest.approx(1e-3)
    with pytest.raises(RecoveryError):
        compare([1.0], [1.0, 0.0])


def test_vector_round_trips(tmp_path):
    v = SparseVector(6, {4: -0.1, 1: 1 / 3})
    assert loads_sparse(dumps_sparse(v)) == v
    x = np.array([0.1, 1 / 3, -2e-17])
    assert np.array_equal(loads_dense(dumps_dense(x)), x)
    (tmp_path / "s.csv").write_text(dumps_sparse(v))
    (tmp_path / "d.csv").write_text(dumps_dense(x))
    assert np.array_equal(load_vector(tmp_path / "s.csv"), v.to_dense())
    assert np.array_equal(load_vector(tmp_path / "d.csv"), x)
    with pytest.raises(RecoveryError):
        SparseVector(3, {3: 1.0})
    with pytest.raises(RecoveryError):
        loads_sparse("i,v\n")


def test_result_json():
    plan = construct_g4(8, 1, FParams())
    res = recover_groupwise(plan, plan.apply(np.eye(8)[3]))
    d = res.to_dict()
    assert d["n"] == 8 and d["x"] == {"3": pytest.approx(1.0)}
    assert len(d["groups"]) == len(plan.groups)
