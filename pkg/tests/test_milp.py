import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import enumerate_binary, random_binary_model, random_box_lp, vertex_enumeration
from hrlcampaign.milp import (Limits, LpFormatError, ModelBuilder, ModelError, Status,
                              export_model, from_arrays, read_lp, relative_gap, solve_lp,
                              solve_milp)


def test_lp_single_bound():
    sol = solve_lp(from_arrays([1.0], [[1.0]], [">="], [3.0]))
    assert sol.status == Status.OPTIMAL
    assert sol.x[0] == pytest.approx(3.0) and sol.objective == pytest.approx(3.0)


def test_lp_two_by_two_vertex():
    sol = solve_lp(from_arrays([1, 1], [[1, 2], [2, 1]], [">=", ">="], [4, 4]))
    assert sol.objective == pytest.approx(8 / 3, abs=1e-12)
    assert np.allclose(sol.x, [4 / 3, 4 / 3], atol=1e-12)


def test_lp_infeasible_and_unbounded():
    assert solve_lp(from_arrays([1.0], [[1.0]], [">="], [1.0], ub=[0.0])).status == Status.INFEASIBLE
    assert solve_lp(from_arrays([-1.0], [[1.0]], [">="], [1.0])).status == Status.UNBOUNDED


def test_milp_round_down():
    sol = solve_milp(from_arrays([-1.0], lb=[0], ub=[2.5], integer=[True]))
    assert sol.status == Status.OPTIMAL
    assert sol.x[0] == 2.0 and sol.objective == -2.0


def test_knapsack_covering_matches_enumeration():
    w = np.array([3.0, 4.0, 5.0, 6.0, 2.0, 7.0])
    cost = np.array([4.0, 5.0, 7.0, 8.0, 3.0, 9.0])
    model = from_arrays(cost, [w], [">="], [13.0], np.zeros(6), np.ones(6), np.ones(6, bool))
    ref, _ = enumerate_binary(cost, np.array([w]), [">="], [13.0])
    sol = solve_milp(model)
    assert sol.objective == ref


def test_gap_definition():
    assert relative_gap(100.0, 70.0) == pytest.approx(0.30)
    assert relative_gap(5.0, 5.0) == 0.0


def test_time_limit_without_incumbent():
    # root relaxation is fractional and both children are infeasible
    m = from_arrays([-1.0], [[2.0]], ["="], [1.0], [0], [1], [True])
    sol = solve_milp(m, Limits(node_limit=1))
    assert sol.status == Status.TIME_LIMIT and sol.x is None and not sol.has_primal
    assert solve_milp(m).status == Status.INFEASIBLE


def test_gap_reported_at_node_limit():
    rng = np.random.default_rng(3)
    n = 25
    w = rng.integers(5, 40, n).astype(float)
    v = rng.integers(5, 40, n).astype(float)
    m = from_arrays(-v, [w], ["<="], [w.sum() / 2.3], np.zeros(n), np.ones(n), np.ones(n, bool))
    sol = solve_milp(m, Limits(node_limit=15))
    assert sol.status in (Status.FEASIBLE_WITH_GAP, Status.OPTIMAL, Status.TIME_LIMIT)
    if sol.status == Status.FEASIBLE_WITH_GAP:
        assert sol.gap == pytest.approx((sol.objective - sol.best_bound) / abs(sol.objective))
        assert sol.best_bound <= sol.objective


def test_model_validation():
    b = ModelBuilder()
    with pytest.raises(ModelError):
        b.add_var("x", 2.0, 1.0)
        b.build()


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_milp_matches_enumeration(seed):
    model, (c, A, s, r) = random_binary_model(np.random.default_rng(seed))
    ref, _ = enumerate_binary(c, A, s, r)
    sol = solve_milp(model)
    if ref is None:
        assert sol.status == Status.INFEASIBLE
    else:
        assert sol.status == Status.OPTIMAL
        assert sol.objective == pytest.approx(ref, abs=1e-9)
        assert np.all(np.abs(sol.x - np.round(sol.x)) <= 1e-6)
        assert sol.best_bound <= sol.objective + 1e-9
        assert sol.gap <= 1e-6


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_lp_matches_vertex_enumeration(seed):
    model, data = random_box_lp(np.random.default_rng(seed))
    ref = vertex_enumeration(*data)
    sol = solve_lp(model)
    assert sol.status == Status.OPTIMAL and ref is not None
    assert sol.objective == pytest.approx(ref, abs=1e-8 * max(1.0, abs(ref)))
    assert model.max_violation(sol.x) <= 1e-8
    # no improving reduced cost at a bound
    d = sol.reduced_costs
    at_lb = np.isclose(sol.x, model.lb, atol=1e-9)
    at_ub = np.isclose(sol.x, model.ub, atol=1e-9)
    basic_like = ~(at_lb | at_ub)
    assert np.all(np.abs(d[basic_like]) <= 1e-8)
    assert np.all(d[at_lb & ~at_ub] >= -1e-8)
    assert np.all(d[at_ub & ~at_lb] <= 1e-8)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_determinism(seed):
    model, _ = random_binary_model(np.random.default_rng(seed))
    a, b = solve_milp(model), solve_milp(model)
    assert a.status == b.status and a.nodes == b.nodes
    if a.has_primal:
        assert np.array_equal(a.x, b.x)


def test_export_single_variable():
    b = ModelBuilder("one")
    b.add_var("x", 1.5, 4.0, obj=2.0)
    text = export_model(b.build())
    assert "x" in text and "4" in text and "1.5" in text
    assert text.lower().startswith("\\") or "minimize" in text.lower()


def test_export_preserves_equality():
    m = from_arrays([1.0, 1.0], [[1.0, 1.0]], ["="], [3.0])
    lp = read_lp(export_model(m))
    assert lp.model.senses == ("=",)
    assert " = 3" in export_model(m)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_lp_format_round_trip(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 20))
    m = int(rng.integers(0, 8))
    c = rng.normal(size=n) * 10.0 ** rng.integers(-3, 4, size=n)
    A = rng.normal(size=(m, n)) * (rng.random((m, n)) < 0.5)
    lb = np.where(rng.random(n) < 0.2, -np.inf, rng.uniform(-5, 0, n))
    ub = np.where(rng.random(n) < 0.2, np.inf, rng.uniform(0.1, 5, n))
    integer = rng.random(n) < 0.3
    senses = list(rng.choice(["<=", ">=", "="], size=m))
    model = from_arrays(c, A if m else None, senses, rng.normal(size=m), lb, ub, integer)
    back = read_lp(export_model(model)).model
    assert back.names == model.names and back.senses == model.senses
    assert np.array_equal(back.integer, model.integer)
    assert np.allclose(back.c, model.c, rtol=1e-12, atol=0)
    assert np.allclose(back.lb, model.lb, rtol=1e-12) and np.allclose(back.ub, model.ub, rtol=1e-12)
    assert np.allclose(back.dense(), model.dense(), rtol=1e-12, atol=0)
    assert np.allclose(back.rhs, model.rhs, rtol=1e-12, atol=0)


def test_maximize_reading():
    lp = read_lp("Maximize\n obj: 3 x + 2 y\nSubject To\n c1: x + y <= 4\nBounds\n x <= 3\nEnd\n")
    assert lp.maximize
    sol = solve_lp(lp.model)
    assert -sol.objective == pytest.approx(11.0)


def test_bad_lp_text():
    with pytest.raises(LpFormatError):
        read_lp("x + y <= 3\n")
