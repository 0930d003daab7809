import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pwacert.milp import (MilpModel, SolverConfig, Status, export_mps,
                          lp_solve, solve, write_mps)

from oracles import enumerate_milp, highspy, lp_value, random_milp


def small_model():
    # max x + y  s.t.  x + 2y <= 1.5, y binary, 0 <= x <= 1
    m = MilpModel()
    x = m.add_var("x", 0.0, 1.0)
    y = m.add_var("y", 0.0, 1.0, binary=True)
    m.add_constraint([x, y], [1.0, 2.0], "<=", 1.5)
    m.set_objective([x, y], [1.0, 1.0], "max")
    return m, x, y


def test_small_milp():
    m, x, y = small_model()
    res = solve(m)
    assert res.status == Status.OPTIMAL
    assert res.objective_value == pytest.approx(1.0)
    # relaxation is looser
    assert lp_solve(m).objective_value == pytest.approx(1.25)


def test_duplicate_indices_are_summed():
    m = MilpModel()
    x = m.add_var("x", 0, 10)
    m.add_constraint([x, x], [1.0, 1.0], "<=", 4.0)
    m.set_objective([x], [1.0])
    assert solve(m).objective_value == pytest.approx(2.0)


def test_infeasible_and_unbounded():
    m = MilpModel()
    x = m.add_var("x", 0, 1)
    m.add_constraint([x], [1.0], ">=", 2.0)
    m.set_objective([x], [1.0])
    assert solve(m).status == Status.INFEASIBLE

    m = MilpModel()
    x = m.add_var("x", 0)
    y = m.add_var("y", 0, 1, binary=True)
    m.add_constraint([x, y], [1.0, -1.0], ">=", 0.0)
    m.set_objective([x], [1.0])
    assert solve(m).status == Status.UNBOUNDED


def test_node_limit_reports_bound():
    rng = np.random.default_rng(5)
    m = random_milp(rng, 12, 6, n_rows=10, maximize=True)
    res = solve(m, SolverConfig(max_nodes=2))
    full = solve(m)
    if res.status == Status.NODE_LIMIT:
        assert res.best_bound >= full.objective_value - 1e-7
    else:
        assert res.objective_value == pytest.approx(full.objective_value, abs=1e-7)


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(int_tol=-1)
    with pytest.raises(ValueError):
        SolverConfig(branching="random")


@settings(max_examples=30)
@given(seed=st.integers(0, 10_000), n_bin=st.integers(1, 6), n_cont=st.integers(0, 8))
def test_bnb_matches_enumeration(seed, n_bin, n_cont):
    rng = np.random.default_rng(seed)
    m = random_milp(rng, n_bin, n_cont)
    res = solve(m)
    ref = enumerate_milp(m, prefer_highs=False)
    if ref is None:
        assert res.status == Status.INFEASIBLE
    else:
        assert res.status == Status.OPTIMAL
        assert res.objective_value == pytest.approx(ref, abs=1e-8)


@settings(max_examples=40)
@given(seed=st.integers(0, 10_000), n_cont=st.integers(1, 12))
def test_lp_matches_scipy(seed, n_cont):
    rng = np.random.default_rng(seed)
    m = random_milp(rng, 0, n_cont)
    ours = lp_solve(m)
    ref, status = lp_value(m)
    assert ours.status.value == status
    if ref is not None:
        assert ours.objective_value == pytest.approx(ref, abs=1e-8)


@settings(max_examples=25)
@given(seed=st.integers(0, 10_000))
def test_lp_duals_close_the_gap(seed):
    # strong duality for bounded variables: c x = y b + sum of bound terms
    rng = np.random.default_rng(seed)
    m = random_milp(rng, 0, 6)
    res = lp_solve(m)
    if res.status != Status.OPTIMAL:
        return
    A, senses, b, c, lb, ub, _ = m.dense()
    rc = res.reduced_costs
    x = res.assignment
    bound_part = sum(r * (lb[j] if abs(x[j] - lb[j]) < 1e-7 else ub[j])
                     for j, r in enumerate(rc) if abs(r) > 1e-9)
    assert res.objective_value == pytest.approx(res.duals @ b + bound_part, abs=1e-6)


def test_lowest_index_branching_agrees():
    rng = np.random.default_rng(8)
    m = random_milp(rng, 8, 5, maximize=False)
    a = solve(m)
    b = solve(m, SolverConfig(branching="lowest_index"))
    assert a.status == b.status
    if a.optimal:
        assert a.objective_value == pytest.approx(b.objective_value, abs=1e-8)


def test_mps_layout():
    m, _, _ = small_model()
    text = export_mps(m)
    lines = text.splitlines()
    assert lines[0].startswith("NAME")
    for section in ("OBJSENSE", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"):
        assert any(l.startswith(section) for l in lines)
    assert "MARKER" in text and "INTORG" in text and "INTEND" in text
    assert " BV " in text
    # fixed format: field 1 starts in column 2, names in column 5
    col_line = next(l for l in lines if l.startswith("    C0000001"))
    assert col_line[4:12] == "C0000001"


@pytest.mark.skipif(highspy is None, reason="highspy not installed")
def test_mps_read_by_external_solver(tmp_path):
    rng = np.random.default_rng(11)
    for _ in range(5):
        m = random_milp(rng, 5, 5)
        path = tmp_path / "m.mps"
        write_mps(m, path)
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        assert h.readModel(str(path)) == highspy.HighsStatus.kOk
        h.run()
        ours = solve(m)
        if h.getModelStatus() == highspy.HighsModelStatus.kInfeasible:
            assert ours.status == Status.INFEASIBLE
        else:
            assert h.getInfo().objective_function_value == pytest.approx(ours.objective_value, abs=1e-6)

