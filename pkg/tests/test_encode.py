import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pwacert import library
from pwacert.encode import BoundsTooTight, compute_big_m, encode_closed_loop, encode_nn
from pwacert.geometry import Box, HPolyhedron
from pwacert.milp import MilpModel, Status, solve
from pwacert.sim import step_closed_loop
from pwacert.sysmodel import eval_nn, interval_bounds

from oracles import milp_trajectory, random_net


def simulate_fixed(sys_, net, x0, ds):
    xs = [np.asarray(x0, dtype=float)]
    for d in ds:
        xs.append(step_closed_loop(sys_, net, xs[-1], d)[0])
    return np.array(xs)


@settings(max_examples=15)
@given(st.integers(0, 10_000))
def test_closed_loop_milp_matches_simulation(seed):
    rng = np.random.default_rng(seed)
    sys_, net = library.quadrant_system(), library.quadrant_controller()
    x0 = rng.uniform(-3, 3, 2)
    ds = rng.uniform(-0.15, 0.15, (3, 2))
    ref = simulate_fixed(sys_, net, x0, ds)
    got = milp_trajectory(sys_, net, x0, ds)
    np.testing.assert_allclose(got, ref, atol=1e-6)


@settings(max_examples=15)
@given(st.integers(0, 10_000))
def test_network_encoding_is_exact(seed):
    # with x pinned, the only feasible u is Phi(x)
    rng = np.random.default_rng(seed)
    net = random_net(rng, 2, widths=(3, 3), channels=3)
    box = Box([-2, -2], [2, 2])
    x = rng.uniform(-2, 2, 2)
    for sense in ("max", "min"):
        model = MilpModel()
        xv = model.add_vars("x", 2, lower=x, upper=x)
        u, _, _ = encode_nn(model, net, xv, interval_bounds(net, box), x_box=box)
        model.set_objective(u, [1.0], sense)
        res = solve(model)
        assert res.status == Status.OPTIMAL
        assert res.objective_value == pytest.approx(eval_nn(net, x)[0], abs=1e-7)


def test_pinned_disturbance_outside_the_set_is_infeasible():
    sys_, net = library.scalar_system(), library.scalar_controller()
    assert milp_trajectory(sys_, net, [0.2], [[0.5]]) is None


def test_bounds_checked_against_the_initial_box():
    net = library.quadrant_controller()
    model = MilpModel()
    xv = model.add_vars("x", 2)
    with pytest.raises(BoundsTooTight):
        encode_nn(model, net, xv, interval_bounds(net, Box([-1, -1], [1, 1])),
                  x_box=Box([-2, -2], [2, 2]))


def test_big_m_dominates_the_state_range():
    sys_ = library.quadrant_system()
    M = compute_big_m(sys_)
    assert M >= 1.1 * 10.0
    # large enough to switch off every guard row over X x U
    for r in sys_.regions:
        corners = Box([-10, -10, -1], [10, 10, 1]).vertices()
        assert np.all(corners @ r.guard.A.T - r.guard.b <= M)


def test_binary_count_per_step():
    sys_, net = library.quadrant_system(), library.quadrant_controller()
    enc = encode_closed_loop(sys_, net, sys_.X, 2)
    assert enc.n_binaries_per_step == sys_.s + net.n_binaries
    assert enc.model.n_binaries == 2 * enc.n_binaries_per_step
    assert len(enc.x_vars) == 3


def test_zero_horizon_rejected():
    sys_, net = library.scalar_system(), library.scalar_controller()
    with pytest.raises(ValueError):
        encode_closed_loop(sys_, net, HPolyhedron.from_box([-1], [1]), 0)
