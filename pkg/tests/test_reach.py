import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pwacert import library
from pwacert.geometry import HPolyhedron, contains, octagon_template, support_many
from pwacert.reach import ReachOptions, check_rpi, overapprox_k, overapprox_one, support_reach
from pwacert.sim import brute_support

from oracles import scalar_support


def interval(r):
    return HPolyhedron.from_box([-r], [r])


@pytest.mark.parametrize("k", [1, 2, 3])
def test_scalar_supports_follow_the_recurrence(scalar, k):
    sys_, net = scalar
    F = interval(0.6)
    assert support_reach(sys_, net, F, k, [1.0]) == pytest.approx(scalar_support(0.6, k), abs=1e-9)
    assert support_reach(sys_, net, F, k, [-1.0]) == pytest.approx(scalar_support(0.6, k), abs=1e-9)


def test_scalar_template_iterates(scalar):
    sys_, net = scalar
    seq = overapprox_k(sys_, net, interval(0.6), 3)
    np.testing.assert_allclose([P.b[0] for P in seq], [0.4, 0.3, 0.25], atol=1e-9)


def test_rpi_check(scalar):
    sys_, net = scalar
    ok, supports = check_rpi(sys_, net, interval(0.6))
    assert ok and supports == pytest.approx([0.4, 0.4])
    assert not check_rpi(sys_, net, interval(0.18))[0]


def test_support_log_records_every_solve(scalar):
    sys_, net = scalar
    opts = ReachOptions(log=[])
    overapprox_one(sys_, net, interval(1.0), opts)
    assert len(opts.log) == 2 and {e["k"] for e in opts.log} == {1}


def test_template_is_tight(quadrant):
    # the LP support of the template polyhedron along C_i equals the MILP value
    sys_, net = quadrant
    R = overapprox_one(sys_, net, sys_.X)
    np.testing.assert_allclose(support_many(R, R.A), R.b, atol=1e-7)


@settings(max_examples=6)
@given(st.floats(1.0, 6.0), st.floats(0.1, 0.9))
def test_monotone_in_the_initial_set(quadrant, r, shrink):
    sys_, net = quadrant
    big = HPolyhedron(octagon_template(), np.full(8, r))
    small = HPolyhedron(octagon_template(), np.full(8, shrink * r))
    assert contains(overapprox_one(sys_, net, big), overapprox_one(sys_, net, small))


def test_brute_force_is_a_lower_bound(quadrant):
    sys_, net = quadrant
    F = HPolyhedron.from_box([-3, -3], [3, 3])
    for v in octagon_template()[::3]:
        exact = support_reach(sys_, net, F, 1, v)
        brute = brute_support(sys_, net, F, v, 61)
        assert brute <= exact + 1e-7
        assert exact - brute < 0.3
