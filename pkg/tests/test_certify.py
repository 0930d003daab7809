import numpy as np
import pytest
from hypothesis import given, strategies as st

from pwacert import library
from pwacert.certify import (NotConverged, OriginNotInterior, alpha_margin, assemble_certificate,
                             compute_f_max, compute_r_min, delta_max, recheck_certificate,
                             verify_nn_input_constraints)
from pwacert.geometry import HPolyhedron
from pwacert.sysmodel import linear_net


@pytest.fixture(scope="module")
def scalar_cert():
    return assemble_certificate(library.scalar_system(), library.scalar_controller(), eps_bar=0.01)


def test_scalar_certificate(scalar_cert):
    c = scalar_cert
    assert c.stability_verdict == "asymptotically_stable"
    assert c.uub_verdict == "not_applicable"
    assert c.f_max_iterations == 1
    np.testing.assert_allclose(c.f_max.b, [0.6, 0.6], atol=1e-9)
    assert c.k_bar == 8
    np.testing.assert_allclose(c.r_min.b, [0.2015625, 0.2015625], atol=1e-9)
    assert c.alpha == pytest.approx(0.203125 / 0.2015625, abs=1e-6)
    assert c.delta_max == pytest.approx((c.alpha - 1) * 0.2015625, abs=1e-9)


def test_scalar_sequence(scalar_cert):
    seq = [P.b[0] for P in scalar_cert.r_sequence]
    np.testing.assert_allclose(seq, [0.6, 0.4, 0.3, 0.25, 0.225, 0.2125, 0.20625, 0.203125,
                                     0.2015625], atol=1e-9)


def test_recheck_passes_without_solves(scalar_cert):
    assert all(recheck_certificate(scalar_cert).values())


def test_recheck_catches_tampering(scalar_cert):
    from dataclasses import replace
    bad = replace(scalar_cert, rpi_supports=np.array([0.7, 0.7]))
    assert not recheck_certificate(bad)["rpi"]


def test_smaller_eps_needs_more_steps():
    sys_, net = library.scalar_system(), library.scalar_controller()
    F = HPolyhedron.from_box([-0.6], [0.6])
    _, k, _ = compute_r_min(sys_, net, F, 1e-3)
    # first k with c_k <= 0.2 (1 + eps): 0.2 + 0.4 / 2^k <= 0.2002
    assert k == 11


def test_f_max_history_is_nested():
    sys_ = library.quadrant_system()
    net = library.quadrant_controller()
    history = []
    F, k, _ = compute_f_max(sys_, net, max_iters=20, history=history)
    from pwacert.geometry import contains
    assert contains(sys_.X, history[0])
    for outer, inner in zip(history, history[1:]):
        assert contains(outer, inner)
    assert F is history[-1] and k == len(history)


def test_not_converged_carries_partial_certificate():
    sys_, net = library.scalar_system(), library.scalar_controller()
    with pytest.raises(NotConverged) as info:
        assemble_certificate(sys_, net, eps_bar=1e-9, max_iters=5)
    cert = info.value.certificate
    assert cert.stability_verdict == "not_computed"
    assert cert.f_max is not None


def test_input_constraints():
    X = HPolyhedron.from_box([-1, -1], [1, 1])
    U = HPolyhedron.from_box([-1], [1])
    assert verify_nn_input_constraints(linear_net([[0.5, 0.5]]), X, U)
    assert not verify_nn_input_constraints(linear_net([[0.7, 0.7]]), X, U)


def test_input_violation_is_flagged_in_certificate():
    sys_ = library.scalar_system()
    cert = assemble_certificate(sys_, linear_net([[1.0]]), eps_bar=0.01)
    assert cert.inputs_verified is False
    assert cert.stability_verdict == "not_computed"


@given(st.floats(1.0 + 1e-6, 3.0), st.floats(0.1, 5.0))
def test_delta_max_is_linear_in_alpha_minus_one(alpha, r):
    R = HPolyhedron.from_box([-r, -r], [r, r])
    d1 = delta_max(R, alpha)
    d2 = delta_max(R, 1 + 2 * (alpha - 1))
    assert d2 == pytest.approx(2 * d1, rel=1e-12)
    assert d1 == pytest.approx((alpha - 1) * r, rel=1e-12)


def test_delta_max_needs_origin_inside():
    with pytest.raises(OriginNotInterior):
        delta_max(HPolyhedron.from_box([0.0], [1.0]), 1.1)


@given(st.floats(0.2, 0.95))
def test_alpha_of_scaled_copies(shrink):
    prev = HPolyhedron.from_box([-1, -2], [1, 2])
    last = HPolyhedron(prev.A, shrink * prev.b)
    assert alpha_margin(prev, last) == pytest.approx(1 / shrink, rel=1e-8)


def test_alpha_below_one_reported():
    prev = HPolyhedron.from_box([-1], [1])
    last = HPolyhedron.from_box([-2], [2])
    assert alpha_margin(prev, last) == pytest.approx(0.5)
