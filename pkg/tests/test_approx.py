import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pwacert import library
from pwacert.approx import (ApproxError, EmptyRegionValidation, RankDeficient, SampledDynamics,
                            error_bound, fit_least_squares, grid_samples, residuals, uub_certify)
from pwacert.certify import assemble_certificate
from pwacert.geometry import HPolyhedron


def affine_map(x, u):
    return x @ np.array([[0.9, 0.2], [-0.1, 0.8]]).T + u * np.array([0.5, 1.0]) + np.array([0.1, -0.2])


@pytest.fixture(scope="module")
def di_fit():
    X, U = library.double_integrator_domain()
    fit = fit_least_squares(grid_samples("nonlinear_double_integrator", X, U, (30, 30, 5)),
                            library.chessboard_regions())
    val = grid_samples("nonlinear_double_integrator", X, U, (120, 120, 20))
    return fit, val


def test_affine_data_is_recovered_exactly():
    X, U = library.double_integrator_domain()
    data = grid_samples(affine_map, X, U, (7, 7, 3))
    fit = fit_least_squares(data, library.chessboard_regions())
    for r in fit.base.regions:
        np.testing.assert_allclose(r.A, [[0.9, 0.2], [-0.1, 0.8]], atol=1e-10)
        np.testing.assert_allclose(r.B.ravel(), [0.5, 1.0], atol=1e-10)
        np.testing.assert_allclose(r.p, [0.1, -0.2], atol=1e-10)
    bounded = error_bound(fit, data, inflation=0.25)
    assert np.all(bounded.bounds < 1e-10)


def test_duplicate_samples_are_rank_deficient():
    X, U = library.double_integrator_domain()
    x = np.tile([[1.0, 1.0]], (10, 1))
    u = np.zeros((10, 1))
    data = SampledDynamics(x, u, affine_map(x, u), X, U)
    region = HPolyhedron.from_box([-6, -6, -2], [6, 6, 2])
    with pytest.raises(RankDeficient):
        fit_least_squares(data, [region])


def test_samples_outside_domain_rejected():
    X, U = library.double_integrator_domain()
    with pytest.raises(ValueError):
        SampledDynamics([[7.0, 0.0]], [[0.0]], [[0.0, 0.0]], X, U)


def test_chessboard_bound_in_band(di_fit):
    fit, val = di_fit
    tight = error_bound(fit, val, inflation=0.0)
    assert 0.10 <= tight.global_bound <= 0.15
    # center region: linear part near the double integrator, offset from the curvature
    center = fit.base.regions[4]
    np.testing.assert_allclose(center.A, [[1, 1], [0, 1]], atol=1e-6)
    np.testing.assert_allclose(center.B.ravel(), [0.5, 1.0], atol=1e-6)
    assert np.all(center.p > 0)


@settings(max_examples=5)
@given(st.floats(0.0, 1.0))
def test_inflation_scales_bounds(di_fit, infl):
    fit, val = di_fit
    base = error_bound(fit, val, 0.0, per_region=True)
    inflated = error_bound(fit, val, infl, per_region=True)
    np.testing.assert_allclose(inflated.bounds, (1 + infl) * base.bounds, rtol=1e-12)


def test_bounds_dominate_every_validation_residual(di_fit):
    fit, val = di_fit
    for per_region in (False, True):
        b = error_bound(fit, val, 0.0, per_region=per_region)
        for r, bound in zip(residuals(b, val), b.bounds):
            assert np.all(r <= bound)


def test_residual_lies_in_active_region_set(di_fit):
    # f(x, u) in f_PWA(x, u) + D for the region eval_pwa selects
    from pwacert.sysmodel import eval_pwa
    fit, val = di_fit
    b = error_bound(fit, val, 0.0)
    rng = np.random.default_rng(3)
    idx = rng.choice(len(val), 10_000, replace=False)
    for i in idx:
        nominal, reg = eval_pwa(b.base, val.x[i], val.u[i])
        assert b.base.regions[reg].dist.contains_point(val.fx[i] - nominal, 0.0)


def test_analytic_override(di_fit):
    fit, val = di_fit
    b = error_bound(fit, val, analytic=0.2)
    assert np.all(b.bounds == 0.2) and b.analytic
    with pytest.raises(ApproxError):
        error_bound(fit, val, analytic=0.01)


def test_empty_validation_region(di_fit):
    fit, _ = di_fit
    X, U = library.double_integrator_domain()
    corner = SampledDynamics([[5.0, 5.0]], [[0.0]], [[0.0, 0.0]], X, U)
    with pytest.raises(EmptyRegionValidation):
        error_bound(fit, corner)


def test_uub_needs_error_bound(di_fit):
    fit, _ = di_fit
    with pytest.raises(ApproxError):
        uub_certify(fit, library.double_integrator_controller())


def test_zero_residual_matches_plain_pipeline():
    X, U = library.inf_ball(1, 1.0), library.inf_ball(1, 1.0)
    guard = HPolyhedron.from_box([-1, -1], [1, 1])
    data = grid_samples(lambda x, u: 0.5 * x, X, U, (11, 3))
    fit = error_bound(fit_least_squares(data, [guard]), data, 0.0)
    assert fit.global_bound < 1e-12
    # give both the same disturbance so the pipelines are comparable
    fitted = fit.base.with_disturbances([library.inf_ball(1, 0.1)], provenance="error_bound")
    a = assemble_certificate(fitted, library.scalar_controller(), eps_bar=0.01)
    b = assemble_certificate(library.scalar_system(), library.scalar_controller(), eps_bar=0.01)
    assert a.k_bar == b.k_bar
    np.testing.assert_allclose(a.r_min.b, b.r_min.b, atol=1e-9)
    assert a.uub_verdict == "uub_certified" and b.uub_verdict == "not_applicable"
