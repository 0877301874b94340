import math

import numpy as np
import pytest

from flatlag.builders import (
    AffineSampler,
    CircleCurve,
    DomainError,
    TwistProfile,
    build_cone,
    build_cylinder,
    build_from_profile,
    build_surface_legendre,
    build_twisted_legendre,
    grid_points,
    reparametrize_profile,
)
from flatlag.diffgeo import induced_metric, second_fundamental_form
from flatlag.functions import ScalarFunction
from flatlag.legendre import LegendreCoefficients
from flatlag.quat import QI, qmul

from conftest import scenario_b, scenario_coefficients

E8 = np.eye(8)[::4]


def test_grid_points_include_corners():
    pts = grid_points([[0, 1], [2, 3]], [3, 2])
    assert len(pts) == 6
    assert [0.0, 2.0] in pts.tolist() and [1.0, 3.0] in pts.tolist()
    with pytest.raises(DomainError):
        grid_points([[1, 0]], 2)


def test_cylinder_circle_closed_form():
    cyl = build_cylinder([1.0, 0.0, 0.0], [[0.0, 3.0], [-1.0, 1.0]])
    for x1 in np.linspace(0.0, 3.0, 7):
        J = cyl.jacobian([x1, 0.3])
        expected = np.zeros(8)
        expected[:4] = [math.cos(x1), math.sin(x1), 0.0, 0.0]  # exp(i x1) * 1
        np.testing.assert_allclose(J[0], expected, atol=1e-10)
        np.testing.assert_array_equal(J[1], E8[1])
        H = cyl.hessian([x1, 0.3])
        assert np.max(np.abs(H[0, 1])) == 0.0
    np.testing.assert_allclose(induced_metric(cyl, [1.0, 0.0]).g, np.eye(2), atol=1e-12)


def test_cylinder_rejects_vanishing_lambda():
    with pytest.raises(DomainError):
        build_cylinder([0.0, 0.0, 0.0], [[0.0, 1.0], [0.0, 1.0]])
    with pytest.raises(DomainError):
        build_cylinder([1.0, 0.0, 0.0], [[0.0, 1.0], [0.0, 1.0]], rulings=[2 * E8[1]])


def test_cylinder_speed_follows_lambda():
    lam = [ScalarFunction((1.0, 0.5)), 0.3, 0.0]
    cyl = build_cylinder(lam, [[0.0, 2.0], [0.0, 1.0]])
    for x1 in (0.0, 0.7, 1.9):
        assert np.linalg.norm(cyl.jacobian([x1, 0.0])[0]) == pytest.approx(cyl.speed(x1), rel=1e-10)
    sff = second_fundamental_form(cyl, [0.8, 0.5])
    np.testing.assert_allclose(sff.lam, cyl.expected_lambda([0.8, 0.5]), atol=1e-9)


def test_twisted_legendre_polar_example():
    """b = 1, zero coefficients, n = 2: L = (1 + u) z(t) - z(0), flat polar coordinates."""
    coeffs = LegendreCoefficients.zero(2)
    s = build_twisted_legendre(coeffs, 1.0, [[0.0, 2.0], [-0.5, 0.5]])
    for t, u in [(0.3, 0.1), (1.7, -0.4)]:
        z = math.cos(t) * E8[0] + math.sin(t) * E8[1]
        np.testing.assert_allclose(s.value([t, u]), (1 + u) * z - E8[0], atol=1e-10)
        np.testing.assert_allclose(induced_metric(s, [t, u]).g, np.diag([(1 + u) ** 2, 1.0]), atol=1e-10)
        assert np.max(np.abs(second_fundamental_form(s, [t, u]).h)) < 1e-9


def test_twisted_legendre_first_derivative_identity(scenario_sampler):
    """L_t = ftilde z' validates P_j' = a_j z' end to end."""
    s = scenario_sampler
    for x in [(0.4, 0.1, -0.1), (3.3, -0.2, 0.15), (6.0, 0.05, 0.2)]:
        st, _ = s._state(x[0])
        h = 1e-5
        e = np.array([h, 0, 0])
        Lt = (s.value(np.add(x, e)) - s.value(np.subtract(x, e))) / (2 * h)
        np.testing.assert_allclose(Lt, s.ftilde(x) * st.zp, atol=1e-8)


def test_twisted_legendre_metric_and_lambda(scenario_sampler):
    x = np.array([2.0, 0.1, -0.15])
    g = induced_metric(scenario_sampler, x).g
    np.testing.assert_allclose(g, scenario_sampler.expected_metric(x), atol=1e-10)
    sff = second_fundamental_form(scenario_sampler, x)
    np.testing.assert_allclose(sff.lam, np.full(3, math.sqrt(3)) / scenario_sampler.ftilde(x), atol=1e-9)
    assert sff.mu_max < 1e-12


def test_twisted_legendre_rejects_vanishing_ftilde():
    coeffs = LegendreCoefficients.zero(2)
    with pytest.raises(DomainError, match="u="):
        build_twisted_legendre(coeffs, 1.0, [[0.0, 1.0], [-2.0, 0.0]])
    with pytest.raises(DomainError):
        build_twisted_legendre(scenario_coefficients(), scenario_b(), [[0.0, 1.0], [-0.2, 0.2]])


def test_surface_alias_matches_twisted():
    coeffs = LegendreCoefficients(0.5, 0.0, ScalarFunction.sin(0.2), (), 2)
    dom = [[-0.5, 1.0], [-0.3, 0.3]]
    a = build_surface_legendre(1.0, coeffs, dom)
    b = build_twisted_legendre(coeffs, 1.0, dom)
    for p in grid_points(dom, 4):
        np.testing.assert_array_equal(a.value(p), b.value(p))
    with pytest.raises(DomainError):
        build_surface_legendre(1.0, scenario_coefficients(), dom)


def test_surface_ruling_structure():
    coeffs = LegendreCoefficients(1.0, 0.0, 0.0, (), 2)
    s = build_surface_legendre(ScalarFunction((1.0, 0.1)), coeffs, [[0.0, 2.0], [-0.4, 0.4]])
    for x in (0.2, 1.1, 1.9):
        P = s._state(x)[0].z
        for y in (-0.4, 0.25):
            np.testing.assert_allclose(s.value([x, y]) - s.value([x, 0.0]), y * P, atol=1e-14)
        g = induced_metric(s, [x, 0.25]).g
        np.testing.assert_allclose(g, np.diag([(1 + 0.1 * x + 0.25) ** 2, 1.0]), atol=1e-10)


def test_cone_rank_check():
    curve = CircleCurve(E8[0], E8[1])
    with pytest.raises(DomainError):
        build_cone(1.0, curve, [[0.5, 2.0], [0.0, 6.0]])
    cone = build_cone(ScalarFunction((0.0, 1.0)), curve, [[0.5, 2.0], [0.0, 6.0]])
    np.testing.assert_allclose(cone.value([1.5, 0.2]), 1.5 * (math.cos(0.2) * E8[0] + math.sin(0.2) * E8[1]))


def test_cone_quaternion_scale():
    curve = CircleCurve(E8[0], E8[1])
    cone = build_cone([0.0, ScalarFunction((0.0, 1.0)), 0.0, 0.0], curve, [[0.5, 2.0], [0.0, 6.0]])
    v = cone.value([2.0, 0.0])
    np.testing.assert_allclose(v[:4], qmul(2.0 * QI.as_array(), [1, 0, 0, 0]))


def test_reparametrization_identity():
    prof = TwistProfile(ScalarFunction((1.0, 0.0, 1.0)), (1.0, ScalarFunction((0.0, 1.0))))
    rep = reparametrize_profile(prof, [[0.0, 1.0], [-0.3, 0.3], [-0.3, 0.3]])
    for x in (0.0, 0.4, 1.0):
        assert rep.t_of_x(x) == pytest.approx(x)
        assert rep.b(x) == pytest.approx(prof.beta(x))
        assert rep.a[0](x) == pytest.approx(x)


def test_reparametrization_scaled_variable():
    prof = TwistProfile(ScalarFunction((0.0, 1.0)), (2.0,))
    rep = reparametrize_profile(prof, [[0.5, 2.0], [-0.2, 0.2]])
    for x in (0.5, 1.0, 2.0):
        t = rep.t_of_x(x)
        assert t == pytest.approx(2 * x, abs=1e-15)
        assert rep.b(t) == pytest.approx(t / 4, abs=1e-15)
        for u in (-0.2, 0.1):
            assert rep.ftilde(t, [u]) == pytest.approx(prof.f([x, u]) / 2.0, abs=1e-12)


def test_reparametrization_rejects_vanishing_alpha2():
    prof = TwistProfile(1.0, (ScalarFunction((0.0, 1.0)),))
    with pytest.raises(DomainError):
        reparametrize_profile(prof, [[-1.0, 1.0], [-0.1, 0.1]])


def test_reparametrization_nonconstant_alpha2():
    prof = TwistProfile(ScalarFunction((2.0,)), (ScalarFunction((1.0, 0.5)),))
    rep = reparametrize_profile(prof, [[0.0, 1.0], [-0.2, 0.2]])
    x = 0.6
    t = rep.t_of_x(x)
    assert t == pytest.approx(x + 0.25 * x * x)
    assert rep.x_of_t(t) == pytest.approx(x, abs=1e-13)
    assert rep.b(t) == pytest.approx(2.0 / 1.3)
    h = 1e-6
    assert rep.b.deriv(t) == pytest.approx((rep.b(t + h) - rep.b(t - h)) / (2 * h), rel=1e-6)


def test_profile_sampler_metric():
    prof = TwistProfile(ScalarFunction((1.0, 0.2)), (ScalarFunction((1.0, 0.3)), 0.3))
    dom = [[0.0, 1.0], [-0.3, 0.3], [-0.3, 0.3]]
    s = build_from_profile(prof, dom)
    for x in ([0.2, 0.1, -0.2], [0.8, -0.25, 0.25]):
        np.testing.assert_allclose(induced_metric(s, x).g, s.expected_metric(x), atol=1e-9)
        sff = second_fundamental_form(s, x)
        np.testing.assert_allclose(sff.lam, s.expected_lambda(x), atol=1e-8)


def test_profile_strict_normalization():
    dom = [[0.0, 1.0], [-0.3, 0.3]]
    good = TwistProfile(1.0, (1.0,), (math.sqrt(3),) * 3)
    good.validate(dom, strict=True)
    bad = TwistProfile(1.0, (1.0,), (2.0, 2.0, 2.0))
    with pytest.raises(DomainError):
        bad.validate(dom, strict=True)
    bad.validate(dom)
    with pytest.raises(DomainError):
        TwistProfile(0.1, (1.0,)).validate(dom)


def test_affine_sampler():
    s = AffineSampler(np.eye(8)[[0, 4]], [[0, 1], [0, 1]])
    np.testing.assert_array_equal(induced_metric(s, [0.5, 0.5]).g, np.eye(2))
    assert s.columns()[:4] == ["x1", "x2", "L1_w", "L1_x"]
