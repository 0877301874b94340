import math

import numpy as np
import pytest

from flatlag.functions import ScalarFunction
from flatlag.legendre import (
    CurveState,
    DegenerateFrameError,
    LegendreCoefficients,
    acceleration,
    constraint_defect,
    decompose_acceleration,
    frame_gram_deviation,
    integrate_curve,
    special_legendre_rhs,
    specialness_defect,
    standard_initial_frame,
)
from flatlag.quat import QI, QJ, QK, left_mul

from conftest import scenario_coefficients

E = np.eye(8)[::4]


@pytest.mark.parametrize("n", [2, 3, 5])
def test_standard_frame(n):
    st = standard_initial_frame(n)
    assert len(st.P) == n - 2
    assert constraint_defect(st).max == 0.0
    F = st.frame()
    assert F.shape == (4 * n, 4 * n)
    np.testing.assert_array_equal(F @ F.T, np.eye(4 * n))


def test_invalid_dimensions():
    with pytest.raises(ValueError):
        standard_initial_frame(1)
    with pytest.raises(ValueError):
        LegendreCoefficients(0, 0, 0, (), 1)
    with pytest.raises(ValueError):
        LegendreCoefficients(0, 0, 0, (), 3)


def test_rhs_great_circle():
    d = special_legendre_rhs(standard_initial_frame(2), LegendreCoefficients.zero(2))
    np.testing.assert_array_equal(d.z, E[1])
    np.testing.assert_array_equal(d.zp, -E[0])


def test_rhs_parallel_normal():
    coeffs = LegendreCoefficients(0, 0, 0, (0.2,), 3)
    st = standard_initial_frame(3)
    d = special_legendre_rhs(st, coeffs)
    np.testing.assert_allclose(d.P[0], 0.2 * st.zp)
    np.testing.assert_allclose(d.zp, -st.z - 0.2 * st.P[0])


def test_rhs_alpha_only():
    coeffs = LegendreCoefficients(1.0, 0, 0, (), 2)
    st = standard_initial_frame(2)
    np.testing.assert_allclose(acceleration(st, coeffs), left_mul(QI, st.zp) - st.z)


def test_accumulator_derivative():
    b = ScalarFunction((2.0, 1.0))
    st = CurveState(0.5, *standard_initial_frame(2).pack().reshape(3, 8)[:2])
    d = special_legendre_rhs(st, LegendreCoefficients.zero(2), b)
    np.testing.assert_allclose(d.accum, 2.5 * st.zp)


def test_constraint_defect_scaled_z():
    st = standard_initial_frame(2)
    bad = CurveState(0.0, 1.01 * st.z, st.zp)
    assert constraint_defect(bad).norm_z == pytest.approx(0.0201, abs=1e-15)


def test_great_circle_oracle():
    traj = integrate_curve(standard_initial_frame(2), LegendreCoefficients.zero(2), s_end=2 * math.pi, step=1e-3)
    exact = np.cos(traj.s)[:, None] * E[0] + np.sin(traj.s)[:, None] * E[1]
    err = np.max(np.abs(traj.Y[:, :8] - exact))
    assert err < 1e-9
    assert constraint_defect(traj.end).max < 1e-9


def test_rejects_bad_initial_state():
    st = standard_initial_frame(2)
    with pytest.raises(ValueError):
        integrate_curve(CurveState(0.0, 2 * st.z, st.zp), LegendreCoefficients.zero(2))
    with pytest.raises(ValueError):
        integrate_curve(st, LegendreCoefficients.zero(2), step=0.0)


def test_backward_integration_matches_closed_form():
    traj = integrate_curve(standard_initial_frame(2), LegendreCoefficients.zero(2), s_end=-1.0, step=1e-3)
    assert traj.s[-1] == -1.0
    np.testing.assert_allclose(traj.end.z, math.cos(1.0) * E[0] - math.sin(1.0) * E[1], atol=1e-12)


def _drift(step):
    traj = integrate_curve(standard_initial_frame(3), scenario_coefficients(), s_end=2 * math.pi, step=step)
    return max(constraint_defect(st).max for st in traj)


def test_drift_is_fourth_order():
    coarse, fine = _drift(0.02), _drift(0.01)
    assert 10 < coarse / fine < 40


def test_specialness_recovers_injection():
    st = standard_initial_frame(3)
    coeffs = LegendreCoefficients(0.4, 0.1, 0.2, (0.3,), 3)
    zpp = acceleration(st, coeffs) + 0.3 * left_mul(QI, st.P[0])
    parts = decompose_acceleration(st, zpp)
    assert parts.b[0] == pytest.approx(0.3, abs=1e-10)
    assert parts.off_special == pytest.approx(0.3, abs=1e-10)
    assert (parts.alpha, parts.beta, parts.gamma) == pytest.approx((0.4, 0.1, 0.2), abs=1e-14)
    assert parts.a[0] == pytest.approx(0.3, abs=1e-14)
    zpp2 = acceleration(st, coeffs) - 0.7 * left_mul(QK, st.P[0]) + 0.1 * left_mul(QJ, st.P[0])
    assert decompose_acceleration(st, zpp2).off_special == pytest.approx(0.7, abs=1e-10)


def test_n2_curves_are_special():
    coeffs = LegendreCoefficients(ScalarFunction.sin(), 0.5, ScalarFunction((0.0, 1.0)), (), 2)
    traj = integrate_curve(standard_initial_frame(2), coeffs, s_end=1.0, step=1e-2)
    assert specialness_defect(traj, coeffs).max == 0.0


def test_specialness_methods_agree():
    traj = integrate_curve(standard_initial_frame(3), scenario_coefficients(), s_end=1.0, step=1e-3)
    rhs = specialness_defect(traj)
    diff = specialness_defect(traj, method="difference")
    assert rhs.max < 1e-12
    assert diff.max < 1e-6
    np.testing.assert_allclose(rhs.alpha, math.sqrt(3), atol=1e-10)
    np.testing.assert_allclose(rhs.a[:, 0], 0.2 * np.sin(rhs.s), atol=1e-10)


def test_degenerate_frame_rejected():
    st = standard_initial_frame(3)
    bad = CurveState(0.0, st.z, st.z, st.P)
    assert frame_gram_deviation(bad) > 0.5
    with pytest.raises(DegenerateFrameError):
        decompose_acceleration(bad, np.zeros(12))


def test_renormalize_keeps_frame_exact():
    traj = integrate_curve(standard_initial_frame(3), scenario_coefficients(), s_end=2.0, step=0.05, renormalize=True)
    assert constraint_defect(traj.end).max < 1e-13


def test_trajectory_interpolation_and_csv(tmp_path):
    traj = integrate_curve(standard_initial_frame(2), LegendreCoefficients.zero(2), s_end=1.0, step=1e-2)
    st = traj.state_at(0.505)
    np.testing.assert_allclose(st.z, math.cos(0.505) * E[0] + math.sin(0.505) * E[1], atol=1e-9)
    path = tmp_path / "traj.csv"
    traj.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0].split(",")[:3] == ["s", "z1_w", "z1_x"]
    assert len(lines) == len(traj) + 1
    assert len(lines[1].split(",")) == 1 + 3 * 8
