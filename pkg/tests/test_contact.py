"""Tests for the plane field orthogonal to the fibres."""

import math

import numpy as np
import pytest

from great_circle_contact.chart import P_of, standardize
from great_circle_contact.contact import (
    CROSS_CHECK_TOL,
    _basepoint_partials,
    _quarter_partials,
    alpha_batch,
    alpha_coeffs,
    chart_point,
    contact_along_path,
    contact_coefficient_analytic,
    contact_coefficient_numeric,
)
from great_circle_contact.errors import DegenerateInputError
from great_circle_contact.fibration import (
    DeformationPath,
    FibrationSpec,
    Handedness,
    PullToward,
    fixed_fibre_target,
)
from great_circle_contact.quat import K, ONE, Quaternion, UnitQuaternion, from_axis_angle, mul
from great_circle_contact.reports import TIGHTNESS_NOTE
from great_circle_contact.sampling import s3_points
from great_circle_contact.verify import HopfConstant
from tests.conftest import DIAGONAL, pull_toward


def test_chart_point_examples(hopf):
    chart = standardize(hopf, ONE)
    assert chart_point(chart, 0.0, 0.0, 0.0).isclose(ONE, 1e-12)
    assert chart_point(chart, 0.0, 0.0, math.pi / 2).isclose(K, 1e-12)
    expected = mul(P_of(0.1, 0.0), Quaternion(math.cos(0.3), 0.0, 0.0, math.sin(0.3)))
    assert chart_point(chart, 0.1, 0.0, 0.3).isclose(expected, 1e-12)


def test_hopf_alpha_at_origin(hopf):
    chart = standardize(hopf, DIAGONAL)
    for t in (0.0, 0.4, 1.3, 2.9):
        assert alpha_coeffs(chart, 0.0, 0.0, t) == pytest.approx((0.0, 0.0, 1.0), abs=1e-9)


def test_alpha_at_origin_t_zero():
    chart = standardize(pull_toward(0.3), UnitQuaternion(0.3, -0.5, 0.1, 0.8))
    assert alpha_coeffs(chart, 0.0, 0.0, 0.0) == pytest.approx((0.0, 0.0, 1.0), abs=1e-10)


def test_alpha_batch_shape(hopf):
    chart = standardize(hopf, ONE)
    xyt = np.array([[0.0, 0.0, 0.0], [0.05, -0.05, 1.0], [0.1, 0.0, 2.0]])
    alpha = alpha_batch(chart, xyt)
    assert alpha.shape == (3, 3)
    np.testing.assert_array_equal(alpha[:, 2], 1.0)


def test_orthogonality_identities():
    chart = standardize(pull_toward(0.3), DIAGONAL)
    xy = np.array([[0.05, 0.02], [-0.1, 0.1], [0.0, -0.15]])
    P = np.column_stack([np.sqrt(1.0 - np.sum(xy * xy, axis=1)), xy, np.zeros(3)])
    P_x, P_y = _basepoint_partials(xy)
    Q, Q_x, Q_y = _quarter_partials(chart, xy, 1e-4)
    np.testing.assert_allclose(np.sum(P * P_x, axis=1), 0.0, atol=1e-15)
    np.testing.assert_allclose(np.sum(P * P_y, axis=1), 0.0, atol=1e-15)
    np.testing.assert_allclose(np.sum(Q * Q_x, axis=1), 0.0, atol=1e-8)
    np.testing.assert_allclose(np.sum(Q * Q_y, axis=1), 0.0, atol=1e-8)


def test_hopf_analytic_coefficient_is_exact():
    assert contact_coefficient_analytic(HopfConstant().origin_jacobian()) == -2.0


def test_hopf_numeric_coefficient(hopf):
    for p in s3_points(100, seed=0):
        chart = standardize(hopf, UnitQuaternion.from_array(p))
        check = contact_coefficient_numeric(chart)
        assert check.analytic == pytest.approx(-2.0, abs=1e-9)
        assert check.full == pytest.approx(-2.0, abs=1e-6)
        assert check.reduced == pytest.approx(-2.0, abs=1e-6)


@pytest.mark.parametrize("lam", [0.1, 0.2, 0.3])
def test_three_evaluations_agree(lam):
    spec = pull_toward(lam)
    for p in s3_points(50, seed=11):
        check = contact_coefficient_numeric(standardize(spec, UnitQuaternion.from_array(p)), check=False)
        assert check.gap <= CROSS_CHECK_TOL
        assert abs(check.full - check.reduced) <= CROSS_CHECK_TOL
        assert check.analytic < 0.0


@pytest.mark.parametrize("handedness", [Handedness.RIGHT, Handedness.LEFT])
def test_three_evaluations_agree_with_tilt(handedness):
    spec = FibrationSpec(PullToward(K, 0.3, from_axis_angle((1.0, 1.0, 0.0), 0.2)), handedness)
    for p in s3_points(20, seed=13):
        check = contact_coefficient_numeric(standardize(spec, UnitQuaternion.from_array(p)), check=False)
        assert check.gap <= CROSS_CHECK_TOL
        assert abs(check.full - check.reduced) <= CROSS_CHECK_TOL
        assert check.analytic < 0.0


def test_deformation_sweep_stays_contact():
    spec = pull_toward(0.3)
    target = fixed_fibre_target(spec, ONE)
    assert target.isclose(K, 1e-12)
    report = contact_along_path(DeformationPath(spec, target, steps=20), fibre_samples=8, fixed_point=ONE)
    assert len(report.path) == 21
    assert report.max_lipschitz < 1.0
    assert report.min_margin > 0.0
    assert report.max_coefficient < 0.0
    assert report.max_drift is not None and report.max_drift <= 1e-8
    assert report.endpoint_spread <= 1e-10
    assert report.contact and report.passed
    assert report.findings == []
    assert report.note == TIGHTNESS_NOTE


def test_deformation_sweep_without_fixed_fibre(hopf):
    report = contact_along_path(DeformationPath(hopf, K, steps=2), fibre_samples=4)
    assert report.max_drift is None
    assert report.passed
    assert report.max_coefficient == pytest.approx(-2.0, abs=1e-8)


def test_deformation_sweep_needs_samples():
    spec = pull_toward(0.3)
    with pytest.raises(DegenerateInputError):
        contact_along_path(DeformationPath(spec, K, steps=2), fibre_samples=0)
