"""Tests for the quaternion algebra."""

import math

import numpy as np
import pytest
from hypothesis import given, settings

from great_circle_contact.errors import DegenerateInputError
from great_circle_contact.quat import (
    I,
    J,
    K,
    ONE,
    ImaginaryUnit,
    Quaternion,
    UnitQuaternion,
    conj,
    conjugate_by,
    dot,
    from_axis_angle,
    geodesic_distance,
    geodesic_distance_array,
    mul,
    normalize,
    qmul_array,
    rotate_array,
    rotation_to,
    slerp_array,
)
from tests.conftest import DIAGONAL, unit_quaternions, unit_vectors


def test_defining_relations():
    assert mul(I, J).isclose(K)
    assert mul(K, K).isclose(Quaternion(-1.0, 0.0, 0.0, 0.0))
    assert mul(ONE, K).isclose(K)
    assert mul(J, I).isclose(-K)


def test_conj_examples():
    assert conj(K).isclose(-K)
    assert conj(ONE).isclose(ONE)
    assert mul(conj(DIAGONAL), DIAGONAL).isclose(ONE)


def test_dot_examples():
    assert dot(ONE, K) == 0.0
    assert dot(I, I) == 1.0


def test_normalize_rejects_zero():
    with pytest.raises(DegenerateInputError):
        normalize(Quaternion(0.0, 0.0, 0.0, 1e-16))


def test_normalize_scales_to_unit():
    q = normalize(Quaternion(3.0, 0.0, 4.0, 0.0))
    assert q.isclose(Quaternion(0.6, 0.0, 0.8, 0.0))


def test_non_finite_coordinates_rejected():
    with pytest.raises(DegenerateInputError):
        Quaternion(float("nan"), 0.0, 0.0, 0.0)


def test_imaginary_unit_requires_zero_real_part():
    with pytest.raises(DegenerateInputError):
        ImaginaryUnit(0.5, 1.0, 0.0, 0.0)
    assert ImaginaryUnit.of([0.0, 0.0, 2.0]).isclose(K)


@given(unit_quaternions, unit_quaternions)
def test_product_of_units_is_unit(p, q):
    assert mul(p, q).norm() == pytest.approx(1.0, abs=1e-12)


@given(unit_quaternions, unit_quaternions)
def test_array_product_matches_scalar(p, q):
    batched = qmul_array(p.as_array()[None, :], q.as_array()[None, :])[0]
    np.testing.assert_allclose(batched, mul(p, q).as_array(), atol=1e-15)


@given(unit_quaternions, unit_vectors)
def test_rotate_array_matches_conjugation(q, v):
    expected = conjugate_by(q, v).vector
    np.testing.assert_allclose(rotate_array(q.as_array(), v.vector), expected, atol=1e-12)


@settings(max_examples=200)
@given(unit_vectors, unit_vectors)
def test_rotation_to_carries_source_to_target(u, v):
    a = rotation_to(u, v)
    assert conjugate_by(a, u).isclose(v, 1e-12)


def test_rotation_to_antipodal_is_deterministic():
    a = rotation_to(K, -K)
    assert conjugate_by(a, K).isclose(-K, 1e-12)
    assert rotation_to(K, -K).isclose(a, 0.0)


def test_rotation_to_identity():
    assert rotation_to(K, K).isclose(ONE)


def test_from_axis_angle_quarter_turn():
    q = from_axis_angle((1.0, 0.0, 0.0), math.pi / 2)
    assert q.isclose(DIAGONAL)
    assert conjugate_by(q, K).isclose(-J, 1e-12)


def test_geodesic_distance():
    assert geodesic_distance(I, J) == pytest.approx(math.pi / 2)
    assert geodesic_distance(K, -K) == pytest.approx(math.pi)
    tiny = np.array([0.0, math.sin(1e-9), math.cos(1e-9)])
    assert geodesic_distance(K, tiny) == pytest.approx(1e-9, rel=1e-6)
    assert geodesic_distance(tiny, K) == pytest.approx(1e-9, rel=1e-6)


def test_geodesic_distance_mixed_dimensions():
    assert geodesic_distance(ONE, np.array([0.0, 1.0, 0.0, 0.0])) == pytest.approx(math.pi / 2)
    assert geodesic_distance(I, np.array([0.0, 1.0, 0.0])) == 0.0
    with pytest.raises(DegenerateInputError):
        geodesic_distance(DIAGONAL, np.array([1.0, 0.0, 0.0]))


def test_slerp_halves_distance():
    targets = np.array([[1.0, 0.0, 0.0], [0.0, 0.6, 0.8]])
    halfway = slerp_array(K.vector, targets, 0.5)
    np.testing.assert_allclose(
        geodesic_distance_array(halfway, K.vector),
        0.5 * geodesic_distance_array(targets, K.vector),
        atol=1e-14,
    )
    np.testing.assert_allclose(np.linalg.norm(halfway, axis=1), 1.0)


def test_unit_quaternion_renormalizes():
    q = UnitQuaternion(2.0, 0.0, 0.0, 0.0)
    assert q.isclose(ONE)
