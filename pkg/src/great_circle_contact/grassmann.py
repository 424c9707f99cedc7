"""
Oriented great circles and the S^2 x S^2 picture of G_2 R^4.

A circle t -> P cos t + Q sin t corresponds to the pair
(Q conj(P), conj(P) Q) of unit imaginary quaternions. The pair does not
depend on which orthonormal basis of the oriented plane is used, so circles
are compared through their Grassmann images.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.linalg
import structlog

from .errors import InvalidCircleError, InvalidGrassmannPointError
from .quat import (
    FloatArray,
    ImaginaryUnit,
    Quaternion,
    UnitQuaternion,
    conj,
    dot,
    geodesic_distance,
    mul,
)

logger = structlog.get_logger()

CIRCLE_TOL = 1e-10
RANK_TOL = 1e-9


@dataclass(frozen=True)
class GreatCircle:
    """Oriented great circle with ordered orthonormal basis (P, Q)."""

    P: UnitQuaternion
    Q: UnitQuaternion

    def __post_init__(self) -> None:
        if abs(self.P.norm() - 1.0) > CIRCLE_TOL or abs(self.Q.norm() - 1.0) > CIRCLE_TOL:
            raise InvalidCircleError("Circle basis vectors must be unit length")
        overlap = dot(self.P, self.Q)
        if abs(overlap) > CIRCLE_TOL:
            raise InvalidCircleError(f"Circle basis not orthogonal: <P, Q> = {overlap:.3e}")

    def point(self, t: float) -> UnitQuaternion:
        return UnitQuaternion.of(self.P * math.cos(t) + self.Q * math.sin(t))

    def basis(self) -> FloatArray:
        """4 x 2 matrix with columns P and Q."""
        return np.column_stack([self.P.as_array(), self.Q.as_array()])


@dataclass(frozen=True)
class GrassmannPoint:
    """Point (m, n) of S^2 x S^2."""

    m: ImaginaryUnit
    n: ImaginaryUnit

    def as_array(self) -> FloatArray:
        return np.concatenate([self.m.vector, self.n.vector])


def to_grassmann(c: GreatCircle) -> GrassmannPoint:
    """(Q conj(P), conj(P) Q)."""
    m = mul(c.Q, conj(c.P))
    n = mul(conj(c.P), c.Q)
    return GrassmannPoint(ImaginaryUnit.of(m), ImaginaryUnit.of(n))


def _two_sided_matrix(m: Quaternion, n: Quaternion) -> FloatArray:
    """Matrix of v -> m v conj(n) on R^4."""
    basis = np.eye(4)
    columns = [mul(mul(m, Quaternion.from_array(e)), conj(n)).as_array() for e in basis]
    return np.column_stack(columns)


def from_grassmann(g: GrassmannPoint) -> GreatCircle:
    """
    A circle whose Grassmann image is g.

    P spans the +1-eigenspace of v -> m v conj(n) (equivalently m P = P n),
    Q = m P.
    """
    A = _two_sided_matrix(g.m, g.n)
    kernel = scipy.linalg.null_space(A - np.eye(4), rcond=RANK_TOL)
    if kernel.shape[1] != 2:
        logger.error("Defective Grassmann eigenspace", dimension=kernel.shape[1])
        raise InvalidGrassmannPointError(
            f"+1-eigenspace has dimension {kernel.shape[1]}, expected 2"
        )
    P = UnitQuaternion.from_array(kernel[:, 0])
    Q = UnitQuaternion.of(mul(g.m, P))
    return GreatCircle(P, Q)


def grassmann_distance(g1: GrassmannPoint, g2: GrassmannPoint) -> float:
    """sqrt(d(m1, m2)^2 + d(n1, n2)^2) with geodesic distances on S^2."""
    return math.hypot(geodesic_distance(g1.m.vector, g2.m.vector), geodesic_distance(g1.n.vector, g2.n.vector))


def principal_angles(c1: GreatCircle, c2: GreatCircle) -> Tuple[float, float]:
    """(theta_min, theta_max) between the planes of two circles."""
    theta_min, theta_max = principal_angles_array(
        c1.P.as_array(), c1.Q.as_array(), c2.P.as_array(), c2.Q.as_array()
    )
    return float(theta_min), float(theta_max)


def principal_angles_array(
    P1: FloatArray, Q1: FloatArray, P2: FloatArray, Q2: FloatArray
) -> Tuple[FloatArray, FloatArray]:
    """
    Principal angles for stacks of orthonormal bases, all of shape (..., 4).

    Angles are arccosines of the singular values of the 2x2 Gram matrix
    of the two bases. Below pi/4 they are taken instead from the singular
    values of the residual B2 - B1 (B1^T B2), where arccos loses accuracy.
    """
    B1 = np.stack([P1, Q1], axis=-1)
    B2 = np.stack([P2, Q2], axis=-1)
    gram = np.einsum("...ki,...kj->...ij", B1, B2)
    residual = B2 - B1 @ gram
    # svd returns singular values in descending order
    cosines = np.clip(np.linalg.svd(gram, compute_uv=False), 0.0, 1.0)
    sines = np.clip(np.linalg.svd(residual, compute_uv=False)[..., ::-1], 0.0, 1.0)
    angles = np.where(cosines * cosines > 0.5, np.arcsin(sines), np.arccos(cosines))
    return angles[..., 0], angles[..., 1]


def contains(c: GreatCircle, p: Quaternion) -> float:
    """Distance from p to the plane span(P, Q); zero iff p lies on the circle."""
    v = p.as_array()
    B = c.basis()
    residual = v - B @ (B.T @ v)
    return float(np.linalg.norm(residual))
