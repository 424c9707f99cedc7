"""
Standard charts around a fibre and the local fibration criterion.

After the motion p -> a p b the fibre under study passes through 1 and k,
and nearby fibres are recorded by the firing solution R(x, y) = f i + g j + h k:
the fibre through P(x, y) = (sqrt(1 - x^2 - y^2), x, y, 0) reaches
Q = P R a quarter turn later. The origin jacobian of (f, g) decides whether
the family is locally a fibration and whether its plane field is contact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Tuple

import numpy as np
import structlog

from .errors import ChartDomainError, InternalConsistencyError, SingularDifferentialError
from .fibration import (
    SOLVER_MAX_ITER,
    SOLVER_TOL,
    AntipodalMap,
    ConjugatedMap,
    FibrationSpec,
    Handedness,
    fibre_through,
    solve_fibres,
)
from .quat import (
    ALGEBRAIC_TOL,
    FD_TOL,
    K,
    FloatArray,
    Quaternion,
    UnitQuaternion,
    conj,
    mul,
    qconj_array,
    qmul_array,
    rotation_to,
)

logger = structlog.get_logger()

DEFAULT_EPSILON = 0.04
DEFAULT_FD_STEP = 1e-4
DELTA_TOL = 1e-9
FRAME_TOL = 1e-10


@dataclass(frozen=True)
class ChartFrame:
    """Motion p -> a p b standardizing a fibre, and the chart radius bound x^2 + y^2 < epsilon."""

    a: UnitQuaternion
    b: UnitQuaternion
    epsilon: float = DEFAULT_EPSILON
    mirrored: bool = False

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon <= 1.0:
            raise ChartDomainError(f"Chart epsilon must lie in (0, 1], got {self.epsilon}")

    def apply(self, p: Quaternion) -> Quaternion:
        return mul(mul(self.a, p), self.b)


@dataclass(frozen=True)
class StandardChart:
    """A right-handed fibration whose fibre through 1 is the circle through k."""

    frame: ChartFrame
    spec: FibrationSpec
    source: FibrationSpec
    p0: UnitQuaternion
    tol: float = SOLVER_TOL
    max_iter: int = SOLVER_MAX_ITER

    @property
    def epsilon(self) -> float:
        return self.frame.epsilon


def mirror_spec(spec: FibrationSpec) -> FibrationSpec:
    """
    Right-handed spec carried to the given left-handed one by p -> conj(p).

    The left fibre through p is sent to the right fibre through conj(p)
    of the map u -> -phi(-u).
    """
    if spec.handedness is Handedness.RIGHT:
        return spec
    return FibrationSpec(AntipodalMap(spec.base_map), Handedness.RIGHT)


def standardize(
    spec: FibrationSpec,
    p0: UnitQuaternion,
    epsilon: float = DEFAULT_EPSILON,
    tol: float = SOLVER_TOL,
    max_iter: int = SOLVER_MAX_ITER,
) -> StandardChart:
    """
    Move the fibre through p0 onto the standard fibre through 1 and k.

    Left-handed specs are first mirrored, so the chart sits at conj(p0) of
    the mirror image.
    """
    mirrored = spec.handedness is Handedness.LEFT
    right = mirror_spec(spec)
    base = UnitQuaternion.of(conj(p0)) if mirrored else p0
    solution = fibre_through(right, base, tol=tol, max_iter=max_iter)
    m0 = solution.m
    # m0 = -k takes the fixed half turn about i
    a = rotation_to(m0, K)
    b = UnitQuaternion.of(mul(conj(base), conj(a)))
    frame = ChartFrame(a=a, b=b, epsilon=epsilon, mirrored=mirrored)

    start = frame.apply(solution.circle.P)
    quarter = frame.apply(solution.circle.Q)
    if not (start.isclose(Quaternion(1.0, 0.0, 0.0, 0.0), FRAME_TOL) and quarter.isclose(K, FRAME_TOL)):
        raise InternalConsistencyError(
            "Standardizing motion does not send the fibre to the one through 1 and k"
        )
    transformed = FibrationSpec(ConjugatedMap(right.base_map, a, b), Handedness.RIGHT)
    logger.debug("Fibre standardized", m0=m0.vector.tolist(), mirrored=mirrored)
    return StandardChart(
        frame=frame, spec=transformed, source=spec, p0=p0, tol=tol, max_iter=max_iter
    )


def P_of(x: float, y: float, epsilon: float = 1.0) -> UnitQuaternion:
    """(sqrt(1 - x^2 - y^2), x, y, 0)."""
    return UnitQuaternion.from_array(chart_basepoints(np.array([[x, y]]), epsilon)[0])


def chart_basepoints(xy: FloatArray, epsilon: float = 1.0) -> FloatArray:
    """Row-wise P(x, y) for an (N, 2) array of chart coordinates."""
    xy = np.atleast_2d(np.asarray(xy, dtype=float))
    r2 = np.sum(xy * xy, axis=1)
    if np.any(r2 >= min(epsilon, 1.0)):
        worst = float(r2.max())
        raise ChartDomainError(f"Chart point with x^2 + y^2 = {worst:.6g} outside the disk < {epsilon}")
    s = np.sqrt(1.0 - r2)
    return np.column_stack([s, xy[:, 0], xy[:, 1], np.zeros_like(s)])


class FiringSolution(NamedTuple):
    f: float
    g: float
    h: float


def firing_batch(chart: StandardChart, xy: FloatArray) -> Tuple[FloatArray, FloatArray, FloatArray]:
    """
    Solve fibres at many chart points.

    Returns:
        (P, Q, R) as (N, 4), (N, 4) and (N, 3) arrays, with R = conj(P) Q
    """
    P = chart_basepoints(xy, chart.epsilon)
    batch = solve_fibres(chart.spec, P, tol=chart.tol, max_iter=chart.max_iter)
    R = qmul_array(qconj_array(batch.P), batch.Q)[:, 1:]
    return batch.P, batch.Q, R


def firing_solution(chart: StandardChart, x: float, y: float) -> FiringSolution:
    _, _, R = firing_batch(chart, np.array([[x, y]]))
    f, g, h = (float(v) for v in R[0])
    if abs(f * f + g * g + h * h - 1.0) > FRAME_TOL:
        raise InternalConsistencyError(f"Firing solution not unit at ({x}, {y})")
    return FiringSolution(f, g, h)


def q_of(chart: StandardChart, x: float, y: float) -> UnitQuaternion:
    """
    Quarter-turn point Q(x, y), from the expanded product P R.

    The expansion is checked against the quaternion product itself.
    """
    f, g, h = firing_solution(chart, x, y)
    s = math.sqrt(1.0 - x * x - y * y)
    expanded = Quaternion(
        -x * f - y * g,
        s * f + y * h,
        s * g - x * h,
        s * h + x * g - y * f,
    )
    product = mul(P_of(x, y, chart.epsilon), Quaternion(0.0, f, g, h))
    if not expanded.isclose(product, ALGEBRAIC_TOL):
        raise InternalConsistencyError(f"Expanded Q(x, y) disagrees with P R at ({x}, {y})")
    return UnitQuaternion.of(expanded)


def richardson_derivatives(
    func: Callable[[FloatArray], FloatArray],
    base: FloatArray,
    directions: FloatArray,
    step: float,
) -> FloatArray:
    """
    Directional derivatives of func at base, one per row of directions.

    Central differences at step and step/2 combined as (4 D(h/2) - D(h)) / 3.
    func is called once on all stencil points.

    Returns:
        (len(directions), ...) array of derivative values
    """
    base = np.asarray(base, dtype=float)
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    stencil = []
    for h in (step, 0.5 * step):
        for d in directions:
            stencil.append(base + h * d)
            stencil.append(base - h * d)
    values = func(np.array(stencil))
    count = len(directions)
    derivatives = []
    for level, h in enumerate((step, 0.5 * step)):
        block = values[2 * count * level : 2 * count * (level + 1)]
        derivatives.append((block[0::2] - block[1::2]) / (2.0 * h))
    coarse, fine = derivatives
    return (4.0 * fine - coarse) / 3.0


@dataclass(frozen=True)
class FiringJacobian:
    """Origin partials of the firing solution; a, b, c, d and delta abbreviate the d(pi_1) entries."""

    f_x: float
    f_y: float
    g_x: float
    g_y: float
    h_x: float = 0.0
    h_y: float = 0.0

    @classmethod
    def from_entries(cls, f_x: float, f_y: float, g_x: float, g_y: float) -> "FiringJacobian":
        return cls(float(f_x), float(f_y), float(g_x), float(g_y))

    @property
    def a(self) -> float:
        return self.f_x

    @property
    def b(self) -> float:
        return self.f_y + 2.0

    @property
    def c(self) -> float:
        return self.g_x - 2.0

    @property
    def d(self) -> float:
        return self.g_y

    @property
    def delta(self) -> float:
        return self.a * self.d - self.b * self.c

    def as_array(self) -> FloatArray:
        return np.array([self.f_x, self.f_y, self.g_x, self.g_y])


def firing_jacobian(chart: StandardChart, fd_step: float = DEFAULT_FD_STEP) -> FiringJacobian:
    """
    Partials of (f, g, h) at the chart origin.

    h_x and h_y vanish in exact arithmetic since R is unit and R(0, 0) = k;
    estimates above FD_TOL are logged.
    """

    def firing(xy: FloatArray) -> FloatArray:
        return firing_batch(chart, xy)[2]

    d_dx, d_dy = richardson_derivatives(firing, np.zeros(2), np.eye(2), fd_step)
    jac = FiringJacobian(
        f_x=float(d_dx[0]),
        f_y=float(d_dy[0]),
        g_x=float(d_dx[1]),
        g_y=float(d_dy[1]),
        h_x=float(d_dx[2]),
        h_y=float(d_dy[2]),
    )
    if max(abs(jac.h_x), abs(jac.h_y)) > FD_TOL:
        logger.warning("h derivatives not zero at origin", h_x=jac.h_x, h_y=jac.h_y)
    return jac


def dpi_matrices(j: FiringJacobian) -> Tuple[FloatArray, FloatArray]:
    """d(pi_1) and d(pi_2) at the origin, with the zero third rows dropped."""
    dpi1 = np.array([[j.a, j.b], [j.c, j.d]])
    dpi2 = np.array([[j.f_x, j.f_y], [j.g_x, j.g_y]])
    return dpi1, dpi2


def m_matrix(j: FiringJacobian) -> FloatArray:
    """d(pi_2) d(pi_1)^-1 in closed form."""
    delta = j.delta
    if abs(delta) <= DELTA_TOL:
        raise SingularDifferentialError(f"d(pi_1) is singular: delta = {delta:.3e}")
    return m_matrix_array(j.as_array()[None, :])[0]


def m_matrix_array(jacobians: FloatArray) -> FloatArray:
    """Closed-form M for an (N, 4) array of (f_x, f_y, g_x, g_y); rows with delta = 0 give inf."""
    f_x, f_y, g_x, g_y = np.moveaxis(np.asarray(jacobians, dtype=float), -1, 0)
    a, b, c, d = f_x, f_y + 2.0, g_x - 2.0, g_y
    delta = a * d - b * c
    M = np.stack(
        [np.stack([delta + 2.0 * c, -2.0 * a], axis=-1), np.stack([2.0 * d, delta - 2.0 * b], axis=-1)],
        axis=-2,
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        return M / delta[..., None, None]


def is_strictly_distance_decreasing(M: FloatArray) -> np.ndarray | bool:
    """|M|^2 < 1 + det(M)^2 for a 2x2 matrix or a stack of them."""
    M = np.asarray(M, dtype=float)
    frob = np.sum(M * M, axis=(-2, -1))
    det = M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]
    result = frob < 1.0 + det * det
    return bool(result) if np.ndim(result) == 0 else result


class Prop1Margin(NamedTuple):
    margin: float
    factor1: float
    factor2: float

    @property
    def accepted(self) -> bool:
        return self.margin > 0.0 and self.factor1 > 0.0 and self.factor2 > 0.0


def margin_terms(jacobians: FloatArray) -> Tuple[FloatArray, FloatArray, FloatArray]:
    """(margin, 1 + f_y, 1 - g_x) for an (..., 4) array of jacobians."""
    f_x, f_y, g_x, g_y = np.moveaxis(np.asarray(jacobians, dtype=float), -1, 0)
    factor1 = 1.0 + f_y
    factor2 = 1.0 - g_x
    margin = 4.0 * factor1 * factor2 - (f_x - g_y) ** 2
    return margin, factor1, factor2


def prop1_margin(j: FiringJacobian) -> Prop1Margin:
    margin, factor1, factor2 = margin_terms(j.as_array())
    return Prop1Margin(float(margin), float(factor1), float(factor2))


def prop2_value(j: FiringJacobian) -> float:
    """(1 + f_y) + (1 - g_x); positive exactly when the plane field is contact at the origin."""
    return (1.0 + j.f_y) + (1.0 - j.g_x)

