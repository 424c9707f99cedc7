"""
The plane field orthogonal to the fibres, in chart coordinates.

Around a standardized fibre, S(x, y, t) = P(x, y) cos t + Q(x, y) sin t
parametrizes a neighbourhood of the circle through 1 and k. The 1-form
alpha(V) = <dS/dt, V> reads alpha = alpha_x dx + alpha_y dy + dt and the
fibration is contact exactly where the dx dy dt coefficient of
alpha ^ d alpha is nonzero.
"""

from __future__ import annotations

import math
from typing import List, NamedTuple, Optional

import numpy as np
import structlog

from .chart import (
    DEFAULT_EPSILON,
    DEFAULT_FD_STEP,
    FiringJacobian,
    P_of,
    StandardChart,
    chart_basepoints,
    firing_batch,
    firing_jacobian,
    prop1_margin,
    prop2_value,
    q_of,
    richardson_derivatives,
    standardize,
)
from .errors import DegenerateInputError, InternalConsistencyError
from .fibration import (
    DEFAULT_GRID_DENSITY,
    DeformationPath,
    deform,
    image_cap_distance,
    lipschitz_estimate,
    preserved_fibre_check,
)
from .observability import set_span_attribute, trace_function
from .quat import FloatArray, UnitQuaternion
from .reports import PathReport, PathStep
from .sampling import s3_points

logger = structlog.get_logger()

CROSS_CHECK_TOL = 1e-5
DRIFT_TOL = 1e-8


class AlphaCoefficients(NamedTuple):
    alpha_x: float
    alpha_y: float
    alpha_t: float = 1.0


class ContactCheck(NamedTuple):
    """Three evaluations of the alpha ^ d alpha coefficient at the chart origin."""

    full: float
    reduced: float
    analytic: float
    a_t: float
    b_t: float

    @property
    def gap(self) -> float:
        return max(abs(self.full - self.analytic), abs(self.reduced - self.analytic))


def chart_point(chart: StandardChart, x: float, y: float, t: float) -> UnitQuaternion:
    P = P_of(x, y, chart.epsilon)
    Q = q_of(chart, x, y)
    return UnitQuaternion.of(P * math.cos(t) + Q * math.sin(t))


def _basepoint_partials(xy: FloatArray) -> tuple[FloatArray, FloatArray]:
    """Analytic P_x = (-x/s, 1, 0, 0) and P_y = (-y/s, 0, 1, 0)."""
    s = np.sqrt(1.0 - np.sum(xy * xy, axis=1))
    zeros = np.zeros_like(s)
    ones = np.ones_like(s)
    P_x = np.column_stack([-xy[:, 0] / s, ones, zeros, zeros])
    P_y = np.column_stack([-xy[:, 1] / s, zeros, ones, zeros])
    return P_x, P_y


def _quarter_partials(
    chart: StandardChart, xy: FloatArray, fd_step: float
) -> tuple[FloatArray, FloatArray, FloatArray]:
    """
    Q and its Richardson partials Q_x, Q_y at every row of xy.

    All stencil points go through a single batched solve.
    """
    offsets = np.array(
        [
            [0.0, 0.0],
            [fd_step, 0.0],
            [-fd_step, 0.0],
            [0.0, fd_step],
            [0.0, -fd_step],
            [0.5 * fd_step, 0.0],
            [-0.5 * fd_step, 0.0],
            [0.0, 0.5 * fd_step],
            [0.0, -0.5 * fd_step],
        ]
    )
    stencil = (xy[:, None, :] + offsets[None, :, :]).reshape(-1, 2)
    _, Q, _ = firing_batch(chart, stencil)
    Q = Q.reshape(xy.shape[0], len(offsets), 4)

    def richardson(plus: int, minus: int, half_plus: int, half_minus: int) -> FloatArray:
        coarse = (Q[:, plus] - Q[:, minus]) / (2.0 * fd_step)
        fine = (Q[:, half_plus] - Q[:, half_minus]) / fd_step
        return (4.0 * fine - coarse) / 3.0

    return Q[:, 0], richardson(1, 2, 5, 6), richardson(3, 4, 7, 8)


def alpha_batch(chart: StandardChart, xyt: FloatArray, fd_step: float = DEFAULT_FD_STEP) -> FloatArray:
    """
    (alpha_x, alpha_y, alpha_t) at every row (x, y, t).

    alpha_x = -<P, Q_x> sin^2 t + <Q, P_x> cos^2 t, alpha_y likewise, alpha_t = 1.
    """
    xyt = np.atleast_2d(np.asarray(xyt, dtype=float))
    xy = xyt[:, :2]
    t = xyt[:, 2]
    P = chart_basepoints(xy, chart.epsilon)
    P_x, P_y = _basepoint_partials(xy)
    Q, Q_x, Q_y = _quarter_partials(chart, xy, fd_step)
    sin2 = np.sin(t) ** 2
    cos2 = np.cos(t) ** 2
    alpha_x = -np.sum(P * Q_x, axis=1) * sin2 + np.sum(Q * P_x, axis=1) * cos2
    alpha_y = -np.sum(P * Q_y, axis=1) * sin2 + np.sum(Q * P_y, axis=1) * cos2
    return np.column_stack([alpha_x, alpha_y, np.ones_like(t)])


def alpha_coeffs(
    chart: StandardChart, x: float, y: float, t: float, fd_step: float = DEFAULT_FD_STEP
) -> AlphaCoefficients:
    alpha_x, alpha_y, _ = alpha_batch(chart, np.array([[x, y, t]]), fd_step)[0]
    return AlphaCoefficients(float(alpha_x), float(alpha_y), 1.0)


def contact_coefficient_analytic(j: FiringJacobian) -> float:
    """-((1 + f_y) + (1 - g_x)); -2 for the Hopf fibration."""
    return -prop2_value(j)


@trace_function(name="contact.contact_coefficient_numeric")
def contact_coefficient_numeric(
    chart: StandardChart, fd_step: float = DEFAULT_FD_STEP, check: bool = True
) -> ContactCheck:
    """
    alpha ^ d alpha at the chart origin by finite differences.

    full = -a b_t + b a_t + b_x - a_y from differentiated alpha coefficients,
    reduced = <Q_x, P_y> - <Q_y, P_x>. With check set, disagreement with the
    closed form beyond CROSS_CHECK_TOL raises.
    """

    def coefficients(xyt: FloatArray) -> FloatArray:
        return alpha_batch(chart, xyt, fd_step)[:, :2]

    a, b = coefficients(np.zeros((1, 3)))[0]
    d_dx, d_dy, d_dt = richardson_derivatives(coefficients, np.zeros(3), np.eye(3), fd_step)
    a_y, b_x = d_dy[0], d_dx[1]
    a_t, b_t = d_dt
    full = -a * b_t + b * a_t + b_x - a_y

    origin = np.zeros((1, 2))
    _, Q_x, Q_y = _quarter_partials(chart, origin, fd_step)
    P_x, P_y = _basepoint_partials(origin)
    reduced = float(np.sum(Q_x * P_y) - np.sum(Q_y * P_x))

    analytic = contact_coefficient_analytic(firing_jacobian(chart, fd_step))
    result = ContactCheck(float(full), reduced, analytic, float(a_t), float(b_t))
    if check and result.gap > CROSS_CHECK_TOL:
        logger.error("Contact coefficient cross-check failed", **result._asdict())
        raise InternalConsistencyError(
            f"alpha ^ d alpha: full={full:.9f} reduced={reduced:.9f} analytic={analytic:.9f}"
        )
    return result


@trace_function(name="contact.contact_along_path")
def contact_along_path(
    path: DeformationPath,
    fibre_samples: int,
    seed: int = 0,
    fixed_point: Optional[UnitQuaternion] = None,
    epsilon: float = DEFAULT_EPSILON,
    fd_step: float = DEFAULT_FD_STEP,
    grid_density: int = DEFAULT_GRID_DENSITY,
) -> PathReport:
    """
    Sweep the deformation path and check the fibration and contact criteria at every step.

    Args:
        path: Deformation to sweep; path.steps + 1 times from 0 to 1
        fibre_samples: Number of S^3 points whose fibres are checked per step
        seed: Seed of the sample points
        fixed_point: Point whose fibre should stay fixed; drift is reported when given

    Returns:
        PathReport. A nonnegative coefficient is a finding, not an exception;
        deformation-domain and validity errors still raise.
    """
    if fibre_samples < 1:
        raise DegenerateInputError(f"contact_along_path needs at least 1 fibre sample, got {fibre_samples}")
    points = s3_points(fibre_samples, seed)
    steps: List[PathStep] = []
    findings: List[str] = []
    for t in path.times():
        set_span_attribute("t", float(t))
        spec_t = deform(path, float(t), grid_density=grid_density)
        lip = lipschitz_estimate(spec_t, grid_density)
        margins = []
        coefficients = []
        for p in points:
            chart = standardize(spec_t, UnitQuaternion.from_array(p), epsilon=epsilon)
            j = firing_jacobian(chart, fd_step)
            margins.append(prop1_margin(j))
            coefficient = contact_coefficient_analytic(j)
            coefficients.append(coefficient)
            if coefficient >= 0.0:
                findings.append(f"non-contact at t={t:.6g} point={np.round(p, 12).tolist()}")
        drift = preserved_fibre_check(path, fixed_point, float(t)) if fixed_point is not None else None
        steps.append(
            PathStep(
                t=float(t),
                lipschitz=lip,
                min_margin=min(m.margin for m in margins),
                min_factor1=min(m.factor1 for m in margins),
                min_factor2=min(m.factor2 for m in margins),
                max_coefficient=max(coefficients),
                fibre_drift=drift,
            )
        )
        logger.info("Deformation step checked", t=float(t), lipschitz=lip, max_coefficient=max(coefficients))

    endpoint = deform(path, 1.0, grid_density=grid_density, check=False)
    spread = image_cap_distance(endpoint, path.target_point, grid_density)
    drifts = [s.fibre_drift for s in steps if s.fibre_drift is not None]
    max_drift = max(drifts) if drifts else None
    contact = not findings
    passed = (
        contact
        and all(s.lipschitz < 1.0 for s in steps)
        and all(s.min_margin > 0.0 and s.min_factor1 > 0.0 and s.min_factor2 > 0.0 for s in steps)
        and (max_drift is None or max_drift <= DRIFT_TOL)
    )
    return PathReport(
        target=path.target_point.vector.tolist(),
        fixed_point=fixed_point.as_array().tolist() if fixed_point is not None else None,
        steps=path.steps,
        fibre_samples=fibre_samples,
        seed=seed,
        max_lipschitz=max(s.lipschitz for s in steps),
        min_margin=min(s.min_margin for s in steps),
        max_coefficient=max(s.max_coefficient for s in steps),
        max_drift=max_drift,
        endpoint_spread=spread,
        contact=contact,
        passed=passed,
        findings=findings,
        path=steps,
    )
