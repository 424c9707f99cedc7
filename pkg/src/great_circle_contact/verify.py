"""
Brute-force oracles behind the analytic criteria.

- collision_scan looks for nearly intersecting circles in a chart family
- prop1_oracle_agreement compares that scan with the origin margin
- smallest_cap is checked against exhaustive enumeration
- amgm_samples and m_criterion_samples sweep random jacobians
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import List, NamedTuple, Optional, Protocol, Sequence, Tuple, Union

import numpy as np
import structlog
from scipy.optimize import linprog

from .chart import (
    DEFAULT_FD_STEP,
    FiringJacobian,
    StandardChart,
    chart_basepoints,
    firing_batch,
    firing_jacobian,
    is_strictly_distance_decreasing,
    m_matrix_array,
    margin_terms,
    prop1_margin,
)
from .errors import DegenerateInputError, InvariantFailure, NoHemisphereError
from .grassmann import principal_angles_array
from .observability import trace_function
from .quat import FloatArray, ImaginaryUnit, geodesic_distance_array, normalize_rows, qmul_array
from .reports import OracleReport, RegionScan
from .sampling import disk_points

logger = structlog.get_logger()

COLLISION_RATIO = 1e-3
BOUNDARY_BAND = 1e-3
CAP_TOL = 1e-10
HEMISPHERE_TOL = 1e-12


# --- firing families ---------------------------------------------------------------


class FiringFamily(Protocol):
    """Firing solutions R(x, y) on a chart, defining circles (P, P R)."""

    @property
    def name(self) -> str: ...

    def firing(self, xy: FloatArray) -> FloatArray: ...

    def origin_jacobian(self) -> FiringJacobian: ...


@dataclass(frozen=True)
class HopfConstant:
    name: str = "hopf"

    def firing(self, xy: FloatArray) -> FloatArray:
        xy = np.atleast_2d(xy)
        return np.tile([0.0, 0.0, 1.0], (xy.shape[0], 1))

    def origin_jacobian(self) -> FiringJacobian:
        return FiringJacobian.from_entries(0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class LinearTilt:
    """(f, g, h) = normalize(cf_x x + cf_y y, cg_x x + cg_y y, 1); its origin jacobian is the coefficients."""

    cf_x: float = 0.0
    cf_y: float = 0.0
    cg_x: float = 0.0
    cg_y: float = 0.0

    @property
    def name(self) -> str:
        return f"linear-tilt:{self.cf_x:g},{self.cf_y:g},{self.cg_x:g},{self.cg_y:g}"

    def firing(self, xy: FloatArray) -> FloatArray:
        xy = np.atleast_2d(np.asarray(xy, dtype=float))
        x, y = xy[:, 0], xy[:, 1]
        raw = np.column_stack(
            [self.cf_x * x + self.cf_y * y, self.cg_x * x + self.cg_y * y, np.ones_like(x)]
        )
        return normalize_rows(raw)

    def origin_jacobian(self) -> FiringJacobian:
        return FiringJacobian.from_entries(self.cf_x, self.cf_y, self.cg_x, self.cg_y)


@dataclass(frozen=True)
class SpecFamily:
    """Firing family of a fibration around one of its standardized fibres."""

    chart: StandardChart
    fd_step: float = DEFAULT_FD_STEP
    label: str = "spec"

    @property
    def name(self) -> str:
        return self.label

    def firing(self, xy: FloatArray) -> FloatArray:
        return firing_batch(self.chart, xy)[2]

    @cached_property
    def _jacobian(self) -> FiringJacobian:
        return firing_jacobian(self.chart, self.fd_step)

    def origin_jacobian(self) -> FiringJacobian:
        return self._jacobian


def family_circles(fam: FiringFamily, xy: FloatArray) -> Tuple[FloatArray, FloatArray]:
    """Bases (P, P R) of the family's circles at chart points xy."""
    P = chart_basepoints(xy)
    R = fam.firing(xy)
    Q = qmul_array(P, np.column_stack([np.zeros(len(R)), R]))
    return P, Q


class CollisionScan(NamedTuple):
    min_theta: float
    theta_max_at_min: float
    min_ratio: float
    colliding: bool
    witness: Tuple[Tuple[float, float], Tuple[float, float]]


@trace_function(name="verify.collision_scan")
def collision_scan(
    fam: FiringFamily,
    n_samples: int,
    region_radius: float,
    collision_ratio: float = COLLISION_RATIO,
) -> CollisionScan:
    """
    Smallest principal angle over all pairs of circles from a sunflower sample of the disk.

    A pair counts as colliding when theta_min < collision_ratio * theta_max;
    the ratio does not depend on how far apart the two base points are.
    """
    if n_samples < 2:
        raise DegenerateInputError(f"collision_scan needs at least 2 samples, got {n_samples}")
    xy = disk_points(n_samples, region_radius)
    P, Q = family_circles(fam, xy)
    i, j = np.triu_indices(n_samples, k=1)
    theta_min, theta_max = principal_angles_array(P[i], Q[i], P[j], Q[j])
    ratio = theta_min / np.maximum(theta_max, np.finfo(float).tiny)
    best = int(np.argmin(theta_min))
    colliding = bool(np.any(theta_min < collision_ratio * theta_max))
    witness = (tuple(xy[i[best]].tolist()), tuple(xy[j[best]].tolist()))
    logger.debug(
        "Collision scan finished",
        family=fam.name,
        radius=region_radius,
        min_theta=float(theta_min[best]),
        min_ratio=float(ratio.min()),
        colliding=colliding,
    )
    return CollisionScan(
        min_theta=float(theta_min[best]),
        theta_max_at_min=float(theta_max[best]),
        min_ratio=float(ratio.min()),
        colliding=colliding,
        witness=witness,  # type: ignore[arg-type]
    )


def prop1_oracle_agreement(
    fam: FiringFamily,
    n_samples: int = 400,
    region_radius: float = 0.2,
    collision_ratio: float = COLLISION_RATIO,
    boundary_band: float = BOUNDARY_BAND,
) -> OracleReport:
    """
    Compare the origin margin with collision scans over radii r, r/2 and r/4.

    The scan accepts when the smallest region is free of collisions. Margins
    within boundary_band of zero are reported as inconclusive.
    """
    margin = prop1_margin(fam.origin_jacobian())
    scans = [
        collision_scan(fam, n_samples, region_radius / scale, collision_ratio)
        for scale in (1.0, 2.0, 4.0)
    ]
    accepted_by_scan = not scans[-1].colliding
    if abs(margin.margin) < boundary_band:
        verdict = "inconclusive"
    elif margin.accepted and accepted_by_scan:
        verdict = "agree-accept"
    elif not margin.accepted and not accepted_by_scan:
        verdict = "agree-reject"
    else:
        verdict = "disagree"
    if verdict == "disagree":
        logger.warning("Margin and collision scan disagree", family=fam.name, margin=margin.margin)
    closest = min(scans, key=lambda s: s.min_theta)
    return OracleReport(
        family=fam.name,
        margin=margin.margin,
        factor1=margin.factor1,
        factor2=margin.factor2,
        accepted_by_margin=margin.accepted,
        samples=n_samples,
        min_theta=closest.min_theta,
        witness=[list(closest.witness[0]), list(closest.witness[1])],
        accepted_by_scan=accepted_by_scan,
        verdict=verdict,
        regions=[
            RegionScan(
                radius=region_radius / scale,
                min_theta=scan.min_theta,
                min_ratio=scan.min_ratio,
                colliding=scan.colliding,
            )
            for scale, scan in zip((1.0, 2.0, 4.0), scans)
        ],
    )


# --- smallest enclosing cap -------------------------------------------------------


@dataclass(frozen=True)
class SphericalCap:
    """Closed geodesic disk of S^2; radius is the largest distance from center to the enclosed points."""

    center: ImaginaryUnit
    radius: float

    def contains(self, points: FloatArray, tol: float = CAP_TOL) -> bool:
        distances = geodesic_distance_array(np.atleast_2d(points), self.center.vector)
        return bool(np.all(distances <= self.radius + tol))


def _as_points(points: Union[Sequence[ImaginaryUnit], FloatArray]) -> FloatArray:
    if isinstance(points, np.ndarray):
        arr = np.atleast_2d(points.astype(float))
    else:
        arr = np.array([p.vector for p in points], dtype=float)
    if arr.size == 0:
        raise DegenerateInputError("smallest_cap needs at least one point")
    return normalize_rows(arr)


def hemisphere_margin(points: FloatArray) -> float:
    """max over unit-box directions c of min_i <c, p_i>; positive iff an open hemisphere holds all points."""
    n = points.shape[0]
    cost = np.array([0.0, 0.0, 0.0, -1.0])
    A_ub = np.column_stack([-points, np.ones(n)])
    b_ub = np.zeros(n)
    bounds = [(-1.0, 1.0)] * 3 + [(None, 1.0)]
    result = linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if result.status != 0:
        return 0.0
    return float(-result.fun)


def _circumball(a: FloatArray, b: FloatArray, c: FloatArray) -> Optional[Tuple[FloatArray, float]]:
    u = b - a
    v = c - a
    w = np.cross(u, v)
    w2 = float(np.dot(w, w))
    if w2 < 1e-24:
        return None
    center = a + (np.dot(u, u) * np.cross(v, w) + np.dot(v, v) * np.cross(w, u)) / (2.0 * w2)
    return center, float(np.linalg.norm(center - a))


def _diametral(a: FloatArray, b: FloatArray) -> Tuple[FloatArray, float]:
    return 0.5 * (a + b), 0.5 * float(np.linalg.norm(a - b))


def _outside(p: FloatArray, ball: Tuple[FloatArray, float]) -> bool:
    return float(np.linalg.norm(p - ball[0])) > ball[1] + 1e-12


def _ball_with_two(points: FloatArray, p: FloatArray, q: FloatArray) -> Tuple[FloatArray, float]:
    ball = _diametral(p, q)
    for r in points:
        if _outside(r, ball):
            circum = _circumball(p, q, r)
            if circum is not None:
                ball = circum
    return ball


def _ball_with_one(points: FloatArray, p: FloatArray) -> Tuple[FloatArray, float]:
    ball: Tuple[FloatArray, float] = (p.copy(), 0.0)
    for k, q in enumerate(points):
        if _outside(q, ball):
            ball = _ball_with_two(points[:k], p, q)
    return ball


def _cap_from_center(center: FloatArray, points: FloatArray) -> SphericalCap:
    unit = ImaginaryUnit.of(center)
    radius = float(geodesic_distance_array(points, unit.vector).max())
    return SphericalCap(unit, radius)


@trace_function(name="verify.smallest_cap")
def smallest_cap(points: Union[Sequence[ImaginaryUnit], FloatArray], seed: int = 0) -> SphericalCap:
    """
    Smallest geodesic cap containing the points.

    Runs Welzl's move-to-front iteration on the enclosing ball in R^3; for
    points on the sphere the ball's center, normalized, is the cap center.

    Raises:
        NoHemisphereError: points not contained in an open hemisphere
    """
    pts = _as_points(points)
    if hemisphere_margin(pts) <= HEMISPHERE_TOL:
        raise NoHemisphereError("Points are not contained in an open hemisphere")
    order = np.random.default_rng(seed).permutation(len(pts))
    shuffled = pts[order]
    ball: Tuple[FloatArray, float] = (shuffled[0].copy(), 0.0)
    for i, p in enumerate(shuffled):
        if _outside(p, ball):
            ball = _ball_with_one(shuffled[:i], p)
    return _cap_from_center(ball[0], pts)


def smallest_cap_exhaustive(points: Union[Sequence[ImaginaryUnit], FloatArray]) -> SphericalCap:
    """O(n^3) enumeration of diametral and circumscribed candidate caps."""
    pts = _as_points(points)
    if len(pts) == 1:
        return SphericalCap(ImaginaryUnit.of(pts[0]), 0.0)
    candidates: List[FloatArray] = []
    for a, b in itertools.combinations(pts, 2):
        candidates.append(_diametral(a, b)[0])
    for a, b, c in itertools.combinations(pts, 3):
        circum = _circumball(a, b, c)
        if circum is not None:
            candidates.append(circum[0])
    best: Optional[SphericalCap] = None
    for center in candidates:
        if np.linalg.norm(center) < 1e-12:
            continue
        cap = _cap_from_center(center, pts)
        if best is None or cap.radius < best.radius:
            best = cap
    if best is None:
        raise NoHemisphereError("No candidate cap has a well-defined center")
    return best


# --- jacobian sweeps --------------------------------------------------------------


def random_jacobians(count: int, seed: int, bound: float = 5.0) -> FloatArray:
    """(count, 4) uniform samples of (f_x, f_y, g_x, g_y) in [-bound, bound]^4."""
    return np.random.default_rng(seed).uniform(-bound, bound, size=(count, 4))


class AmgmResult(NamedTuple):
    count: int
    accepted: int
    min_prop2: float
    min_delta_excess: float


class MCriterionResult(NamedTuple):
    samples: int
    disagreements: int
    sigma_disagreements: int
    both_factors_negative: int


@trace_function(name="verify.amgm_samples")
def amgm_samples(count: int = 100_000, seed: int = 0) -> AmgmResult:
    """
    Check that every margin-accepted jacobian has positive prop2 value and delta.

    Raises:
        InvariantFailure: on any violation
    """
    J = random_jacobians(count, seed)
    margin, factor1, factor2 = margin_terms(J)
    accepted = (margin > 0.0) & (factor1 > 0.0) & (factor2 > 0.0)
    prop2 = factor1 + factor2
    f_x, f_y, g_x, g_y = J.T
    delta = f_x * g_y - (f_y + 2.0) * (g_x - 2.0)
    excess = delta - (factor1 + factor2 + 1.0)
    bad_prop2 = accepted & (prop2 <= 0.0)
    bad_delta = accepted & (excess <= 0.0)
    if np.any(bad_prop2) or np.any(bad_delta):
        logger.error(
            "Sampled implication violated",
            prop2_violations=int(bad_prop2.sum()),
            delta_violations=int(bad_delta.sum()),
        )
        raise InvariantFailure(
            f"{int(bad_prop2.sum())} prop2 and {int(bad_delta.sum())} delta violations in {count} samples"
        )
    n_accepted = int(accepted.sum())
    return AmgmResult(
        count=count,
        accepted=n_accepted,
        min_prop2=float(prop2[accepted].min()) if n_accepted else float("nan"),
        min_delta_excess=float(excess[accepted].min()) if n_accepted else float("nan"),
    )


@trace_function(name="verify.m_criterion_samples")
def m_criterion_samples(count: int = 100_000, seed: int = 0, delta_floor: float = 1e-6) -> MCriterionResult:
    """
    Compare margin > 0 with the |M|^2 < 1 + det(M)^2 test and with sigma_max(M) < 1.

    Only samples with |delta| > delta_floor and both factors positive are
    judged; the both-negative regime is counted and logged.
    """
    J = random_jacobians(count, seed)
    margin, factor1, factor2 = margin_terms(J)
    f_x, f_y, g_x, g_y = J.T
    delta = f_x * g_y - (f_y + 2.0) * (g_x - 2.0)
    regular = np.abs(delta) > delta_floor
    judged = regular & (factor1 > 0.0) & (factor2 > 0.0)
    M = m_matrix_array(J[judged])
    criterion = is_strictly_distance_decreasing(M)
    sigma_max = np.linalg.svd(M, compute_uv=False)[:, 0]
    disagreements = int(np.sum((margin[judged] > 0.0) != criterion))
    sigma_disagreements = int(np.sum((margin[judged] > 0.0) != (sigma_max < 1.0)))

    negative = regular & (factor1 < 0.0) & (factor2 < 0.0)
    if np.any(negative):
        M_neg = m_matrix_array(J[negative])
        neg_sigma = np.linalg.svd(M_neg, compute_uv=False)[:, 0] < 1.0
        logger.info(
            "Both factors negative",
            samples=int(negative.sum()),
            margin_positive=int(np.sum(margin[negative] > 0.0)),
            sigma_below_one=int(neg_sigma.sum()),
        )
    return MCriterionResult(
        samples=int(judged.sum()),
        disagreements=disagreements,
        sigma_disagreements=sigma_disagreements,
        both_factors_negative=int(negative.sum()),
    )
