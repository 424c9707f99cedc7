"""
Base maps, fibre solving and the fixed-fibre deformation.

A great-circle fibration of S^3 is described by a strictly
distance-decreasing map phi: S^2 -> S^2. For a right-handed fibration the
fibre through p has Grassmann image (m, phi(m)), where m solves

    m = p phi(m) conj(p)

and the circle is (p, m p). Left-handed fibrations use the graph of phi
from the second factor to the first: the fibre through p is (p, p n) with
n = conj(p) phi(n) p, and its Grassmann image is (phi(n), n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Optional, Protocol, Tuple

import numpy as np
import structlog

from .errors import (
    DegenerateInputError,
    DeformationDomainError,
    DeformationValidityError,
    NonContractionError,
)
from .grassmann import GreatCircle, contains, grassmann_distance, to_grassmann
from .observability import add_span_event, trace_function
from .quat import (
    K,
    FloatArray,
    ImaginaryUnit,
    UnitQuaternion,
    exp_imaginary,
    geodesic_distance_array,
    mul,
    normalize_rows,
    qconj_array,
    qmul_array,
    rotate_array,
    slerp_array,
)
from .sampling import s2_grid, tangent_frames

logger = structlog.get_logger()

SOLVER_TOL = 1e-12
SOLVER_MAX_ITER = 200
DEFAULT_GRID_DENSITY = 24
LIPSCHITZ_STEP = 1e-5


class BaseMap(Protocol):
    """Vectorized map S^2 -> S^2 on (N, 3) arrays of unit vectors."""

    def evaluate(self, u: FloatArray) -> FloatArray: ...


@dataclass(frozen=True)
class Constant:
    axis: ImaginaryUnit

    def evaluate(self, u: FloatArray) -> FloatArray:
        u = np.asarray(u, dtype=float)
        return np.broadcast_to(self.axis.vector, u.shape).copy()


@dataclass(frozen=True)
class PullToward:
    """
    u -> normalize(center + lam * rotation(u)).

    |d phi| <= lam / (1 - lam); values of lam >= 1/2 are only admitted by
    the spec loader behind an explicit override.
    """

    center: ImaginaryUnit
    lam: float
    rotation: Optional[UnitQuaternion] = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.lam < 1.0:
            raise DegenerateInputError(f"PullToward needs 0 <= lambda < 1, got {self.lam}")

    @property
    def lipschitz_bound(self) -> float:
        return self.lam / (1.0 - self.lam)

    def evaluate(self, u: FloatArray) -> FloatArray:
        u = np.asarray(u, dtype=float)
        if self.rotation is not None:
            u = rotate_array(self.rotation.as_array(), u)
        return normalize_rows(self.center.vector + self.lam * u)


@dataclass(frozen=True)
class ConjugatedMap:
    """u -> conj(b) inner(conj(a) u a) b, the base map after the motion p -> a p b."""

    inner: BaseMap
    a: UnitQuaternion
    b: UnitQuaternion

    def evaluate(self, u: FloatArray) -> FloatArray:
        pulled = rotate_array(qconj_array(self.a.as_array()), u)
        return rotate_array(qconj_array(self.b.as_array()), self.inner.evaluate(pulled))


@dataclass(frozen=True)
class AntipodalMap:
    """u -> -inner(-u)."""

    inner: BaseMap

    def evaluate(self, u: FloatArray) -> FloatArray:
        return -self.inner.evaluate(-np.asarray(u, dtype=float))


@dataclass(frozen=True)
class ContractedMap:
    """Geodesic contraction of inner toward target, keeping the given fraction of the distance."""

    inner: BaseMap
    target: ImaginaryUnit
    fraction: float

    def evaluate(self, u: FloatArray) -> FloatArray:
        image = self.inner.evaluate(u)
        if self.fraction <= 0.0:
            return np.broadcast_to(self.target.vector, image.shape).copy()
        return slerp_array(self.target.vector, image, self.fraction)


class Handedness(str, Enum):
    RIGHT = "right"
    LEFT = "left"


@dataclass(frozen=True)
class FibrationSpec:
    """A base map together with the side the fibres are generated on."""

    base_map: BaseMap
    handedness: Handedness = Handedness.RIGHT


def right_hopf(axis: ImaginaryUnit = K) -> FibrationSpec:
    """Fibres p exp(axis t)."""
    return FibrationSpec(Constant(axis), Handedness.RIGHT)


def left_hopf(axis: ImaginaryUnit = K) -> FibrationSpec:
    """Fibres exp(axis t) p."""
    return FibrationSpec(Constant(axis), Handedness.LEFT)


@dataclass(frozen=True)
class FibreBatch:
    """Fibres through an (N, 4) array of points."""

    P: FloatArray
    Q: FloatArray
    m: FloatArray
    n: FloatArray
    iterations: np.ndarray
    residual_trace: Tuple[float, ...]

    def __len__(self) -> int:
        return int(self.P.shape[0])


@dataclass(frozen=True)
class FibreSolution:
    """
    Fibre through a single point.

    image_point is phi evaluated at the solved coordinate: n for right-handed
    specs, m for left-handed ones.
    """

    circle: GreatCircle
    m: ImaginaryUnit
    n: ImaginaryUnit
    iterations: int
    residuals: Tuple[float, ...] = field(default_factory=tuple)
    handedness: Handedness = Handedness.RIGHT

    @property
    def image_point(self) -> ImaginaryUnit:
        return self.n if self.handedness is Handedness.RIGHT else self.m


def eval_phi(spec: FibrationSpec, u: ImaginaryUnit) -> ImaginaryUnit:
    return ImaginaryUnit.of(spec.base_map.evaluate(u.vector[None, :])[0])


def _fixed_points(
    base_map: BaseMap, points: FloatArray, tol: float, max_iter: int
) -> Tuple[FloatArray, np.ndarray, List[float]]:
    """
    Solve x = p phi(x) conj(p) row-wise, starting at p k conj(p).

    All rows are iterated until the worst one converges. iterations counts
    the steps each row spent above tol.
    """
    x = rotate_array(points, np.broadcast_to(K.vector, (points.shape[0], 3)))
    iterations = np.zeros(points.shape[0], dtype=int)
    trace: List[float] = []
    for step in range(max_iter + 1):
        image = rotate_array(points, base_map.evaluate(x))
        residual = np.linalg.norm(image - x, axis=1)
        worst = float(residual.max()) if residual.size else 0.0
        trace.append(worst)
        if worst < tol:
            return x, iterations, trace
        if step == max_iter:
            break
        iterations[residual >= tol] += 1
        x = image
    logger.warning("Fixed-point iteration did not converge", residual=trace[-1], max_iter=max_iter)
    raise NonContractionError(
        f"Fixed-point iteration stalled at residual {trace[-1]:.3e} after {max_iter} iterations",
        residual=trace[-1],
        iterations=max_iter,
    )


@trace_function(name="fibration.solve_fibres")
def solve_fibres(
    spec: FibrationSpec,
    points: FloatArray,
    tol: float = SOLVER_TOL,
    max_iter: int = SOLVER_MAX_ITER,
) -> FibreBatch:
    """
    Solve the fibres through many points at once.

    Args:
        spec: Fibration to evaluate
        points: (N, 4) array of unit quaternions
        tol: Residual bound |x - p phi(x) conj(p)| for every row
        max_iter: Iteration cap before NonContractionError

    Returns:
        FibreBatch with bases (P, Q) and Grassmann coordinates (m, n)
    """
    if tol <= 0.0:
        raise DegenerateInputError(f"Solver tolerance must be positive, got {tol}")
    P = normalize_rows(np.atleast_2d(np.asarray(points, dtype=float)))
    if spec.handedness is Handedness.RIGHT:
        m, iterations, trace = _fixed_points(spec.base_map, P, tol, max_iter)
        n = spec.base_map.evaluate(m)
        Q = qmul_array(_pure(m), P)
    else:
        n, iterations, trace = _fixed_points(spec.base_map, qconj_array(P), tol, max_iter)
        m = spec.base_map.evaluate(n)
        Q = qmul_array(P, _pure(n))
    add_span_event("Fibres solved", {"count": int(P.shape[0]), "max_iterations": int(iterations.max(initial=0))})
    return FibreBatch(P=P, Q=Q, m=m, n=n, iterations=iterations, residual_trace=tuple(trace))


def _pure(v: FloatArray) -> FloatArray:
    v = np.asarray(v, dtype=float)
    return np.concatenate([np.zeros(v.shape[:-1] + (1,)), v], axis=-1)


def fibre_through(
    spec: FibrationSpec,
    p: UnitQuaternion,
    tol: float = SOLVER_TOL,
    max_iter: int = SOLVER_MAX_ITER,
) -> FibreSolution:
    batch = solve_fibres(spec, p.as_array()[None, :], tol=tol, max_iter=max_iter)
    circle = GreatCircle(UnitQuaternion.from_array(batch.P[0]), UnitQuaternion.from_array(batch.Q[0]))
    return FibreSolution(
        circle=circle,
        m=ImaginaryUnit.of(batch.m[0]),
        n=ImaginaryUnit.of(batch.n[0]),
        iterations=int(batch.iterations[0]),
        residuals=batch.residual_trace,
        handedness=spec.handedness,
    )


@trace_function(name="fibration.lipschitz_estimate")
def lipschitz_estimate(
    spec: FibrationSpec, grid_density: int = DEFAULT_GRID_DENSITY, step: float = LIPSCHITZ_STEP
) -> float:
    """
    Largest operator norm of d phi over a Fibonacci grid of grid_density^2 points.

    Each differential is a 3x2 matrix built from central differences along
    two orthonormal tangent directions.
    """
    if grid_density < 16:
        raise DegenerateInputError(f"grid_density must be at least 16, got {grid_density}")
    u = s2_grid(grid_density)
    e1, e2 = tangent_frames(u)
    columns = []
    for e in (e1, e2):
        forward = math.cos(step) * u + math.sin(step) * e
        backward = math.cos(step) * u - math.sin(step) * e
        stacked = spec.base_map.evaluate(np.concatenate([forward, backward]))
        plus, minus = np.split(stacked, 2)
        columns.append((plus - minus) / (2.0 * step))
    jac = np.stack(columns, axis=-1)
    norms = np.linalg.svd(jac, compute_uv=False)[:, 0]
    return float(norms.max())


def hopf_invariance_check(axis: ImaginaryUnit, p: UnitQuaternion, t: float) -> float:
    """Distance of p exp(axis t) from the right Hopf fibre through p."""
    solution = fibre_through(right_hopf(axis), p)
    return contains(solution.circle, mul(p, exp_imaginary(axis, t)))


# --- deformation ---------------------------------------------------------------


@dataclass(frozen=True)
class DeformationPath:
    """Straight-line (geodesic) contraction of start toward target_point over t in [0, 1]."""

    start: FibrationSpec
    target_point: ImaginaryUnit
    steps: int

    def __post_init__(self) -> None:
        if self.steps < 1:
            raise DegenerateInputError(f"Deformation needs at least one step, got {self.steps}")

    def times(self) -> FloatArray:
        return np.linspace(0.0, 1.0, self.steps + 1)


def image_cap_distance(spec: FibrationSpec, target: ImaginaryUnit, grid_density: int) -> float:
    """Largest angle between target and phi(u) over the sample grid."""
    image = spec.base_map.evaluate(s2_grid(grid_density))
    return float(geodesic_distance_array(image, target.vector).max())


def deform(
    path: DeformationPath,
    t: float,
    grid_density: int = DEFAULT_GRID_DENSITY,
    check: bool = True,
) -> FibrationSpec:
    """
    The fibration at time t along the path.

    phi_t(u) is the point at fraction (1 - t) of the geodesic from
    target_point to phi(u), so phi_0 = phi and phi_1 is constant.
    """
    if not 0.0 <= t <= 1.0:
        raise DegenerateInputError(f"Deformation time must lie in [0, 1], got {t}")
    spec = path.start
    if check:
        spread = image_cap_distance(spec, path.target_point, grid_density)
        if spread >= 0.5 * math.pi:
            logger.error("Image leaves the pi/2 cap", spread=spread)
            raise DeformationDomainError(
                f"Image of phi reaches {spread:.6f} rad from the target, outside the pi/2 cap"
            )
    deformed = replace(spec, base_map=ContractedMap(spec.base_map, path.target_point, 1.0 - t))
    if check:
        lip = lipschitz_estimate(deformed, grid_density)
        if lip >= 1.0:
            logger.error("Deformation step not distance-decreasing", t=t, lipschitz=lip)
            raise DeformationValidityError(
                f"|d phi_t| estimate {lip:.6f} >= 1 at t={t:.6f}", t=t, lipschitz=lip
            )
    return deformed


def fixed_fibre_target(spec: FibrationSpec, p0: UnitQuaternion) -> ImaginaryUnit:
    """Target point that keeps the fibre through p0 fixed during the deformation."""
    return fibre_through(spec, p0).image_point


def preserved_fibre_check(path: DeformationPath, p0: UnitQuaternion, t: float) -> float:
    """Grassmann distance between the fibres through p0 at time t and at time 0."""
    before = to_grassmann(fibre_through(path.start, p0).circle)
    after = to_grassmann(fibre_through(deform(path, t), p0).circle)
    drift = grassmann_distance(before, after)
    logger.debug("Preserved fibre drift", t=t, drift=drift)
    return drift
