"""
Quaternion algebra on R^4.

Scalar values are frozen dataclasses (Quaternion, UnitQuaternion,
ImaginaryUnit); the *_array helpers apply the same algebra to stacks of
shape (..., 4) or (..., 3) so sweeps over many points stay in numpy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np
import numpy.typing as npt

from .errors import DegenerateInputError

ALGEBRAIC_TOL = 1e-12
FD_TOL = 1e-6
DEGENERATE_NORM = 1e-14

FloatArray = npt.NDArray[np.float64]


@dataclass(frozen=True)
class Quaternion:
    """w + x i + y j + z k."""

    w: float
    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        for name in ("w", "x", "y", "z"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise DegenerateInputError(f"Non-finite quaternion coordinate {name}={value}")
            object.__setattr__(self, name, value)

    @classmethod
    def from_array(cls, values: Iterable[float]) -> "Quaternion":
        w, x, y, z = (float(v) for v in values)
        return cls(w, x, y, z)

    @classmethod
    def from_vector(cls, vector: Iterable[float], w: float = 0.0) -> "Quaternion":
        x, y, z = (float(v) for v in vector)
        return cls(w, x, y, z)

    def as_array(self) -> FloatArray:
        return np.array([self.w, self.x, self.y, self.z], dtype=float)

    @property
    def vector(self) -> FloatArray:
        """Imaginary part as a 3-vector."""
        return np.array([self.x, self.y, self.z], dtype=float)

    def norm(self) -> float:
        return math.sqrt(self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z)

    @property
    def conj(self) -> "Quaternion":
        return conj(self)

    def __mul__(self, other: Union["Quaternion", float]) -> "Quaternion":
        if isinstance(other, Quaternion):
            return mul(self, other)
        s = float(other)
        return Quaternion(self.w * s, self.x * s, self.y * s, self.z * s)

    def __rmul__(self, other: float) -> "Quaternion":
        return self.__mul__(float(other))

    def __add__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion(self.w + other.w, self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion(self.w - other.w, self.x - other.x, self.y - other.y, self.z - other.z)

    def __neg__(self) -> "Quaternion":
        return Quaternion(-self.w, -self.x, -self.y, -self.z)

    def isclose(self, other: "Quaternion", tol: float = ALGEBRAIC_TOL) -> bool:
        return float(np.max(np.abs(self.as_array() - other.as_array()))) <= tol


@dataclass(frozen=True)
class UnitQuaternion(Quaternion):
    """Point of S^3. Re-normalized on construction."""

    def __post_init__(self) -> None:
        super().__post_init__()
        n = self.norm()
        if n <= DEGENERATE_NORM:
            raise DegenerateInputError(f"Cannot normalize quaternion of norm {n:.3e}")
        for name in ("w", "x", "y", "z"):
            object.__setattr__(self, name, getattr(self, name) / n)

    @classmethod
    def of(cls, q: Quaternion) -> "UnitQuaternion":
        return cls(q.w, q.x, q.y, q.z)


@dataclass(frozen=True)
class ImaginaryUnit(Quaternion):
    """Unit pure-imaginary quaternion, i.e. a point of S^2."""

    def __post_init__(self) -> None:
        super().__post_init__()
        if abs(self.w) > ALGEBRAIC_TOL:
            raise DegenerateInputError(f"Imaginary unit needs w = 0, got w={self.w:.3e}")
        object.__setattr__(self, "w", 0.0)
        n = self.norm()
        if n <= DEGENERATE_NORM:
            raise DegenerateInputError(f"Cannot normalize vector of norm {n:.3e}")
        for name in ("x", "y", "z"):
            object.__setattr__(self, name, getattr(self, name) / n)

    @classmethod
    def of(cls, vector: Union[Quaternion, Iterable[float]]) -> "ImaginaryUnit":
        if isinstance(vector, Quaternion):
            return cls(vector.w, vector.x, vector.y, vector.z)
        x, y, z = (float(v) for v in vector)
        return cls(0.0, x, y, z)


ONE = UnitQuaternion(1.0, 0.0, 0.0, 0.0)
I = ImaginaryUnit(0.0, 1.0, 0.0, 0.0)
J = ImaginaryUnit(0.0, 0.0, 1.0, 0.0)
K = ImaginaryUnit(0.0, 0.0, 0.0, 1.0)


def mul(p: Quaternion, q: Quaternion) -> Quaternion:
    """Hamilton product pq."""
    return Quaternion(
        p.w * q.w - p.x * q.x - p.y * q.y - p.z * q.z,
        p.w * q.x + p.x * q.w + p.y * q.z - p.z * q.y,
        p.w * q.y - p.x * q.z + p.y * q.w + p.z * q.x,
        p.w * q.z + p.x * q.y - p.y * q.x + p.z * q.w,
    )


def conj(q: Quaternion) -> Quaternion:
    return Quaternion(q.w, -q.x, -q.y, -q.z)


def dot(p: Quaternion, q: Quaternion) -> float:
    """Euclidean inner product on R^4."""
    return p.w * q.w + p.x * q.x + p.y * q.y + p.z * q.z


def normalize(q: Quaternion) -> UnitQuaternion:
    n = q.norm()
    if n <= DEGENERATE_NORM:
        raise DegenerateInputError(f"Cannot normalize quaternion of norm {n:.3e}")
    return UnitQuaternion(q.w, q.x, q.y, q.z)


def conjugate_by(a: Quaternion, v: Quaternion) -> Quaternion:
    """a v conj(a); a rotation of R^3 when a is a unit quaternion and v is imaginary."""
    return mul(mul(a, v), conj(a))


def exp_imaginary(axis: ImaginaryUnit, t: float) -> UnitQuaternion:
    """cos t + axis sin t."""
    s = math.sin(t)
    return UnitQuaternion(math.cos(t), axis.x * s, axis.y * s, axis.z * s)


def from_axis_angle(axis: Iterable[float], angle: float) -> UnitQuaternion:
    """Unit quaternion whose conjugation rotates R^3 by angle about axis."""
    u = ImaginaryUnit.of(axis)
    return exp_imaginary(u, 0.5 * angle)


def _half_turn_axis(u: FloatArray) -> FloatArray:
    """Fixed unit axis orthogonal to u: i projected off u when possible, else j."""
    axis = np.array([1.0, 0.0, 0.0]) - u[0] * u
    if np.linalg.norm(axis) < 1e-6:
        axis = np.array([0.0, 1.0, 0.0]) - u[1] * u
    return axis / np.linalg.norm(axis)


def rotation_to(source: ImaginaryUnit, target: ImaginaryUnit) -> UnitQuaternion:
    """
    Unit quaternion a with a source conj(a) = target.

    Obtuse pairs go through a half turn about a fixed axis orthogonal to
    source (i when possible), so exactly antipodal inputs are deterministic
    and the half-angle formula below only ever sees acute pairs.
    """
    u = source.vector
    v = target.vector
    c = float(np.dot(u, v))
    if c < 0.0:
        half_turn = UnitQuaternion.of(Quaternion.from_vector(_half_turn_axis(u)))
        flipped = ImaginaryUnit.of(-u)
        return UnitQuaternion.of(mul(rotation_to(flipped, target), half_turn))
    # half-angle construction: a = (1 + u.v, u x v) normalized
    cross = np.cross(u, v)
    return UnitQuaternion(1.0 + c, *cross)


def geodesic_distance(u: Union[Quaternion, FloatArray], v: Union[Quaternion, FloatArray]) -> float:
    """
    Great-circle distance between two unit vectors.

    Quaternion arguments follow the dimension of an array argument: a pure
    quaternion meets a 3-vector on S^2, anything else is compared in R^4.
    """
    dim = next((np.shape(q)[-1] for q in (u, v) if not isinstance(q, Quaternion)), 4)
    return float(geodesic_distance_array(_distance_coords(u, dim), _distance_coords(v, dim)))


def _distance_coords(q: Union[Quaternion, FloatArray], dim: int) -> FloatArray:
    if not isinstance(q, Quaternion):
        return np.asarray(q, dtype=float)
    if dim == 4:
        return q.as_array()
    if q.w != 0.0:
        raise DegenerateInputError("Only a pure quaternion can be compared with a 3-vector")
    return q.vector


# --- array helpers -----------------------------------------------------------


def qmul_array(p: FloatArray, q: FloatArray) -> FloatArray:
    """Hamilton product on stacks of shape (..., 4)."""
    pw, px, py, pz = np.moveaxis(np.asarray(p, dtype=float), -1, 0)
    qw, qx, qy, qz = np.moveaxis(np.asarray(q, dtype=float), -1, 0)
    return np.stack(
        [
            pw * qw - px * qx - py * qy - pz * qz,
            pw * qx + px * qw + py * qz - pz * qy,
            pw * qy - px * qz + py * qw + pz * qx,
            pw * qz + px * qy - py * qx + pz * qw,
        ],
        axis=-1,
    )


def qconj_array(q: FloatArray) -> FloatArray:
    out = np.array(q, dtype=float, copy=True)
    out[..., 1:] *= -1.0
    return out


def rotate_array(q: FloatArray, v: FloatArray) -> FloatArray:
    """q v conj(q) for unit quaternions q (..., 4) and 3-vectors v (..., 3)."""
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    w = q[..., :1]
    u = q[..., 1:]
    uv = np.cross(u, v)
    return v + 2.0 * w * uv + 2.0 * np.cross(u, uv)


def normalize_rows(a: FloatArray) -> FloatArray:
    a = np.asarray(a, dtype=float)
    n = np.linalg.norm(a, axis=-1, keepdims=True)
    if np.any(n <= DEGENERATE_NORM):
        raise DegenerateInputError("Cannot normalize a near-zero row")
    return a / n


def geodesic_distance_array(u: FloatArray, v: FloatArray) -> FloatArray:
    """Row-wise angle between unit vectors, accurate at small and large angles."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    chord = np.linalg.norm(u - v, axis=-1)
    return 2.0 * np.arcsin(np.clip(0.5 * chord, 0.0, 1.0))


def slerp_array(origin: FloatArray, targets: FloatArray, fraction: float) -> FloatArray:
    """
    Point at the given fraction of the geodesic from origin to each target.

    origin is a single unit vector broadcast against targets (..., d).
    """
    origin = np.asarray(origin, dtype=float)
    targets = np.asarray(targets, dtype=float)
    theta = geodesic_distance_array(np.broadcast_to(origin, targets.shape), targets)[..., None]
    small = theta < 1e-12
    safe = np.where(small, 1.0, np.sin(theta))
    wa = np.where(small, 1.0 - fraction, np.sin((1.0 - fraction) * theta) / safe)
    wb = np.where(small, fraction, np.sin(fraction * theta) / safe)
    out = wa * origin + wb * targets
    return out / np.linalg.norm(out, axis=-1, keepdims=True)
