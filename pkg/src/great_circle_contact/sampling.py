"""
Deterministic point sets on S^3, S^2 and the chart disk.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.stats import qmc

from .quat import FloatArray

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


def s3_points(count: int, seed: int = 0) -> FloatArray:
    """
    Quasi-uniform points of S^3 as an (N, 4) array of (w, x, y, z).

    Scrambled Halton points of the unit cube are pushed through Shoemake's
    map, which sends the uniform measure on [0, 1)^3 to Haar measure.
    """
    if count <= 0:
        return np.zeros((0, 4))
    cube = qmc.Halton(d=3, scramble=True, seed=seed).random(count)
    u1, u2, u3 = cube[:, 0], 2.0 * math.pi * cube[:, 1], 2.0 * math.pi * cube[:, 2]
    r1 = np.sqrt(1.0 - u1)
    r2 = np.sqrt(u1)
    return np.column_stack([r2 * np.cos(u3), r1 * np.sin(u2), r1 * np.cos(u2), r2 * np.sin(u3)])


def fibonacci_sphere(count: int) -> FloatArray:
    """(N, 3) Fibonacci lattice on S^2."""
    idx = np.arange(count, dtype=float)
    z = 1.0 - (2.0 * idx + 1.0) / count
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, 1.0))
    theta = GOLDEN_ANGLE * idx
    return np.column_stack([r * np.cos(theta), r * np.sin(theta), z])


def s2_grid(grid_density: int) -> FloatArray:
    """Sample grid used for Lipschitz and image checks: grid_density^2 lattice points."""
    return fibonacci_sphere(grid_density * grid_density)


def disk_points(count: int, radius: float) -> FloatArray:
    """(N, 2) sunflower pattern filling the disk of the given radius."""
    idx = np.arange(count, dtype=float)
    r = radius * np.sqrt((idx + 0.5) / count)
    theta = GOLDEN_ANGLE * idx
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def tangent_frames(points: FloatArray) -> tuple[FloatArray, FloatArray]:
    """Orthonormal tangent pairs (e1, e2) at each row of an (N, 3) array of unit vectors."""
    points = np.asarray(points, dtype=float)
    helper = np.where(
        (np.abs(points[:, 0]) < 0.9)[:, None],
        np.array([1.0, 0.0, 0.0]),
        np.array([0.0, 1.0, 0.0]),
    )
    e1 = helper - np.sum(helper * points, axis=1, keepdims=True) * points
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(points, e1)
    return e1, e2
