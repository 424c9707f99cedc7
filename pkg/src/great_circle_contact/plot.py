"""
Stereographic pictures of fibres.

Fibres are sampled as closed polylines on S^3, projected to R^3 from a pole
and written either as CSV vertex records or as an SVG orthographic view.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import structlog  # noqa: E402

from .errors import DegenerateInputError, PlotOutputError  # noqa: E402
from .fibration import FibrationSpec, solve_fibres  # noqa: E402
from .observability import trace_function  # noqa: E402
from .quat import FloatArray, from_axis_angle, normalize_rows, qconj_array, qmul_array  # noqa: E402
from .reports import PlotReport  # noqa: E402
from .sampling import s3_points  # noqa: E402

logger = structlog.get_logger()

DEFAULT_POLE = np.array([-1.0, 0.0, 0.0, 0.0])
POLE_CLEARANCE = 1e-3
PERTURB_ANGLE = 0.05
MAX_PERTURBATIONS = 8
CLOSURE_TOL = 1e-6
CSV_HEADER = ("fibre_id", "vertex_index", "px", "py", "pz")

# Orthographic view used for SVG output, in degrees.
VIEW_AZIMUTH = 30.0
VIEW_ELEVATION = 20.0

SVG_RC = {
    "path.simplify": False,
    "svg.hashsalt": "great-circle-contact",
    "svg.fonttype": "none",
}


@dataclass(frozen=True)
class FibrePolylines:
    """Projected fibres: vertices has shape (fibres, points_per_fibre, 3)."""

    vertices: FloatArray
    base_points: FloatArray
    perturbed: int

    @property
    def closure_gaps(self) -> FloatArray:
        return np.linalg.norm(self.vertices[:, 0] - self.vertices[:, -1], axis=1)


def stereographic(points: FloatArray, pole: Optional[FloatArray] = None) -> FloatArray:
    """
    Project unit quaternions (..., 4) to R^3 from pole.

    The pole is first carried to -1 by left multiplication with -conj(pole),
    then (w, x, y, z) -> (x, y, z) / (1 + w).
    """
    points = np.asarray(points, dtype=float)
    if pole is not None:
        pole = normalize_rows(np.asarray(pole, dtype=float)[None, :])[0]
        if not np.allclose(pole, DEFAULT_POLE):
            points = qmul_array(-qconj_array(pole), points)
    denom = 1.0 + points[..., 0]
    if np.any(denom <= 0.0):
        raise DegenerateInputError("Cannot project the pole itself")
    return points[..., 1:] / denom[..., None]


def _pole_distance(P: FloatArray, Q: FloatArray, pole: FloatArray) -> FloatArray:
    """Distance from the pole to the plane of each fibre."""
    a = P @ pole
    b = Q @ pole
    return np.sqrt(np.clip(1.0 - a * a - b * b, 0.0, None))


@trace_function(name="plot.fibre_polylines")
def fibre_polylines(
    spec: FibrationSpec,
    fibres: int,
    points_per_fibre: int,
    pole: Optional[FloatArray] = None,
    seed: int = 0,
) -> FibrePolylines:
    """
    Sample fibres through quasi-random base points as closed polylines.

    Vertex k of every fibre sits at t = 2 pi k / (M - 1), so the first and
    last vertices coincide. Base points whose fibre passes within
    POLE_CLEARANCE of the pole are nudged by a small right rotation and
    solved again.
    """
    if fibres < 1 or points_per_fibre < 2:
        raise DegenerateInputError("Need at least one fibre and two vertices per fibre")
    pole = DEFAULT_POLE if pole is None else normalize_rows(np.asarray(pole, dtype=float)[None, :])[0]

    base = s3_points(fibres, seed)
    nudge = from_axis_angle((1.0, 1.0, 1.0), PERTURB_ANGLE).as_array()
    moved = np.zeros(fibres, dtype=bool)
    for _ in range(MAX_PERTURBATIONS + 1):
        batch = solve_fibres(spec, base)
        near = _pole_distance(batch.P, batch.Q, pole) < POLE_CLEARANCE
        if not near.any():
            break
        logger.debug("Perturbing base points near the pole", count=int(near.sum()))
        base[near] = qmul_array(base[near], nudge)
        moved |= near
    else:
        raise DegenerateInputError("Could not move fibres off the projection pole")

    t = 2.0 * math.pi * np.arange(points_per_fibre) / (points_per_fibre - 1)
    cos_t = np.cos(t)[None, :, None]
    sin_t = np.sin(t)[None, :, None]
    on_sphere = batch.P[:, None, :] * cos_t + batch.Q[:, None, :] * sin_t
    vertices = stereographic(on_sphere, pole)
    return FibrePolylines(vertices=vertices, base_points=base, perturbed=int(moved.sum()))


def write_csv(path: Union[str, Path], polylines: FibrePolylines) -> int:
    """Write one row per vertex; returns the number of data rows."""
    rows = 0
    try:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for fibre_id, line in enumerate(polylines.vertices):
                for index, (px, py, pz) in enumerate(line):
                    writer.writerow([fibre_id, index, "%.12g" % px, "%.12g" % py, "%.12g" % pz])
                    rows += 1
    except OSError as exc:
        logger.error("Cannot write plot", path=str(path), error=str(exc))
        raise PlotOutputError(f"{path}: {exc.strerror or exc}") from exc
    return rows


def _view_projection(vertices: FloatArray) -> FloatArray:
    az = math.radians(VIEW_AZIMUTH)
    el = math.radians(VIEW_ELEVATION)
    right = np.array([-math.sin(az), math.cos(az), 0.0])
    up = np.array([-math.sin(el) * math.cos(az), -math.sin(el) * math.sin(az), math.cos(el)])
    return np.stack([vertices @ right, vertices @ up], axis=-1)


def write_svg(path: Union[str, Path], polylines: FibrePolylines) -> int:
    """
    Orthographic view of the projected fibres, one path per fibre.

    Lines carry gid "fibre-<id>". Output is byte-stable for equal input.
    """
    flat = _view_projection(polylines.vertices)
    colors = plt.get_cmap("viridis")(np.linspace(0.0, 1.0, max(len(flat), 2)))
    with plt.rc_context(SVG_RC):
        fig, ax = plt.subplots(figsize=(6.0, 6.0))
        try:
            for fibre_id, line in enumerate(flat):
                (artist,) = ax.plot(line[:, 0], line[:, 1], lw=0.8, color=colors[fibre_id])
                artist.set_gid(f"fibre-{fibre_id}")
            ax.set_aspect("equal")
            ax.set_axis_off()
            fig.savefig(path, format="svg", metadata={"Date": None})
        except OSError as exc:
            logger.error("Cannot write plot", path=str(path), error=str(exc))
            raise PlotOutputError(f"{path}: {exc.strerror or exc}") from exc
        finally:
            plt.close(fig)
    return int(polylines.vertices.shape[0] * polylines.vertices.shape[1])


def plot_fibres(
    spec: FibrationSpec,
    out: Union[str, Path],
    fmt: str = "csv",
    fibres: int = 24,
    points_per_fibre: int = 256,
    pole: Optional[FloatArray] = None,
    seed: int = 0,
) -> PlotReport:
    """Sample, project and write fibres; the report carries vertex counts and closure."""
    polylines = fibre_polylines(spec, fibres, points_per_fibre, pole=pole, seed=seed)
    if fmt == "csv":
        rows = write_csv(out, polylines)
    elif fmt == "svg":
        rows = write_svg(out, polylines)
    else:
        raise PlotOutputError(f"Unknown plot format {fmt!r}")
    gap = float(polylines.closure_gaps.max())
    if gap > CLOSURE_TOL:
        logger.warning("Fibre polyline not closed", max_closure_gap=gap)
    logger.info("Plot written", out=str(out), format=fmt, rows=rows)
    return PlotReport(
        out=str(out),
        format=fmt,
        fibres=fibres,
        points_per_fibre=points_per_fibre,
        rows=rows,
        max_closure_gap=gap,
        perturbed=polylines.perturbed,
    )
