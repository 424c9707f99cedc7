"""Command-line drivers: validate, contact, deform, plot, oracle and sweep."""

from __future__ import annotations

import functools
import math
from pathlib import Path
from typing import Callable, List, Optional

import click
import numpy as np
import structlog
from pydantic import BaseModel

from .chart import firing_jacobian, prop1_margin, standardize
from .contact import CROSS_CHECK_TOL, contact_along_path, contact_coefficient_numeric
from .errors import FibrationError, SpecFileError
from .fibration import (
    DEFAULT_GRID_DENSITY,
    DeformationPath,
    fixed_fibre_target,
    lipschitz_estimate,
)
from .observability import setup_logging
from .plot import plot_fibres
from .quat import ONE, ImaginaryUnit, UnitQuaternion
from .reports import ContactReport, SweepReport, ValidationReport, render_json, render_text
from .sampling import s2_grid, s3_points
from .specfile import LoadedSpec, load_spec_file, parse_vector
from .verify import (
    FiringFamily,
    HopfConstant,
    LinearTilt,
    SpecFamily,
    amgm_samples,
    m_criterion_samples,
    prop1_oracle_agreement,
    smallest_cap,
)

logger = structlog.get_logger()

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INCONCLUSIVE = 6

spec_argument = click.argument("spec_path", type=click.Path(path_type=Path, dir_okay=False))
json_option = click.option("--json", "as_json", is_flag=True, help="Emit the report as JSON.")


def _emit(report: BaseModel, as_json: bool) -> None:
    click.echo(render_json(report) if as_json else render_text(report), nl=False)


def handles_errors(func: Callable) -> Callable:
    """Map FibrationError subclasses to their exit codes."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        try:
            return func(*args, **kwargs)
        except FibrationError as exc:
            logger.error("Command failed", command=ctx.info_name, error=str(exc), exit_code=exc.exit_code)
            click.echo(f"error: {exc}", err=True)
            ctx.exit(exc.exit_code)

    return wrapper


def _vector_option(text: Optional[str], size: int, name: str) -> Optional[np.ndarray]:
    if text is None:
        return None
    try:
        return parse_vector(text, size)
    except SpecFileError as exc:
        raise click.BadParameter(str(exc), param_hint=name) from exc


@click.group()
@click.option("--log-level", default=None, help="structlog level; defaults to GCC_LOG_LEVEL or WARNING.")
@click.option(
    "--log-format",
    type=click.Choice(["console", "json"]),
    default=None,
    help="Log renderer; defaults to GCC_LOG_FORMAT or console.",
)
def main(log_level: Optional[str], log_format: Optional[str]) -> None:
    """Verify great-circle fibrations of S^3 and the contact structures they induce."""
    setup_logging(log_level, log_format)


@main.command()
@spec_argument
@click.option("--samples", type=click.IntRange(min=1), default=None, help="S^3 sample points [run.samples].")
@click.option("--seed", type=int, default=None, help="Sample seed [run.seed].")
@click.option("--tol", type=click.FloatRange(min=0.0), default=None, help="Required margin [run.tolerance].")
@click.option("--allow-large-lambda", is_flag=True, help="Admit lambda in [0.5, 1) after a Lipschitz check.")
@json_option
@handles_errors
def validate(
    spec_path: Path,
    samples: Optional[int],
    seed: Optional[int],
    tol: Optional[float],
    allow_large_lambda: bool,
    as_json: bool,
) -> None:
    """Check the fibration criterion at sampled fibres."""
    loaded = load_spec_file(spec_path, allow_large_lambda=allow_large_lambda)
    samples = loaded.run.samples if samples is None else samples
    seed = loaded.run.seed if seed is None else seed
    tol = loaded.run.tolerance if tol is None else tol

    lip = lipschitz_estimate(loaded.spec)
    points = s3_points(samples, seed)
    worst = None
    min_margin = min_factor1 = min_factor2 = min_delta = math.inf
    for p in points:
        try:
            chart = standardize(loaded.spec, UnitQuaternion.from_array(p), epsilon=loaded.chart.epsilon)
            j = firing_jacobian(chart, loaded.chart.fd_step)
        except FibrationError as exc:
            raise exc.at_point(p)
        margin = prop1_margin(j)
        if margin.margin < min_margin:
            min_margin, worst = margin.margin, p
        min_factor1 = min(min_factor1, margin.factor1)
        min_factor2 = min(min_factor2, margin.factor2)
        min_delta = min(min_delta, j.delta)

    passed = lip < 1.0 and min_margin > tol and min_factor1 > tol and min_factor2 > tol
    report = ValidationReport(
        handedness=loaded.spec.handedness.value,
        samples=samples,
        seed=seed,
        tolerance=tol,
        lipschitz=lip,
        min_margin=min_margin,
        min_factor1=min_factor1,
        min_factor2=min_factor2,
        min_delta=min_delta,
        worst_point=np.asarray(worst).tolist(),
        passed=passed,
    )
    _emit(report, as_json)
    click.get_current_context().exit(EXIT_OK if passed else EXIT_FAILED)


@main.command()
@spec_argument
@click.option("--samples", type=click.IntRange(min=1), default=None, help="S^3 sample points [run.samples].")
@click.option("--seed", type=int, default=None, help="Sample seed [run.seed].")
@click.option("--fd-step", type=click.FloatRange(min=0.0, min_open=True), default=None, help="[chart.fd_step]")
@json_option
@handles_errors
def contact(
    spec_path: Path,
    samples: Optional[int],
    seed: Optional[int],
    fd_step: Optional[float],
    as_json: bool,
) -> None:
    """Evaluate the contact coefficient at sampled fibres, numerically and in closed form."""
    loaded = load_spec_file(spec_path)
    samples = loaded.run.samples if samples is None else samples
    seed = loaded.run.seed if seed is None else seed
    fd_step = loaded.chart.fd_step if fd_step is None else fd_step

    analytic: List[float] = []
    full_gaps: List[float] = []
    reduced_gaps: List[float] = []
    alpha_t: List[float] = []
    for p in s3_points(samples, seed):
        try:
            chart = standardize(loaded.spec, UnitQuaternion.from_array(p), epsilon=loaded.chart.epsilon)
            check = contact_coefficient_numeric(chart, fd_step, check=False)
        except FibrationError as exc:
            raise exc.at_point(p)
        analytic.append(check.analytic)
        full_gaps.append(abs(check.full - check.analytic))
        reduced_gaps.append(abs(check.reduced - check.analytic))
        alpha_t.append(max(abs(check.a_t), abs(check.b_t)))

    max_gap = max(full_gaps)
    max_reduced = max(reduced_gaps)
    passed = max(analytic) < 0.0 and max(max_gap, max_reduced) <= CROSS_CHECK_TOL
    if not passed:
        logger.warning("Contact check failed", max_coefficient=max(analytic), max_gap=max(max_gap, max_reduced))
    report = ContactReport(
        handedness=loaded.spec.handedness.value,
        samples=samples,
        seed=seed,
        max_coefficient=max(analytic),
        min_coefficient=min(analytic),
        min_abs_coefficient=min(abs(c) for c in analytic),
        max_numeric_gap=max_gap,
        max_reduced_gap=max_reduced,
        max_abs_alpha_t_derivative=max(alpha_t),
        cross_check_tol=CROSS_CHECK_TOL,
        passed=passed,
    )
    _emit(report, as_json)
    click.get_current_context().exit(EXIT_OK if passed else EXIT_FAILED)


def _default_target(loaded: LoadedSpec, grid_density: int) -> ImaginaryUnit:
    image = loaded.spec.base_map.evaluate(s2_grid(grid_density))
    cap = smallest_cap(image)
    logger.info(
        "Deformation target from smallest cap", center=cap.center.vector.tolist(), radius=cap.radius
    )
    return cap.center


@main.command()
@spec_argument
@click.option("--steps", type=click.IntRange(min=1), default=20, show_default=True)
@click.option("--fix-fibre", "fix_fibre", default=None, help="Point w,x,y,z whose fibre stays fixed.")
@click.option("--target", default=None, help="Target x,y,z of the contraction; overrides --fix-fibre.")
@click.option("--samples", type=click.IntRange(min=1), default=8, show_default=True, help="Fibres per step.")
@click.option("--seed", type=int, default=None, help="Sample seed [run.seed].")
@click.option(
    "--grid-density", type=click.IntRange(min=16), default=DEFAULT_GRID_DENSITY, show_default=True
)
@json_option
@handles_errors
def deform(
    spec_path: Path,
    steps: int,
    fix_fibre: Optional[str],
    target: Optional[str],
    samples: int,
    seed: Optional[int],
    grid_density: int,
    as_json: bool,
) -> None:
    """Contract the fibration to a Hopf fibration and check contactness along the way."""
    loaded = load_spec_file(spec_path)
    seed = loaded.run.seed if seed is None else seed
    fixed_vec = _vector_option(fix_fibre, 4, "--fix-fibre")
    target_vec = _vector_option(target, 3, "--target")

    fixed_point = UnitQuaternion.from_array(fixed_vec) if fixed_vec is not None else None
    if target_vec is not None:
        target_point = ImaginaryUnit.of(target_vec)
    elif fixed_point is not None:
        target_point = fixed_fibre_target(loaded.spec, fixed_point)
    else:
        target_point = _default_target(loaded, grid_density)

    path = DeformationPath(loaded.spec, target_point, steps)
    report = contact_along_path(
        path,
        samples,
        seed=seed,
        fixed_point=fixed_point,
        epsilon=loaded.chart.epsilon,
        fd_step=loaded.chart.fd_step,
        grid_density=grid_density,
    )
    _emit(report, as_json)
    click.get_current_context().exit(EXIT_OK if report.passed else EXIT_FAILED)


@main.command()
@spec_argument
@click.option("--fibres", type=click.IntRange(min=1), default=24, show_default=True)
@click.option("--points-per-fibre", type=click.IntRange(min=2), default=256, show_default=True)
@click.option("--pole", default="-1,0,0,0", show_default=True, help="Projection pole w,x,y,z.")
@click.option("--format", "fmt", type=click.Choice(["csv", "svg"]), default="csv", show_default=True)
@click.option("--out", type=click.Path(path_type=Path, dir_okay=False), required=True)
@click.option("--seed", type=int, default=None, help="Base point seed [run.seed].")
@json_option
@handles_errors
def plot(
    spec_path: Path,
    fibres: int,
    points_per_fibre: int,
    pole: str,
    fmt: str,
    out: Path,
    seed: Optional[int],
    as_json: bool,
) -> None:
    """Write stereographically projected fibres as CSV or SVG."""
    loaded = load_spec_file(spec_path)
    pole_vec = _vector_option(pole, 4, "--pole")
    report = plot_fibres(
        loaded.spec,
        out,
        fmt=fmt,
        fibres=fibres,
        points_per_fibre=points_per_fibre,
        pole=pole_vec,
        seed=loaded.run.seed if seed is None else seed,
    )
    _emit(report, as_json)


def parse_family(text: str) -> FiringFamily:
    """'hopf' or 'linear-tilt:cf_x,cf_y,cg_x,cg_y' (missing trailing coefficients are 0)."""
    if text == "hopf":
        return HopfConstant()
    name, _, params = text.partition(":")
    if name != "linear-tilt":
        raise click.BadParameter(f"unknown family {text!r}", param_hint="--family")
    try:
        values = [float(v) for v in params.split(",")] if params else []
    except ValueError as exc:
        raise click.BadParameter(f"bad coefficients in {text!r}", param_hint="--family") from exc
    if len(values) > 4 or not all(math.isfinite(v) for v in values):
        raise click.BadParameter("linear-tilt takes at most 4 finite coefficients", param_hint="--family")
    return LinearTilt(*values)


@main.command()
@click.argument("spec_path", type=click.Path(path_type=Path, dir_okay=False), required=False)
@click.option("--family", default=None, help="hopf or linear-tilt:cf_x,cf_y,cg_x,cg_y")
@click.option("--region", type=click.FloatRange(min=0.0, max=0.9, min_open=True), default=0.2, show_default=True)
@click.option("--samples", type=click.IntRange(min=2), default=400, show_default=True)
@click.option("--point", default="1,0,0,0", show_default=True, help="Fibre w,x,y,z to chart for a spec file.")
@json_option
@handles_errors
def oracle(
    spec_path: Optional[Path],
    family: Optional[str],
    region: float,
    samples: int,
    point: str,
    as_json: bool,
) -> None:
    """Compare the fibration criterion with a brute-force collision scan."""
    if (spec_path is None) == (family is None):
        raise click.UsageError("Give exactly one of SPEC_PATH or --family")
    if family is not None:
        fam = parse_family(family)
    else:
        loaded = load_spec_file(spec_path)
        point_vec = _vector_option(point, 4, "--point")
        p = UnitQuaternion.from_array(point_vec) if point_vec is not None else ONE
        chart = standardize(loaded.spec, p, epsilon=1.0)
        fam = SpecFamily(chart, loaded.chart.fd_step, label=str(spec_path))
    report = prop1_oracle_agreement(fam, n_samples=samples, region_radius=region)
    _emit(report, as_json)
    ctx = click.get_current_context()
    if report.verdict == "inconclusive":
        ctx.exit(EXIT_INCONCLUSIVE)
    ctx.exit(EXIT_FAILED if report.verdict == "disagree" else EXIT_OK)


@main.command()
@click.option("--count", type=click.IntRange(min=1), default=100_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@json_option
@handles_errors
def sweep(count: int, seed: int, as_json: bool) -> None:
    """Random jacobian sweeps of the criterion's algebraic consequences."""
    amgm = amgm_samples(count, seed)
    criterion = m_criterion_samples(count, seed)
    passed = criterion.disagreements == 0 and criterion.sigma_disagreements == 0
    report = SweepReport(
        count=count,
        seed=seed,
        accepted=amgm.accepted,
        min_prop2=amgm.min_prop2,
        min_delta_excess=amgm.min_delta_excess,
        m_criterion_samples=criterion.samples,
        m_criterion_disagreements=criterion.disagreements,
        sigma_disagreements=criterion.sigma_disagreements,
        both_factors_negative=criterion.both_factors_negative,
        passed=passed,
    )
    _emit(report, as_json)
    click.get_current_context().exit(EXIT_OK if passed else EXIT_FAILED)


if __name__ == "__main__":
    main()
