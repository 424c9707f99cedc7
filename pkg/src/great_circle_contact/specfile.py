"""
Spec files: TOML documents describing a fibration and run settings.

    [fibration]
    type = "pull_toward"
    center = [0.0, 0.0, 1.0]
    lambda = 0.3
    handedness = "right"

    [fibration.rotation]
    axis = [1.0, 0.0, 0.0]
    angle = 0.5

    [chart]
    epsilon = 0.04
    fd_step = 1e-4

    [run]
    samples = 100
    seed = 0
    tolerance = 0.0

Unknown keys are rejected. lambda must lie in [0, 1/2) unless the loader is
called with allow_large_lambda, in which case values below 1 pass provided
the sampled Lipschitz estimate stays below 1.
"""

from __future__ import annotations

import math
import tomllib
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional, Tuple, Union

import numpy as np
import structlog
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    ValidationInfo,
    field_validator,
    model_validator,
)

from .chart import DEFAULT_EPSILON, DEFAULT_FD_STEP
from .errors import FibrationError, SpecFileError
from .fibration import (
    Constant,
    FibrationSpec,
    Handedness,
    PullToward,
    lipschitz_estimate,
)
from .quat import ImaginaryUnit, from_axis_angle

logger = structlog.get_logger()

Vector3 = Tuple[float, float, float]


def _unit(v: Vector3) -> Vector3:
    norm = math.sqrt(sum(c * c for c in v))
    if norm <= 1e-14 or not math.isfinite(norm):
        raise ValueError("vector must be finite and nonzero")
    return (v[0] / norm, v[1] / norm, v[2] / norm)


class RotationSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    axis: Vector3
    angle: float = 0.0

    @field_validator("axis")
    @classmethod
    def normalize_axis(cls, v: Vector3) -> Vector3:
        return _unit(v)


class FibrationSection(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    type: Literal["hopf", "pull_toward"]
    axis: Optional[Vector3] = None
    center: Optional[Vector3] = None
    lam: Optional[float] = Field(None, alias="lambda")
    rotation: Optional[RotationSection] = None
    handedness: Literal["right", "left"] = "right"

    @field_validator("axis", "center")
    @classmethod
    def normalize_vector(cls, v: Optional[Vector3]) -> Optional[Vector3]:
        return None if v is None else _unit(v)

    @field_validator("lam")
    @classmethod
    def check_lambda(cls, v: Optional[float], info: ValidationInfo) -> Optional[float]:
        if v is None:
            return v
        allow_large = bool((info.context or {}).get("allow_large_lambda", False))
        upper = 1.0 if allow_large else 0.5
        if not 0.0 <= v < upper:
            hint = "" if allow_large else " (use --allow-large-lambda for values in [0.5, 1))"
            raise ValueError(f"lambda must lie in [0, {upper:g}){hint}")
        return v

    @model_validator(mode="after")
    def check_type_fields(self) -> "FibrationSection":
        if self.type == "hopf":
            if self.axis is None:
                raise ValueError("hopf fibration needs 'axis'")
            if self.center is not None or self.lam is not None or self.rotation is not None:
                raise ValueError("hopf fibration takes only 'axis' and 'handedness'")
        else:
            if self.center is None or self.lam is None:
                raise ValueError("pull_toward fibration needs 'center' and 'lambda'")
            if self.axis is not None:
                raise ValueError("pull_toward fibration takes 'center', not 'axis'")
        return self


class ChartSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    epsilon: float = Field(DEFAULT_EPSILON, gt=0.0, le=1.0)
    fd_step: float = Field(DEFAULT_FD_STEP, gt=0.0, lt=0.01)


class RunSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    samples: int = Field(100, ge=1)
    seed: int = 0
    tolerance: float = Field(0.0, ge=0.0)


class SpecDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    fibration: FibrationSection
    chart: ChartSection = Field(default_factory=ChartSection)
    run: RunSection = Field(default_factory=RunSection)


@dataclass(frozen=True)
class LoadedSpec:
    spec: FibrationSpec
    chart: ChartSection
    run: RunSection
    source: str


def build_spec(section: FibrationSection) -> FibrationSpec:
    handedness = Handedness(section.handedness)
    if section.type == "hopf":
        assert section.axis is not None
        return FibrationSpec(Constant(ImaginaryUnit.of(section.axis)), handedness)
    assert section.center is not None and section.lam is not None
    rotation = None
    if section.rotation is not None and section.rotation.angle != 0.0:
        rotation = from_axis_angle(section.rotation.axis, section.rotation.angle)
    base_map = PullToward(ImaginaryUnit.of(section.center), section.lam, rotation)
    return FibrationSpec(base_map, handedness)


def parse_spec(
    data: dict, allow_large_lambda: bool = False, source: str = "<memory>"
) -> LoadedSpec:
    """Validate a decoded spec document and build the fibration it describes."""
    try:
        document = SpecDocument.model_validate(
            data, context={"allow_large_lambda": allow_large_lambda}
        )
    except ValidationError as exc:
        logger.error("Spec validation failed", source=source, error=str(exc))
        raise SpecFileError(f"{source}: {exc}") from exc

    try:
        spec = build_spec(document.fibration)
    except FibrationError as exc:
        raise SpecFileError(f"{source}: {exc}") from exc

    base_map = spec.base_map
    if isinstance(base_map, PullToward) and base_map.lam >= 0.5:
        lip = lipschitz_estimate(spec, grid_density=48)
        logger.warning("Large lambda admitted by override", lam=base_map.lam, lipschitz=lip)
        if lip >= 1.0:
            raise SpecFileError(
                f"{source}: lambda={base_map.lam} gives Lipschitz estimate {lip:.6f} >= 1"
            )
    logger.info("Spec loaded", source=source, type=document.fibration.type)
    return LoadedSpec(spec=spec, chart=document.chart, run=document.run, source=source)


def load_spec_file(path: Union[str, Path], allow_large_lambda: bool = False) -> LoadedSpec:
    """
    Load and validate a spec file.

    Args:
        path: TOML file
        allow_large_lambda: Admit lambda in [0.5, 1) subject to a numeric Lipschitz check

    Raises:
        SpecFileError: unreadable file, TOML syntax error or rejected contents
    """
    source = str(path)
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    except OSError as exc:
        logger.error("Cannot read spec file", source=source, error=str(exc))
        raise SpecFileError(f"{source}: {exc.strerror or exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        logger.error("Malformed spec file", source=source, error=str(exc))
        raise SpecFileError(f"{source}: {exc}") from exc
    return parse_spec(data, allow_large_lambda=allow_large_lambda, source=source)


def parse_vector(text: str, size: int) -> np.ndarray:
    """Comma-separated floats, as used by CLI options such as --pole."""
    try:
        values = [float(part) for part in text.split(",")]
    except ValueError as exc:
        raise SpecFileError(f"Cannot parse {text!r} as {size} comma-separated numbers") from exc
    if len(values) != size or not all(math.isfinite(v) for v in values):
        raise SpecFileError(f"Expected {size} finite comma-separated numbers, got {text!r}")
    return np.array(values)
