"""
Report models for the command drivers and a plain-text renderer.

Every report is a pydantic model; `--json` output is model_dump_json() and
the text form prints one `key: value` line per field in declaration order.
"""

from typing import Any, List, Literal, Optional

from pydantic import BaseModel, Field

TIGHTNESS_NOTE = (
    "Tightness is not machine-checked; contactness at every sampled step of the "
    "deformation path stands in for the stability hypothesis."
)


# --- validate / contact ---
class ValidationReport(BaseModel):
    command: Literal["validate"] = "validate"
    handedness: str
    samples: int
    seed: int
    tolerance: float
    lipschitz: float
    min_margin: float
    min_factor1: float
    min_factor2: float
    min_delta: float
    worst_point: List[float] = Field(description="S^3 point (w, x, y, z) with the smallest margin")
    passed: bool


class ContactReport(BaseModel):
    command: Literal["contact"] = "contact"
    handedness: str
    samples: int
    seed: int
    max_coefficient: float = Field(description="Least negative analytic coefficient")
    min_coefficient: float
    min_abs_coefficient: float
    max_numeric_gap: float = Field(description="max |full numeric - analytic|")
    max_reduced_gap: float = Field(description="max |reduced numeric - analytic|")
    max_abs_alpha_t_derivative: float
    cross_check_tol: float
    passed: bool


# --- deformation ---
class PathStep(BaseModel):
    t: float
    lipschitz: float
    min_margin: float
    min_factor1: float
    min_factor2: float
    max_coefficient: float
    fibre_drift: Optional[float] = None


class PathReport(BaseModel):
    command: Literal["deform"] = "deform"
    target: List[float]
    fixed_point: Optional[List[float]] = None
    steps: int
    fibre_samples: int
    seed: int
    max_lipschitz: float
    min_margin: float
    max_coefficient: float
    max_drift: Optional[float] = None
    endpoint_spread: float = Field(description="Largest distance of the t=1 image from the target")
    contact: bool
    passed: bool
    findings: List[str] = Field(default_factory=list)
    note: str = TIGHTNESS_NOTE
    path: List[PathStep] = Field(default_factory=list)


# --- oracles ---
class RegionScan(BaseModel):
    radius: float
    min_theta: float
    min_ratio: float
    colliding: bool


class OracleReport(BaseModel):
    command: Literal["oracle"] = "oracle"
    family: str
    margin: float
    factor1: float
    factor2: float
    accepted_by_margin: bool
    samples: int
    min_theta: float
    witness: List[List[float]] = Field(description="Chart points of the closest pair of circles")
    accepted_by_scan: bool
    verdict: Literal["agree-accept", "agree-reject", "disagree", "inconclusive"]
    regions: List[RegionScan] = Field(default_factory=list)


class SweepReport(BaseModel):
    command: Literal["sweep"] = "sweep"
    count: int
    seed: int
    accepted: int
    min_prop2: float
    min_delta_excess: float = Field(description="min of delta - (factor1 + factor2 + 1) over accepted")
    m_criterion_samples: int
    m_criterion_disagreements: int
    sigma_disagreements: int
    both_factors_negative: int
    passed: bool


class PlotReport(BaseModel):
    command: Literal["plot"] = "plot"
    out: str
    format: Literal["csv", "svg"]
    fibres: int
    points_per_fibre: int
    rows: int
    max_closure_gap: float
    perturbed: int = Field(0, description="Base points moved off the projection pole")


def _format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "%.12g" % value
    if value is None:
        return "none"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_format_value(v) for v in value) + "]"
    return str(value)


def _lines(model: BaseModel, prefix: str = "") -> List[str]:
    lines = []
    for name in type(model).model_fields:
        value = getattr(model, name)
        key = f"{prefix}{name}"
        if isinstance(value, list) and value and isinstance(value[0], BaseModel):
            for i, item in enumerate(value):
                lines.extend(_lines(item, prefix=f"{key}[{i}]."))
        else:
            lines.append(f"{key}: {_format_value(value)}")
    return lines


def render_text(report: BaseModel) -> str:
    """One `key: value` line per field, nested list items as key[i].field."""
    return "\n".join(_lines(report)) + "\n"


def render_json(report: BaseModel) -> str:
    return report.model_dump_json(indent=2) + "\n"


REPORT_MODELS = (
    ValidationReport,
    ContactReport,
    PathReport,
    OracleReport,
    SweepReport,
    PlotReport,
)
