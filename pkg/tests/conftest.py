"""Shared fixtures: example fibrations, seeded generators and spec files on disk."""

import math
from pathlib import Path

import numpy as np
import pytest
import structlog
from hypothesis import strategies as st

from great_circle_contact.fibration import FibrationSpec, Handedness, PullToward, right_hopf
from great_circle_contact.quat import K, ImaginaryUnit, UnitQuaternion

CONFIG_DIR = Path(__file__).resolve().parents[1] / "config"

SQRT_HALF = math.sqrt(0.5)
DIAGONAL = UnitQuaternion(SQRT_HALF, SQRT_HALF, 0.0, 0.0)  # (1 + i) / sqrt(2)

HOPF_TOML = """
[fibration]
type = "hopf"
axis = [0.0, 0.0, 1.0]
"""

PULL_TOWARD_TOML = """
[fibration]
type = "pull_toward"
center = [0.0, 0.0, 1.0]
lambda = 0.3

[run]
samples = 20
"""


def pull_toward(lam: float, handedness: Handedness = Handedness.RIGHT) -> FibrationSpec:
    return FibrationSpec(PullToward(K, lam), handedness)


@pytest.fixture
def hopf() -> FibrationSpec:
    return right_hopf()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def write_spec(tmp_path):
    """Write TOML text to a file under tmp_path and return its path."""

    def _write(text: str, name: str = "spec.toml") -> Path:
        path = tmp_path / name
        path.write_text(text)
        return path

    return _write


def random_units(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    v = rng.normal(size=(count, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


unit_vectors = (
    st.lists(st.floats(-1.0, 1.0, allow_nan=False), min_size=3, max_size=3)
    .filter(lambda v: math.sqrt(sum(c * c for c in v)) > 0.1)
    .map(ImaginaryUnit.of)
)

unit_quaternions = (
    st.lists(st.floats(-1.0, 1.0, allow_nan=False), min_size=4, max_size=4)
    .filter(lambda v: math.sqrt(sum(c * c for c in v)) > 0.1)
    .map(UnitQuaternion.from_array)
)


@pytest.fixture(autouse=True)
def reset_logging():
    yield
    structlog.reset_defaults()
