"""Tests for spec-file parsing."""

import math

import numpy as np
import pytest

from great_circle_contact.errors import SpecFileError
from great_circle_contact.fibration import Constant, Handedness, PullToward
from great_circle_contact.specfile import load_spec_file, parse_spec, parse_vector
from tests.conftest import CONFIG_DIR, HOPF_TOML, PULL_TOWARD_TOML


def test_load_hopf(write_spec):
    loaded = load_spec_file(write_spec(HOPF_TOML))
    assert isinstance(loaded.spec.base_map, Constant)
    assert loaded.spec.handedness is Handedness.RIGHT
    assert loaded.chart.epsilon == 0.04
    assert loaded.chart.fd_step == 1e-4
    assert loaded.run.samples == 100
    assert loaded.run.seed == 0


def test_load_pull_toward(write_spec):
    loaded = load_spec_file(write_spec(PULL_TOWARD_TOML))
    assert isinstance(loaded.spec.base_map, PullToward)
    assert loaded.spec.base_map.lam == 0.3
    assert loaded.run.samples == 20


def test_vectors_are_normalized():
    loaded = parse_spec(
        {"fibration": {"type": "pull_toward", "center": [0.0, 0.0, 2.0], "lambda": 0.2,
                       "rotation": {"axis": [0.0, 3.0, 0.0], "angle": 0.4}}}
    )
    np.testing.assert_allclose(loaded.spec.base_map.center.vector, [0.0, 0.0, 1.0])
    assert loaded.spec.base_map.rotation is not None
    assert loaded.spec.base_map.rotation.w == pytest.approx(math.cos(0.2))


@pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.toml")))
def test_example_configs(path):
    if path.stem == "large_lambda":
        with pytest.raises(SpecFileError):
            load_spec_file(path, allow_large_lambda=True)
    else:
        load_spec_file(path)


@pytest.mark.parametrize(
    "document",
    [
        {"fibration": {"type": "hopf", "axis": [0, 0, 1]}, "extra": {}},
        {"fibration": {"type": "hopf", "axis": [0, 0, 1], "colour": "red"}},
        {"fibration": {"type": "hopf"}},
        {"fibration": {"type": "hopf", "axis": [0, 0, 1], "lambda": 0.2}},
        {"fibration": {"type": "hopf", "axis": [0, 0, 0]}},
        {"fibration": {"type": "pull_toward", "center": [0, 0, 1]}},
        {"fibration": {"type": "pull_toward", "center": [0, 0, 1], "lambda": -0.1}},
        {"fibration": {"type": "pull_toward", "center": [0, 0, 1], "lambda": 0.5}},
        {"fibration": {"type": "pull_toward", "center": [0, 0, 1], "lambda": 0.2, "axis": [1, 0, 0]}},
        {"fibration": {"type": "twisted", "axis": [0, 0, 1]}},
        {"fibration": {"type": "hopf", "axis": [0, 0, 1], "handedness": "up"}},
        {"fibration": {"type": "hopf", "axis": [0, 0, 1]}, "chart": {"epsilon": 1.5}},
        {"fibration": {"type": "hopf", "axis": [0, 0, 1]}, "chart": {"fd_step": 0.5}},
        {"fibration": {"type": "hopf", "axis": [0, 0, 1]}, "run": {"samples": 0}},
        {},
    ],
)
def test_rejected_documents(document):
    with pytest.raises(SpecFileError) as info:
        parse_spec(document)
    assert info.value.exit_code == 2


def test_large_lambda_override_still_checks_lipschitz():
    document = {"fibration": {"type": "pull_toward", "center": [0, 0, 1], "lambda": 0.7}}
    with pytest.raises(SpecFileError, match="lambda"):
        parse_spec(document)
    with pytest.raises(SpecFileError, match="Lipschitz"):
        parse_spec(document, allow_large_lambda=True)


def test_missing_file(tmp_path):
    with pytest.raises(SpecFileError) as info:
        load_spec_file(tmp_path / "absent.toml")
    assert info.value.exit_code == 2


def test_malformed_toml(write_spec):
    with pytest.raises(SpecFileError):
        load_spec_file(write_spec("[fibration\ntype = "))


def test_parse_vector():
    np.testing.assert_array_equal(parse_vector("-1,0,0,0", 4), [-1.0, 0.0, 0.0, 0.0])
    with pytest.raises(SpecFileError):
        parse_vector("1,2", 3)
    with pytest.raises(SpecFileError):
        parse_vector("a,b,c", 3)
    with pytest.raises(SpecFileError):
        parse_vector("1,inf,0", 3)
