"""End-to-end tests of the command-line drivers."""

import json

import pytest
from click.testing import CliRunner

from great_circle_contact import cli
from great_circle_contact.cli import main, parse_family
from great_circle_contact.errors import NonContractionError
from great_circle_contact.sampling import s3_points
from great_circle_contact.verify import HopfConstant, LinearTilt
from tests.conftest import HOPF_TOML, PULL_TOWARD_TOML

LARGE_LAMBDA_TOML = """
[fibration]
type = "pull_toward"
center = [0.0, 0.0, 1.0]
lambda = 0.6
"""


@pytest.fixture
def runner():
    return CliRunner()


def invoke_json(runner, args):
    result = runner.invoke(main, [*args, "--json"])
    return result, json.loads(result.stdout)


def test_validate_hopf(runner, write_spec):
    result, report = invoke_json(runner, ["validate", str(write_spec(HOPF_TOML)), "--samples", "10"])
    assert result.exit_code == 0
    assert report["command"] == "validate"
    assert report["passed"] is True
    assert report["min_margin"] == pytest.approx(4.0, abs=1e-6)
    assert report["lipschitz"] == 0.0


def test_validate_pull_toward_text(runner, write_spec):
    result = runner.invoke(main, ["validate", str(write_spec(PULL_TOWARD_TOML))])
    assert result.exit_code == 0
    assert "passed: true" in result.stdout.splitlines()
    assert "samples: 20" in result.stdout.splitlines()


def test_validate_tolerance_can_fail(runner, write_spec):
    result = runner.invoke(main, ["validate", str(write_spec(HOPF_TOML)), "--samples", "4", "--tol", "5"])
    assert result.exit_code == 1
    assert "passed: false" in result.stdout


def test_validate_rejects_large_lambda(runner, write_spec):
    path = str(write_spec(LARGE_LAMBDA_TOML))
    assert runner.invoke(main, ["validate", path]).exit_code == 2
    assert runner.invoke(main, ["validate", path, "--allow-large-lambda"]).exit_code == 2


def test_validate_missing_file(runner, tmp_path):
    result = runner.invoke(main, ["validate", str(tmp_path / "absent.toml")])
    assert result.exit_code == 2
    assert "error:" in result.stderr


def test_contact_hopf(runner, write_spec):
    result, report = invoke_json(runner, ["contact", str(write_spec(HOPF_TOML)), "--samples", "100"])
    assert result.exit_code == 0
    assert report["max_coefficient"] == pytest.approx(-2.0, abs=1e-9)
    assert report["min_coefficient"] == pytest.approx(-2.0, abs=1e-9)
    assert report["max_numeric_gap"] <= 1e-6
    assert report["max_reduced_gap"] <= 1e-6


def test_contact_pull_toward(runner, write_spec):
    result, report = invoke_json(runner, ["contact", str(write_spec(PULL_TOWARD_TOML)), "--samples", "10"])
    assert result.exit_code == 0
    assert report["passed"] is True
    assert report["max_coefficient"] < 0.0


def test_deform_fixed_fibre(runner, write_spec):
    result, report = invoke_json(
        runner,
        ["deform", str(write_spec(PULL_TOWARD_TOML)), "--steps", "4", "--samples", "4", "--fix-fibre", "1,0,0,0"],
    )
    assert result.exit_code == 0
    assert report["command"] == "deform"
    assert report["max_drift"] <= 1e-8
    assert report["target"] == pytest.approx([0.0, 0.0, 1.0], abs=1e-12)
    assert len(report["path"]) == 5


def test_deform_default_target(runner, write_spec):
    result, report = invoke_json(
        runner, ["deform", str(write_spec(PULL_TOWARD_TOML)), "--steps", "2", "--samples", "2"]
    )
    assert result.exit_code == 0
    assert report["target"][2] > 0.99
    assert report["fixed_point"] is None


def test_deform_target_outside_cap(runner, write_spec):
    result = runner.invoke(
        main, ["deform", str(write_spec(PULL_TOWARD_TOML)), "--steps", "2", "--target", "0,0,-1"]
    )
    assert result.exit_code == 4


def test_deform_bad_vector(runner, write_spec):
    result = runner.invoke(main, ["deform", str(write_spec(PULL_TOWARD_TOML)), "--target", "0,1"])
    assert result.exit_code == 2


def test_plot_csv(runner, write_spec, tmp_path):
    out = tmp_path / "hopf.csv"
    result = runner.invoke(main, ["plot", str(write_spec(HOPF_TOML)), "--out", str(out)])
    assert result.exit_code == 0
    assert len(out.read_text().splitlines()) == 6145
    assert "rows: 6144" in result.stdout


def test_plot_svg_with_pole(runner, write_spec, tmp_path):
    out = tmp_path / "hopf.svg"
    result = runner.invoke(
        main,
        [
            "plot", str(write_spec(HOPF_TOML)), "--format", "svg", "--out", str(out),
            "--fibres", "4", "--points-per-fibre", "16", "--pole=0,1,0,0",
        ],
    )
    assert result.exit_code == 0
    assert out.exists()


def test_plot_unwritable(runner, write_spec, tmp_path):
    result = runner.invoke(
        main, ["plot", str(write_spec(HOPF_TOML)), "--out", str(tmp_path / "no" / "such.csv")]
    )
    assert result.exit_code == 5


@pytest.mark.parametrize(
    "family, verdict, code",
    [
        ("hopf", "agree-accept", 0),
        ("linear-tilt:1", "agree-accept", 0),
        ("linear-tilt:3,0,0,0", "agree-reject", 0),
        ("linear-tilt:2", "inconclusive", 6),
    ],
)
def test_oracle_families(runner, family, verdict, code):
    result, report = invoke_json(runner, ["oracle", "--family", family])
    assert result.exit_code == code
    assert report["verdict"] == verdict


def test_oracle_spec_file(runner, write_spec):
    result, report = invoke_json(
        runner, ["oracle", str(write_spec(PULL_TOWARD_TOML)), "--samples", "150", "--point", "0.6,0,0.8,0"]
    )
    assert result.exit_code == 0
    assert report["verdict"] == "agree-accept"


def test_oracle_usage_errors(runner, write_spec):
    assert runner.invoke(main, ["oracle"]).exit_code == 2
    assert runner.invoke(main, ["oracle", "--family", "spiral"]).exit_code == 2
    both = runner.invoke(main, ["oracle", str(write_spec(HOPF_TOML)), "--family", "hopf"])
    assert both.exit_code == 2


def test_parse_family():
    assert parse_family("hopf") == HopfConstant()
    assert parse_family("linear-tilt:0.5,1") == LinearTilt(0.5, 1.0, 0.0, 0.0)


def test_sweep(runner):
    result, report = invoke_json(runner, ["sweep", "--count", "5000", "--seed", "1"])
    assert result.exit_code == 0
    assert report["command"] == "sweep"
    assert report["m_criterion_disagreements"] == 0
    assert report["sigma_disagreements"] == 0


def test_log_options_accepted(runner, write_spec):
    result = runner.invoke(
        main,
        ["--log-level", "debug", "--log-format", "json", "validate", str(write_spec(HOPF_TOML)), "--samples", "2"],
    )
    assert result.exit_code == 0
    assert "passed: true" in result.stdout


def test_validate_solver_failure_names_point(runner, write_spec, monkeypatch):
    def no_convergence(chart, fd_step):
        raise NonContractionError("Fixed-point iteration did not converge", residual=1e-3, iterations=200)

    monkeypatch.setattr(cli, "firing_jacobian", no_convergence)
    result = runner.invoke(
        main, ["validate", str(write_spec(PULL_TOWARD_TOML)), "--samples", "3", "--seed", "4"]
    )
    assert result.exit_code == 3
    first = ", ".join("%.12g" % v for v in s3_points(3, 4)[0])
    assert f"at point ({first})" in result.stderr


def test_contact_solver_failure_names_point(runner, write_spec, monkeypatch):
    def no_convergence(chart, fd_step, check=True):
        raise NonContractionError("Fixed-point iteration did not converge", residual=1e-3, iterations=200)

    monkeypatch.setattr(cli, "contact_coefficient_numeric", no_convergence)
    result = runner.invoke(main, ["contact", str(write_spec(HOPF_TOML)), "--samples", "2"])
    assert result.exit_code == 3
    assert "did not converge at point (" in result.stderr
