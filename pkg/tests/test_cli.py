"""
End-to-end tests of the click commands. Results are written with --out so
stdout/stderr mixing in the runner does not matter.
"""

import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
from click.testing import CliRunner
from loguru import logger

from config import settings
from src.cli import cli
from src.domain.protocols import DegenerateClassification, RootSolveFailure


CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture
def runner():
    yield CliRunner()
    logger.remove()


@pytest.fixture
def squares_config(tmp_path):
    path = tmp_path / "squares.json"
    path.write_text(json.dumps({
        "name": "squares",
        "maps": [{"rotation_angle": 0.0, "zeros": [[0.0, 0.0]], "multiplicities": [2]}],
        "driving": {"kind": "bernoulli", "p": [1.0]},
        "seed": 1,
    }))
    return path


def read_csv(path: Path):
    lines = path.read_text().splitlines()
    return lines[0], pd.read_csv(path, comment="#")


class TestFigures:
    """CSV outputs of the figure commands."""

    def test_fig1(self, runner, tmp_path):
        out = tmp_path / "fig1.csv"
        result = runner.invoke(cli, ["fig1", "--out", str(out)])
        assert result.exit_code == 0, result.output
        header, frame = read_csv(out)
        assert header.startswith("# config_hash=")
        assert list(frame.columns) == ["t", "S"]
        assert len(frame) == 1024
        assert frame["S"].iloc[512] == pytest.approx(0.5, abs=1e-10)
        assert frame["S"].between(0.0, 1.0).all()

    def test_fig2_is_reproducible(self, runner, tmp_path):
        args = ["fig2", "--theta-points", "2", "--n-steps", "100", "--workers", "1", "--seed", "5"]
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        assert runner.invoke(cli, args + ["--out", str(first)]).exit_code == 0
        assert runner.invoke(cli, args + ["--out", str(second)]).exit_code == 0
        assert first.read_text() == second.read_text()
        _, frame = read_csv(first)
        assert list(frame.columns) == ["t", "h_fib_sigma1", "h_fib_sigma2", "analytic_fibre"]
        assert frame["analytic_fibre"].iloc[0] == pytest.approx(0.553664, abs=1e-6)

    def test_fig2_with_config(self, runner, tmp_path, squares_config):
        out = tmp_path / "fig2.csv"
        result = runner.invoke(cli, [
            "fig2", "--config", str(squares_config), "--theta-points", "3",
            "--n-steps", "100", "--workers", "1", "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        _, frame = read_csv(out)
        assert list(frame.columns) == ["t", "h_fib_sigma1", "analytic_fibre"]
        assert np.allclose(frame["h_fib_sigma1"], np.log(2.0))


class TestReports:
    """JSON reports and their exit codes."""

    def test_summary_passes_for_squares(self, runner, tmp_path, squares_config):
        out = tmp_path / "summary.json"
        result = runner.invoke(cli, [
            "summary", "--config", str(squares_config), "--theta-points", "2",
            "--n-steps", "100", "--workers", "1", "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        data = json.loads(out.read_text())
        assert data["passed"] is True
        assert data["sweep_mean"] == pytest.approx(np.log(2.0))

    def test_check_fails_for_rotations(self, runner, tmp_path):
        out = tmp_path / "check.json"
        result = runner.invoke(cli, [
            "check", "--config", str(CONFIG_DIR / "rotations_only.json"), "--out", str(out),
        ])
        assert result.exit_code == 1
        data = json.loads(out.read_text())
        assert data["passed"] is False
        admissibility = next(c for c in data["checks"] if c["name"] == "admissibility")
        assert admissibility["passed"] is False

    def test_check_flags_boundary_divergence(self, runner, tmp_path):
        out = tmp_path / "check.json"
        result = runner.invoke(cli, [
            "check", "--config", str(CONFIG_DIR / "constant_t1.json"), "--out", str(out),
        ])
        assert result.exit_code == 1
        data = json.loads(out.read_text())
        assert data["random_fixed_point"]["status"] == "BoundaryDivergence"

    @pytest.mark.slow
    def test_check_passes_for_two_map_cocycle(self, runner, tmp_path):
        out = tmp_path / "check.json"
        result = runner.invoke(cli, ["check", "--out", str(out)])
        assert result.exit_code == 0, result.output
        data = json.loads(out.read_text())
        assert data["admissibility"]["verdict"] == "AdmissibleEvidence"

    def test_fixed_point(self, runner, tmp_path, squares_config):
        out = tmp_path / "fp.json"
        result = runner.invoke(cli, [
            "fixed-point", "--config", str(squares_config), "--grid", "256", "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        data = json.loads(out.read_text())
        assert data["random_fixed_point"]["status"] == "Converged"
        assert data["convergence_curve"] == [[1, 0.0]]

    def test_fixed_point_reports_failed_classification(self, runner, tmp_path, squares_config, monkeypatch):
        def degenerate(*args, **kwargs):
            raise DegenerateClassification("Degree 2: 0 circle fixed points, 0 disc fixed points")

        monkeypatch.setattr("src.cli.classify_fixed_points", degenerate)
        out = tmp_path / "fp.json"
        result = runner.invoke(cli, [
            "fixed-point", "--config", str(squares_config), "--grid", "256", "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        entry = json.loads(out.read_text())["classifications"][0]
        assert entry["case"] is None
        assert entry["error"].startswith("DegenerateClassification")

    def test_classification_uses_settings(self, runner, tmp_path, squares_config, monkeypatch):
        seen = {}

        def record(T, tol_indiff, tol_root, N):
            seen.update(tol_indiff=tol_indiff, tol_root=tol_root, N=N)
            raise RootSolveFailure("recorded")

        monkeypatch.setattr("src.cli.classify_fixed_points", record)
        monkeypatch.setattr(settings, "tol_indiff", 1e-6)
        monkeypatch.setattr(settings, "tol_root", 1e-9)
        runner.invoke(cli, ["fixed-point", "--config", str(squares_config), "--out", str(tmp_path / "fp.json")])
        assert seen == {"tol_indiff": 1e-6, "tol_root": 1e-9, "N": settings.grid_size}

    def test_relative_out_goes_to_output_folder(self, runner, tmp_path, monkeypatch):
        monkeypatch.setattr(settings, "output_folder", tmp_path / "results")
        result = runner.invoke(cli, ["fig1", "--points", "8", "--out", "fig1.csv"])
        assert result.exit_code == 0, result.output
        assert (tmp_path / "results" / "fig1.csv").exists()

    def test_entropy(self, runner, tmp_path, squares_config):
        out = tmp_path / "entropy.json"
        result = runner.invoke(cli, [
            "entropy", "--config", str(squares_config), "--n-steps", "200",
            "--n-fibres", "5", "--grid", "512", "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        data = json.loads(out.read_text())
        assert data["fibre_orbit"]["value"] == pytest.approx(np.log(2.0))
        assert data["fibre_quadrature"]["value"] == pytest.approx(np.log(2.0), abs=1e-10)
        assert data["total"] == pytest.approx(np.log(2.0))

    def test_covering_squares(self, runner, tmp_path, squares_config):
        out = tmp_path / "covering.json"
        result = runner.invoke(cli, [
            "covering", "--config", str(squares_config), "--arc-length", "0.1",
            "--max-n", "50", "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        data = json.loads(out.read_text())
        assert data["runs"][0]["n"] == 4
        assert data["all_finite"] is True

    def test_covering_rotations_exit_one(self, runner, tmp_path):
        out = tmp_path / "covering.json"
        result = runner.invoke(cli, [
            "covering", "--config", str(CONFIG_DIR / "rotations_only.json"),
            "--arc-length", "0.5", "--max-n", "20", "--out", str(out),
        ])
        assert result.exit_code == 1
        assert json.loads(out.read_text())["runs"][0]["n"] is None

    def test_origin_example(self, runner, tmp_path):
        out = tmp_path / "origin.json"
        result = runner.invoke(cli, ["origin-example", "--j-max", "5", "--out", str(out)])
        assert result.exit_code == 0, result.output
        data = json.loads(out.read_text())
        assert data["passed"] is True
        assert data["degree"] == 25
        assert data["inf_deriv"] == pytest.approx(4.0, abs=1e-9)

    def test_origin_example_rejects_small_magnitude(self, runner):
        result = runner.invoke(cli, ["origin-example", "--zero-magnitude", str(5 / 11), "--j-max", "5"])
        assert result.exit_code == 1


class TestErrors:
    """Bad input is reported, not raised."""

    def test_missing_config(self, runner, tmp_path):
        result = runner.invoke(cli, ["check", "--config", str(tmp_path / "nope.json")])
        assert result.exit_code == 2

    def test_invalid_config(self, runner, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        result = runner.invoke(cli, ["entropy", "--config", str(bad)])
        assert result.exit_code == 1

    def test_version(self, runner):
        result = runner.invoke(cli, ["--version"])
        assert result.exit_code == 0
        assert "1.0.0" in result.output
