"""
Tests for the domain value types, experiment configuration files and
runtime settings.
"""

import json
from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError

from config import Settings
from src.cocycle import DrivingKind
from src.domain.configuration import (
    CocycleConfig,
    DrivingSpec,
    MapSpec,
    load_configuration,
)
from src.domain.protocols import (
    BlaschkeError,
    ConfigurationError,
    DiscPoint,
    InvalidDiscPoint,
    NonConvergence,
    Result,
    UnitComplex,
)


CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


class TestDomainModels:
    """Value types shared by every module."""

    def test_result_success(self):
        result = Result.success(0.55)
        assert result.is_success
        assert result.unwrap() == 0.55
        assert result.unwrap_or(None) == 0.55

    def test_result_failure(self):
        result = Result.failure("boundary divergence")
        assert not result.is_success
        assert result.unwrap_or(-1.0) == -1.0
        with pytest.raises(ValueError, match="Result failed: boundary divergence"):
            result.unwrap()

    def test_unit_complex_is_normalized(self):
        assert UnitComplex(2j).value == 1j
        assert abs(UnitComplex(3 + 4j).value) == pytest.approx(1.0)
        assert UnitComplex.from_turns(0.75).turns == pytest.approx(0.75)
        assert UnitComplex.one().turns == 0.0

    def test_unit_complex_rejects_zero(self):
        with pytest.raises(InvalidDiscPoint):
            UnitComplex(0.0)

    def test_disc_point(self):
        assert DiscPoint(0.4).modulus == pytest.approx(0.4)
        assert DiscPoint.from_pair([0.1, -0.2]).value == complex(0.1, -0.2)
        with pytest.raises(InvalidDiscPoint):
            DiscPoint(1.0)
        with pytest.raises(InvalidDiscPoint):
            DiscPoint(complex(np.nan, 0.0))

    def test_error_hierarchy(self):
        assert issubclass(NonConvergence, BlaschkeError)
        assert issubclass(InvalidDiscPoint, ValueError)
        assert not issubclass(ConfigurationError, BlaschkeError)


class TestMapAndDrivingSpecs:
    """pydantic validation of the JSON schema pieces."""

    def test_map_builds(self):
        T = MapSpec(rotation_angle=0.5, zeros=[(0.4, 0.0)], multiplicities=[2]).build()
        assert T.degree == 2
        assert abs(T(-1.0) + 1.0) < 1e-14

    def test_zero_outside_disc(self):
        with pytest.raises(ValidationError, match="not inside the unit disc"):
            MapSpec(zeros=[(1.0, 0.0)])

    def test_multiplicity_mismatch(self):
        with pytest.raises(ValidationError, match="one entry per zero"):
            MapSpec(zeros=[(0.0, 0.0)], multiplicities=[1, 2])
        with pytest.raises(ValidationError, match="positive"):
            MapSpec(zeros=[(0.0, 0.0)], multiplicities=[0])

    def test_empty_zero_list(self):
        with pytest.raises(ValidationError):
            MapSpec(zeros=[])

    def test_driving_fields_for_kind(self):
        with pytest.raises(ValidationError, match="needs 'p'"):
            DrivingSpec(kind="bernoulli")
        with pytest.raises(ValidationError, match="needs 'alpha'"):
            DrivingSpec(kind="rotation", thresholds=[0.2])

    def test_rotation_alphabet(self):
        spec = DrivingSpec(kind="rotation", alpha=0.3, thresholds=[0.0, 0.2, 1.0])
        assert spec.alphabet_size == 2
        assert spec.build().kind is DrivingKind.ROTATION


class TestCocycleConfig:
    """Experiment files."""

    @pytest.mark.parametrize("name", sorted(p.name for p in CONFIG_DIR.glob("*.json")))
    def test_shipped_configs_load(self, name):
        config = CocycleConfig.from_file(CONFIG_DIR / name)
        table = config.build_table()
        assert len(table) == config.build_driving().alphabet_size

    def test_default_is_two_map_bernoulli(self):
        config = load_configuration()
        assert config.driving.p == [0.2, 0.8]
        assert config.build_table().degrees == [2, 2]

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError, match="not found"):
            CocycleConfig.from_file(tmp_path / "missing.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ConfigurationError, match="Invalid JSON"):
            CocycleConfig.from_file(path)

    def test_table_driving_mismatch(self, tmp_path):
        path = tmp_path / "mismatch.json"
        path.write_text(json.dumps({
            "maps": [{"zeros": [[0.0, 0.0]]}],
            "driving": {"kind": "bernoulli", "p": [0.5, 0.5]},
        }))
        with pytest.raises(ConfigurationError, match="2 symbols but 1 maps"):
            CocycleConfig.from_file(path)

    def test_hash_is_stable(self):
        a, b = load_configuration(), load_configuration()
        assert a.config_hash() == b.config_hash()
        assert len(a.config_hash()) == 16
        changed = a.model_copy(update={"theta_turns": 0.25})
        assert changed.config_hash() != a.config_hash()

    def test_seed_resolution(self):
        config = CocycleConfig.from_file(CONFIG_DIR / "rotations_only.json")
        assert config.resolved_seed() == 20240501
        assert config.resolved_seed(override=3) == 3
        assert load_configuration().resolved_seed(default=9) == 9

    def test_theta(self):
        config = load_configuration().model_copy(update={"theta_turns": 0.5})
        assert abs(config.theta.value + 1.0) < 1e-15


class TestSettings:
    """Environment-driven runtime settings."""

    def test_defaults(self):
        settings = Settings(_env_file=None)
        assert settings.grid_size == 4096
        assert settings.tol_fp == 1e-12
        assert settings.theta_points == 128
        assert settings.worker_count >= 1

    def test_environment_override(self, monkeypatch):
        monkeypatch.setenv("GRID_SIZE", "8192")
        monkeypatch.setenv("WORKERS", "3")
        settings = Settings(_env_file=None)
        assert settings.grid_size == 8192
        assert settings.worker_count == 3

    def test_positive_fields(self, monkeypatch):
        monkeypatch.setenv("N_STEPS", "0")
        with pytest.raises(ValidationError, match="must be positive"):
            Settings(_env_file=None)
