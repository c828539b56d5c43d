"""
Experiment configuration: JSON cocycle descriptions validated with pydantic,
plus the loguru sink setup shared by the CLI.

Schema:
    {
      "name": "two-map",                                   (optional)
      "maps": [{"rotation_angle": 0.5, "zeros": [[0.4, 0], [0.4, 0]],
                "multiplicities": [1, 1]}, ...],          (multiplicities optional)
      "driving": {"kind": "bernoulli", "p": [0.2, 0.8]}
              or {"kind": "rotation", "alpha": 0.318..., "thresholds": [0.2]},
      "theta_turns": 0.0,
      "seed": 20240501
    }
"""

from __future__ import annotations

import hashlib
import json
import sys
from pathlib import Path
from typing import List, Literal, Optional, Tuple

from loguru import logger
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from .protocols import BOUNDARY_EPS, ConfigurationError, UnitComplex


class MapSpec(BaseModel):
    """One Blaschke product: rotation angle in turns and zeros as [re, im] pairs."""

    name: Optional[str] = None
    rotation_angle: float = 0.0
    zeros: List[Tuple[float, float]] = Field(min_length=1)
    multiplicities: Optional[List[int]] = None

    @field_validator("zeros")
    @classmethod
    def zeros_inside_disc(cls, zeros):
        for re, im in zeros:
            if abs(complex(re, im)) >= 1.0 - BOUNDARY_EPS:
                raise ValueError(f"zero {re}+{im}i is not inside the unit disc")
        return zeros

    @model_validator(mode="after")
    def multiplicities_match(self) -> "MapSpec":
        if self.multiplicities is not None:
            if len(self.multiplicities) != len(self.zeros):
                raise ValueError("multiplicities must have one entry per zero")
            if any(m < 1 for m in self.multiplicities):
                raise ValueError("multiplicities must be positive")
        return self

    def build(self):
        from src.blaschke import BlaschkeProduct

        zeros = [complex(re, im) for re, im in self.zeros]
        return BlaschkeProduct.from_turns(self.rotation_angle, zeros, self.multiplicities)


class DrivingSpec(BaseModel):
    kind: Literal["bernoulli", "rotation"]
    p: Optional[List[float]] = None
    alpha: Optional[float] = None
    thresholds: Optional[List[float]] = None

    @model_validator(mode="after")
    def fields_for_kind(self) -> "DrivingSpec":
        if self.kind == "bernoulli" and not self.p:
            raise ValueError("bernoulli driving needs 'p'")
        if self.kind == "rotation" and self.alpha is None:
            raise ValueError("rotation driving needs 'alpha'")
        return self

    @property
    def alphabet_size(self) -> int:
        if self.kind == "bernoulli":
            return len(self.p)
        cuts = [c for c in (self.thresholds or []) if 0.0 < c < 1.0]
        return len(cuts) + 1

    def build(self):
        from src.cocycle import DrivingSystem

        if self.kind == "bernoulli":
            return DrivingSystem.bernoulli(self.p)
        return DrivingSystem.rotation(self.alpha, self.thresholds or [])


class CocycleConfig(BaseModel):
    """A complete experiment: map table, driving system, θ and seed."""

    name: Optional[str] = None
    maps: List[MapSpec] = Field(min_length=1)
    driving: DrivingSpec
    theta_turns: float = 0.0
    seed: Optional[int] = None

    @model_validator(mode="after")
    def table_matches_driving(self) -> "CocycleConfig":
        if len(self.maps) != self.driving.alphabet_size:
            raise ValueError(
                f"driving has {self.driving.alphabet_size} symbols but {len(self.maps)} maps are given"
            )
        return self

    @classmethod
    def from_file(cls, config_path: Path) -> "CocycleConfig":
        """
        Load and validate a JSON configuration.

        Raises:
            ConfigurationError: If the file is missing, not JSON or violates the schema
        """
        config_path = Path(config_path)
        if not config_path.exists():
            raise ConfigurationError(f"Configuration file not found: {config_path}")
        try:
            data = json.loads(config_path.read_text(encoding="utf-8"))
            return cls.model_validate(data)
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"Invalid JSON in {config_path}: {e}") from e
        except ValidationError as e:
            raise ConfigurationError(f"Invalid configuration {config_path}: {e}") from e

    def build_table(self):
        from src.cocycle import MapTable

        return MapTable(tuple(spec.build() for spec in self.maps))

    def build_driving(self):
        return self.driving.build()

    @property
    def theta(self) -> UnitComplex:
        return UnitComplex.from_turns(self.theta_turns)

    def resolved_seed(self, override: Optional[int] = None, default: int = 0) -> int:
        """CLI override, then the file's seed, then the default."""
        if override is not None:
            return override
        return self.seed if self.seed is not None else default

    def config_hash(self) -> str:
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def load_configuration(config_path: Optional[Path] = None) -> CocycleConfig:
    """Load a configuration file, or the two-map Bernoulli example when none is given."""
    if config_path is not None:
        return CocycleConfig.from_file(config_path)
    return CocycleConfig.model_validate({
        "name": "two-map-bernoulli",
        "maps": [
            {"name": "T0", "rotation_angle": 0.0, "zeros": [[0.0, 0.0]], "multiplicities": [2]},
            {"name": "T1", "rotation_angle": 0.5, "zeros": [[0.4, 0.0]], "multiplicities": [2]},
        ],
        "driving": {"kind": "bernoulli", "p": [0.2, 0.8]},
        "theta_turns": 0.0,
    })


def setup_logging(verbose: bool = False, level: str = "INFO") -> None:
    """Route loguru to stderr; stdout stays free for CSV and JSON."""
    logger.remove()
    if verbose:
        logger.add(
            sys.stderr,
            format="<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | "
                   "<cyan>{name}</cyan>:<cyan>{function}</cyan> - <level>{message}</level>",
            level="DEBUG",
        )
    else:
        logger.add(sys.stderr, format="<level>{level: <8}</level> | {message}", level=level.upper())
