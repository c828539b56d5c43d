"""
==============================================================================
CONFIGURATION MANAGEMENT - Numerical and Runtime Settings
==============================================================================

PURPOSE:
    Centralized configuration for grids, tolerances, iteration caps, sweep
    sizes and runtime options. Loaded from environment variables or a .env
    file; every value has a default that reproduces the reference experiments.

WHY PYDANTIC SETTINGS?
    - Type validation (GRID_SIZE=abc fails at startup, not mid-sweep)
    - Auto-conversion from environment strings
    - One object to pass around instead of scattered constants

CONFIGURATION SOURCES (Priority Order):
    1. Environment variables (highest priority)
       export GRID_SIZE=8192

    2. .env file
       N_STEPS=20000

    3. Default values in this file (lowest priority)

EXAMPLE .env FILE:
    ```
    # Quadrature
    GRID_SIZE=4096
    INF_GRID_SIZE=8192

    # Sweeps
    THETA_POINTS=128
    N_STEPS=10000
    WORKERS=8

    # Logging
    LOG_LEVEL=DEBUG
    ```

RELATED FILES:
    - src/domain/configuration.py - experiment (cocycle) JSON configs
    - src/cli.py - command-line overrides of these defaults
"""

from pathlib import Path
import multiprocessing as mp

from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


# ==============================================================================
# SETTINGS CLASS
# ==============================================================================

class Settings(BaseSettings):
    """
    Application settings loaded from environment variables.

    USAGE:
        >>> from config import settings
        >>> settings.grid_size
        4096
        >>> settings.worker_count >= 1
        True
    """

    # ==========================================================================
    # QUADRATURE AND GRIDS
    # ==========================================================================

    grid_size: int = 4096
    """
    Default number of nodes N of the uniform circle grid.

    Default: 4096

    The trapezoid rule on the circle converges geometrically for smooth
    periodic integrands; Poisson kernels with |x| <= 0.95 are resolved to
    1e-10 at this size. Poles closer to the circle need larger grids.
    """

    inf_grid_size: int = 8192
    """
    Grid used to locate the infimum of |T'| before local refinement.

    Default: 8192
    """

    lift_max_grid: int = 1 << 20
    """
    Upper cap for grid doubling during argument tracking of a lift.

    Default: 1048576
    """

    # ==========================================================================
    # TOLERANCES
    # ==========================================================================

    tol_root: float = 1e-10
    """Residual |T(z) - z| (or |T(w) - z|) accepted for a polished root."""

    tol_indiff: float = 1e-8
    """Distance of a multiplier modulus from 1 that counts as indifferent."""

    tol_fp: float = 1e-12
    """Successive-difference threshold of the backward iteration."""

    boundary_eps: float = 1e-9
    """A converged random fixed point must satisfy |x| < 1 - boundary_eps."""

    boundary_band: float = 1e-6
    """Iterates with |x| > 1 - boundary_band count towards boundary divergence."""

    boundary_streak: int = 50
    """
    Consecutive iterates inside the boundary band that declare
    BoundaryDivergence.

    Default: 50

    Slow interior convergence can touch the band briefly; genuine attraction
    to the circle stays there.
    """

    max_backward_steps: int = 10_000
    """Cap on backward compositions when solving for the random fixed point."""

    # ==========================================================================
    # ENTROPY ESTIMATION
    # ==========================================================================

    n_steps: int = 10_000
    """Orbit length of the Birkhoff estimator (after burn-in)."""

    burn_in: int = 1_000
    """Discarded orbit steps before averaging starts."""

    n_batches: int = 20
    """Number of batches for the batch-means standard error."""

    n_fibres: int = 200
    """Fibres averaged by the density-quadrature estimator."""

    theta_points: int = 128
    """
    Number of uniform points t in [0, 1) of a θ-sweep, θ = e^{2πit}.

    Default: 128
    """

    relative_error_target: float = 0.005
    """Largest relative error of the sweep mean accepted by `summary`."""

    # ==========================================================================
    # ADMISSIBILITY
    # ==========================================================================

    covering_max_n: int = 10_000
    """Cap on the composition length when measuring covering times."""

    origin_j_max: int = 50
    """Truncation level J_max of the origin-fixing cocycle."""

    # ==========================================================================
    # RUNTIME
    # ==========================================================================

    seed: int = 20240501
    """Master seed used when a command is not given --seed."""

    workers: int = 0
    """
    Worker processes for parallel sweeps.

    Default: 0 (use every CPU core)

    1 runs in-process, which is also what the tests use.
    """

    chunk_size: int = 4
    """θ-points handed to a worker at once."""

    log_level: str = "INFO"
    """Minimum loguru level of the stderr sink."""

    output_folder: Path = Path("./results")
    """Directory that relative --out paths are resolved against."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
    )

    @field_validator(
        "grid_size", "inf_grid_size", "lift_max_grid", "max_backward_steps",
        "n_steps", "n_batches", "n_fibres", "theta_points", "covering_max_n",
        "origin_j_max", "boundary_streak", "chunk_size",
    )
    @classmethod
    def _positive(cls, value: int) -> int:
        if value <= 0:
            raise ValueError("must be positive")
        return value

    @property
    def worker_count(self) -> int:
        """Resolved number of worker processes (0 means all cores)."""
        return self.workers if self.workers > 0 else mp.cpu_count()

    def ensure_directories(self) -> None:
        """Create the output folder if needed."""
        self.output_folder.mkdir(parents=True, exist_ok=True)


# ==============================================================================
# GLOBAL SETTINGS INSTANCE
# ==============================================================================

settings = Settings()
"""
Global settings instance.

Usage:
    >>> from config import settings
    >>> grid = CircleGrid(settings.grid_size)
"""
