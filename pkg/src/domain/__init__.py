"""
Domain layer: value types, the Result container, the exception hierarchy
and experiment configuration.
"""

from .protocols import (
    # Value types
    UnitComplex,
    DiscPoint,
    Result,
    BOUNDARY_EPS,

    # Protocols
    CircleMap,

    # Exceptions
    BlaschkeError,
    InvalidDiscPoint,
    PoleHit,
    RootSolveFailure,
    DegenerateClassification,
    GridTooCoarse,
    WindingMismatch,
    BranchMiss,
    NotCovered,
    HypothesisViolated,
    NonConvergence,
    ConfigurationError,
)

from .configuration import (
    MapSpec,
    DrivingSpec,
    CocycleConfig,
    load_configuration,
    setup_logging,
)

__all__ = [
    # Value types
    "UnitComplex",
    "DiscPoint",
    "Result",
    "BOUNDARY_EPS",

    # Protocols
    "CircleMap",

    # Exceptions
    "BlaschkeError",
    "InvalidDiscPoint",
    "PoleHit",
    "RootSolveFailure",
    "DegenerateClassification",
    "GridTooCoarse",
    "WindingMismatch",
    "BranchMiss",
    "NotCovered",
    "HypothesisViolated",
    "NonConvergence",
    "ConfigurationError",

    # Configuration
    "MapSpec",
    "DrivingSpec",
    "CocycleConfig",
    "load_configuration",
    "setup_logging",
]
