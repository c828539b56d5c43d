"""
Blaschke Entropy - random dynamics of finite Blaschke products.

Layers:
- Domain layer: value types, errors, experiment configuration
- Numerics: Blaschke products, circle lifts and quadrature
- Dynamics: cocycles, random fixed points and densities, entropy,
  admissibility diagnostics
"""

__version__ = "1.0.0"
__description__ = "Invariant densities and entropy of random Blaschke product cocycles"

from .domain import (
    UnitComplex,
    DiscPoint,
    Result,
    CocycleConfig,
    load_configuration,
)

from .blaschke import BlaschkeProduct, classify_fixed_points
from .cocycle import DrivingSystem, MapTable, CocyclePath, sample_path
from .random_acim import random_fixed_point, transfer_apply
from .entropy import fibre_entropy_orbit, fibre_entropy_quadrature, theta_sweep
from .admissibility import check_admissible, covering_time

__all__ = [
    # Domain
    "UnitComplex",
    "DiscPoint",
    "Result",
    "CocycleConfig",
    "load_configuration",

    # Numerics
    "BlaschkeProduct",
    "classify_fixed_points",

    # Dynamics
    "DrivingSystem",
    "MapTable",
    "CocyclePath",
    "sample_path",
    "random_fixed_point",
    "transfer_apply",
    "fibre_entropy_orbit",
    "fibre_entropy_quadrature",
    "theta_sweep",
    "check_admissible",
    "covering_time",
]
