"""
==============================================================================
DOMAIN PROTOCOLS - Value Types, Contracts and Errors
==============================================================================

PURPOSE:
    Define the small vocabulary every numerical module shares: points on the
    unit circle, points in the open unit disc, the circle-map contract, a
    Result container for per-point failures, and the exception hierarchy.

WHY A SEPARATE LAYER?
    - blaschke.py, circle_numerics.py, cocycle.py ... all speak about the
      same two kinds of complex numbers (|z| = 1 and |x| < 1)
    - Validation happens once, at construction, instead of in every function
    - Errors are typed, so callers (CLI, sweeps) can decide what is fatal

ARCHITECTURE:
    ┌─────────────────────────────────────────────────────────────┐
    │                      Domain Layer                            │
    │                                                              │
    │  UnitComplex   DiscPoint   CircleMap   Result[T]   Errors    │
    └─────────────────────────────────────────────────────────────┘
                  ↑            ↑            ↑
         blaschke.py   circle_numerics.py   cocycle.py ...

KEY CONCEPTS:
    1. **UnitComplex**: renormalized onto the circle on construction
    2. **DiscPoint**: rejected when it is closer than BOUNDARY_EPS to the circle
    3. **CircleMap**: what the lift and quadrature code need from a map
    4. **Result**: success value OR error message, never both
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from typing import Generic, Optional, Protocol, TypeVar, runtime_checkable

import numpy as np


T = TypeVar("T")

BOUNDARY_EPS = 1e-9
"""Minimum distance from the unit circle for any DiscPoint."""


# ==============================================================================
# VALUE TYPES
# ==============================================================================

@dataclass(frozen=True)
class UnitComplex:
    """
    A point on the unit circle 𝕋.

    The stored value is renormalized on construction, so |value| = 1 to
    machine precision.

    Example:
        >>> UnitComplex(2j).value
        1j
        >>> UnitComplex.from_turns(0.5).value
        (-1+1.2246467991473532e-16j)
    """

    value: complex

    def __post_init__(self) -> None:
        v = complex(self.value)
        r = abs(v)
        if r == 0.0 or not np.isfinite(r):
            raise InvalidDiscPoint(f"Cannot place {v!r} on the unit circle")
        object.__setattr__(self, "value", v / r)

    @classmethod
    def from_turns(cls, t: float) -> "UnitComplex":
        """Point e^{2πit}."""
        return cls(cmath.exp(2j * cmath.pi * t))

    @classmethod
    def one(cls) -> "UnitComplex":
        return cls(1.0 + 0.0j)

    @property
    def turns(self) -> float:
        """Circle coordinate in [0, 1)."""
        t = cmath.phase(self.value) / (2 * cmath.pi)
        return t % 1.0

    def __complex__(self) -> complex:
        return self.value

    def to_dict(self) -> dict:
        return {"re": self.value.real, "im": self.value.imag}


@dataclass(frozen=True)
class DiscPoint:
    """
    A point of the open unit disc D, kept at least BOUNDARY_EPS away from 𝕋.

    Zeros of Blaschke factors, Poisson poles and random fixed points are all
    DiscPoints. Poisson formulas degenerate at the circle, so construction
    refuses points that are numerically on it.

    Example:
        >>> DiscPoint(0.4).value
        (0.4+0j)
        >>> DiscPoint(1.0)
        Traceback (most recent call last):
        ...
        src.domain.protocols.InvalidDiscPoint: ...
    """

    value: complex

    def __post_init__(self) -> None:
        v = complex(self.value)
        if not (np.isfinite(v.real) and np.isfinite(v.imag)):
            raise InvalidDiscPoint(f"Non-finite disc point {v!r}")
        if abs(v) >= 1.0 - BOUNDARY_EPS:
            raise InvalidDiscPoint(
                f"|{v}| = {abs(v):.12g} is not inside the disc (limit 1 - {BOUNDARY_EPS:g})"
            )
        object.__setattr__(self, "value", v)

    @classmethod
    def from_pair(cls, pair) -> "DiscPoint":
        """Build from a JSON-style [re, im] pair."""
        re, im = pair
        return cls(complex(float(re), float(im)))

    @property
    def modulus(self) -> float:
        return abs(self.value)

    def __complex__(self) -> complex:
        return self.value

    def to_dict(self) -> dict:
        return {"re": self.value.real, "im": self.value.imag}


# ==============================================================================
# RESULT TYPE
# ==============================================================================

@dataclass
class Result(Generic[T]):
    """
    Success value OR error message, used where a failure must be recorded
    instead of raised (one θ-point of a sweep, one seed of a batch).

    Example:
        >>> Result.success(0.55).unwrap()
        0.55
        >>> Result.failure("boundary divergence").unwrap_or(None) is None
        True
    """

    value: Optional[T] = None
    error: Optional[str] = None
    is_success: bool = True

    @classmethod
    def success(cls, value: T) -> "Result[T]":
        return cls(value=value, is_success=True)

    @classmethod
    def failure(cls, error: str) -> "Result[T]":
        return cls(error=error, is_success=False)

    def unwrap(self) -> T:
        """
        Get the value or raise if this is a failure.

        Raises:
            ValueError: If result is a failure
        """
        if not self.is_success:
            raise ValueError(f"Result failed: {self.error}")
        return self.value

    def unwrap_or(self, default: T) -> T:
        return self.value if self.is_success else default


# ==============================================================================
# PROTOCOLS
# ==============================================================================

@runtime_checkable
class CircleMap(Protocol):
    """
    Contract for a degree-n orientation-preserving circle map given by a
    holomorphic function on a neighbourhood of 𝕋.

    BlaschkeProduct is the only implementation; the lift, the preimage solver
    and the quadrature helpers depend on this protocol only.
    """

    @property
    def degree(self) -> int:
        ...

    def __call__(self, z):
        ...

    def deriv_modulus(self, z):
        ...


# ==============================================================================
# CUSTOM EXCEPTIONS
# ==============================================================================

class BlaschkeError(Exception):
    """
    Base exception for all numerical failures in this package.

    Example:
        >>> raise BlaschkeError("something went wrong on the circle")
    """
    pass


class InvalidDiscPoint(BlaschkeError, ValueError):
    """
    Raised when a value cannot be a DiscPoint / UnitComplex.

    Example:
        >>> raise InvalidDiscPoint("|a| = 1 is a boundary zero")
    """
    pass


class PoleHit(BlaschkeError):
    """
    Raised when a Blaschke product is evaluated at (or numerically at) a pole
    1/ā of one of its factors.

    Example:
        >>> raise PoleHit("|1 - conj(a) z| < 1e-14 at z=2.5")
    """
    pass


class RootSolveFailure(BlaschkeError):
    """
    Raised when a claimed fixed point does not satisfy |T(z) - z| < tol_root.

    Example:
        >>> raise RootSolveFailure("residual 3e-7 at z=0.99+0.1j")
    """
    pass


class DegenerateClassification(BlaschkeError):
    """
    Raised when fixed-point counts match none of the three cases.

    Example:
        >>> raise DegenerateClassification("2 circle points, no disc point, degree 3")
    """
    pass


class GridTooCoarse(BlaschkeError):
    """
    Raised when a circle grid has fewer than 8 nodes.

    Example:
        >>> raise GridTooCoarse("N=4 < 8")
    """
    pass


class WindingMismatch(BlaschkeError):
    """
    Raised when argument tracking cannot reproduce the degree even at the
    largest allowed grid.

    Example:
        >>> raise WindingMismatch("tracked winding 1 != degree 2 at N=1048576")
    """
    pass


class BranchMiss(BlaschkeError):
    """
    Raised when branch inversion finds fewer than n distinct preimages.

    Example:
        >>> raise BranchMiss("found 1 of 2 preimages of z=-1")
    """
    pass


class NotCovered(BlaschkeError):
    """
    Raised when an arc image never reaches full measure within the cap.

    Example:
        >>> raise NotCovered(10000)
    """

    def __init__(self, max_n: int, message: Optional[str] = None):
        self.max_n = max_n
        super().__init__(message or f"Arc not covered within {max_n} steps")


class HypothesisViolated(BlaschkeError):
    """
    Raised when inputs to the origin-fixing example break its preconditions.

    Example:
        >>> raise HypothesisViolated("zero magnitude 0.4 below 7/9")
    """
    pass


class NonConvergence(BlaschkeError):
    """
    Raised when a computation needs a converged random fixed point and the
    backward iteration did not converge.

    Example:
        >>> raise NonConvergence("BoundaryDivergence after 140 steps")
    """
    pass


class ConfigurationError(Exception):
    """
    Raised when a settings value or an experiment config file is invalid.

    Example:
        >>> raise ConfigurationError("thresholds must be strictly increasing")
    """
    pass
