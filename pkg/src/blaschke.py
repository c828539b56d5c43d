"""
==============================================================================
BLASCHKE PRODUCTS - Evaluation, Derivatives, Fixed Points, Poisson Kernels
==============================================================================

PURPOSE:
    Exact arithmetic for a single finite Blaschke product

        T(z) = θ₀ ∏ (z - a_i) / (1 - ā_i z),   θ₀ ∈ 𝕋, a_i ∈ D

    and for the Poisson kernel P_x(z) = (1 - |x|²) / |z - x|², the density of
    the invariant measures that appear everywhere downstream.

KEY FORMULAS:
    On the circle:   |T'(z)| = Σ (1 - |a_i|²) / |z - a_i|²
    Log-derivative:  g(z) = T'/T = Σ (1 - |a_i|²) / ((z - a_i)(1 - ā_i z))
    Second derivative: T'' = T (g² + g')
    Pushforward:     ∫ f∘T · P_x dm = ∫ f · P_{T(x)} dm

REPEATED ZEROS:
    Zeros are stored in order, but evaluation groups equal zeros and raises
    each factor to its multiplicity. Maps of degree (j+1)² with two distinct
    zeros cost the same as degree 2.

RELATED FILES:
    - src/circle_numerics.py - grids, quadrature and lifts used here
    - src/cocycle.py - tables and compositions of these maps
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from scipy.optimize import brentq

from src.circle_numerics import (
    TWO_PI,
    CircleGrid,
    build_lift,
    circle_coordinate,
    circle_points,
    quadrature,
)
from src.domain.protocols import (
    DegenerateClassification,
    DiscPoint,
    PoleHit,
    RootSolveFailure,
    UnitComplex,
)


EPS_POLE = 1e-14
CIRCLE_BAND = 1e-6
NEWTON_STEPS = 50
DENJOY_WOLFF_STEPS = 200
BRENT_XTOL = 1e-15

ComplexLike = Union[complex, float, np.ndarray]


def _as_disc_point(a) -> DiscPoint:
    if isinstance(a, DiscPoint):
        return a
    if isinstance(a, (list, tuple)):
        return DiscPoint.from_pair(a)
    return DiscPoint(complex(a))


# ==============================================================================
# BLASCHKE PRODUCT
# ==============================================================================

@dataclass(frozen=True)
class BlaschkeProduct:
    """
    Finite Blaschke product θ₀ ∏ (z - a_i)/(1 - ā_i z).

    Immutable and hashable; lifts are cached per product.

    Example:
        >>> T1 = BlaschkeProduct.from_turns(0.5, [0.4, 0.4])
        >>> T1(-1.0)
        (-1+0j)
        >>> round(T1.deriv_modulus(-1.0), 12)
        0.857142857143
    """

    rotation: UnitComplex
    zeros: Tuple[DiscPoint, ...]
    _unique: np.ndarray = field(init=False, repr=False, compare=False)
    _mult: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        zeros = tuple(_as_disc_point(a) for a in self.zeros)
        if not zeros:
            raise ValueError("A Blaschke product needs at least one zero")
        rotation = self.rotation if isinstance(self.rotation, UnitComplex) else UnitComplex(self.rotation)
        object.__setattr__(self, "zeros", zeros)
        object.__setattr__(self, "rotation", rotation)

        values = np.array([a.value for a in zeros], dtype=complex)
        unique, counts = np.unique(values, return_counts=True)
        object.__setattr__(self, "_unique", unique)
        object.__setattr__(self, "_mult", counts.astype(np.int64))

    # --------------------------------------------------------------------------
    # constructors
    # --------------------------------------------------------------------------

    @classmethod
    def from_turns(
        cls,
        angle_turns: float,
        zeros: Iterable,
        multiplicities: Optional[Sequence[int]] = None,
    ) -> "BlaschkeProduct":
        """Build from a rotation angle in turns and zeros (optionally repeated)."""
        zeros = list(zeros)
        if multiplicities is not None:
            if len(multiplicities) != len(zeros):
                raise ValueError("multiplicities must match zeros")
            zeros = [a for a, m in zip(zeros, multiplicities) for _ in range(int(m))]
        return cls(UnitComplex.from_turns(angle_turns), tuple(zeros))

    @classmethod
    def power(cls, n: int, angle_turns: float = 0.0) -> "BlaschkeProduct":
        """θ₀ zⁿ."""
        return cls.from_turns(angle_turns, [0.0] * n)

    @classmethod
    def rotation_map(cls, angle_turns: float) -> "BlaschkeProduct":
        """z ↦ θ₀ z."""
        return cls.power(1, angle_turns)

    # --------------------------------------------------------------------------
    # basic properties
    # --------------------------------------------------------------------------

    @property
    def degree(self) -> int:
        return len(self.zeros)

    @property
    def theta0(self) -> complex:
        return self.rotation.value

    def rotated(self, theta: Union[UnitComplex, complex]) -> "BlaschkeProduct":
        """θ·T; zeros unchanged."""
        theta = complex(theta)
        return BlaschkeProduct(UnitComplex(self.theta0 * theta), self.zeros)

    def to_dict(self) -> dict:
        values, counts = self._unique, self._mult
        return {
            "rotation_angle": self.rotation.turns,
            "zeros": [[v.real, v.imag] for v in values],
            "multiplicities": [int(m) for m in counts],
            "degree": self.degree,
        }

    # --------------------------------------------------------------------------
    # evaluation
    # --------------------------------------------------------------------------

    def _check_poles(self, den: np.ndarray) -> None:
        if np.any(np.abs(den) < EPS_POLE):
            raise PoleHit(f"Evaluation within {EPS_POLE:g} of a pole 1/conj(a)")

    def __call__(self, z: ComplexLike) -> ComplexLike:
        if np.ndim(z) == 0:
            return self._eval_scalar(complex(z))
        z = np.asarray(z, dtype=complex)
        num = z[..., None] - self._unique
        den = 1.0 - np.conj(self._unique) * z[..., None]
        self._check_poles(den)
        return self.theta0 * np.prod((num / den) ** self._mult, axis=-1)

    def _eval_scalar(self, z: complex) -> complex:
        value = self.theta0
        for a, m in zip(self._unique.tolist(), self._mult.tolist()):
            den = 1.0 - a.conjugate() * z
            if abs(den) < EPS_POLE:
                raise PoleHit(f"z={z} is within {EPS_POLE:g} of the pole of the factor at a={a}")
            factor = (z - a) / den
            value *= factor if m == 1 else factor ** m
        return value

    def deriv_modulus(self, z: ComplexLike) -> ComplexLike:
        """|T'(z)| for z on the circle: Σ (1-|a|²)/|z-a|²."""
        weights = self._mult * (1.0 - np.abs(self._unique) ** 2)
        if np.ndim(z) == 0:
            z = complex(z)
            return float(sum(
                w / abs(z - a) ** 2 for a, w in zip(self._unique.tolist(), weights.tolist())
            ))
        z = np.asarray(z, dtype=complex)
        return np.sum(weights / np.abs(z[..., None] - self._unique) ** 2, axis=-1)

    def log_derivative(self, z: ComplexLike) -> ComplexLike:
        """g(z) = T'(z)/T(z); singular at the zeros."""
        z = np.asarray(z, dtype=complex)
        a = self._unique
        weights = self._mult * (1.0 - np.abs(a) ** 2)
        terms = weights / ((z[..., None] - a) * (1.0 - np.conj(a) * z[..., None]))
        result = terms.sum(axis=-1)
        return complex(result) if result.ndim == 0 else result

    def derivative(self, z: ComplexLike) -> ComplexLike:
        """
        Complex derivative T'(z) by the product rule.

        Division-free in the zeros, so it is valid at z = a_i (needed for
        the multiplier of a disc fixed point that is also a zero).
        """
        scalar = np.ndim(z) == 0
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        a = self._unique
        m = self._mult
        den = 1.0 - np.conj(a) * z[..., None]
        self._check_poles(den)
        base = (z[..., None] - a) / den
        d_base = (1.0 - np.abs(a) ** 2) / den ** 2
        powered = base ** m
        d_powered = m * base ** (m - 1) * d_base

        ones = np.ones(z.shape + (1,), dtype=complex)
        prefix = np.concatenate([ones, np.cumprod(powered, axis=-1)[..., :-1]], axis=-1)
        suffix = np.concatenate(
            [np.cumprod(powered[..., ::-1], axis=-1)[..., ::-1][..., 1:], ones], axis=-1
        )
        result = self.theta0 * np.sum(prefix * d_powered * suffix, axis=-1)
        return complex(result[0]) if scalar else result

    def second_derivative(self, z: ComplexLike) -> ComplexLike:
        """T''(z) = T (g² + g') away from the zeros (in particular on 𝕋)."""
        z_arr = np.asarray(z, dtype=complex)
        a = self._unique
        weights = self._mult * (1.0 - np.abs(a) ** 2)
        zz = z_arr[..., None]
        q = (zz - a) * (1.0 - np.conj(a) * zz)
        g = np.sum(weights / q, axis=-1)
        dq = 1.0 - 2.0 * np.conj(a) * zz + np.abs(a) ** 2
        g_prime = -np.sum(weights * dq / q ** 2, axis=-1)
        result = np.asarray(self(z_arr)) * (g ** 2 + g_prime)
        return complex(result) if np.ndim(result) == 0 else result


def mobius(x: Union[DiscPoint, complex]) -> BlaschkeProduct:
    """φ_x(z) = (z + x)/(1 + x̄ z), the disc automorphism sending 0 to x."""
    x = complex(x)
    return BlaschkeProduct(UnitComplex.one(), (DiscPoint(-x),))


def eval(T: BlaschkeProduct, z: ComplexLike) -> ComplexLike:  # noqa: A001
    """Functional form of T(z)."""
    return T(z)


def deriv_modulus_on_circle(T: BlaschkeProduct, z: Union[UnitComplex, complex]) -> float:
    """|T'(z)| for z ∈ 𝕋."""
    return T.deriv_modulus(complex(z))


# ==============================================================================
# FIXED POINT CLASSIFICATION
# ==============================================================================

class FixedPointCase(str, Enum):
    ALL_ON_CIRCLE = "AllOnCircle"
    ATTRACTOR_IN_DISC = "AttractorInDisc"
    INDIFFERENT_ON_CIRCLE = "IndifferentOnCircle"


@dataclass(frozen=True)
class FixedPointClassification:
    """Fixed points of T on 𝕋 ∪ D, bucketed into the three possible cases."""

    case: FixedPointCase
    circle_fixed_points: Tuple[Tuple[UnitComplex, float], ...]
    disc_fixed_point: Optional[DiscPoint] = None
    disc_multiplier: Optional[float] = None

    @property
    def attracting_circle_point(self) -> Optional[UnitComplex]:
        attracting = [z for z, mult in self.circle_fixed_points if mult < 1.0]
        return attracting[0] if len(attracting) == 1 else None

    def to_dict(self) -> dict:
        return {
            "case": self.case.value,
            "circle_fixed_points": [
                {"point": z.to_dict(), "multiplier": mult} for z, mult in self.circle_fixed_points
            ],
            "disc_fixed_point": self.disc_fixed_point.to_dict() if self.disc_fixed_point else None,
            "disc_multiplier": self.disc_multiplier,
        }


def _newton_polish(T: BlaschkeProduct, z: complex) -> complex:
    for _ in range(NEWTON_STEPS):
        try:
            slope = T.derivative(z) - 1.0
            residual = T(z) - z
        except (PoleHit, FloatingPointError):
            return z
        if abs(slope) < 1e-300:
            return z
        step = residual / slope
        z = z - step
        if abs(step) <= 1e-16 * max(1.0, abs(z)):
            break
    return z


def _dedupe(points: list[complex], tol: float) -> list[complex]:
    kept: list[complex] = []
    for z in points:
        if all(abs(z - w) > tol for w in kept):
            kept.append(z)
    return kept


def _disc_fixed_point(T: BlaschkeProduct, tol_root: float) -> Optional[complex]:
    """
    The fixed point of T inside D, if there is one.

    Forward iterates of 0 converge to it whenever it exists (Denjoy-Wolff);
    Newton finishes slow contractions and elliptic degree-1 maps.
    """
    z = 0j
    for _ in range(DENJOY_WOLFF_STEPS):
        image = complex(T(z))
        if abs(image) > 1.0 - CIRCLE_BAND:
            return None
        if abs(image - z) <= 1e-15:
            z = image
            break
        z = image
    z = _newton_polish(T, z)
    if not np.isfinite(z) or abs(z) > 1.0 - CIRCLE_BAND:
        return None
    if abs(T(z) - z) > tol_root:
        return None
    return z


def _circle_fixed_turns(T: BlaschkeProduct, N: int, tol_root: float) -> list[float]:
    """
    Circle coordinates t with S̃(t) - t ∈ ℤ.

    Transversal solutions are bracketed cell by cell on the lift table and
    refined with Brent's method. Tangential ones sit where |T'| crosses 1
    and S̃(t) - t touches an integer.
    """
    lift = build_lift(T, N)
    size = lift.size
    t_nodes = np.arange(size + 1, dtype=float) / size
    slope_excess = np.asarray(T.deriv_modulus(circle_points(t_nodes)), dtype=float) - 1.0
    if T.degree == 1 and np.all(np.abs(slope_excess) < 1e-12):
        return []

    def excess(t: float, level: float) -> float:
        return lift(t) - t - level

    gap = lift.nodes - t_nodes
    low = np.minimum(gap[:-1], gap[1:])
    high = np.maximum(gap[:-1], gap[1:])
    first, last = np.floor(low) + 1.0, np.floor(high)

    turns: list[float] = []
    for j in np.flatnonzero(last >= first):
        for level in np.arange(first[j], last[j] + 1.0):
            turns.append(brentq(excess, t_nodes[j], t_nodes[j + 1], args=(level,), xtol=BRENT_XTOL))

    def unit_slope(t: float) -> float:
        return float(T.deriv_modulus(complex(circle_points(t)))) - 1.0

    for j in np.flatnonzero(slope_excess[:-1] * slope_excess[1:] < 0.0):
        t_star = brentq(unit_slope, t_nodes[j], t_nodes[j + 1], xtol=BRENT_XTOL)
        value = lift(t_star) - t_star
        if abs(value - np.round(value)) <= tol_root / TWO_PI:
            turns.append(t_star)
    return [float(np.mod(t, 1.0)) for t in turns]


def classify_fixed_points(
    T: BlaschkeProduct,
    tol_indiff: float = 1e-8,
    tol_root: float = 1e-10,
    N: int = 4096,
) -> FixedPointClassification:
    """
    Solve T(z) = z on 𝕋 ∪ D and report which case applies.

    Cases for degree n ≥ 2:
        AllOnCircle:       n+1 circle fixed points, exactly one attracting
        AttractorInDisc:   one attracting disc point, n-1 expanding circle points
        IndifferentOnCircle: a circle multiplier within tol_indiff of 1

    Circle points come from the lift on an N-node table, the disc point from
    the forward orbit of 0. Degree 1 is classified with the same buckets as
    diagnostics only; an elliptic disc point (multiplier ≈ 1) reports
    IndifferentOnCircle.

    Raises:
        RootSolveFailure: If a fixed point fails |T(z) - z| ≤ tol_root
        DegenerateClassification: If the counts fit no case (degree ≥ 2)
    """
    circle: list[complex] = []
    for t in _circle_fixed_turns(T, N, tol_root):
        z = complex(circle_points(t))
        residual = abs(T(z) - z)
        if residual > tol_root:
            raise RootSolveFailure(f"|T(z) - z| = {residual:.3e} at claimed fixed point {z}")
        circle.append(z)
    located = _disc_fixed_point(T, tol_root)
    disc = [] if located is None else [located]

    circle = _dedupe(circle, 1e-7)
    circle.sort(key=lambda w: float(circle_coordinate(w)))
    fixed = tuple((UnitComplex(z), float(T.deriv_modulus(z))) for z in circle)
    multipliers = [mult for _, mult in fixed]

    disc_point = DiscPoint(disc[0]) if len(disc) == 1 else None
    disc_multiplier = float(abs(T.derivative(disc[0]))) if len(disc) == 1 else None

    def result(case: FixedPointCase) -> FixedPointClassification:
        return FixedPointClassification(case, fixed, disc_point, disc_multiplier)

    n = T.degree
    if any(abs(mult - 1.0) < tol_indiff for mult in multipliers):
        return result(FixedPointCase.INDIFFERENT_ON_CIRCLE)

    if n == 1:
        if disc_point is not None and disc_multiplier < 1.0 - tol_indiff:
            return result(FixedPointCase.ATTRACTOR_IN_DISC)
        if len(fixed) == 2:
            return result(FixedPointCase.ALL_ON_CIRCLE)
        logger.debug(f"Degree-1 map classified as indifferent: {len(circle)} circle, {len(disc)} disc points")
        return result(FixedPointCase.INDIFFERENT_ON_CIRCLE)

    if (
        disc_point is not None
        and disc_multiplier < 1.0
        and len(fixed) == n - 1
        and all(mult > 1.0 for mult in multipliers)
    ):
        return result(FixedPointCase.ATTRACTOR_IN_DISC)

    if not disc and len(fixed) == n + 1 and sum(mult < 1.0 for mult in multipliers) == 1:
        return result(FixedPointCase.ALL_ON_CIRCLE)

    raise DegenerateClassification(
        f"Degree {n}: {len(fixed)} circle fixed points, {len(disc)} disc fixed points "
        f"(multipliers {multipliers})"
    )


# ==============================================================================
# POISSON KERNEL
# ==============================================================================

def poisson_density(x: Union[DiscPoint, complex], z: ComplexLike) -> ComplexLike:
    """P_x(z) = (1 - |x|²)/|z - x|²."""
    x = complex(x)
    if np.ndim(z) == 0:
        return (1.0 - abs(x) ** 2) / abs(complex(z) - x) ** 2
    z = np.asarray(z, dtype=complex)
    return (1.0 - abs(x) ** 2) / np.abs(z - x) ** 2


@dataclass(frozen=True)
class PoissonKernel:
    """Density of harmonic measure at the pole x; μ_x = P_x dm."""

    pole: DiscPoint

    def __call__(self, z: ComplexLike) -> ComplexLike:
        return poisson_density(self.pole, z)

    @property
    def sup_norm(self) -> float:
        r = self.pole.modulus
        return (1.0 + r) / (1.0 - r)

    def mass(self, grid: CircleGrid) -> float:
        return float(quadrature(self(grid.z)))


def poisson_supnorm_diff_bound(x: Union[DiscPoint, complex], y: Union[DiscPoint, complex]) -> float:
    """12|x - y| / ((1 - |x|)² (1 - |y|)²)."""
    x, y = complex(x), complex(y)
    return 12.0 * abs(x - y) / ((1.0 - abs(x)) ** 2 * (1.0 - abs(y)) ** 2)


def poisson_grid_sup_diff(x, y, grid: CircleGrid) -> float:
    """Grid maximum of |P_x - P_y|."""
    return float(np.max(np.abs(poisson_density(x, grid.z) - poisson_density(y, grid.z))))


def harmonic_extension(values, x: Union[DiscPoint, complex]) -> complex:
    """
    Harmonic extension of grid samples to the disc point x.

    Raises:
        GridTooCoarse: If fewer than 8 samples are given
    """
    values = np.asarray(values)
    grid = CircleGrid(values.shape[-1])
    return complex(quadrature(values * poisson_density(x, grid.z)))


def pushforward_identity_residual(
    T: BlaschkeProduct,
    x: Union[DiscPoint, complex],
    k_max: int = 8,
    N: int = 2048,
) -> float:
    """max_{k ≤ k_max} |∫ T(z)^k P_x dm - T(x)^k|."""
    grid = CircleGrid(N)
    image = np.asarray(T(grid.z))
    density = poisson_density(x, grid.z)
    tx = complex(T(complex(x)))
    residual = 0.0
    for k in range(k_max + 1):
        integral = complex(quadrature(image ** k * density))
        residual = max(residual, abs(integral - tx ** k))
    return residual


def mobius_transport_check(x: Union[DiscPoint, complex], N: int = 4096, k_max: int = 4) -> float:
    """
    max over monomials zᵏ and z̄ᵏ (k ≤ k_max) of |∫ f dμ_x - ∫ f∘φ_x dm|.
    """
    grid = CircleGrid(N)
    density = poisson_density(x, grid.z)
    moved = np.asarray(mobius(x)(grid.z))
    residual = 0.0
    for k in range(k_max + 1):
        for f_z, f_moved in ((grid.z ** k, moved ** k), (np.conj(grid.z) ** k, np.conj(moved) ** k)):
            lhs = complex(quadrature(f_z * density))
            rhs = complex(quadrature(f_moved))
            residual = max(residual, abs(lhs - rhs))
    return residual
