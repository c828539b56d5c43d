"""
==============================================================================
PRESETS - Ready-Made Maps, Tables and Cocycles
==============================================================================

    T0(z) = z²                       expanding, |T0'| ≡ 2
    T1(z) = -((z - 0.4)/(1 - 0.4z))²  attracting fixed point at z = -1,
                                     inf |T1'| = 6/7
    σ1    Bernoulli shift, ℙ(T0) = p
    σ2    rotation by α = 1/π, T0 on [0, 0.2), T1 on [0.2, 1)

The origin-fixing cocycle uses maps

    T_j(z) = ρ z ((z - r_j)/(1 - r_j z))^{(j+1)² - 1}

on a rotation driving with ℙ(symbol j) ∝ 1/j², j = 1 … J_max.
"""

from __future__ import annotations

from typing import Optional, Tuple

import numpy as np

from src.blaschke import BlaschkeProduct
from src.cocycle import DrivingSystem, MapTable
from src.domain.protocols import BOUNDARY_EPS, HypothesisViolated


DEFAULT_P = 0.2
DEFAULT_ALPHA = 1.0 / np.pi
DEFAULT_THRESHOLD = 0.2


def expanding_square() -> BlaschkeProduct:
    return BlaschkeProduct.power(2)


def attracting_square() -> BlaschkeProduct:
    return BlaschkeProduct.from_turns(0.5, [0.4, 0.4])


def mixed_cubic() -> BlaschkeProduct:
    """z (z - 0.5)/(1 - 0.5z)."""
    return BlaschkeProduct.from_turns(0.0, [0.0, 0.5])


def two_map_table() -> MapTable:
    return MapTable((expanding_square(), attracting_square()))


def sigma1(p: float = DEFAULT_P) -> DrivingSystem:
    return DrivingSystem.bernoulli([p, 1.0 - p])


def sigma2(alpha: float = DEFAULT_ALPHA, threshold: float = DEFAULT_THRESHOLD) -> DrivingSystem:
    return DrivingSystem.rotation(alpha, [threshold])


def constant_table(T: BlaschkeProduct) -> Tuple[MapTable, DrivingSystem]:
    """One-map table with the trivial Bernoulli driving."""
    return MapTable((T,)), DrivingSystem.bernoulli([1.0])


def rotation_table(turns=(0.1, 0.3)) -> MapTable:
    return MapTable(tuple(BlaschkeProduct.rotation_map(t) for t in turns))


# ==============================================================================
# ORIGIN-FIXING COCYCLE
# ==============================================================================

def minimal_zero_magnitude(c: float, j: int) -> float:
    """
    Smallest r for which the degree-(j+1)² map keeps inf|T'| ≤ c + 1.

    With one zero at 0 and the rest at r, inf|T'| = 1 + (j² + 2j)(1 - r)/(1 + r),
    attained at z = -1. Clipped at 0 when c ≥ j² + 2j.
    """
    m = j * j + 2 * j
    return max(0.0, (m - c) / (m + c))


def origin_inf_closed_form(j: int, r: float) -> float:
    return 1.0 + (j * j + 2 * j) * (1.0 - r) / (1.0 + r)


def origin_map(j: int, r: float, rho_turns: float = 0.0) -> BlaschkeProduct:
    """ρ z ((z - r)/(1 - r z))^{(j+1)² - 1}."""
    degree = (j + 1) ** 2
    if r == 0.0:
        return BlaschkeProduct.power(degree, rho_turns)
    return BlaschkeProduct.from_turns(rho_turns, [0.0, r], [1, degree - 1])


def origin_probabilities(j_max: int) -> np.ndarray:
    """6/(π² j²) for j = 1 … j_max, renormalized to sum 1."""
    j = np.arange(1, j_max + 1, dtype=float)
    weights = 6.0 / (np.pi ** 2 * j ** 2)
    return weights / weights.sum()


def origin_cocycle(
    c: float,
    j_max: int = 50,
    rho_turns: float = 0.0,
    alpha: float = DEFAULT_ALPHA,
    zero_magnitude: Optional[float] = None,
) -> Tuple[MapTable, DrivingSystem]:
    """
    Truncated origin-fixing cocycle: symbol j-1 carries origin_map(j, r_j).

    r_j is the minimal magnitude unless zero_magnitude overrides it for
    every j (it must then satisfy every precondition).

    Raises:
        HypothesisViolated: If c ≤ 0, j_max < 1 or an override is too small
    """
    if c <= 0.0:
        raise HypothesisViolated(f"c must be positive, got {c}")
    if j_max < 1:
        raise HypothesisViolated(f"J_max must be at least 1, got {j_max}")
    maps = []
    for j in range(1, j_max + 1):
        r_min = minimal_zero_magnitude(c, j)
        r = r_min if zero_magnitude is None else float(zero_magnitude)
        if r < r_min - 1e-12 or r >= 1.0 - BOUNDARY_EPS:
            raise HypothesisViolated(f"zero magnitude {r} outside [{r_min}, 1) for j={j}")
        maps.append(origin_map(j, r, rho_turns))
    cuts = np.cumsum(origin_probabilities(j_max))[:-1]
    return MapTable(tuple(maps)), DrivingSystem.rotation(alpha, cuts.tolist())
