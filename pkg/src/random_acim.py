"""
==============================================================================
RANDOM ACIM - Random Fixed Points, Densities and Transfer Operators
==============================================================================

PURPOSE:
    For an admissible cocycle the backward compositions

        x_n = T^{(n)}_{σ^{-n}ω}(z) = θT_{s_{-1}} ∘ … ∘ θT_{s_{-n}}(z)

    converge to a random fixed point x_ω ∈ D that does not depend on z, and
    the unique random absolutely continuous invariant measure has density
    h_ω = P_{x_ω}. This module computes x_ω, the densities, the transfer
    operator 𝓛_T f(z) = Σ_{T(w)=z} f(w)/|T'(w)|, and the residuals that check

        𝓛_{T_{s_0}} h_ω = h_{σω}
        𝓛^{(n)}_{σ^{-n}ω} 1 = P_{x_n}        (closed form, no discretized 𝓛)

STATUS VALUES:
    Converged            |x_n - x_{n-1}| < tol_fp with |x_n| < 1 - boundary_eps
    BoundaryDivergence   iterates stay within boundary_band of 𝕋 for
                         boundary_streak consecutive steps
    MaxIterations        neither happened within max_n steps
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
from loguru import logger

from src.blaschke import BlaschkeProduct, poisson_density
from src.circle_numerics import CircleGrid, GridFunction, build_lift, preimage_array, quadrature
from src.cocycle import CocyclePath, backward_iterates
from src.domain.protocols import DiscPoint, NonConvergence


INITIAL_BLOCK = 64


class FixedPointStatus(str, Enum):
    CONVERGED = "Converged"
    BOUNDARY_DIVERGENCE = "BoundaryDivergence"
    MAX_ITERATIONS = "MaxIterations"


@dataclass
class RandomFixedPointResult:
    """Outcome of the backward iteration on one fibre."""

    status: FixedPointStatus
    x_omega: Optional[DiscPoint]
    iterates: np.ndarray
    fitted_rate: Optional[float]
    n_used: int

    @property
    def converged(self) -> bool:
        return self.status is FixedPointStatus.CONVERGED

    def require(self) -> DiscPoint:
        """x_ω, or NonConvergence."""
        if not self.converged:
            raise NonConvergence(f"{self.status.value} after {self.n_used} backward steps")
        return self.x_omega

    def to_dict(self) -> dict:
        last = complex(self.iterates[self.n_used - 1]) if self.n_used else None
        return {
            "status": self.status.value,
            "x_omega": self.x_omega.to_dict() if self.x_omega else None,
            "fitted_rate": self.fitted_rate,
            "n_used": self.n_used,
            "last_iterate": {"re": last.real, "im": last.imag} if last is not None else None,
        }


@dataclass(frozen=True)
class RandomDensity:
    """h_ω = P_{x_ω}."""

    pole: DiscPoint

    def __call__(self, z):
        return poisson_density(self.pole, z)

    def mass(self, grid: CircleGrid) -> float:
        return float(quadrature(self(grid.z)))


@dataclass(frozen=True)
class InitialDensity:
    """
    Starting density h_* of the convergence experiment.

    h_* = 1 is the Poisson kernel at 0, so both choices are poles.
    """

    pole: complex = 0.0

    @classmethod
    def one(cls) -> "InitialDensity":
        return cls(0.0)

    @classmethod
    def poisson_at(cls, z: Union[DiscPoint, complex]) -> "InitialDensity":
        return cls(complex(z))


# ==============================================================================
# RANDOM FIXED POINT
# ==============================================================================

def fit_geometric_rate(differences: np.ndarray) -> Optional[float]:
    """
    ρ̂ = exp(slope) of a least-squares line through log differences over
    the last half of the sequence; None if it cannot be fitted or ρ̂ ≥ 1.
    """
    d = np.asarray(differences, dtype=float)
    n = np.arange(1, d.size + 1, dtype=float)
    half = d.size // 2
    d, n = d[half:], n[half:]
    keep = d > 0.0
    if keep.sum() < 3:
        return None
    slope = np.polyfit(n[keep], np.log(d[keep]), 1)[0]
    rate = float(np.exp(slope))
    return rate if 0.0 < rate < 1.0 else None


def random_fixed_point(
    path: CocyclePath,
    tol_fp: float = 1e-12,
    max_n: int = 10_000,
    z: complex = 0.0,
    boundary_eps: float = 1e-9,
    boundary_band: float = 1e-6,
    boundary_streak: int = 50,
) -> RandomFixedPointResult:
    """
    Backward iteration x_n = T^{(n)}_{σ^{-n}ω}(z) until it settles.

    Iterates are produced in blocks whose length doubles up to max_n.

    Example:
        >>> result = random_fixed_point(path_of_squares)
        >>> result.status, result.x_omega.value, result.n_used
        (<FixedPointStatus.CONVERGED: 'Converged'>, 0j, 1)
    """
    if path.available_back < max_n:
        raise ValueError(f"Path has {path.available_back} backward symbols, max_n={max_n} requested")

    block = min(INITIAL_BLOCK, max_n)
    while True:
        iterates = backward_iterates(path, block, z)
        sequence = np.concatenate([[complex(z)], iterates])
        differences = np.abs(np.diff(sequence))
        near_boundary = np.abs(iterates) > 1.0 - boundary_band

        streak = 0
        for n in range(1, block + 1):
            streak = streak + 1 if near_boundary[n - 1] else 0
            if streak >= boundary_streak:
                logger.debug(f"Boundary divergence after {n} steps (|x_n| = {abs(iterates[n - 1]):.12f})")
                return RandomFixedPointResult(
                    FixedPointStatus.BOUNDARY_DIVERGENCE, None, iterates[:n], None, n
                )
            if differences[n - 1] < tol_fp:
                x = iterates[n - 1]
                if abs(x) >= 1.0 - boundary_eps:
                    return RandomFixedPointResult(
                        FixedPointStatus.BOUNDARY_DIVERGENCE, None, iterates[:n], None, n
                    )
                return RandomFixedPointResult(
                    FixedPointStatus.CONVERGED,
                    DiscPoint(complex(x)),
                    iterates[:n],
                    fit_geometric_rate(differences[:n]),
                    n,
                )

        if block >= max_n:
            logger.warning(f"Backward iteration did not settle within {max_n} steps")
            return RandomFixedPointResult(
                FixedPointStatus.MAX_ITERATIONS, None, iterates, fit_geometric_rate(differences), block
            )
        block = min(2 * block, max_n)


def random_density(path: CocyclePath, **kwargs) -> RandomDensity:
    return RandomDensity(random_fixed_point(path, **kwargs).require())


# ==============================================================================
# TRANSFER OPERATOR
# ==============================================================================

def transfer_apply(
    T: BlaschkeProduct,
    f: Union[GridFunction, Callable],
    grid: Optional[CircleGrid] = None,
    tol_root: float = 1e-10,
) -> GridFunction:
    """
    (𝓛_T f)(z_j) = Σ_{T(w)=z_j} f(w)/|T'(w)| on the grid.

    f may be a GridFunction (evaluated off-grid by spectral interpolation)
    or any vectorized callable on circle points.

    Raises:
        BranchMiss: If a grid point does not get n preimages
    """
    if grid is None:
        if not isinstance(f, GridFunction):
            raise ValueError("A grid is required when f is a callable")
        grid = f.grid
    lift = build_lift(T, max(grid.size, 1024))
    w = preimage_array(lift, grid.z, tol_root=tol_root)
    values = np.asarray(f(w.ravel())).reshape(w.shape)
    weights = 1.0 / np.asarray(T.deriv_modulus(w))
    return GridFunction((values * weights).sum(axis=1), grid)


def duality_residual(
    T: BlaschkeProduct,
    f: Callable,
    g: Callable,
    grid: CircleGrid,
) -> float:
    """|∫ f · g∘T dm - ∫ g · 𝓛f dm|."""
    lhs = quadrature(np.asarray(f(grid.z)) * np.asarray(g(T(grid.z))))
    rhs = quadrature(np.asarray(g(grid.z)) * transfer_apply(T, f, grid).values)
    return float(abs(lhs - rhs))


def pullback_of_one(path: CocyclePath, n: int, grid: CircleGrid, tol_root: float = 1e-10) -> GridFunction:
    """𝓛^{(n)}_{σ^{-n}ω} 1 by n repeated transfer applications."""
    current = GridFunction(np.ones(grid.size), grid)
    for m in range(n, 0, -1):
        current = transfer_apply(path.map_at(-m), current, grid, tol_root)
    return current


def pullback_law_residual(path: CocyclePath, n: int, grid: CircleGrid, tol_root: float = 1e-10) -> float:
    """sup |𝓛^{(n)}_{σ^{-n}ω} 1 - P_{x_n}| on the grid."""
    pole = complex(backward_iterates(path, n, 0.0)[-1]) if n > 0 else 0.0
    operator_side = pullback_of_one(path, n, grid, tol_root).values
    return float(np.max(np.abs(operator_side - poisson_density(pole, grid.z))))


# ==============================================================================
# EQUIVARIANCE AND CONVERGENCE CHECKS
# ==============================================================================

def density_equivariance_residual(
    path: CocyclePath,
    n: int = 1,
    grid: Optional[CircleGrid] = None,
    tol_root: float = 1e-10,
    **fixed_point_options,
) -> float:
    """
    sup |𝓛_{T_{s_{n-1}}} ∘ … ∘ 𝓛_{T_{s_0}} P_{x_ω} - P_{x_{σⁿω}}| on the grid.

    Raises:
        NonConvergence: If either fibre's fixed point did not converge
    """
    grid = grid or CircleGrid(1024)
    x_here = random_fixed_point(path, **fixed_point_options).require()
    x_there = random_fixed_point(path.shifted(n), **fixed_point_options).require()

    current: Union[GridFunction, Callable] = RandomDensity(x_here)
    for j in range(n):
        current = transfer_apply(path.map_at(j), current, grid, tol_root)
    target = poisson_density(x_there, grid.z)
    return float(np.max(np.abs(current.values - target)))


def pole_equivariance_residual(path: CocyclePath, **fixed_point_options) -> float:
    """|θT_{s_0}(x_ω) - x_{σω}|."""
    x_here = random_fixed_point(path, **fixed_point_options).require()
    x_there = random_fixed_point(path.shifted(1), **fixed_point_options).require()
    return abs(path.map_at(0)(x_here.value) - x_there.value)


def uniqueness_residual(
    path: CocyclePath,
    z_a: complex = 0.0,
    z_b: complex = 0.5,
    **fixed_point_options,
) -> float:
    """|x_ω(z_a) - x_ω(z_b)| for two starting points of the backward iteration."""
    x_a = random_fixed_point(path, z=z_a, **fixed_point_options).require()
    x_b = random_fixed_point(path, z=z_b, **fixed_point_options).require()
    return abs(x_a.value - x_b.value)


def convergence_curve(
    path: CocyclePath,
    h_star: InitialDensity = InitialDensity(),
    n_max: Optional[int] = None,
    grid: Optional[CircleGrid] = None,
    fixed_point: Optional[RandomFixedPointResult] = None,
    **fixed_point_options,
) -> List[Tuple[int, float]]:
    """
    (n, sup |P_{T^{(n)}_{σ^{-n}ω}(pole of h_*)} - P_{x_ω}|) for n = 1 … n_max.

    Raises:
        NonConvergence: If the fixed point did not converge
    """
    grid = grid or CircleGrid(4096)
    result = fixed_point or random_fixed_point(path, **fixed_point_options)
    x = result.require()
    n_max = n_max or max(result.n_used, 1)
    poles = backward_iterates(path, n_max, h_star.pole)
    target = poisson_density(x, grid.z)
    curve = []
    for n, pole in enumerate(poles, start=1):
        diff = float(np.max(np.abs(poisson_density(pole, grid.z) - target)))
        curve.append((n, diff))
    return curve
