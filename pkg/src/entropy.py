"""
==============================================================================
ENTROPY - Fibre Entropy, Base Entropy and θ-Averaged Identities
==============================================================================

PURPOSE:
    The metric entropy of an admissible cocycle splits as

        h_μ(𝒯) = h^{fib}_μ(𝒯) + h_ℙ(σ),
        h^{fib}_μ(𝒯) = ∫_Ω ∫_𝕋 log|T'_ω| dμ_ω dℙ(ω),   dμ_ω = P_{x_ω} dm

    and its average over the rotated family 𝒯_θ = (θT_ω) equals

        ∫_Ω ∫_𝕋 log|T'_ω| dm dℙ(ω) + h_ℙ(σ).

ESTIMATORS:
    1. Orbit (Birkhoff): z_{k+1} = θT_{s_k}(z_k) from z_0 = 1, burn-in
       discarded, mean of log|T'_{s_k}(z_k)|, batch-means standard error
    2. Density quadrature: x_ω from the backward iteration, pushed along
       the base (x_{σω} = θT_{s_0}(x_ω)), one trapezoid integral of
       log|T'_{s_k}| · P_{x_k} per fibre, optionally stratified by symbol

    Both are natural-log estimates of the same Lyapunov exponent.

RELATED FILES:
    - src/parallel_processor.py - distributes θ-sweep points over workers
    - src/random_acim.py - random fixed point used by the quadrature estimator
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Union

import numpy as np
from loguru import logger

from src.blaschke import BlaschkeProduct, FixedPointCase, classify_fixed_points, poisson_density
from src.circle_numerics import CircleGrid, quadrature
from src.cocycle import (
    CocyclePath,
    DrivingKind,
    DrivingSystem,
    MapTable,
    backward_compose,
    sample_path,
)
from src.domain.protocols import NonConvergence, Result, UnitComplex
from src.random_acim import random_fixed_point


ORBIT = "orbit"
QUADRATURE = "quadrature"
ESTIMATORS = (ORBIT, QUADRATURE)


# ==============================================================================
# DATA MODELS
# ==============================================================================

@dataclass
class Estimate:
    """A value with its standard error."""

    value: float
    stderr: float

    def to_dict(self) -> dict:
        return {"value": self.value, "stderr": self.stderr}


@dataclass
class QuadratureEstimate(Estimate):
    """Density-quadrature estimate with the fibre bookkeeping."""

    n_fibres: int = 0
    boundary_fraction: float = 0.0
    stratified: bool = False

    def to_dict(self) -> dict:
        data = super().to_dict()
        data.update(
            n_fibres=self.n_fibres,
            boundary_fraction=self.boundary_fraction,
            stratified=self.stratified,
        )
        return data


@dataclass
class EntropyReport:
    """
    Fibre entropy estimates for one path, base entropy and total.

    total = chosen fibre estimate + base_entropy.
    """

    fibre_orbit: Optional[Estimate]
    fibre_quadrature: Optional[QuadratureEstimate]
    base_entropy: float
    n_steps: int
    theta: UnitComplex
    estimator: str = ORBIT

    @property
    def fibre(self) -> float:
        chosen = self.fibre_orbit if self.estimator == ORBIT else self.fibre_quadrature
        if chosen is None:
            raise ValueError(f"Estimator {self.estimator!r} was not computed")
        return chosen.value

    @property
    def total(self) -> float:
        return self.fibre + self.base_entropy

    @property
    def estimators_agree(self) -> Optional[bool]:
        """Orbit and quadrature within 3 combined standard errors."""
        if self.fibre_orbit is None or self.fibre_quadrature is None:
            return None
        combined = np.hypot(self.fibre_orbit.stderr, self.fibre_quadrature.stderr)
        return bool(abs(self.fibre_orbit.value - self.fibre_quadrature.value) <= 3.0 * combined)

    def to_dict(self) -> dict:
        return {
            "fibre_orbit": self.fibre_orbit.to_dict() if self.fibre_orbit else None,
            "fibre_quadrature": self.fibre_quadrature.to_dict() if self.fibre_quadrature else None,
            "base_entropy": self.base_entropy,
            "estimator": self.estimator,
            "total": self.total,
            "n_steps": self.n_steps,
            "theta_turns": self.theta.turns,
            "estimators_agree": self.estimators_agree,
        }


@dataclass
class ThetaSweepResult:
    """Fibre entropy over a grid of t, θ = e^{2πit}."""

    t_grid: List[float]
    points: List[Result[float]]
    estimator: str
    seed: int
    n_steps: int
    failures: List[str] = field(default_factory=list)

    @property
    def values(self) -> np.ndarray:
        return np.array([p.unwrap_or(np.nan) for p in self.points], dtype=float)

    @property
    def mean(self) -> float:
        values = self.values
        ok = np.isfinite(values)
        return float(values[ok].mean()) if ok.any() else float("nan")

    @property
    def n_failed(self) -> int:
        return sum(not p.is_success for p in self.points)

    def to_dict(self) -> dict:
        return {
            "t": list(self.t_grid),
            "h_fib": [p.value if p.is_success else None for p in self.points],
            "mean": self.mean,
            "estimator": self.estimator,
            "seed": self.seed,
            "n_steps": self.n_steps,
            "failures": [p.error for p in self.points if not p.is_success],
        }


# ==============================================================================
# CLOSED FORMS
# ==============================================================================

def base_entropy(driving: DrivingSystem) -> float:
    """-Σ p log p for a Bernoulli shift, 0 for a rotation."""
    if driving.kind is DrivingKind.ROTATION:
        return 0.0
    p = driving.symbol_probabilities()
    p = p[p > 0.0]
    return float(-(p * np.log(p)).sum())


def lebesgue_log_deriv(T: BlaschkeProduct, N: int = 4096) -> float:
    """∫ log|T'| dm by the trapezoid rule."""
    grid = CircleGrid(N)
    return float(quadrature(np.log(T.deriv_modulus(grid.z))))


def analytic_fibre_average(table: MapTable, driving: DrivingSystem, N: int = 4096) -> float:
    """Σ_j ℙ(j) ∫ log|T_j'| dm."""
    probabilities = driving.symbol_probabilities()
    return float(sum(
        p * lebesgue_log_deriv(T, N) for p, T in zip(probabilities, table) if p > 0.0
    ))


def average_entropy_analytic(table: MapTable, driving: DrivingSystem, N: int = 4096) -> float:
    """Σ_j ℙ(j) ∫ log|T_j'| dm + h_ℙ(σ)."""
    return analytic_fibre_average(table, driving, N) + base_entropy(driving)


def deterministic_entropy(T: BlaschkeProduct, N: int = 4096) -> float:
    """
    ∫ log|T'| dμ_x for a map with an attracting disc fixed point x.

    Raises:
        NonConvergence: If T has no attracting fixed point in the disc
    """
    classification = classify_fixed_points(T)
    if classification.case is not FixedPointCase.ATTRACTOR_IN_DISC:
        raise NonConvergence(f"No absolutely continuous invariant measure: {classification.case.value}")
    grid = CircleGrid(N)
    x = classification.disc_fixed_point
    return float(quadrature(np.log(T.deriv_modulus(grid.z)) * poisson_density(x, grid.z)))


# ==============================================================================
# ESTIMATORS
# ==============================================================================

def batch_means_stderr(samples: np.ndarray, n_batches: int = 20) -> float:
    """Standard error of the mean from non-overlapping batch means."""
    samples = np.asarray(samples, dtype=float)
    n_batches = min(n_batches, samples.size // 2)
    if n_batches < 2:
        return float("nan")
    usable = samples[: (samples.size // n_batches) * n_batches]
    means = usable.reshape(n_batches, -1).mean(axis=1)
    return float(means.std(ddof=1) / np.sqrt(n_batches))


def orbit_log_derivatives(
    path: CocyclePath,
    n_steps: int,
    z0: Union[UnitComplex, complex] = 1.0,
    burn_in: int = 1000,
) -> np.ndarray:
    """log|T'_{s_k}(z_k)| along z_{k+1} = θT_{s_k}(z_k), after the burn-in."""
    total = burn_in + n_steps
    if path.available_fwd < total:
        raise ValueError(f"Path has {path.available_fwd} forward symbols, {total} needed")
    maps = path.effective_table.maps
    symbols = path.window(0, total).tolist()
    z = complex(z0)
    logs = np.empty(n_steps, dtype=float)
    for k, symbol in enumerate(symbols):
        T = maps[symbol]
        if k >= burn_in:
            logs[k - burn_in] = np.log(T.deriv_modulus(z))
        z = T(z)
        z /= abs(z)
    return logs


def fibre_entropy_orbit(
    path: CocyclePath,
    n_steps: int = 10_000,
    z0: Union[UnitComplex, complex] = 1.0,
    burn_in: int = 1000,
    n_batches: int = 20,
) -> Estimate:
    """
    Birkhoff average of log|T'| along one forward orbit.

    Example:
        >>> fibre_entropy_orbit(constant_square_path, n_steps=100, burn_in=0).value
        0.6931471805599453
    """
    if n_steps < 100:
        raise ValueError("n_steps must be at least 100")
    logs = orbit_log_derivatives(path, n_steps, z0, burn_in)
    return Estimate(float(logs.mean()), batch_means_stderr(logs, n_batches))


def _fibre_poles(path: CocyclePath, n_fibres: int, fixed_point_options: dict) -> List[Optional[complex]]:
    """x_{σ^k ω} for k < n_fibres, None where the fibre diverges to the boundary."""
    band = fixed_point_options.get("boundary_band", 1e-6)
    poles: List[Optional[complex]] = []
    current: Optional[complex] = None
    for k in range(n_fibres):
        if current is None or abs(current) > 1.0 - band:
            result = random_fixed_point(path.shifted(k), **fixed_point_options)
            current = result.x_omega.value if result.converged else None
        poles.append(current)
        if current is not None:
            current = complex(path.map_at(k)(current))
    return poles


def fibre_entropy_quadrature(
    path: CocyclePath,
    n_fibres: int = 200,
    grid: Optional[CircleGrid] = None,
    stratify: bool = True,
    n_batches: int = 20,
    **fixed_point_options,
) -> QuadratureEstimate:
    """
    Average over fibres σ^k ω (k < n_fibres) of ∫ log|T'_{s_k}| P_{x_{σ^k ω}} dm.

    Boundary-divergent fibres are skipped and reported as a fraction.
    Stratified: per-symbol means reweighted by the exact symbol probabilities.
    """
    grid = grid or CircleGrid(4096)
    if path.available_fwd < n_fibres:
        raise ValueError(f"Path has {path.available_fwd} forward symbols, {n_fibres} fibres requested")

    log_derivs = [np.log(T.deriv_modulus(grid.z)) for T in path.table]
    poles = _fibre_poles(path, n_fibres, fixed_point_options)
    symbols = path.window(0, n_fibres)

    values, used_symbols = [], []
    for k, pole in enumerate(poles):
        if pole is None:
            continue
        symbol = int(symbols[k])
        values.append(float(quadrature(log_derivs[symbol] * poisson_density(pole, grid.z))))
        used_symbols.append(symbol)

    boundary_fraction = 1.0 - len(values) / n_fibres
    if boundary_fraction > 0.0:
        logger.warning(f"{boundary_fraction:.1%} of fibres diverged to the boundary")
    if not values:
        return QuadratureEstimate(float("nan"), float("nan"), 0, boundary_fraction, stratify)

    values_arr = np.asarray(values)
    used = np.asarray(used_symbols)
    weights = path.driving.symbol_probabilities()
    present = np.array([np.any(used == j) for j in range(weights.size)])

    if stratify and np.all(present[weights > 0.0]):
        value, variance = 0.0, 0.0
        for j, w in enumerate(weights):
            if w <= 0.0:
                continue
            stratum = values_arr[used == j]
            value += w * stratum.mean()
            if stratum.size > 1:
                variance += w ** 2 * stratum.var(ddof=1) / stratum.size
        return QuadratureEstimate(float(value), float(np.sqrt(variance)), len(values), boundary_fraction, True)

    stderr = batch_means_stderr(values_arr, n_batches)
    return QuadratureEstimate(float(values_arr.mean()), stderr, len(values), boundary_fraction, False)


def estimate_fibre_entropy(
    table: MapTable,
    driving: DrivingSystem,
    t: float,
    seed: int,
    estimator: str = ORBIT,
    n_steps: int = 10_000,
    burn_in: int = 1000,
    n_fibres: int = 200,
    grid_size: int = 4096,
    max_backward_steps: int = 10_000,
    n_batches: int = 20,
) -> float:
    """Fibre entropy of 𝒯_θ, θ = e^{2πit}, on one sampled path."""
    theta = UnitComplex.from_turns(t)
    if estimator == ORBIT:
        path = sample_path(driving, table, seed, 0, burn_in + n_steps, theta)
        return fibre_entropy_orbit(path, n_steps, 1.0, burn_in, n_batches).value
    if estimator == QUADRATURE:
        path = sample_path(driving, table, seed, max_backward_steps, n_fibres, theta)
        estimate = fibre_entropy_quadrature(
            path, n_fibres, CircleGrid(grid_size), n_batches=n_batches, max_n=max_backward_steps
        )
        if estimate.n_fibres == 0:
            raise NonConvergence("every fibre diverged to the boundary")
        return estimate.value
    raise ValueError(f"Unknown estimator {estimator!r}; choose from {ESTIMATORS}")


def entropy_report(
    path_orbit: CocyclePath,
    path_fibres: Optional[CocyclePath] = None,
    n_steps: int = 10_000,
    burn_in: int = 1000,
    n_fibres: int = 200,
    grid: Optional[CircleGrid] = None,
    estimator: str = ORBIT,
    n_batches: int = 20,
    **fixed_point_options,
) -> EntropyReport:
    """Both estimators (when a fibre path is given) plus base entropy."""
    orbit = fibre_entropy_orbit(path_orbit, n_steps, 1.0, burn_in, n_batches)
    quad = None
    if path_fibres is not None:
        quad = fibre_entropy_quadrature(
            path_fibres, n_fibres, grid, n_batches=n_batches, **fixed_point_options
        )
    return EntropyReport(
        fibre_orbit=orbit,
        fibre_quadrature=quad,
        base_entropy=base_entropy(path_orbit.driving),
        n_steps=n_steps,
        theta=path_orbit.theta,
        estimator=estimator,
    )


# ==============================================================================
# θ-AVERAGES
# ==============================================================================

def theta_grid(points: int) -> List[float]:
    """Uniform t_i = i/points in [0, 1)."""
    if points <= 0:
        raise ValueError("theta grid needs at least one point")
    return [i / points for i in range(points)]


def theta_sweep(
    table: MapTable,
    driving: DrivingSystem,
    t_grid: Sequence[float],
    n_steps: int,
    seed: int,
    estimator: str = ORBIT,
    workers: int = 1,
    show_progress: bool = False,
    chunk_size: int = 4,
    **estimator_options,
) -> ThetaSweepResult:
    """
    Fibre entropy for every t in t_grid, each on its own path seeded by
    derive_seed(seed, index). Per-point failures are recorded, not raised.
    """
    from src.parallel_processor import ParallelThetaSweep

    if not t_grid:
        raise ValueError("t_grid must not be empty")
    sweep = ParallelThetaSweep(num_workers=workers, chunk_size=chunk_size)
    outcomes = sweep.process_batch(
        table, driving, list(t_grid), seed,
        estimator=estimator, n_steps=n_steps, show_progress=show_progress, **estimator_options,
    )
    if show_progress:
        sweep.print_summary()
    points: List[Result[float]] = []
    for outcome in outcomes:
        if outcome["success"]:
            points.append(Result.success(outcome["h_fib"]))
        else:
            points.append(Result.failure(f"t={outcome['t']}: {outcome['error']}"))
    return ThetaSweepResult(
        t_grid=list(t_grid),
        points=points,
        estimator=estimator,
        seed=seed,
        n_steps=n_steps,
        failures=[p.error for p in points if not p.is_success],
    )


def lebesgue_theta_average_residual(
    table: MapTable,
    driving: DrivingSystem,
    f: Callable,
    n: int,
    theta_points: Union[int, Sequence[float]],
    seed: int,
    grid: Optional[CircleGrid] = None,
) -> float:
    """
    |∫_𝕋 ∫_𝕋 f∘T^{(n)}_{σ^{-n}ω,θ} dm dθ - ∫ f dm| for one sampled ω.

    Both integrals use the trapezoid rule; the θ grid is uniform in t.
    """
    grid = grid or CircleGrid(4096)
    ts = theta_grid(theta_points) if isinstance(theta_points, int) else list(theta_points)
    path = sample_path(driving, table, seed, n, 0)
    inner = []
    for t in ts:
        rotated = path.with_theta(UnitComplex.from_turns(t))
        image = np.asarray(backward_compose(rotated, n, grid.z))
        image = image / np.abs(image)
        inner.append(quadrature(np.asarray(f(image))))
    reference = quadrature(np.asarray(f(grid.z)))
    return float(abs(np.mean(inner) - reference))


__all__ = [
    "Estimate",
    "QuadratureEstimate",
    "EntropyReport",
    "ThetaSweepResult",
    "base_entropy",
    "lebesgue_log_deriv",
    "analytic_fibre_average",
    "average_entropy_analytic",
    "deterministic_entropy",
    "batch_means_stderr",
    "orbit_log_derivatives",
    "fibre_entropy_orbit",
    "fibre_entropy_quadrature",
    "estimate_fibre_entropy",
    "entropy_report",
    "theta_grid",
    "theta_sweep",
    "lebesgue_theta_average_residual",
]
