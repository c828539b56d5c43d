"""
==============================================================================
ADMISSIBILITY - Expansion, Integrability and Covering Checks
==============================================================================

PURPOSE:
    Numerical evidence for the conditions a Blaschke product cocycle needs
    before its random acim and entropy formula apply:

        (2)  E log inf_𝕋 |T'_ω| > 0            expanding on average
        (3)  E n_ω / inf_𝕋 |T'_ω| < ∞          degree against expansion
        (4)  E log⁺ ∫ |T''_ω / T'_ω²| dm < ∞   distortion

    Expectations over Ω are exact weighted sums over the map table.
    Condition (1), measurability, is not a numerical property.

ALSO HERE:
    - Martin's lower bound inf |T'| ≥ Σ (1 - |a|)/(1 + |a|)
    - Covering times of arcs under backward compositions
    - The origin-fixing counterexample: expanding maps with bounded
      inf |T'| but unbounded degree, so (3) fails
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy.optimize import minimize_scalar

from src.blaschke import BlaschkeProduct
from src.circle_numerics import CircleGrid, build_lift, circle_points, quadrature
from src.cocycle import CocyclePath, DrivingSystem, MapTable, sample_path
from src.domain.protocols import HypothesisViolated, NotCovered
from src.entropy import fibre_entropy_quadrature, lebesgue_log_deriv
from src.presets import minimal_zero_magnitude, origin_cocycle, origin_inf_closed_form, origin_map
from src.random_acim import random_fixed_point


INCONCLUSIVE_BAND = 1e-10
COVERED = 1.0 - 1e-12


class Verdict(str, Enum):
    ADMISSIBLE_EVIDENCE = "AdmissibleEvidence"
    FAILS_CONDITION = "FailsCondition"
    INCONCLUSIVE = "Inconclusive"


# ==============================================================================
# PER-MAP QUANTITIES
# ==============================================================================

@dataclass
class InfDerivative:
    """Refined inf |T'| with the grid value (upper) and Martin bound (lower)."""

    value: float
    grid_value: float
    martin_bound: float
    argmin_turns: float

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "grid_value": self.grid_value,
            "martin_bound": self.martin_bound,
            "argmin_turns": self.argmin_turns,
        }


def martin_bound(T: BlaschkeProduct) -> float:
    """Σ (1 - |a_i|)/(1 + |a_i|) over the zeros, with multiplicity."""
    moduli = np.abs(T._unique)
    return float(np.sum(T._mult * (1.0 - moduli) / (1.0 + moduli)))


def inf_deriv_estimate(T: BlaschkeProduct, N: int = 8192) -> InfDerivative:
    """
    Grid minimum of |T'| refined by a bounded scalar search within one grid
    cell on either side of the grid argmin.
    """
    grid = CircleGrid(N)
    values = np.asarray(T.deriv_modulus(grid.z), dtype=float)
    k = int(np.argmin(values))
    grid_value = float(values[k])
    t_k = float(grid.t[k])

    refined = minimize_scalar(
        lambda t: float(T.deriv_modulus(complex(circle_points(t)))),
        bounds=(t_k - 1.0 / N, t_k + 1.0 / N),
        method="bounded",
        options={"xatol": 1e-13},
    )
    value, argmin = grid_value, t_k
    if refined.success and refined.fun < grid_value:
        value, argmin = float(refined.fun), float(refined.x) % 1.0
    return InfDerivative(value, grid_value, martin_bound(T), argmin)


def inf_deriv(T: BlaschkeProduct, N: int = 8192) -> float:
    """
    inf over 𝕋 of |T'|.

    Example:
        >>> round(inf_deriv(BlaschkeProduct.from_turns(0.5, [0.4, 0.4])), 12)
        0.857142857143
    """
    return inf_deriv_estimate(T, N).value


def variation_one_over_deriv(T: BlaschkeProduct, N: int = 4096) -> float:
    """∫ |T''/T'²| dm with analytic T', T''."""
    z = CircleGrid(N).z
    first = np.asarray(T.derivative(z))
    second = np.asarray(T.second_derivative(z))
    return float(quadrature(np.abs(second / first ** 2)))


def lift_slope_variation(T: BlaschkeProduct, N: int = 4096) -> float:
    """
    Total variation of t ↦ 1/S̃'(t) from the analytic derivative

        d/dt (1/|T'|) = -2π Re(i z T'' conj(T')) / |T'|³.

    Bounded by 2π · variation_one_over_deriv.
    """
    z = CircleGrid(N).z
    first = np.asarray(T.derivative(z))
    second = np.asarray(T.second_derivative(z))
    density = 2.0 * np.pi * np.abs(np.real(1j * z * second * np.conj(first))) / np.abs(first) ** 3
    return float(quadrature(density))


@dataclass
class MapDiagnostics:
    degree: int
    inf_deriv: float
    inf_grid_value: float
    martin_bound: float
    variation: float

    @property
    def martin_holds(self) -> bool:
        return self.inf_deriv >= self.martin_bound - 1e-9

    def to_dict(self) -> dict:
        return {
            "degree": self.degree,
            "inf_deriv": self.inf_deriv,
            "inf_grid_value": self.inf_grid_value,
            "martin_bound": self.martin_bound,
            "variation": self.variation,
            "martin_holds": self.martin_holds,
        }


def diagnose_map(T: BlaschkeProduct, N: int = 8192, variation_grid: int = 4096) -> MapDiagnostics:
    estimate = inf_deriv_estimate(T, N)
    return MapDiagnostics(
        degree=T.degree,
        inf_deriv=estimate.value,
        inf_grid_value=estimate.grid_value,
        martin_bound=estimate.martin_bound,
        variation=variation_one_over_deriv(T, variation_grid),
    )


# ==============================================================================
# ADMISSIBILITY REPORT
# ==============================================================================

@dataclass
class Expectations:
    E_log_inf_deriv: float
    E_deg_over_inf: float
    E_variation_log_plus: float

    def to_dict(self) -> dict:
        return {
            "E_log_inf_deriv": self.E_log_inf_deriv,
            "E_deg_over_inf": self.E_deg_over_inf,
            "E_variation_log_plus": self.E_variation_log_plus,
        }


@dataclass
class AdmissibilityReport:
    per_map: List[MapDiagnostics]
    probabilities: List[float]
    expectations: Expectations
    verdict: Verdict
    failed_condition: Optional[int] = None
    threshold_probability: Optional[float] = None

    @property
    def label(self) -> str:
        if self.verdict is Verdict.FAILS_CONDITION:
            return f"FailsCondition({self.failed_condition})"
        return self.verdict.value

    @property
    def passed(self) -> bool:
        return self.verdict is Verdict.ADMISSIBLE_EVIDENCE

    def to_dict(self) -> dict:
        return {
            "verdict": self.label,
            "per_map": [d.to_dict() for d in self.per_map],
            "probabilities": self.probabilities,
            "expectations": self.expectations.to_dict(),
            "threshold_probability": self.threshold_probability,
            "martin_holds": all(d.martin_holds for d in self.per_map),
        }


def _log_plus(x: float) -> float:
    return max(math.log(x), 0.0) if x > 0.0 else 0.0


def threshold_probability(log_infs: Sequence[float]) -> Optional[float]:
    """
    For two maps with log inf of opposite signs, the ℙ(symbol 0) above
    (or below) which E log inf |T'| turns positive.
    """
    if len(log_infs) != 2:
        return None
    l0, l1 = log_infs
    if l0 * l1 >= 0.0:
        return None
    return l1 / (l1 - l0)


def check_admissible(table: MapTable, driving: DrivingSystem, N: int = 8192) -> AdmissibilityReport:
    """
    Diagnose every map and combine with the exact symbol probabilities.

    Example:
        >>> check_admissible(two_map_table(), sigma1(0.1)).label
        'FailsCondition(2)'
    """
    probabilities = driving.symbol_probabilities()
    per_map = [diagnose_map(T, N) for T in table]
    for j, diag in enumerate(per_map):
        if not diag.martin_holds:
            logger.warning(f"Map {j}: inf |T'| = {diag.inf_deriv} below Martin bound {diag.martin_bound}")

    weighted = [(p, d) for p, d in zip(probabilities, per_map) if p > 0.0]
    expectations = Expectations(
        E_log_inf_deriv=float(sum(p * math.log(d.inf_deriv) for p, d in weighted)),
        E_deg_over_inf=float(sum(p * d.degree / d.inf_deriv for p, d in weighted)),
        E_variation_log_plus=float(sum(p * _log_plus(d.variation) for p, d in weighted)),
    )

    failed: Optional[int] = None
    if expectations.E_log_inf_deriv <= 0.0:
        failed = 2
    elif not math.isfinite(expectations.E_deg_over_inf):
        failed = 3
    elif not math.isfinite(expectations.E_variation_log_plus):
        failed = 4

    if failed is not None:
        verdict = Verdict.FAILS_CONDITION
    elif expectations.E_log_inf_deriv < INCONCLUSIVE_BAND:
        verdict = Verdict.INCONCLUSIVE
    else:
        verdict = Verdict.ADMISSIBLE_EVIDENCE

    report = AdmissibilityReport(
        per_map=per_map,
        probabilities=[float(p) for p in probabilities],
        expectations=expectations,
        verdict=verdict,
        failed_condition=failed,
        threshold_probability=threshold_probability([math.log(d.inf_deriv) for d in per_map]),
    )
    logger.info(f"Admissibility verdict: {report.label} (E log inf = {expectations.E_log_inf_deriv:.6g})")
    return report


# ==============================================================================
# COVERING
# ==============================================================================

@dataclass
class CoveringReport:
    n: int
    arc: Tuple[float, float]
    lambda_hat: float
    formula_bound: Optional[int]

    @property
    def arc_measure(self) -> float:
        return self.arc[1] - self.arc[0]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "arc": list(self.arc),
            "arc_measure": self.arc_measure,
            "lambda_hat": self.lambda_hat,
            "formula_bound": self.formula_bound,
        }


def covering_formula_bound(lambda_hat: float, arc_measure: float) -> Optional[int]:
    """⌈-(2/Λ̂) log m(A)⌉, or None without expansion."""
    if lambda_hat <= 0.0:
        return None
    return int(math.ceil(-(2.0 / lambda_hat) * math.log(arc_measure)))


def covering_time(
    path: CocyclePath,
    arc: Sequence[float],
    max_n: int = 10_000,
    N: int = 4096,
    inf_grid: int = 8192,
) -> CoveringReport:
    """
    Smallest n with m(T^{(n)}_{σ^{-n}ω}(A)) = 1.

    The lifted endpoints of A are pushed through θT_{s_{-n}}, …, θT_{s_{-1}};
    A is covered once their distance reaches 1.

    Raises:
        NotCovered: If no n ≤ max_n covers the circle
    """
    t_a, t_b = float(arc[0]), float(arc[1])
    if not (0.0 <= t_a < t_b <= 1.0 and 0.0 < t_b - t_a < 1.0):
        raise ValueError(f"Arc must have measure in (0, 1), got {arc}")
    if path.available_back < max_n:
        raise ValueError(f"Path has {path.available_back} backward symbols, max_n={max_n} requested")

    maps = path.effective_table.maps
    lifts = [build_lift(T, N) for T in maps]
    log_inf = np.log([inf_deriv(T, inf_grid) for T in maps])
    back = path.window(-max_n, 0)[::-1]

    for n in range(1, max_n + 1):
        u_a, u_b = t_a, t_b
        for m in range(n, 0, -1):
            lift = lifts[back[m - 1]]
            u_a, u_b = lift(u_a), lift(u_b)
            whole = math.floor(u_a)
            u_a, u_b = u_a - whole, u_b - whole
            if u_b - u_a >= COVERED:
                break
        if u_b - u_a >= COVERED:
            lambda_hat = float(log_inf[back[:n]].mean())
            report = CoveringReport(n, (t_a, t_b), lambda_hat, covering_formula_bound(lambda_hat, t_b - t_a))
            logger.debug(f"Arc {report.arc} covered after {n} steps")
            return report
    raise NotCovered(max_n)


def covering_times(
    table: MapTable,
    driving: DrivingSystem,
    arc: Sequence[float],
    seeds: Sequence[int],
    max_n: int = 10_000,
    N: int = 4096,
) -> Dict[int, Optional[int]]:
    """Covering time per seed; None where the cap was hit."""
    times: Dict[int, Optional[int]] = {}
    for seed in seeds:
        path = sample_path(driving, table, seed, max_n, 0)
        try:
            times[seed] = covering_time(path, arc, max_n, N).n
        except NotCovered:
            times[seed] = None
    return times


# ==============================================================================
# ORIGIN-FIXING COUNTEREXAMPLE
# ==============================================================================

def divergent_partial_sums(levels: Sequence[int]) -> Dict[int, float]:
    """(6/π²) Σ_{j ≤ J} (j+1)²/j² at each J in levels."""
    top = max(levels)
    j = np.arange(1, top + 1, dtype=float)
    partial = np.cumsum(6.0 / np.pi ** 2 * (j + 1) ** 2 / j ** 2)
    return {int(J): float(partial[J - 1]) for J in levels}


@dataclass
class OriginExampleReport:
    c: float
    j: int
    zero_magnitude: float
    minimal_magnitude: float
    degree: int
    inf_deriv: float
    inf_closed_form: float
    origin_fixed: bool
    fixed_point: Optional[complex]
    fibre_quadrature: float
    lebesgue_average: float
    partial_sums: Dict[int, float]
    partial_sums_over_bound: Dict[int, float]
    j_max: int

    @property
    def inf_bounded(self) -> bool:
        return self.inf_deriv <= self.c + 1.0 + 1e-9

    @property
    def expanding(self) -> bool:
        return self.inf_deriv > 1.0

    @property
    def fixed_point_is_origin(self) -> bool:
        return self.fixed_point is not None and self.fixed_point == 0.0

    @property
    def entropy_matches(self) -> bool:
        return abs(self.fibre_quadrature - self.lebesgue_average) < 1e-8

    @property
    def sums_increasing(self) -> bool:
        values = [self.partial_sums[J] for J in sorted(self.partial_sums)]
        return all(b > a for a, b in zip(values, values[1:]))

    @property
    def passed(self) -> bool:
        return all((
            self.inf_bounded,
            self.expanding,
            self.origin_fixed,
            self.fixed_point_is_origin,
            self.entropy_matches,
            self.sums_increasing,
        ))

    def to_dict(self) -> dict:
        return {
            "c": self.c,
            "j": self.j,
            "zero_magnitude": self.zero_magnitude,
            "minimal_magnitude": self.minimal_magnitude,
            "degree": self.degree,
            "inf_deriv": self.inf_deriv,
            "inf_closed_form": self.inf_closed_form,
            "inf_bounded": self.inf_bounded,
            "expanding": self.expanding,
            "origin_fixed": self.origin_fixed,
            "fixed_point": None if self.fixed_point is None else [self.fixed_point.real, self.fixed_point.imag],
            "fibre_quadrature": self.fibre_quadrature,
            "lebesgue_average": self.lebesgue_average,
            "entropy_matches": self.entropy_matches,
            "partial_sums": {str(k): v for k, v in self.partial_sums.items()},
            "partial_sums_over_bound": {str(k): v for k, v in self.partial_sums_over_bound.items()},
            "sums_increasing": self.sums_increasing,
            "j_max": self.j_max,
            "passed": self.passed,
        }


def origin_example_checks(
    c: float,
    j: int,
    zero_magnitude: Optional[float] = None,
    rho_turns: float = 0.0,
    j_max: int = 50,
    levels: Sequence[int] = (10, 100, 1000),
    N: int = 8192,
    n_fibres: int = 50,
    seed: int = 0,
) -> OriginExampleReport:
    """
    Build the representative degree-(j+1)² map and the truncated cocycle,
    then check bounded expansion, the fixed origin and the divergent sum.

    Raises:
        HypothesisViolated: If c ≤ 0, j < 1 or the zero magnitude is below
            (j² + 2j - c)/(j² + 2j + c)
    """
    if c <= 0.0:
        raise HypothesisViolated(f"c must be positive, got {c}")
    if j < 1:
        raise HypothesisViolated(f"j must be at least 1, got {j}")
    r_min = minimal_zero_magnitude(c, j)
    r = r_min if zero_magnitude is None else float(zero_magnitude)
    if r < r_min - 1e-12:
        raise HypothesisViolated(
            f"zero magnitude {r} is below {r_min}; inf |T'| would exceed c + 1 = {c + 1}"
        )
    if r >= 1.0 - 1e-9:
        raise HypothesisViolated(f"zero magnitude {r} is not inside the disc")

    T = origin_map(j, r, rho_turns)
    estimate = inf_deriv_estimate(T, N)

    table, driving = origin_cocycle(c, j_max, rho_turns)
    back = 64
    path = sample_path(driving, table, seed, back, n_fibres)
    fixed = random_fixed_point(path, max_n=back)
    fibre_grid = CircleGrid(4096)
    quad = fibre_entropy_quadrature(path, n_fibres, fibre_grid, stratify=False, max_n=back)
    symbols = path.window(0, n_fibres)
    per_symbol = {int(s): lebesgue_log_deriv(table[int(s)], fibre_grid.size) for s in np.unique(symbols)}
    lebesgue_average = float(np.mean([per_symbol[int(s)] for s in symbols]))

    sums = divergent_partial_sums(levels)
    report = OriginExampleReport(
        c=float(c),
        j=int(j),
        zero_magnitude=r,
        minimal_magnitude=r_min,
        degree=T.degree,
        inf_deriv=estimate.value,
        inf_closed_form=origin_inf_closed_form(j, r),
        origin_fixed=complex(T(0.0)) == 0.0,
        fixed_point=fixed.x_omega.value if fixed.converged else None,
        fibre_quadrature=quad.value,
        lebesgue_average=lebesgue_average,
        partial_sums=sums,
        partial_sums_over_bound={J: s / (c + 1.0) for J, s in sums.items()},
        j_max=j_max,
    )
    logger.info(
        f"Origin example c={c}, j={j}: degree {report.degree}, inf |T'| = {report.inf_deriv:.12g}"
    )
    return report


__all__ = [
    "Verdict",
    "InfDerivative",
    "MapDiagnostics",
    "Expectations",
    "AdmissibilityReport",
    "CoveringReport",
    "OriginExampleReport",
    "martin_bound",
    "inf_deriv_estimate",
    "inf_deriv",
    "variation_one_over_deriv",
    "lift_slope_variation",
    "diagnose_map",
    "threshold_probability",
    "check_admissible",
    "covering_formula_bound",
    "covering_time",
    "covering_times",
    "divergent_partial_sums",
    "origin_example_checks",
]
