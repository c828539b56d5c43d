"""
==============================================================================
CIRCLE NUMERICS - Quadrature, Lifts, Preimages and Arc Images
==============================================================================

PURPOSE:
    Numerical tools on the unit circle shared by every other module:

    - CircleGrid: the uniform N-point grid t_j = j/N, z_j = e^{2πi t_j}
    - quadrature: the periodic trapezoid rule for normalized Lebesgue measure
    - GridFunction: grid samples with spectral (FFT) interpolation
    - CircleLift: the monotone lift S̃ of a degree-n circle map
    - preimages / preimage_array: branch inversion of the lift
    - arc_image_measure / push_arc: images of arcs by lifted endpoints

THE LIFT:
    In the circle coordinate z = e^{2πit} a degree-n Blaschke product becomes
    a strictly increasing map S̃ with S̃(t+1) = S̃(t) + n and slope |T'|.
    The lift is tabulated on a grid by tracking arg T(z_j); between nodes it is
    evaluated exactly as node value + principal argument of T(z)/T(z_j), which
    is valid as long as each grid step moves the image by less than half a turn.

RELATED FILES:
    - src/blaschke.py - the maps whose lifts are built here
    - src/random_acim.py - transfer operator built on preimage_array
    - src/admissibility.py - covering times built on push_arc
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from src.domain.protocols import (
    BranchMiss,
    CircleMap,
    GridTooCoarse,
    UnitComplex,
    WindingMismatch,
)


TWO_PI = 2.0 * np.pi
MIN_GRID = 8
BISECTION_STEPS = 60


def circle_points(t) -> np.ndarray:
    """e^{2πit}, vectorized."""
    return np.exp(1j * TWO_PI * np.asarray(t, dtype=float))


def circle_coordinate(z) -> np.ndarray:
    """Inverse of circle_points with values in [0, 1)."""
    t = np.angle(np.asarray(z, dtype=complex)) / TWO_PI
    return np.mod(t, 1.0)


# ==============================================================================
# GRID AND QUADRATURE
# ==============================================================================

@dataclass(frozen=True)
class CircleGrid:
    """
    Uniform grid on 𝕋 with quadrature weight 1/N at every node.

    Example:
        >>> grid = CircleGrid(4096)
        >>> quadrature(np.ones(grid.size))
        1.0
    """

    size: int

    def __post_init__(self) -> None:
        if int(self.size) < MIN_GRID:
            raise GridTooCoarse(f"Circle grid needs at least {MIN_GRID} nodes, got {self.size}")
        object.__setattr__(self, "size", int(self.size))

    @cached_property
    def t(self) -> np.ndarray:
        return np.arange(self.size, dtype=float) / self.size

    @cached_property
    def z(self) -> np.ndarray:
        return circle_points(self.t)

    def integrate(self, values) -> Union[float, complex]:
        values = np.asarray(values)
        if values.shape[-1] != self.size:
            raise ValueError(f"Expected {self.size} samples, got {values.shape[-1]}")
        return quadrature(values)


def quadrature(values) -> Union[float, complex]:
    """
    Trapezoid rule for normalized Lebesgue measure: (1/N) Σ values.

    Exponentially accurate for smooth periodic integrands.
    """
    values = np.asarray(values)
    if values.size == 0:
        raise GridTooCoarse("Cannot integrate an empty sample")
    result = values.mean(axis=-1)
    if np.ndim(result) == 0:
        return complex(result) if np.iscomplexobj(result) else float(result)
    return result


@dataclass(frozen=True, eq=False)
class GridFunction:
    """
    Function on 𝕋 known by its samples on a CircleGrid.

    Calling it at arbitrary circle points uses trigonometric interpolation
    from the FFT of the samples, so smooth functions (Poisson kernels,
    transfer-operator images) keep spectral accuracy off the grid.
    """

    values: np.ndarray
    grid: CircleGrid

    def __post_init__(self) -> None:
        values = np.asarray(self.values)
        if values.shape != (self.grid.size,):
            raise ValueError(f"Expected {self.grid.size} samples, got shape {values.shape}")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, f: Callable, grid: CircleGrid) -> "GridFunction":
        return cls(np.asarray(f(grid.z)), grid)

    @cached_property
    def _spectrum(self) -> Tuple[np.ndarray, np.ndarray]:
        n = self.grid.size
        coeffs = np.fft.fft(self.values) / n
        freqs = np.rint(np.fft.fftfreq(n) * n).astype(np.int64)
        if n % 2 == 0:
            # split the Nyquist term symmetrically so real data interpolates to real values
            nyquist = n // 2
            idx = int(np.flatnonzero(np.abs(freqs) == nyquist)[0])
            half = coeffs[idx] / 2.0
            coeffs = np.concatenate([coeffs, [half]])
            coeffs[idx] = half
            freqs = np.concatenate([freqs, [-freqs[idx]]])
        return coeffs, freqs

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.values)

    def integral(self) -> Union[float, complex]:
        return quadrature(self.values)

    def __call__(self, z, chunk: int = 256) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        shape = z.shape
        t = circle_coordinate(z.ravel())
        coeffs, freqs = self._spectrum
        out = np.empty(t.size, dtype=complex)
        for start in range(0, t.size, chunk):
            block = t[start:start + chunk]
            phases = np.exp(1j * TWO_PI * np.outer(block, freqs))
            out[start:start + chunk] = phases @ coeffs
        out = out.reshape(shape)
        return out.real if self.is_real else out


# ==============================================================================
# LIFT
# ==============================================================================

@dataclass(frozen=True, eq=False)
class CircleLift:
    """
    Monotone lift S̃ of a degree-n circle map, tabulated on N+1 nodes.

    Invariants: S̃(0) ∈ [0, 1), S̃(1) = S̃(0) + n, strictly increasing.
    """

    base_map: CircleMap
    nodes: np.ndarray
    images: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.nodes.size - 1

    @property
    def degree(self) -> int:
        return self.base_map.degree

    @property
    def offset(self) -> float:
        """S̃(0)."""
        return float(self.nodes[0])

    def _from_node(self, t: np.ndarray, j: np.ndarray) -> np.ndarray:
        w = np.asarray(self.base_map(circle_points(t)), dtype=complex)
        step = np.angle(w * np.conj(self.images[j])) / TWO_PI
        return self.nodes[j] + step

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        whole = np.floor(t)
        frac = t - whole
        j = np.minimum((frac * self.size).astype(np.int64), self.size - 1)
        value = self._from_node(frac, j) + whole * self.degree
        return float(value) if value.ndim == 0 else value

    def slope(self, t):
        """S̃'(t) = |T'(e^{2πit})|."""
        return self.base_map.deriv_modulus(circle_points(t))

    def inverse(self, y) -> np.ndarray:
        """
        Solve S̃(t) = y for every entry of y.

        Bisection (60 steps) inside the grid cell bracketing y, then one
        Newton step with the analytic slope.
        """
        y = np.atleast_1d(np.asarray(y, dtype=float))
        n = self.degree
        periods = np.floor((y - self.offset) / n)
        target = y - periods * n

        j = np.searchsorted(self.nodes, target, side="right") - 1
        j = np.clip(j, 0, self.size - 1)
        lo = j / self.size
        hi = (j + 1) / self.size
        for _ in range(BISECTION_STEPS):
            mid = 0.5 * (lo + hi)
            below = self._from_node(mid, j) < target
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        t = 0.5 * (lo + hi)

        residual = self._from_node(t, j) - target
        t = t - residual / self.slope(t)
        t = np.clip(t, j / self.size, (j + 1) / self.size)
        return t + periods


def _track_argument(T: CircleMap, size: int) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    t = np.arange(size + 1, dtype=float) / size
    images = np.asarray(T(circle_points(t)), dtype=complex)
    phases = np.unwrap(np.angle(images)) / TWO_PI
    steps = np.diff(phases)
    if np.any(steps <= 0.0) or np.any(steps >= 0.5):
        return None
    winding = phases[-1] - phases[0]
    if abs(winding - T.degree) > 1e-6:
        return None
    nodes = phases - np.floor(phases[0])
    nodes[-1] = nodes[0] + T.degree
    return nodes, images


@lru_cache(maxsize=256)
def build_lift(T: CircleMap, N: int = 4096, max_size: int = 1 << 20) -> CircleLift:
    """
    Tabulate the lift of T by argument tracking.

    The grid is doubled until every step moves the image by less than half a
    turn and the tracked winding equals the degree.

    Raises:
        GridTooCoarse: If N < 8
        WindingMismatch: If no grid up to max_size tracks the winding
    """
    size = int(N)
    if size < MIN_GRID:
        raise GridTooCoarse(f"Lift grid needs at least {MIN_GRID} nodes, got {size}")
    while size <= max_size:
        tracked = _track_argument(T, size)
        if tracked is not None:
            nodes, images = tracked
            if size != N:
                logger.debug(f"Lift of degree-{T.degree} map needed N={size} (requested {N})")
            return CircleLift(base_map=T, nodes=nodes, images=images)
        size *= 2
    raise WindingMismatch(
        f"Argument tracking did not reproduce winding {T.degree} with N up to {max_size}"
    )


def lift_total_variation(T: CircleMap, N: int = 1 << 16) -> float:
    """Total variation of t ↦ 1/S̃'(t) over one period by direct summation."""
    grid = CircleGrid(N)
    inverse_slope = 1.0 / np.asarray(T.deriv_modulus(grid.z), dtype=float)
    wrapped = np.append(inverse_slope, inverse_slope[0])
    return float(np.abs(np.diff(wrapped)).sum())


# ==============================================================================
# PREIMAGES
# ==============================================================================

def preimage_array(lift: CircleLift, z, tol_root: float = 1e-10) -> np.ndarray:
    """
    All n preimages of every target point, as an array of shape (len(z), n).

    Raises:
        BranchMiss: If a branch fails the residual check or two branches coincide
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    n = lift.degree
    beta = circle_coordinate(z)
    first = lift.offset + np.mod(beta - lift.offset, 1.0)
    targets = first[:, None] + np.arange(n)[None, :]
    t = lift.inverse(targets.ravel()).reshape(targets.shape)
    w = circle_points(t)

    residual = np.abs(np.asarray(lift.base_map(w)) - z[:, None])
    worst = float(residual.max()) if residual.size else 0.0
    if worst >= tol_root:
        found = int((residual < tol_root).sum(axis=1).min())
        raise BranchMiss(f"found {found} of {n} preimages (worst residual {worst:.3e})")
    if n > 1:
        spread = np.diff(np.sort(np.mod(t, 1.0), axis=1), axis=1)
        if np.any(spread <= 0.0):
            raise BranchMiss(f"preimages collapsed: fewer than {n} distinct branches")
    return w


def preimages(
    T: CircleMap,
    z: Union[UnitComplex, complex],
    N: int = 4096,
    tol_root: float = 1e-10,
) -> list[UnitComplex]:
    """
    All n solutions w ∈ 𝕋 of T(w) = z, ordered by circle coordinate.

    Example:
        >>> [round(w.turns, 12) for w in preimages(BlaschkeProduct.power(2), 1.0)]
        [0.0, 0.5]
    """
    target = complex(z)
    lift = build_lift(T, N)
    w = preimage_array(lift, [target], tol_root=tol_root)[0]
    order = np.argsort(circle_coordinate(w))
    return [UnitComplex(complex(v)) for v in w[order]]


# ==============================================================================
# ARC IMAGES
# ==============================================================================

def push_arc(lift: CircleLift, arc: Tuple[float, float]) -> Tuple[float, float]:
    """Image of a lifted arc [u_a, u_b] under the lift."""
    u_a, u_b = arc
    return lift(u_a), lift(u_b)


def arc_image_measure(T: CircleMap, arc: Sequence[float], N: int = 4096) -> float:
    """
    Normalized measure of T(A) for the arc A = [t_a, t_b].

    Example:
        >>> round(arc_image_measure(BlaschkeProduct.power(2), (0.0, 0.3)), 12)
        0.6
    """
    t_a, t_b = float(arc[0]), float(arc[1])
    if not 0.0 <= t_a < t_b <= 1.0:
        raise ValueError(f"Arc must satisfy 0 <= t_a < t_b <= 1, got {arc}")
    image = push_arc(build_lift(T, N), (t_a, t_b))
    return min(1.0, image[1] - image[0])
