"""
==============================================================================
COCYCLES - Driving Systems, Map Tables and Realized Paths
==============================================================================

PURPOSE:
    Describe which Blaschke product acts at each time step:

    - DrivingSystem: Bernoulli shift over k symbols, or an irrational circle
      rotation ω ↦ ω + α (mod 1) read through a threshold partition
    - MapTable: symbol → BlaschkeProduct
    - CocyclePath: a realized two-sided window of symbols s_{-N} … s_{M-1}
      together with the family parameter θ (effective map at j is θ·T_{s_j})

COMPOSITIONS:
    forward:   T^{(n)}_{σ^j ω} = θT_{s_{j+n-1}} ∘ … ∘ θT_{s_j}
    backward:  T^{(n)}_{σ^{-n} ω} = θT_{s_{-1}} ∘ … ∘ θT_{s_{-n}}

SEEDING:
    numpy SeedSequence → PCG64 streams. One seed spawns independent child
    streams for the backward symbols, the forward symbols and the rotation
    base point, so extending a window never changes symbols already drawn.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from src.blaschke import BlaschkeProduct
from src.circle_numerics import CircleGrid
from src.domain.protocols import ConfigurationError, UnitComplex


ComplexLike = Union[complex, np.ndarray]


# ==============================================================================
# DRIVING SYSTEMS
# ==============================================================================

class DrivingKind(str, Enum):
    BERNOULLI = "bernoulli"
    ROTATION = "rotation"


@dataclass(frozen=True)
class DrivingSystem:
    """
    Invertible ergodic base.

    Bernoulli: i.i.d. symbols with probabilities p_1..p_k.
    Rotation: ω_{j+1} = ω_j + α (mod 1), symbol j on [c_{j-1}, c_j).
    """

    kind: DrivingKind
    probabilities: Tuple[float, ...] = ()
    alpha: Optional[float] = None
    thresholds: Tuple[float, ...] = ()

    def __post_init__(self) -> None:
        kind = DrivingKind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "probabilities", tuple(float(p) for p in self.probabilities))
        object.__setattr__(self, "thresholds", tuple(float(c) for c in self.thresholds))
        self.validate()

    @classmethod
    def bernoulli(cls, probabilities: Sequence[float]) -> "DrivingSystem":
        return cls(DrivingKind.BERNOULLI, probabilities=tuple(probabilities))

    @classmethod
    def rotation(cls, alpha: float, thresholds: Sequence[float]) -> "DrivingSystem":
        """
        Rotation by α with a threshold partition.

        Thresholds may be given in full (0 = c_0 < … < c_k = 1) or as the
        interior cut points only.
        """
        cuts = [float(c) for c in thresholds]
        if not cuts or cuts[0] != 0.0:
            cuts.insert(0, 0.0)
        if cuts[-1] != 1.0:
            cuts.append(1.0)
        return cls(DrivingKind.ROTATION, alpha=float(alpha), thresholds=tuple(cuts))

    def validate(self) -> None:
        if self.kind is DrivingKind.BERNOULLI:
            p = np.asarray(self.probabilities)
            if p.size == 0:
                raise ConfigurationError("Bernoulli driving needs at least one probability")
            if np.any(p < 0.0):
                raise ConfigurationError("Probabilities must be nonnegative")
            if abs(p.sum() - 1.0) > 1e-12:
                raise ConfigurationError(f"Probabilities sum to {p.sum()!r}, not 1")
        else:
            if self.alpha is None or not np.isfinite(self.alpha):
                raise ConfigurationError("Rotation driving needs a finite alpha")
            c = np.asarray(self.thresholds)
            if c.size < 2 or c[0] != 0.0 or c[-1] != 1.0:
                raise ConfigurationError("Thresholds must run from 0 to 1")
            if np.any(np.diff(c) <= 0.0):
                raise ConfigurationError("Thresholds must be strictly increasing")

    @property
    def alphabet_size(self) -> int:
        if self.kind is DrivingKind.BERNOULLI:
            return len(self.probabilities)
        return len(self.thresholds) - 1

    def symbol_probabilities(self) -> np.ndarray:
        """ℙ(symbol j): p_j, or the threshold interval lengths for a rotation."""
        if self.kind is DrivingKind.BERNOULLI:
            return np.asarray(self.probabilities, dtype=float)
        return np.diff(np.asarray(self.thresholds, dtype=float))

    def to_dict(self) -> dict:
        if self.kind is DrivingKind.BERNOULLI:
            return {"kind": self.kind.value, "p": list(self.probabilities)}
        return {"kind": self.kind.value, "alpha": self.alpha, "thresholds": list(self.thresholds)}


# ==============================================================================
# MAP TABLE
# ==============================================================================

@dataclass(frozen=True)
class MapTable:
    """Blaschke products indexed by symbol."""

    maps: Tuple[BlaschkeProduct, ...]

    def __post_init__(self) -> None:
        maps = tuple(self.maps)
        if not maps:
            raise ConfigurationError("A map table needs at least one map")
        if not all(isinstance(T, BlaschkeProduct) for T in maps):
            raise ConfigurationError("Map table entries must be Blaschke products")
        object.__setattr__(self, "maps", maps)

    def __len__(self) -> int:
        return len(self.maps)

    def __getitem__(self, symbol: int) -> BlaschkeProduct:
        return self.maps[symbol]

    def __iter__(self):
        return iter(self.maps)

    @property
    def degrees(self) -> list[int]:
        return [T.degree for T in self.maps]

    def rotated(self, theta: Union[UnitComplex, complex]) -> "MapTable":
        """Table of θ·T_j."""
        if complex(theta) == 1.0:
            return self
        return MapTable(tuple(T.rotated(theta) for T in self.maps))

    def to_dict(self) -> dict:
        return {"maps": [T.to_dict() for T in self.maps]}


# ==============================================================================
# REALIZED PATHS
# ==============================================================================

def derive_seed(master_seed: int, index: int) -> int:
    """Independent 63-bit seed for task `index` of a run seeded with `master_seed`."""
    state = np.random.SeedSequence([int(master_seed), int(index)]).generate_state(1, dtype=np.uint64)
    return int(state[0] >> np.uint64(1))


@dataclass(frozen=True, eq=False)
class CocyclePath:
    """
    Realized symbols s_{-n_back} … s_{n_fwd - 1} and the family parameter θ.

    `origin` shifts the time origin without copying (see `shifted`):
    index j of this view is index j + origin of the sampled window.
    """

    driving: DrivingSystem
    table: MapTable
    seed: int
    n_back: int
    n_fwd: int
    symbols: np.ndarray = field(repr=False)
    theta: UnitComplex = field(default_factory=UnitComplex.one)
    origin: int = 0

    @cached_property
    def effective_table(self) -> MapTable:
        return self.table.rotated(self.theta)

    @property
    def available_back(self) -> int:
        return self.n_back + self.origin

    @property
    def available_fwd(self) -> int:
        return self.n_fwd - self.origin

    def symbol(self, j: int) -> int:
        if not -self.available_back <= j < self.available_fwd:
            raise IndexError(
                f"Index {j} outside realized window [-{self.available_back}, {self.available_fwd})"
            )
        return int(self.symbols[self.n_back + self.origin + j])

    def window(self, start: int, stop: int) -> np.ndarray:
        """Symbols s_start … s_{stop-1}."""
        if start < -self.available_back or stop > self.available_fwd or start > stop:
            raise IndexError(f"Window [{start}, {stop}) outside realized path")
        offset = self.n_back + self.origin
        return self.symbols[offset + start:offset + stop]

    def map_at(self, j: int) -> BlaschkeProduct:
        """Effective map θ·T_{s_j}."""
        return self.effective_table[self.symbol(j)]

    def shifted(self, k: int) -> "CocyclePath":
        """The same realization seen from σ^k ω."""
        return replace(self, origin=self.origin + k)

    def with_theta(self, theta: Union[UnitComplex, complex]) -> "CocyclePath":
        theta = theta if isinstance(theta, UnitComplex) else UnitComplex(theta)
        return replace(self, theta=theta)


def sample_path(
    driving: DrivingSystem,
    table: MapTable,
    seed: int,
    n_back: int,
    n_fwd: int,
    theta: Optional[Union[UnitComplex, complex]] = None,
) -> CocyclePath:
    """
    Realize a two-sided window of the driving system.

    Bernoulli symbols are i.i.d. draws; rotation symbols come from a uniform
    base point ω₀ and ω_j = ω₀ + jα (mod 1).

    Example:
        >>> path = sample_path(DrivingSystem.bernoulli([1.0]), table, seed=1, n_back=3, n_fwd=3)
        >>> path.window(-3, 3).tolist()
        [0, 0, 0, 0, 0, 0]
    """
    if n_back < 0 or n_fwd < 0:
        raise ValueError("Window lengths must be nonnegative")
    if len(table) != driving.alphabet_size:
        raise ConfigurationError(
            f"Driving has {driving.alphabet_size} symbols but the table has {len(table)} maps"
        )

    back_seq, fwd_seq, base_seq = np.random.SeedSequence(int(seed)).spawn(3)
    if driving.kind is DrivingKind.BERNOULLI:
        p = driving.symbol_probabilities()
        k = p.size
        backward = np.random.default_rng(back_seq).choice(k, size=n_back, p=p)
        forward = np.random.default_rng(fwd_seq).choice(k, size=n_fwd, p=p)
        symbols = np.concatenate([backward[::-1], forward]).astype(np.int64)
    else:
        omega0 = np.random.default_rng(base_seq).random()
        steps = np.arange(-n_back, n_fwd, dtype=float)
        omega = np.mod(omega0 + steps * driving.alpha, 1.0)
        cuts = np.asarray(driving.thresholds)
        symbols = np.searchsorted(cuts, omega, side="right") - 1
        symbols = np.clip(symbols, 0, driving.alphabet_size - 1).astype(np.int64)

    theta = UnitComplex.one() if theta is None else theta
    theta = theta if isinstance(theta, UnitComplex) else UnitComplex(theta)
    symbols.setflags(write=False)
    return CocyclePath(
        driving=driving,
        table=table,
        seed=int(seed),
        n_back=int(n_back),
        n_fwd=int(n_fwd),
        symbols=symbols,
        theta=theta,
    )


# ==============================================================================
# COMPOSITIONS
# ==============================================================================

def forward_compose(path: CocyclePath, j: int, n: int, z: ComplexLike) -> ComplexLike:
    """θT_{s_{j+n-1}} ∘ … ∘ θT_{s_j} applied to z (scalar or array)."""
    for i in range(j, j + n):
        z = path.map_at(i)(z)
    return z


def backward_compose(path: CocyclePath, n: int, z: ComplexLike = 0.0) -> ComplexLike:
    """θT_{s_{-1}} ∘ … ∘ θT_{s_{-n}} applied to z (scalar or array)."""
    if n > path.available_back:
        raise IndexError(f"Need {n} backward symbols, path has {path.available_back}")
    for m in range(n, 0, -1):
        z = path.map_at(-m)(z)
    return z


def backward_compose_at_zero(path: CocyclePath, n: int) -> complex:
    return complex(backward_compose(path, n, 0.0))


def backward_iterates(path: CocyclePath, n_max: int, z: complex = 0.0) -> np.ndarray:
    """
    x_n = T^{(n)}_{σ^{-n}ω}(z) for n = 1 … n_max, as one array.

    Chains of different length share their outer maps, so each map s_{-m}
    is applied once to the block of all chains that contain it.
    """
    if n_max > path.available_back:
        raise IndexError(f"Need {n_max} backward symbols, path has {path.available_back}")
    chains = np.empty(n_max, dtype=complex)
    for m in range(n_max, 0, -1):
        chains[m - 1] = z
        chains[m - 1:] = path.map_at(-m)(chains[m - 1:])
    return chains


def uniform_contraction_radius(table: MapTable, R: float, N: int = 4096) -> float:
    """max over the table of sup_{|z|=R} |T(z)| (grid sup)."""
    if not 0.0 < R < 1.0:
        raise ValueError(f"Radius must lie in (0, 1), got {R}")
    ring = R * CircleGrid(N).z
    radius = max(float(np.max(np.abs(T(ring)))) for T in table)
    logger.debug(f"r_T({R}) = {radius:.12g}")
    return radius
