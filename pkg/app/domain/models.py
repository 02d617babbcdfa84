from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Literal

import numpy as np
from numpy.typing import NDArray

from app.domain.errors import DomainValidationError

FloatArray = NDArray[np.float64]


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters shared by every module.

    `b` is the connectivity (excitatory when positive), `a` the diffusion
    coefficient and `d` the synaptic delay.
    """

    b: float
    a: float = 1.0
    v_reset: float = 1.0
    v_fire: float = 2.0
    d: float = 0.0

    def __post_init__(self) -> None:
        for name in ("b", "a", "v_reset", "v_fire", "d"):
            if not math.isfinite(getattr(self, name)):
                raise DomainValidationError(f"{name} must be finite")
        if self.v_reset >= self.v_fire:
            raise DomainValidationError("v_reset must be below v_fire")
        if self.a <= 0:
            raise DomainValidationError("a must be positive")
        if self.d < 0:
            raise DomainValidationError("d must be non-negative")

    def with_b(self, b: float) -> ModelParams:
        return replace(self, b=b)

    def with_delay(self, d: float) -> ModelParams:
        return replace(self, d=d)


@dataclass(frozen=True)
class StationaryRoot:
    rate: float
    # f'(N*) with f = 1/I.
    slope: float


@dataclass(frozen=True)
class StationarySet:
    params: ModelParams
    roots: tuple[StationaryRoot, ...]

    def __post_init__(self) -> None:
        rates = [root.rate for root in self.roots]
        if any(lo >= hi for lo, hi in zip(rates, rates[1:])):
            raise DomainValidationError("stationary roots must be strictly increasing")

    @property
    def count(self) -> int:
        return len(self.roots)

    @property
    def rates(self) -> tuple[float, ...]:
        return tuple(root.rate for root in self.roots)


@dataclass(frozen=True)
class Grid:
    """Uniform voltage mesh with v_reset and v_fire on nodes.

    Nodes run from index 0 (v_min) to index n_v (v_fire).
    """

    v_min: float
    dv: float
    n_v: int
    i_vr: int
    v_reset: float
    v_fire: float

    @cached_property
    def nodes(self) -> FloatArray:
        nodes = self.v_reset + self.dv * (np.arange(self.n_v + 1, dtype=np.float64) - self.i_vr)
        nodes[0] = self.v_min
        nodes[self.i_vr] = self.v_reset
        nodes[-1] = self.v_fire
        nodes.flags.writeable = False
        return nodes

    def trapezoid(self, values: FloatArray) -> float:
        return float(np.trapezoid(values, dx=self.dv))


@dataclass(frozen=True)
class DensityProfile:
    grid: Grid
    values: FloatArray

    def __post_init__(self) -> None:
        if self.values.shape != (self.grid.n_v + 1,):
            raise DomainValidationError(
                f"profile has {self.values.shape[0]} values, grid needs {self.grid.n_v + 1}"
            )
        self.values.flags.writeable = False

    @property
    def mass(self) -> float:
        return self.grid.trapezoid(self.values)


@dataclass(frozen=True)
class ConvergedToFixedPoint:
    limit: float
    kind: Literal["converged"] = "converged"


@dataclass(frozen=True)
class TwoCycle:
    n_minus: float
    n_plus: float
    # |F(N-) - N-| with F = f o f.
    residual: float
    kind: Literal["two_cycle"] = "two_cycle"

    def __post_init__(self) -> None:
        if not self.n_minus < self.n_plus:
            raise DomainValidationError("two-cycle requires n_minus < n_plus")


@dataclass(frozen=True)
class Diverging:
    kind: Literal["diverging"] = "diverging"


@dataclass(frozen=True)
class Undetermined:
    kind: Literal["undetermined"] = "undetermined"


Classification = ConvergedToFixedPoint | TwoCycle | Diverging | Undetermined


@dataclass(frozen=True)
class FiringRateTrajectory:
    params: ModelParams
    values: tuple[float, ...]
    classification: Classification
    iterations_used: int


MonotoneDirection = Literal["increasing", "decreasing", "constant"]


@dataclass(frozen=True)
class MonotonicityReport:
    kind: Literal["monotone", "alternating"]
    direction: MonotoneDirection
    even_direction: MonotoneDirection | None = None
    odd_direction: MonotoneDirection | None = None


RegimeName = Literal[
    "stable_equilibrium",
    "bistable",
    "no_equilibrium",
    "stable_inhibitory",
    "two_cycle",
]


@dataclass(frozen=True)
class SimRecord:
    params: ModelParams
    grid: Grid
    times: FloatArray
    rates: FloatArray
    masses: FloatArray
    snapshots: dict[float, DensityProfile]
    final: DensityProfile
    # Set when N(t) crossed the divergence cap before t_end.
    diverged: bool = False

    @property
    def t_end(self) -> float:
        return float(self.times[-1])


@dataclass(frozen=True)
class SteadyState:
    rate: float
    kind: Literal["steady"] = "steady"


@dataclass(frozen=True)
class Plateau:
    kind: Literal["plateau"] = "plateau"


@dataclass(frozen=True)
class Periodic:
    period: float
    n_min: float
    n_max: float
    kind: Literal["periodic"] = "periodic"


PdeVerdict = SteadyState | Plateau | Periodic | Undetermined


@dataclass(frozen=True)
class ExperimentReport:
    label: str
    params: ModelParams
    initial_rate: float
    discrete: Classification
    pde: PdeVerdict
    agreement: bool
    # Sup-norm distances ||p(., kd) - p_{k,inf}|| for k = 1..K.
    sup_distances: tuple[float, ...] = ()
    # |N(kd) - N_{k,inf}| for k = 1..K.
    rate_deviations: tuple[float, ...] = ()
    final_rate: float = 0.0
    diverged: bool = False
    record: SimRecord | None = field(default=None, compare=False, repr=False)
