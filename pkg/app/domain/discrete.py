"""Firing-rate sequence N_{k+1} = f(N_k) and its pseudo-equilibria."""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence

import numpy as np
from scipy import optimize

from app.domain.errors import DomainValidationError, MonotonicityViolationError, NoCycleFoundError
from app.domain.models import (
    Classification,
    ConvergedToFixedPoint,
    DensityProfile,
    Diverging,
    FiringRateTrajectory,
    Grid,
    ModelParams,
    MonotoneDirection,
    MonotonicityReport,
    RegimeName,
    StationarySet,
    TwoCycle,
    Undetermined,
)
from app.domain.specfun import (
    ROOT_XTOL,
    eval_F,
    eval_f,
    pseudo_equilibrium_profile,
    solve_stationary,
)

logger = logging.getLogger("runtime")

DEFAULT_TOL = 1e-9
DEFAULT_MAX_K = 10_000
CYCLE_SCAN_POINTS = 200
# Relative half-width of the window around N* skipped by the cycle scan.
_CYCLE_EXCLUSION = 1e-6
# Differences at or below this are treated as equal in monotonicity checks.
_MONOTONE_SLACK = 1e-12


def default_divergence_cap(stationary: StationarySet) -> float:
    return 10.0 * max((1.0, *stationary.rates))


def iterate_firing_rate(
    params: ModelParams,
    n0: float,
    *,
    max_k: int = DEFAULT_MAX_K,
    tol: float = DEFAULT_TOL,
    divergence_cap: float | None = None,
) -> FiringRateTrajectory:
    if n0 < 0 or not math.isfinite(n0):
        raise DomainValidationError("initial firing rate must be a non-negative number")
    if max_k < 1:
        raise DomainValidationError("max_k must be at least 1")
    if tol <= 0:
        raise DomainValidationError("tol must be positive")

    stationary = solve_stationary(params)
    cap = divergence_cap if divergence_cap is not None else default_divergence_cap(stationary)
    values = [n0]
    classification: Classification = Undetermined()

    for _ in range(max_k):
        current = values[-1]
        nxt = eval_f(params, current)
        values.append(nxt)

        if abs(nxt - current) < tol:
            if any(abs(nxt - rate) < 10.0 * tol for rate in stationary.rates):
                classification = ConvergedToFixedPoint(limit=nxt)
                break
            continue

        k = len(values) - 1
        if (
            k >= 3
            and abs(values[k] - values[k - 2]) < tol
            and abs(values[k - 1] - values[k - 3]) < tol
            and abs(values[k] - values[k - 1]) > 10.0 * tol
        ):
            n_minus, n_plus = sorted((values[k - 1], values[k]))
            classification = TwoCycle(
                n_minus=n_minus,
                n_plus=n_plus,
                residual=abs(eval_F(params, n_minus) - n_minus),
            )
            break

        if params.b > 0 and nxt > cap and eval_f(params, nxt) > nxt:
            classification = Diverging()
            break

    trajectory = FiringRateTrajectory(
        params=params,
        values=tuple(values),
        classification=classification,
        iterations_used=len(values) - 1,
    )
    logger.info(
        "trajectory classified",
        extra={
            "b": params.b,
            "n0": n0,
            "classification": classification.kind,
            "iterations": trajectory.iterations_used,
        },
    )
    return trajectory


def firing_rate_sequence(params: ModelParams, n0: float, steps: int, *, cap: float = math.inf) -> list[float]:
    """N_0..N_steps without classification; stops early once N exceeds `cap`."""
    values = [n0]
    for _ in range(steps):
        if values[-1] > cap:
            break
        values.append(eval_f(params, values[-1]))
    return values


def _refine_sign_changes(residual: Callable[[float], float], grid: Sequence[float]) -> list[float]:
    samples = [residual(x) for x in grid]
    roots: list[float] = []
    for lo, hi, h_lo, h_hi in zip(grid, grid[1:], samples, samples[1:]):
        if h_lo == 0.0:
            roots.append(lo)
        elif h_lo * h_hi < 0:
            roots.append(float(optimize.bisect(residual, lo, hi, xtol=ROOT_XTOL, maxiter=400)))
    return roots


def fixed_points_of_F(params: ModelParams) -> list[float]:
    """Fixed points of f o f on [0, f(0)], including the stationary rate."""
    if params.b > 0:
        raise DomainValidationError("fixed points of F are scanned for b <= 0")
    n_star = solve_stationary(params).roots[0].rate
    ceiling = eval_f(params, 0.0)

    def residual(rate: float) -> float:
        return eval_F(params, rate) - rate

    left_edge = n_star * (1.0 - _CYCLE_EXCLUSION)
    right_edge = n_star * (1.0 + _CYCLE_EXCLUSION)
    left = [0.0, *np.geomspace(min(1e-12, left_edge / 2.0), left_edge, CYCLE_SCAN_POINTS).tolist()]
    right = np.linspace(right_edge, ceiling, CYCLE_SCAN_POINTS).tolist()
    points = _refine_sign_changes(residual, left) + [n_star] + _refine_sign_changes(residual, right)
    return sorted(points)


def find_two_cycle(params: ModelParams) -> TwoCycle:
    points = fixed_points_of_F(params)
    n_star = solve_stationary(params).roots[0].rate
    below = [rate for rate in points if rate < n_star * (1.0 - _CYCLE_EXCLUSION)]
    above = [rate for rate in points if rate > n_star * (1.0 + _CYCLE_EXCLUSION)]
    if not below or not above:
        raise NoCycleFoundError(f"only the stationary rate {n_star} is a fixed point of f o f at b={params.b}")
    n_minus = below[-1]
    n_plus = above[0]
    cycle = TwoCycle(n_minus=n_minus, n_plus=n_plus, residual=abs(eval_F(params, n_minus) - n_minus))
    logger.info(
        "two-cycle located",
        extra={"b": params.b, "n_minus": n_minus, "n_plus": n_plus, "residual": cycle.residual},
    )
    return cycle


def _direction(values: Sequence[float], *, offset: int = 0, stride: int = 1) -> MonotoneDirection:
    """Direction of `values`; raises at the first step that breaks it."""
    direction: MonotoneDirection = "constant"
    for i, (prev, cur) in enumerate(zip(values, values[1:])):
        step = cur - prev
        slack = _MONOTONE_SLACK * max(1.0, abs(prev))
        if abs(step) <= slack:
            continue
        observed: MonotoneDirection = "increasing" if step > 0 else "decreasing"
        if direction == "constant":
            direction = observed
        elif observed != direction:
            index = offset + stride * (i + 1)
            raise MonotonicityViolationError(f"sequence turns {observed} at index {index}", index=index)
    return direction


def monotonicity_report(trajectory: FiringRateTrajectory) -> MonotonicityReport:
    values = trajectory.values
    if len(values) < 2:
        raise DomainValidationError("monotonicity report needs at least two values")
    params = trajectory.params

    if params.b >= 0:
        return MonotonicityReport(kind="monotone", direction=_direction(values))

    n_star = solve_stationary(params).roots[0].rate
    even = _direction(values[0::2], stride=2)
    odd = _direction(values[1::2], offset=1, stride=2)
    if "constant" not in (even, odd) and even == odd:
        raise MonotonicityViolationError("even and odd subsequences move in the same direction", index=2)
    for k in range(1, len(values) - 1):
        lo, hi = values[k], values[k + 1]
        slack = _MONOTONE_SLACK * max(1.0, n_star)
        if (lo - n_star) * (hi - n_star) > slack:
            raise MonotonicityViolationError(f"values {k} and {k + 1} lie on the same side of N*", index=k + 1)
    if even == odd == "constant":
        return MonotonicityReport(kind="monotone", direction="constant", even_direction=even, odd_direction=odd)
    return MonotonicityReport(kind="alternating", direction="constant", even_direction=even, odd_direction=odd)


def pseudo_equilibria_sequence(
    params: ModelParams, trajectory: FiringRateTrajectory, grid: Grid
) -> list[DensityProfile]:
    if not trajectory.values:
        raise DomainValidationError("trajectory is empty")
    return [pseudo_equilibrium_profile(params, rate, grid) for rate in trajectory.values[:-1]]


def classify_regime(params: ModelParams, *, b_star: float | None = None) -> RegimeName:
    """Analytic regime from root count and slopes."""
    stationary = solve_stationary(params)
    if params.b <= 0:
        slope = stationary.roots[0].slope
        if b_star is not None:
            return "two_cycle" if params.b < b_star else "stable_inhibitory"
        return "two_cycle" if slope < -1.0 else "stable_inhibitory"
    if stationary.count == 0:
        return "no_equilibrium"
    if stationary.count == 1:
        return "stable_equilibrium"
    return "bistable"
