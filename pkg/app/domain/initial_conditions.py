from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np
from scipy import optimize, special

from app.domain.discrete import find_two_cycle
from app.domain.errors import DomainValidationError, ProfileTruncationError
from app.domain.models import DensityProfile, FloatArray, Grid, ModelParams
from app.domain.pde import firing_rate
from app.domain.specfun import ROOT_XTOL, eval_f, pseudo_equilibrium_profile

logger = logging.getLogger("runtime")

# Gaussian mass allowed past v_fire before the double Maxwellian is rejected.
DOUBLE_MAXWELLIAN_TRUNCATION_TOL = 1e-3


@dataclass(frozen=True)
class InitialProfile:
    profile: DensityProfile
    # Firing rate the profile is built to emit at t = 0.
    nominal_rate: float


def ic_pseudo_equilibrium(params: ModelParams, grid: Grid, rate: float) -> InitialProfile:
    profile = pseudo_equilibrium_profile(params, rate, grid)
    nominal = eval_f(params, rate)
    logger.info("pseudo-equilibrium initial condition", extra={"b": params.b, "rate": rate, "nominal_rate": nominal})
    return InitialProfile(profile=profile, nominal_rate=nominal)


def ic_cycle_low(params: ModelParams, grid: Grid) -> InitialProfile:
    cycle = find_two_cycle(params)
    return InitialProfile(profile=pseudo_equilibrium_profile(params, cycle.n_plus, grid), nominal_rate=cycle.n_minus)


def ic_cycle_high(params: ModelParams, grid: Grid) -> InitialProfile:
    cycle = find_two_cycle(params)
    return InitialProfile(profile=pseudo_equilibrium_profile(params, cycle.n_minus, grid), nominal_rate=cycle.n_plus)


def _finish(grid: Grid, values: FloatArray, a: float) -> InitialProfile:
    values[0] = 0.0
    values[-1] = 0.0
    mass = grid.trapezoid(values)
    if not mass > 0:
        raise DomainValidationError("initial profile has no mass on the grid")
    profile = DensityProfile(grid=grid, values=values / mass)
    return InitialProfile(profile=profile, nominal_rate=firing_rate(profile, a))


def ic_double_maxwellian(
    grid: Grid,
    mu: float,
    sigma: float,
    *,
    a: float = 1.0,
    truncation_tol: float = DOUBLE_MAXWELLIAN_TRUNCATION_TOL,
) -> InitialProfile:
    """Two Gaussians centered at mu and -mu - 2, truncated at v_fire."""
    if sigma <= 0:
        raise DomainValidationError("sigma must be positive")
    left_center = -mu - 2.0
    beyond = 0.5 * (
        special.ndtr((mu - grid.v_fire) / sigma) + special.ndtr((left_center - grid.v_fire) / sigma)
    )
    below = 0.5 * (special.ndtr((grid.v_min - mu) / sigma) + special.ndtr((grid.v_min - left_center) / sigma))
    deficit = float(beyond + below)
    if deficit > truncation_tol:
        raise ProfileTruncationError(
            f"double Maxwellian loses {deficit:.3e} of its mass outside [{grid.v_min}, {grid.v_fire}]",
            deficit=deficit,
        )
    v = grid.nodes
    scale = 1.0 / (math.sqrt(8.0 * math.pi) * sigma)
    values = scale * (np.exp(-((v - mu) ** 2) / (2 * sigma**2)) + np.exp(-((v - left_center) ** 2) / (2 * sigma**2)))
    return _finish(grid, values, a)


def ic_from_csv(path: Path, grid: Grid, *, a: float = 1.0) -> InitialProfile:
    """Gridded density with columns v, p interpolated onto `grid`."""
    try:
        table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise DomainValidationError(f"cannot read initial profile {path}: {exc}") from exc
    if table.shape[1] < 2:
        raise DomainValidationError(f"{path} needs columns v,p")
    order = np.argsort(table[:, 0])
    v, p = table[order, 0], table[order, 1]
    if np.any(p < 0):
        raise DomainValidationError(f"{path} has negative densities")
    values = np.interp(grid.nodes, v, p, left=0.0, right=0.0)
    return _finish(grid, values, a)


def ic_matched_firing_rate(params: ModelParams, grid: Grid, target: float) -> InitialProfile:
    """Pseudo-equilibrium whose firing slope f(N) equals `target`."""
    if params.b == 0:
        return ic_pseudo_equilibrium(params, grid, target)

    def residual(rate: float) -> float:
        return eval_f(params, rate) - target

    floor = residual(0.0)
    if floor == 0.0:
        return ic_pseudo_equilibrium(params, grid, 0.0)
    if (params.b > 0 and floor > 0) or (params.b < 0 and floor < 0):
        raise DomainValidationError(f"firing rate {target} is outside the range of f for b={params.b}")
    hi = max(1.0, target)
    while residual(hi) * floor > 0:
        hi *= 2.0
        if hi > 1e6:
            raise DomainValidationError(f"no pseudo-equilibrium emits firing rate {target}")
    rate = float(optimize.bisect(residual, 0.0, hi, xtol=ROOT_XTOL, maxiter=400))
    return ic_pseudo_equilibrium(params, grid, rate)


ICFamily = Literal["pseudo_equilibrium", "cycle_low", "cycle_high", "double_maxwellian", "csv"]
IC_FAMILIES: tuple[ICFamily, ...] = ("pseudo_equilibrium", "cycle_low", "cycle_high", "double_maxwellian", "csv")


@dataclass(frozen=True)
class InitialConditionSpec:
    """Named initial-condition family with its parameters.

    pseudo_equilibrium takes either `rate` (the frozen N) or `nominal_rate`
    (the firing slope f(N) to match).
    """

    family: ICFamily
    rate: float | None = None
    nominal_rate: float | None = None
    mu: float | None = None
    sigma: float | None = None
    path: Path | None = None


def build_initial_condition(params: ModelParams, grid: Grid, spec: InitialConditionSpec) -> InitialProfile:
    match spec.family:
        case "pseudo_equilibrium":
            if spec.nominal_rate is not None:
                return ic_matched_firing_rate(params, grid, spec.nominal_rate)
            if spec.rate is None:
                raise DomainValidationError("pseudo_equilibrium needs rate or nominal_rate")
            return ic_pseudo_equilibrium(params, grid, spec.rate)
        case "cycle_low":
            return ic_cycle_low(params, grid)
        case "cycle_high":
            return ic_cycle_high(params, grid)
        case "double_maxwellian":
            if spec.mu is None or spec.sigma is None:
                raise DomainValidationError("double_maxwellian needs mu and sigma")
            return ic_double_maxwellian(grid, spec.mu, spec.sigma, a=params.a)
        case "csv":
            if spec.path is None:
                raise DomainValidationError("csv initial condition needs a path")
            return ic_from_csv(spec.path, grid, a=params.a)
    raise DomainValidationError(f"unknown initial condition family: {spec.family}")
