"""Delayed nonlinear Fokker-Planck solver on a voltage mesh.

Transport uses WENO5 with global Lax-Friedrichs splitting for the drift
(-v + b N(t - d)) and centered second differences for diffusion. Mass leaving
through v_fire is reinjected around v_reset by a mesh-normalized Maxwellian.
Time stepping is the three-stage SSP Runge-Kutta scheme.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np

from app.domain.errors import DomainValidationError, SimulationInstabilityError
from app.domain.models import DensityProfile, FloatArray, Grid, ModelParams, SimRecord
from app.lib.numerics.delay import DelayBuffer, FrozenRate, RateHistory
from app.lib.numerics.weno import second_difference, weno5_flux_derivative

logger = logging.getLogger("runtime")

DEFAULT_DV = 0.02
DEFAULT_SIGMA = 1e-6
DEFAULT_C_CFL = 0.5
CFL_SAFETY = 0.9
MASS_DRIFT_TOL = 1e-4
UNDERSHOOT_TOL = 1e-8

ReinjectionMode = Literal["boundary_flux", "firing_rate"]


@dataclass(frozen=True)
class SimOptions:
    sigma: float = DEFAULT_SIGMA
    single_node_source: bool = False
    c_cfl: float = DEFAULT_C_CFL
    safety: float = CFL_SAFETY
    # boundary_flux reinjects the discrete outflow; firing_rate uses the stencil N(t).
    reinjection: ReinjectionMode = "boundary_flux"
    divergence_cap: float | None = None
    progress_every: float | None = None


@dataclass(frozen=True)
class SimState:
    """Solver state; `history` is shared and appended by every step."""

    params: ModelParams
    grid: Grid
    source: FloatArray
    options: SimOptions
    history: RateHistory
    t: float
    values: FloatArray
    rate: float


def default_v_min_for(params: ModelParams) -> float:
    return -10.0 if params.b < -5 else -6.0


def make_grid(params: ModelParams, v_min: float | None = None, dv: float = DEFAULT_DV) -> Grid:
    if v_min is None:
        v_min = default_v_min_for(params)
    if not v_min < params.v_reset:
        raise DomainValidationError(f"v_min={v_min} must lie below v_reset={params.v_reset}")
    if dv <= 0:
        raise DomainValidationError("dv must be positive")

    width = params.v_fire - params.v_reset
    cells_above_reset = max(1, round(width / dv))
    snapped = width / cells_above_reset
    # v_min moves down onto the lattice through v_reset.
    i_vr = math.ceil((params.v_reset - v_min) / snapped - 1e-9)
    grid = Grid(
        v_min=params.v_reset - i_vr * snapped,
        dv=snapped,
        n_v=i_vr + cells_above_reset,
        i_vr=i_vr,
        v_reset=params.v_reset,
        v_fire=params.v_fire,
    )
    if snapped != dv:
        logger.debug("grid spacing snapped", extra={"requested_dv": dv, "dv": snapped, "v_min": grid.v_min})
    return grid


def source_profile(grid: Grid, sigma: float = DEFAULT_SIGMA, *, single_node: bool = False) -> FloatArray:
    if sigma <= 0:
        raise DomainValidationError("sigma must be positive")
    weights = np.zeros(grid.n_v + 1)
    if single_node:
        weights[grid.i_vr] = 1.0 / grid.dv
        return weights
    sigma_eff = max(sigma, grid.dv)
    weights = np.exp(-((grid.nodes - grid.v_reset) ** 2) / (2.0 * sigma_eff * sigma_eff))
    weights[0] = 0.0
    weights[-1] = 0.0
    return weights / grid.trapezoid(weights)


def _boundary_rate(values: FloatArray, dv: float, a: float) -> float:
    rate = -a * (3.0 * values[-1] - 4.0 * values[-2] + values[-3]) / (2.0 * dv)
    return max(float(rate), 0.0)


def firing_rate(profile: DensityProfile, a: float) -> float:
    return _boundary_rate(profile.values, profile.grid.dv, a)


def advection_rhs(profile: DensityProfile, drift_speed: FloatArray) -> FloatArray:
    return -weno5_flux_derivative(profile.values, drift_speed, profile.grid.dv)


def diffusion_rhs(profile: DensityProfile, a: float) -> FloatArray:
    return a * second_difference(profile.values, profile.grid.dv)


def cfl_dt(
    params: ModelParams,
    grid: Grid,
    n_del_max: float,
    c_cfl: float = DEFAULT_C_CFL,
    *,
    safety: float = CFL_SAFETY,
) -> float:
    if n_del_max < 0:
        raise DomainValidationError("delayed firing rate must be non-negative")
    shift = params.b * n_del_max
    drift_max = max(abs(shift - grid.v_min), abs(shift - grid.v_fire))
    diffusion_bound = params.a * grid.dv * grid.dv / 2.0
    advection_bound = c_cfl * grid.dv / drift_max if drift_max > 0 else math.inf
    return safety * min(diffusion_bound, advection_bound)


def _transport(state: SimState, values: FloatArray, delayed_rate: float) -> FloatArray:
    grid, params = state.grid, state.params
    speed = -grid.nodes + params.b * delayed_rate
    rhs = -weno5_flux_derivative(values, speed, grid.dv) + params.a * second_difference(values, grid.dv)
    rhs[0] = 0.0
    rhs[-1] = 0.0
    if state.options.reinjection == "boundary_flux":
        strength = -grid.dv * float(np.sum(rhs))
    else:
        strength = _boundary_rate(values, grid.dv, params.a)
    return rhs + strength * state.source


def _pin_boundaries(values: FloatArray) -> FloatArray:
    values[0] = 0.0
    values[-1] = 0.0
    return values


def step_rk3(state: SimState, dt: float) -> SimState:
    """One SSP-RK3 step with N(t - d) frozen over the stages."""
    delayed = state.history.lookup(state.t - state.params.d)
    p0 = state.values
    p1 = _pin_boundaries(p0 + dt * _transport(state, p0, delayed))
    p2 = _pin_boundaries(0.75 * p0 + 0.25 * (p1 + dt * _transport(state, p1, delayed)))
    p3 = _pin_boundaries(p0 / 3.0 + 2.0 / 3.0 * (p2 + dt * _transport(state, p2, delayed)))

    t_new = state.t + dt
    if not np.all(np.isfinite(p3)):
        raise SimulationInstabilityError(f"non-finite density at t={t_new:.6g}", t=t_new)
    drift = abs(state.grid.trapezoid(p3) - state.grid.trapezoid(p0))
    if drift > MASS_DRIFT_TOL:
        raise SimulationInstabilityError(f"mass drifted by {drift:.3e} in one step at t={t_new:.6g}", t=t_new)

    rate = _boundary_rate(p3, state.grid.dv, state.params.a)
    state.history.append(t_new, rate)
    return replace(state, t=t_new, values=p3, rate=rate)


def initial_state(
    params: ModelParams,
    initial: DensityProfile,
    *,
    history: RateHistory | None = None,
    options: SimOptions | None = None,
) -> SimState:
    options = options or SimOptions()
    values = np.array(initial.values, dtype=np.float64)
    _pin_boundaries(values)
    rate = _boundary_rate(values, initial.grid.dv, params.a)
    if history is None:
        history = DelayBuffer(delay=params.d, initial_rate=rate)
    history.append(0.0, rate)
    return SimState(
        params=params,
        grid=initial.grid,
        source=source_profile(initial.grid, options.sigma, single_node=options.single_node_source),
        options=options,
        history=history,
        t=0.0,
        values=values,
        rate=rate,
    )


def _snapshot(grid: Grid, values: FloatArray) -> DensityProfile:
    return DensityProfile(grid=grid, values=values.copy())


def _run(state: SimState, t_end: float, snapshot_times: Iterable[float]) -> SimRecord:
    if not t_end > 0:
        raise DomainValidationError("t_end must be positive")
    params, grid, options = state.params, state.grid, state.options
    pending = sorted(float(s) for s in snapshot_times if 0.0 <= s <= t_end)
    snapshots: dict[float, DensityProfile] = {}
    while pending and pending[0] <= 0.0:
        snapshots[pending.pop(0)] = _snapshot(grid, state.values)

    times = [0.0]
    rates = [state.rate]
    masses = [grid.trapezoid(state.values)]
    diverged = False
    next_progress = options.progress_every or math.inf
    min_undershoot = float(np.min(state.values))

    logger.info(
        "simulation started",
        extra={"b": params.b, "d": params.d, "t_end": t_end, "dv": grid.dv, "n_v": grid.n_v},
    )
    while state.t < t_end - 1e-12:
        delayed = state.history.lookup(state.t - params.d)
        dt = min(cfl_dt(params, grid, delayed, options.c_cfl, safety=options.safety), t_end - state.t)
        previous = state
        state = step_rk3(state, dt)

        while pending and pending[0] <= state.t:
            target = pending.pop(0)
            nearest = previous if target - previous.t < state.t - target else state
            snapshots[target] = _snapshot(grid, nearest.values)

        times.append(state.t)
        rates.append(state.rate)
        masses.append(grid.trapezoid(state.values))
        min_undershoot = min(min_undershoot, float(np.min(state.values)))

        if state.t >= next_progress:
            logger.info(
                "simulation progress",
                extra={"b": params.b, "d": params.d, "t": state.t, "rate": state.rate, "mass": masses[-1]},
            )
            next_progress += options.progress_every or math.inf
        if options.divergence_cap is not None and state.rate > options.divergence_cap:
            diverged = True
            logger.info(
                "firing rate crossed divergence cap",
                extra={"b": params.b, "d": params.d, "t": state.t, "rate": state.rate},
            )
            break

    if min_undershoot < -UNDERSHOOT_TOL:
        logger.warning("density undershoot", extra={"b": params.b, "d": params.d, "min_value": min_undershoot})
    logger.info(
        "simulation finished",
        extra={"b": params.b, "d": params.d, "t": state.t, "rate": state.rate, "steps": len(times) - 1},
    )
    return SimRecord(
        params=params,
        grid=grid,
        times=np.asarray(times),
        rates=np.asarray(rates),
        masses=np.asarray(masses),
        snapshots=snapshots,
        final=_snapshot(grid, state.values),
        diverged=diverged,
    )


def simulate(
    params: ModelParams,
    initial: DensityProfile,
    t_end: float,
    snapshot_times: Iterable[float] = (),
    *,
    options: SimOptions | None = None,
) -> SimRecord:
    state = initial_state(params, initial, options=options)
    return _run(state, t_end, snapshot_times)


def simulate_linear(
    params: ModelParams,
    initial: DensityProfile,
    frozen_rate: float,
    t_end: float,
    snapshot_times: Iterable[float] = (),
    *,
    options: SimOptions | None = None,
) -> SimRecord:
    """Linear problem with the delayed firing rate frozen at `frozen_rate`."""
    state = initial_state(params, initial, history=FrozenRate(frozen_rate), options=options)
    return _run(state, t_end, snapshot_times)
