"""Long-time verdicts for simulated firing-rate records."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import signal

from app.domain.errors import DomainValidationError
from app.domain.models import (
    DensityProfile,
    FloatArray,
    ModelParams,
    PdeVerdict,
    Periodic,
    Plateau,
    SimRecord,
    SteadyState,
    Undetermined,
)
from app.domain.specfun import pseudo_equilibrium_profile, solve_stationary

logger = logging.getLogger("runtime")


@dataclass(frozen=True)
class DetectorSettings:
    # Relative to max(target, steady_rate_floor).
    steady_tol: float = 0.1
    steady_rate_floor: float = 1e-2
    steady_profile_tol: float = 5e-2
    plateau_tol: float = 0.15
    plateau_min_mass: float = 0.9
    periodic_min_cycles: int = 3
    periodic_amplitude_tol: float = 0.10
    periodic_period_tol: float = 0.05
    # Peaks lower than this share of the trailing range are ignored.
    periodic_prominence: float = 0.5
    # Swings smaller than this share of max N(t) are treated as settling, not oscillation.
    periodic_min_swing: float = 0.05
    plateau_blocks: int = 5


@dataclass(frozen=True)
class SteadyCheck:
    is_steady: bool
    residual: float
    profile_distance: float
    level: float


@dataclass(frozen=True)
class PeriodicCheck:
    is_periodic: bool
    period: float = 0.0
    n_min: float = 0.0
    n_max: float = 0.0
    cycles: int = 0


@dataclass(frozen=True)
class PlateauCheck:
    is_plateau: bool
    increasing: bool
    flatness: float
    mass_between: float


def default_window(record: SimRecord) -> float:
    """Trailing 20% of the run or 4d, never longer than the run."""
    t_end = record.t_end
    return min(max(0.2 * t_end, 4.0 * record.params.d), t_end)


def _trailing(record: SimRecord, window: float) -> tuple[FloatArray, FloatArray]:
    mask = record.times >= record.t_end - window
    return record.times[mask], record.rates[mask]


def detect_steady(
    record: SimRecord,
    target: float,
    *,
    window: float | None = None,
    tol: float = DetectorSettings.steady_tol,
    profile_tol: float = DetectorSettings.steady_profile_tol,
    rate_floor: float = DetectorSettings.steady_rate_floor,
) -> SteadyCheck:
    """Trailing N(t) within `tol` of `target`, relative to max(target, rate_floor).

    The final profile must also sit within `profile_tol` (sup norm) of the
    stationary profile for `target`. `level` is the trailing mean of N(t).
    """
    window = default_window(record) if window is None else window
    if window > record.t_end:
        raise DomainValidationError(f"record spans {record.t_end}, shorter than window {window}")
    _, rates = _trailing(record, window)
    residual = float(np.max(np.abs(rates - target))) / max(target, rate_floor)
    stationary = pseudo_equilibrium_profile(record.params, target, record.grid)
    distance = float(np.max(np.abs(record.final.values - stationary.values)))
    return SteadyCheck(
        is_steady=residual < tol and distance < profile_tol,
        residual=residual,
        profile_distance=distance,
        level=float(np.mean(rates)),
    )


def detect_periodic(
    record: SimRecord,
    min_cycles: int = DetectorSettings.periodic_min_cycles,
    *,
    amplitude_tol: float = DetectorSettings.periodic_amplitude_tol,
    period_tol: float = DetectorSettings.periodic_period_tol,
    prominence: float = DetectorSettings.periodic_prominence,
    min_swing: float = DetectorSettings.periodic_min_swing,
) -> PeriodicCheck:
    """Period from successive maxima of N(t) over the trailing part of the record.

    The window is the trailing half, widened to hold `min_cycles` maxima of a
    putative 2d period when the record allows it.
    """
    d = record.params.d
    t_end = record.t_end
    window = max(0.5 * t_end, (min_cycles + 0.5) * 2.0 * d)
    window = min(window, t_end)
    times, rates = _trailing(record, window)
    if times.size < 8:
        return PeriodicCheck(is_periodic=False)
    spread = float(np.max(rates) - np.min(rates))
    if spread <= min_swing * float(np.max(np.abs(rates))):
        return PeriodicCheck(is_periodic=False)

    # Resample on a uniform clock; steps shrink and grow with the CFL rule.
    step = max(float(np.median(np.diff(times))), window / 200_000.0)
    uniform_t = np.arange(times[0], times[-1], step)
    uniform_n = np.interp(uniform_t, times, rates)
    spacing = max(1, int(0.5 * d / step)) if d > 0 else 1
    peaks, _ = signal.find_peaks(uniform_n, prominence=prominence * spread, distance=spacing)
    if peaks.size < min_cycles:
        return PeriodicCheck(is_periodic=False, cycles=int(peaks.size))

    peak_times = uniform_t[peaks]
    periods = np.diff(peak_times)
    amplitudes = np.array(
        [uniform_n[lo] - float(np.min(uniform_n[lo : hi + 1])) for lo, hi in zip(peaks, peaks[1:])]
    )
    period = float(np.mean(periods))
    period_spread = float(np.max(periods) - np.min(periods)) / period
    amplitude_spread = float(np.max(amplitudes) - np.min(amplitudes)) / float(np.mean(amplitudes))
    is_periodic = period_spread <= period_tol and amplitude_spread <= amplitude_tol
    first, last = int(peaks[0]), int(peaks[-1])
    return PeriodicCheck(
        is_periodic=is_periodic,
        period=period,
        n_min=float(np.min(uniform_n[first : last + 1])),
        n_max=float(np.max(uniform_n[first : last + 1])),
        cycles=int(peaks.size),
    )


def rates_increasing(
    record: SimRecord,
    *,
    window: float | None = None,
    blocks: int = DetectorSettings.plateau_blocks,
) -> bool:
    """Block means of N(t) over the trailing window strictly increase."""
    window = default_window(record) if window is None else window
    times, rates = _trailing(record, window)
    if times.size < blocks:
        return False
    edges = np.linspace(times[0], times[-1], blocks + 1)
    means = []
    for lo, hi in zip(edges, edges[1:]):
        selected = rates[(times >= lo) & (times <= hi)]
        if selected.size == 0:
            return False
        means.append(float(np.mean(selected)))
    return all(lo < hi for lo, hi in zip(means, means[1:]))


def detect_plateau(
    record: SimRecord,
    final_profile: DensityProfile | None = None,
    *,
    window: float | None = None,
    plateau_tol: float = DetectorSettings.plateau_tol,
    min_mass: float = DetectorSettings.plateau_min_mass,
) -> PlateauCheck:
    """Increasing N(t) with a flat profile holding most mass on (v_reset, v_fire).

    Flatness is measured on the central half of (v_reset, v_fire); the
    boundary layers at both ends shrink like 1/(bN) but never vanish.
    """
    profile = final_profile or record.final
    grid = profile.grid
    v = grid.nodes
    between = slice(grid.i_vr, grid.n_v + 1)
    mass_between = float(np.trapezoid(profile.values[between], dx=grid.dv))

    quarter = 0.25 * (grid.v_fire - grid.v_reset)
    central = (v >= grid.v_reset + quarter) & (v <= grid.v_fire - quarter)
    segment = profile.values[central]
    mean = float(np.mean(segment)) if segment.size else 0.0
    flatness = float(np.max(np.abs(segment - mean)) / mean) if mean > 0 else float("inf")

    increasing = rates_increasing(record, window=window)
    return PlateauCheck(
        is_plateau=increasing and flatness < plateau_tol and mass_between > min_mass,
        increasing=increasing,
        flatness=flatness,
        mass_between=mass_between,
    )


def classify_record(record: SimRecord, settings: DetectorSettings | None = None) -> PdeVerdict:
    """Exactly one verdict per record, checked plateau, periodic, steady.

    Plateau is also returned without the flat-profile and mass checks when
    N(t) keeps rising after the run crossed its divergence cap or once it sits
    above every stationary rate: there is nothing left for it to settle on.
    """
    settings = settings or DetectorSettings()
    params: ModelParams = record.params
    stationary = solve_stationary(params)

    plateau = detect_plateau(record, plateau_tol=settings.plateau_tol, min_mass=settings.plateau_min_mass)
    final_rate = float(record.rates[-1])
    escaping = plateau.increasing and all(final_rate > rate for rate in stationary.rates)
    if plateau.is_plateau or (plateau.increasing and (record.diverged or escaping)):
        verdict: PdeVerdict = Plateau()
    else:
        periodic = detect_periodic(
            record,
            settings.periodic_min_cycles,
            amplitude_tol=settings.periodic_amplitude_tol,
            period_tol=settings.periodic_period_tol,
            prominence=settings.periodic_prominence,
            min_swing=settings.periodic_min_swing,
        )
        if periodic.is_periodic:
            verdict = Periodic(period=periodic.period, n_min=periodic.n_min, n_max=periodic.n_max)
        else:
            verdict = _steady_verdict(record, stationary.rates, settings)

    logger.info("record classified", extra={"b": params.b, "d": params.d, "verdict": verdict.kind})
    return verdict


def _steady_verdict(record: SimRecord, rates: tuple[float, ...], settings: DetectorSettings) -> PdeVerdict:
    if not rates:
        return Undetermined()
    _, trailing = _trailing(record, default_window(record))
    level = float(np.mean(trailing))
    target = min(rates, key=lambda rate: abs(rate - level))
    check = detect_steady(
        record,
        target,
        tol=settings.steady_tol,
        profile_tol=settings.steady_profile_tol,
        rate_floor=settings.steady_rate_floor,
    )
    if check.is_steady:
        return SteadyState(rate=check.level)
    return Undetermined()
