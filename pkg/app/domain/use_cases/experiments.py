from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import signal

from app.domain.detectors import DetectorSettings, classify_record
from app.domain.discrete import firing_rate_sequence, iterate_firing_rate
from app.domain.errors import DomainValidationError, ProfileTruncationError
from app.domain.initial_conditions import (
    InitialConditionSpec,
    InitialProfile,
    build_initial_condition,
    ic_matched_firing_rate,
)
from app.domain.models import (
    Classification,
    DensityProfile,
    ExperimentReport,
    Grid,
    ModelParams,
    PdeVerdict,
    SimRecord,
)
from app.domain.pde import DEFAULT_DV, SimOptions, make_grid, simulate
from app.domain.specfun import pseudo_equilibrium_profile

logger = logging.getLogger("runtime")

# Pseudo-equilibrium comparisons per run are capped at this many delays.
MAX_TRACKED_DELAYS = 200

# Discrete classification kind -> matching PDE verdict kind.
VERDICT_CORRESPONDENCE = {
    "converged": "steady",
    "diverging": "plateau",
    "two_cycle": "periodic",
}


@dataclass(frozen=True)
class GridSpec:
    dv: float = DEFAULT_DV
    v_min: float | None = None


@dataclass(frozen=True)
class CaseSpec:
    label: str
    params: ModelParams
    initial: InitialConditionSpec
    t_end: float
    grid: GridSpec = GridSpec()
    snapshot_times: tuple[float, ...] = ()
    options: SimOptions = SimOptions()
    detectors: DetectorSettings = DetectorSettings()


@dataclass(frozen=True)
class SyncReport:
    label_a: str
    label_b: str
    # max |N_a - N_b| / max N_a over t > t_from.
    max_relative_deviation: float
    # Lag of b behind a that best aligns the traces.
    phase_shift: float


@dataclass(frozen=True)
class ExperimentPlan:
    name: str
    cases: tuple[CaseSpec, ...]
    sync_pairs: tuple[tuple[str, str], ...] = ()
    sync_from: float = 0.0
    # Runs started from a cycle profile are compared to it at even multiples of d from here on.
    visits_from: float | None = None


@dataclass(frozen=True)
class ExperimentOutcome:
    plan: ExperimentPlan
    reports: tuple[ExperimentReport, ...]
    sync: tuple[SyncReport, ...] = ()
    visits: dict[str, tuple[tuple[float, float], ...]] = field(default_factory=dict)


def verdicts_agree(discrete: Classification, pde: PdeVerdict) -> bool:
    return VERDICT_CORRESPONDENCE.get(discrete.kind) == pde.kind


def _tracking_metrics(
    params: ModelParams, nominal_rate: float, record: SimRecord
) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Distances between the run at t = kd and the k-th pseudo-equilibrium."""
    d = params.d
    if d <= 0:
        return (), ()
    steps = min(int(math.floor(record.t_end / d + 1e-9)), MAX_TRACKED_DELAYS)
    cap = 10.0 * max(1.0, float(np.max(record.rates)))
    sequence = firing_rate_sequence(params, nominal_rate, steps, cap=cap)
    distances: list[float] = []
    deviations: list[float] = []
    for k in range(1, len(sequence)):
        snapshot = record.snapshots.get(k * d)
        if snapshot is None:
            break
        try:
            reference = pseudo_equilibrium_profile(params, sequence[k - 1], record.grid)
        except ProfileTruncationError:
            break
        distances.append(float(np.max(np.abs(snapshot.values - reference.values))))
        deviations.append(abs(float(np.interp(k * d, record.times, record.rates)) - sequence[k]))
    return tuple(distances), tuple(deviations)


def assess_run(
    label: str,
    params: ModelParams,
    initial: InitialProfile,
    t_end: float,
    *,
    snapshot_times: Sequence[float] = (),
    options: SimOptions | None = None,
    detectors: DetectorSettings | None = None,
) -> ExperimentReport:
    """Simulate from `initial` and set the verdict beside the discrete prediction."""
    trajectory = iterate_firing_rate(params, initial.nominal_rate)
    delays: tuple[float, ...] = ()
    if params.d > 0:
        count = min(int(math.floor(t_end / params.d + 1e-9)), MAX_TRACKED_DELAYS)
        delays = tuple(k * params.d for k in range(1, count + 1))
    record = simulate(params, initial.profile, t_end, (*snapshot_times, *delays), options=options)
    verdict = classify_record(record, detectors)
    distances, deviations = _tracking_metrics(params, initial.nominal_rate, record)
    report = ExperimentReport(
        label=label,
        params=params,
        initial_rate=initial.nominal_rate,
        discrete=trajectory.classification,
        pde=verdict,
        agreement=verdicts_agree(trajectory.classification, verdict),
        sup_distances=distances,
        rate_deviations=deviations,
        final_rate=float(record.rates[-1]),
        diverged=record.diverged,
        record=record,
    )
    logger.info(
        "run assessed",
        extra={
            "experiment": label,
            "b": params.b,
            "d": params.d,
            "discrete": trajectory.classification.kind,
            "verdict": verdict.kind,
            "agreement": report.agreement,
        },
    )
    return report


def compare_discrete_continuous(
    params: ModelParams,
    n0: float,
    t_end: float,
    grid: Grid,
    *,
    label: str = "compare",
    options: SimOptions | None = None,
    detectors: DetectorSettings | None = None,
) -> ExperimentReport:
    if params.d <= 0:
        raise DomainValidationError("comparison needs a positive delay")
    initial = ic_matched_firing_rate(params, grid, n0)
    return assess_run(label, params, initial, t_end, options=options, detectors=detectors)


def evaluate_case(case: CaseSpec) -> ExperimentReport:
    grid = make_grid(case.params, case.grid.v_min, case.grid.dv)
    initial = build_initial_condition(case.params, grid, case.initial)
    return assess_run(
        case.label,
        case.params,
        initial,
        case.t_end,
        snapshot_times=case.snapshot_times,
        options=case.options,
        detectors=case.detectors,
    )


def run_cases(cases: Sequence[CaseSpec], *, workers: int = 1) -> list[ExperimentReport]:
    """Reports in input order; cases run in worker processes when workers > 1."""
    if workers <= 1 or len(cases) <= 1:
        return [evaluate_case(case) for case in cases]
    with ProcessPoolExecutor(max_workers=min(workers, len(cases))) as pool:
        return list(pool.map(evaluate_case, cases))


def sweep_cases(
    params: ModelParams,
    delays: Sequence[float],
    initial: InitialConditionSpec,
    t_end: float | None = None,
    *,
    t_end_delays: float | None = None,
    grid: GridSpec = GridSpec(),
    options: SimOptions = SimOptions(),
    detectors: DetectorSettings = DetectorSettings(),
) -> list[CaseSpec]:
    """One case per delay; `t_end_delays` sets t_end as a multiple of each d."""
    if not delays:
        raise DomainValidationError("delay sweep needs at least one delay")
    if t_end is None and t_end_delays is None:
        raise DomainValidationError("delay sweep needs t_end or t_end_delays")
    return [
        CaseSpec(
            label=f"d={delay:g}",
            params=params.with_delay(delay),
            initial=initial,
            t_end=t_end if t_end is not None else float(t_end_delays or 0.0) * delay,
            grid=grid,
            options=options,
            detectors=detectors,
        )
        for delay in delays
    ]


def delay_sweep(
    params: ModelParams,
    delays: Sequence[float],
    initial: InitialConditionSpec,
    t_end: float | None = None,
    *,
    t_end_delays: float | None = None,
    grid: GridSpec = GridSpec(),
    options: SimOptions = SimOptions(),
    detectors: DetectorSettings = DetectorSettings(),
    workers: int = 1,
) -> list[ExperimentReport]:
    cases = sweep_cases(
        params,
        delays,
        initial,
        t_end,
        t_end_delays=t_end_delays,
        grid=grid,
        options=options,
        detectors=detectors,
    )
    return run_cases(cases, workers=workers)


def synchronization_report(
    record_a: SimRecord,
    record_b: SimRecord,
    t_from: float,
    *,
    labels: tuple[str, str] = ("a", "b"),
) -> SyncReport:
    t_stop = min(record_a.t_end, record_b.t_end)
    if not t_from < t_stop:
        raise DomainValidationError(f"records end at {t_stop}, before t_from={t_from}")
    mask = (record_a.times > t_from) & (record_a.times <= t_stop)
    times = record_a.times[mask]
    rates_a = record_a.rates[mask]
    rates_b = np.interp(times, record_b.times, record_b.rates)
    scale = float(np.max(np.abs(rates_a))) or 1.0
    deviation = float(np.max(np.abs(rates_a - rates_b))) / scale

    # Phase from the cross-correlation peak on a uniform clock.
    step = max(float(np.median(np.diff(times))), (t_stop - t_from) / 100_000.0)
    uniform_t = np.arange(times[0], times[-1], step)
    centered_a = np.interp(uniform_t, times, rates_a)
    centered_b = np.interp(uniform_t, record_b.times, record_b.rates)
    centered_a = centered_a - centered_a.mean()
    centered_b = centered_b - centered_b.mean()
    correlation = signal.correlate(centered_b, centered_a, mode="full", method="fft")
    lag = (int(np.argmax(correlation)) - (uniform_t.size - 1)) * step
    return SyncReport(label_a=labels[0], label_b=labels[1], max_relative_deviation=deviation, phase_shift=lag)


def cycle_visits(
    record: SimRecord, reference: DensityProfile, d: float, t_from: float
) -> tuple[tuple[float, float], ...]:
    """(t, sup-distance to `reference`) for snapshots at even multiples of d after t_from."""
    if d <= 0:
        raise DomainValidationError("cycle visits need a positive delay")
    visits: list[tuple[float, float]] = []
    for t, snapshot in sorted(record.snapshots.items()):
        k = round(t / d)
        if t < t_from or k % 2 or abs(t - k * d) > 1e-9 * max(1.0, t):
            continue
        visits.append((t, float(np.max(np.abs(snapshot.values - reference.values)))))
    return tuple(visits)


def run_experiment(plan: ExperimentPlan, *, workers: int = 1) -> ExperimentOutcome:
    logger.info("experiment started", extra={"experiment": plan.name, "cases": len(plan.cases)})
    reports = run_cases(plan.cases, workers=workers)
    by_label = {report.label: report for report in reports}

    sync: list[SyncReport] = []
    for label_a, label_b in plan.sync_pairs:
        record_a = by_label[label_a].record
        record_b = by_label[label_b].record
        if record_a is None or record_b is None:
            raise DomainValidationError(f"sync pair {label_a}/{label_b} has no records")
        sync.append(synchronization_report(record_a, record_b, plan.sync_from, labels=(label_a, label_b)))

    visits: dict[str, tuple[tuple[float, float], ...]] = {}
    if plan.visits_from is not None:
        for case, report in zip(plan.cases, reports):
            if case.initial.family not in ("cycle_low", "cycle_high") or report.record is None:
                continue
            grid = report.record.grid
            reference = build_initial_condition(case.params, grid, case.initial).profile
            visits[case.label] = cycle_visits(report.record, reference, case.params.d, plan.visits_from)

    logger.info(
        "experiment finished",
        extra={
            "experiment": plan.name,
            "verdicts": [report.pde.kind for report in reports],
            "agreement": all(report.agreement for report in reports),
        },
    )
    return ExperimentOutcome(plan=plan, reports=tuple(reports), sync=tuple(sync), visits=visits)


def smoke_plan(plan: ExperimentPlan, *, dv: float, t_end_scale: float) -> ExperimentPlan:
    """Coarser mesh and shorter runs for quick checks."""
    cases = tuple(
        replace(case, grid=replace(case.grid, dv=dv), t_end=case.t_end * t_end_scale) for case in plan.cases
    )
    return replace(plan, cases=cases)
