import numpy as np
import pytest

from app.domain.errors import DomainValidationError
from app.domain.initial_conditions import InitialConditionSpec, ic_matched_firing_rate
from app.domain.models import (
    ConvergedToFixedPoint,
    DensityProfile,
    Diverging,
    FloatArray,
    ModelParams,
    Periodic,
    Plateau,
    SimRecord,
    SteadyState,
    TwoCycle,
    Undetermined,
)
from app.domain.pde import make_grid
from app.domain.use_cases.experiments import (
    CaseSpec,
    ExperimentPlan,
    GridSpec,
    assess_run,
    compare_discrete_continuous,
    cycle_visits,
    delay_sweep,
    smoke_plan,
    sweep_cases,
    synchronization_report,
    verdicts_agree,
)

PARAMS = ModelParams(b=-14.0, d=2.0)


def _record(times: FloatArray, rates: FloatArray, snapshots: dict[float, DensityProfile] | None = None) -> SimRecord:
    grid = make_grid(PARAMS, dv=0.05)
    final = DensityProfile(grid=grid, values=np.zeros(grid.n_v + 1))
    return SimRecord(
        params=PARAMS,
        grid=grid,
        times=times,
        rates=rates,
        masses=np.ones_like(times),
        snapshots=snapshots or {},
        final=final,
    )


@pytest.mark.unit
@pytest.mark.parametrize(
    ("discrete", "verdict", "expected"),
    [
        (ConvergedToFixedPoint(limit=0.2), SteadyState(rate=0.2), True),
        (Diverging(), Plateau(), True),
        (TwoCycle(n_minus=0.002, n_plus=0.11, residual=0.0), Periodic(period=4.0, n_min=0.0, n_max=0.1), True),
        (ConvergedToFixedPoint(limit=0.2), Plateau(), False),
        (Undetermined(), Undetermined(), False),
    ],
)
def test_verdict_correspondence(discrete: object, verdict: object, expected: bool) -> None:
    assert verdicts_agree(discrete, verdict) is expected  # type: ignore[arg-type]


@pytest.mark.unit
def test_sweep_cases_require_a_horizon() -> None:
    initial = InitialConditionSpec(family="pseudo_equilibrium", rate=0.0)

    with pytest.raises(DomainValidationError):
        sweep_cases(PARAMS, [1.0], initial)
    with pytest.raises(DomainValidationError):
        sweep_cases(PARAMS, [], initial, 10.0)


@pytest.mark.unit
def test_identical_traces_are_synchronized_without_lag() -> None:
    times = np.arange(0.0, 40.0, 0.01)
    rates = 0.05 + 0.04 * np.sin(2.0 * np.pi * times / 4.0)

    report = synchronization_report(_record(times, rates), _record(times, rates.copy()), 10.0, labels=("x", "y"))

    assert report.label_a == "x"
    assert report.max_relative_deviation == 0.0
    assert report.phase_shift == pytest.approx(0.0, abs=0.02)


@pytest.mark.unit
def test_lagging_trace_reports_phase_shift() -> None:
    times = np.arange(0.0, 40.0, 0.01)
    leading = 0.05 + 0.04 * np.sin(2.0 * np.pi * times / 4.0)
    lagging = 0.05 + 0.04 * np.sin(2.0 * np.pi * (times - 1.0) / 4.0)

    report = synchronization_report(_record(times, leading), _record(times, lagging), 10.0)

    assert report.phase_shift == pytest.approx(1.0, abs=0.05)
    assert report.max_relative_deviation > 0.5


@pytest.mark.unit
def test_sync_window_must_start_before_records_end() -> None:
    times = np.linspace(0.0, 5.0, 51)

    with pytest.raises(DomainValidationError):
        synchronization_report(_record(times, times), _record(times, times), 5.0)


@pytest.mark.unit
def test_cycle_visits_pick_even_multiples_of_delay() -> None:
    grid = make_grid(PARAMS, dv=0.05)
    reference = DensityProfile(grid=grid, values=np.zeros(grid.n_v + 1))
    snapshots = {
        t: DensityProfile(grid=grid, values=np.full(grid.n_v + 1, 0.01 * t)) for t in (2.0, 4.0, 6.0, 8.0, 9.0, 12.0)
    }
    record = _record(np.linspace(0.0, 12.0, 121), np.zeros(121), snapshots)

    visits = cycle_visits(record, reference, 2.0, 6.0)

    assert [t for t, _ in visits] == [8.0, 12.0]
    assert visits[0][1] == pytest.approx(0.08)

    with pytest.raises(DomainValidationError):
        cycle_visits(record, reference, 0.0, 0.0)


@pytest.mark.unit
def test_smoke_plan_keeps_sync_settings() -> None:
    case = CaseSpec(
        label="x",
        params=PARAMS,
        initial=InitialConditionSpec(family="cycle_low"),
        t_end=100.0,
    )
    plan = ExperimentPlan(name="sample", cases=(case,), sync_pairs=(("x", "x"),), sync_from=50.0)

    smoke = smoke_plan(plan, dv=0.04, t_end_scale=0.25)

    assert smoke.cases[0].t_end == 25.0
    assert smoke.cases[0].grid.dv == 0.04
    assert smoke.sync_pairs == plan.sync_pairs
    assert smoke.sync_from == 50.0


@pytest.mark.unit
def test_assess_run_tracks_pseudo_equilibria_at_each_delay() -> None:
    params = ModelParams(b=1.5, d=0.5)
    grid = make_grid(params, -6.0, 0.05)
    initial = ic_matched_firing_rate(params, grid, 1.0)

    report = assess_run("sample", params, initial, 2.0)

    assert isinstance(report.discrete, ConvergedToFixedPoint)
    assert len(report.sup_distances) == 4
    assert len(report.rate_deviations) == 4
    assert report.record is not None
    assert report.final_rate == float(report.record.rates[-1])
    assert all(distance < 1.0 for distance in report.sup_distances)


@pytest.mark.unit
def test_compare_discrete_continuous_requires_delay() -> None:
    grid = make_grid(ModelParams(b=1.5), -6.0, 0.05)

    with pytest.raises(DomainValidationError):
        compare_discrete_continuous(ModelParams(b=1.5), 1.0, 1.0, grid)

    report = compare_discrete_continuous(ModelParams(b=1.5, d=0.5), 1.0, 1.0, grid)
    assert report.label == "compare"
    assert report.initial_rate == pytest.approx(1.0, rel=1e-9)
    assert report.discrete.kind == "converged"


@pytest.mark.unit
def test_delay_sweep_reports_in_delay_order() -> None:
    initial = InitialConditionSpec(family="pseudo_equilibrium", rate=0.0)

    reports = delay_sweep(ModelParams(b=-14.0), [0.25, 0.5], initial, 0.5, grid=GridSpec(dv=0.05))

    assert [report.label for report in reports] == ["d=0.25", "d=0.5"]
    assert [report.params.d for report in reports] == [0.25, 0.5]
    assert all(report.record is not None and report.record.t_end == 0.5 for report in reports)
