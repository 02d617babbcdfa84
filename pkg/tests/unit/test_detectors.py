import numpy as np
import pytest

from app.domain.detectors import (
    DetectorSettings,
    classify_record,
    default_window,
    detect_periodic,
    detect_plateau,
    detect_steady,
)
from app.domain.errors import DomainValidationError
from app.domain.models import (
    DensityProfile,
    FloatArray,
    ModelParams,
    Periodic,
    Plateau,
    SimRecord,
    SteadyState,
    Undetermined,
)
from app.domain.pde import make_grid
from app.domain.specfun import pseudo_equilibrium_profile, solve_stationary


def _record(params: ModelParams, times: FloatArray, rates: FloatArray, final: DensityProfile) -> SimRecord:
    return SimRecord(
        params=params,
        grid=final.grid,
        times=times,
        rates=rates,
        masses=np.ones_like(times),
        snapshots={},
        final=final,
    )


def _flat_between_reset_and_fire(params: ModelParams) -> DensityProfile:
    grid = make_grid(params, -6.0, 0.05)
    values = np.where(grid.nodes >= grid.v_reset, 1.0, 0.0)
    return DensityProfile(grid=grid, values=values)


@pytest.mark.unit
def test_constant_rate_at_stationary_profile_is_steady() -> None:
    params = ModelParams(b=1.5, d=1.0)
    root = solve_stationary(params).roots[0].rate
    grid = make_grid(params, -6.0, 0.05)
    times = np.linspace(0.0, 50.0, 2001)
    record = _record(params, times, np.full_like(times, root), pseudo_equilibrium_profile(params, root, grid))

    verdict = classify_record(record)

    assert isinstance(verdict, SteadyState)
    assert verdict.rate == pytest.approx(root, rel=1e-12)


@pytest.mark.unit
def test_steady_check_rejects_wrong_target() -> None:
    params = ModelParams(b=1.5, d=1.0)
    roots = solve_stationary(params).rates
    grid = make_grid(params, -6.0, 0.05)
    times = np.linspace(0.0, 50.0, 2001)
    record = _record(params, times, np.full_like(times, roots[0]), pseudo_equilibrium_profile(params, roots[0], grid))

    check = detect_steady(record, roots[1])

    assert not check.is_steady
    assert check.residual == pytest.approx((roots[1] - roots[0]) / roots[1])


@pytest.mark.unit
def test_steady_window_longer_than_record() -> None:
    params = ModelParams(b=1.5, d=1.0)
    grid = make_grid(params, -6.0, 0.05)
    times = np.linspace(0.0, 5.0, 101)
    record = _record(params, times, np.full_like(times, 0.2), pseudo_equilibrium_profile(params, 0.2, grid))

    with pytest.raises(DomainValidationError):
        detect_steady(record, 0.2, window=10.0)


@pytest.mark.unit
def test_default_window_is_capped_by_run_length() -> None:
    params = ModelParams(b=-14.0, d=25.0)
    grid = make_grid(params, dv=0.05)
    times = np.linspace(0.0, 60.0, 601)
    record = _record(params, times, np.zeros_like(times), pseudo_equilibrium_profile(params, 0.04, grid))

    assert default_window(record) == 60.0


@pytest.mark.unit
def test_sustained_oscillation_is_periodic() -> None:
    params = ModelParams(b=-14.0, d=2.0)
    grid = make_grid(params, dv=0.05)
    times = np.arange(0.0, 60.0, 0.01)
    rates = 0.05 + 0.04 * np.sin(2.0 * np.pi * times / 4.2)
    record = _record(params, times, rates, pseudo_equilibrium_profile(params, 0.04, grid))

    check = detect_periodic(record)
    verdict = classify_record(record)

    assert check.is_periodic
    assert check.period == pytest.approx(4.2, rel=1e-2)
    assert check.cycles >= 3
    assert isinstance(verdict, Periodic)
    assert verdict.n_min == pytest.approx(0.01, abs=1e-3)
    assert verdict.n_max == pytest.approx(0.09, abs=1e-3)


@pytest.mark.unit
def test_damped_oscillation_is_not_periodic() -> None:
    params = ModelParams(b=-5.0, d=2.0)
    grid = make_grid(params, dv=0.05)
    times = np.arange(0.0, 60.0, 0.01)
    rates = 0.1 + 0.08 * np.exp(-times / 8.0) * np.sin(2.0 * np.pi * times / 4.2)
    record = _record(params, times, rates, pseudo_equilibrium_profile(params, 0.1, grid))

    assert not detect_periodic(record).is_periodic


@pytest.mark.unit
def test_increasing_rate_with_flat_profile_is_plateau() -> None:
    params = ModelParams(b=3.0, d=1.0)
    times = np.linspace(0.0, 20.0, 401)
    record = _record(params, times, 1.0 + times, _flat_between_reset_and_fire(params))

    check = detect_plateau(record)

    assert check.is_plateau
    assert check.flatness == pytest.approx(0.0, abs=1e-12)
    assert check.mass_between == pytest.approx(1.0, rel=1e-9)
    assert isinstance(classify_record(record), Plateau)


@pytest.mark.unit
def test_plateau_takes_precedence_over_steady() -> None:
    params = ModelParams(b=1.5, d=1.0)
    times = np.linspace(0.0, 20.0, 401)
    record = _record(params, times, 0.1 + 0.2 * times, _flat_between_reset_and_fire(params))

    assert isinstance(classify_record(record), Plateau)


@pytest.mark.unit
def test_falling_rate_without_equilibria_is_undetermined() -> None:
    params = ModelParams(b=2.5, d=1.0)
    times = np.linspace(0.0, 20.0, 401)
    record = _record(params, times, 5.0 - 0.1 * times, _flat_between_reset_and_fire(params))

    assert isinstance(classify_record(record, DetectorSettings()), Undetermined)


@pytest.mark.unit
def test_level_off_the_stationary_rate_is_not_steady() -> None:
    params = ModelParams(b=-14.0, d=2.0)
    root = solve_stationary(params).roots[0].rate
    grid = make_grid(params, dv=0.05)
    times = np.linspace(0.0, 24.0, 2401)
    record = _record(params, times, np.full_like(times, root + 0.018), pseudo_equilibrium_profile(params, root, grid))

    check = detect_steady(record, root)

    assert not check.is_steady
    assert check.residual == pytest.approx(0.018 / root, rel=1e-9)
    assert isinstance(classify_record(record), Undetermined)


@pytest.mark.unit
def test_steady_verdict_reports_measured_level() -> None:
    params = ModelParams(b=1.5, d=1.0)
    root = solve_stationary(params).roots[0].rate
    grid = make_grid(params, -6.0, 0.05)
    times = np.linspace(0.0, 50.0, 2001)
    rates = np.full_like(times, 1.03 * root)
    record = _record(params, times, rates, pseudo_equilibrium_profile(params, root, grid))

    verdict = classify_record(record)

    assert isinstance(verdict, SteadyState)
    assert verdict.rate == pytest.approx(1.03 * root, rel=1e-12)


@pytest.mark.unit
def test_rate_rising_past_every_stationary_rate_is_plateau_without_flat_profile() -> None:
    params = ModelParams(b=1.5, d=1.0)
    grid = make_grid(params, -6.0, 0.05)
    times = np.linspace(0.0, 20.0, 401)
    record = _record(params, times, 2.5 + 0.1 * times, pseudo_equilibrium_profile(params, 0.194, grid))

    assert not detect_plateau(record).is_plateau
    assert isinstance(classify_record(record), Plateau)


@pytest.mark.unit
def test_rate_rising_below_stationary_rate_is_not_plateau() -> None:
    params = ModelParams(b=1.5, d=1.0)
    grid = make_grid(params, -6.0, 0.05)
    times = np.linspace(0.0, 20.0, 401)
    record = _record(params, times, 0.1 + 0.004 * times, pseudo_equilibrium_profile(params, 0.194, grid))

    assert not isinstance(classify_record(record), Plateau)
