from pathlib import Path

import numpy as np
import pytest

from app.domain.discrete import find_two_cycle
from app.domain.errors import DomainValidationError, ProfileTruncationError
from app.domain.initial_conditions import (
    InitialConditionSpec,
    build_initial_condition,
    ic_double_maxwellian,
    ic_from_csv,
    ic_matched_firing_rate,
    ic_pseudo_equilibrium,
)
from app.domain.models import ModelParams
from app.domain.pde import firing_rate, make_grid
from app.domain.specfun import eval_f, solve_stationary

INHIBITORY = ModelParams(b=-14.0)
EXCITATORY = ModelParams(b=1.5)


@pytest.mark.unit
def test_double_maxwellian_is_normalized_and_reports_its_rate() -> None:
    grid = make_grid(INHIBITORY, dv=0.02)

    initial = ic_double_maxwellian(grid, 0.4, 0.5)

    assert initial.profile.mass == pytest.approx(1.0, rel=1e-12)
    assert initial.nominal_rate == firing_rate(initial.profile, INHIBITORY.a)
    peaks = grid.nodes[np.argsort(initial.profile.values)[-1]]
    assert peaks == pytest.approx(0.4, abs=0.05) or peaks == pytest.approx(-2.4, abs=0.05)


@pytest.mark.unit
def test_double_maxwellian_rejects_mass_past_threshold() -> None:
    grid = make_grid(INHIBITORY, dv=0.02)

    with pytest.raises(ProfileTruncationError) as exc_info:
        ic_double_maxwellian(grid, 1.9, 0.5)

    assert exc_info.value.deficit > 1e-3


@pytest.mark.unit
@pytest.mark.parametrize(
    ("previous", "emitted"),
    [(2.25, 2.237193), (2.35, 2.370343)],
)
def test_pseudo_equilibrium_around_unstable_rate(previous: float, emitted: float) -> None:
    grid = make_grid(EXCITATORY, -6.0, 0.005)

    initial = ic_pseudo_equilibrium(EXCITATORY, grid, previous)

    assert eval_f(EXCITATORY, previous) == pytest.approx(emitted, abs=1e-5)
    unstable = solve_stationary(EXCITATORY).roots[1].rate
    assert (previous - unstable) * (initial.nominal_rate - previous) > 0
    assert firing_rate(initial.profile, EXCITATORY.a) == pytest.approx(emitted, rel=1e-3)


@pytest.mark.unit
def test_matched_firing_rate_emits_target() -> None:
    grid = make_grid(EXCITATORY, dv=0.02)

    initial = ic_matched_firing_rate(EXCITATORY, grid, 2.233348)

    assert initial.nominal_rate == pytest.approx(2.233348, rel=1e-9)


@pytest.mark.unit
def test_matched_firing_rate_outside_range_of_f() -> None:
    grid = make_grid(EXCITATORY, dv=0.02)

    with pytest.raises(DomainValidationError, match="outside the range"):
        ic_matched_firing_rate(EXCITATORY, grid, 0.5 * eval_f(EXCITATORY, 0.0))


@pytest.mark.unit
def test_cycle_families_sit_on_the_two_cycle() -> None:
    grid = make_grid(INHIBITORY, dv=0.05)
    cycle = find_two_cycle(INHIBITORY)

    low = build_initial_condition(INHIBITORY, grid, InitialConditionSpec(family="cycle_low"))
    high = build_initial_condition(INHIBITORY, grid, InitialConditionSpec(family="cycle_high"))

    assert low.nominal_rate == cycle.n_minus
    assert high.nominal_rate == cycle.n_plus
    assert firing_rate(low.profile, INHIBITORY.a) == pytest.approx(cycle.n_minus, rel=5e-2, abs=1e-3)
    assert firing_rate(high.profile, INHIBITORY.a) == pytest.approx(cycle.n_plus, rel=5e-2)


@pytest.mark.unit
def test_csv_profile_is_interpolated_and_normalized(tmp_path: Path) -> None:
    path = tmp_path / "profile.csv"
    path.write_text("v,p\n2.0,0.0\n-1.0,0.0\n0.5,2.0\n", encoding="utf-8")
    grid = make_grid(EXCITATORY, dv=0.05)

    initial = ic_from_csv(path, grid)

    assert initial.profile.mass == pytest.approx(1.0, rel=1e-12)
    assert initial.profile.values[grid.i_vr] == pytest.approx(2.0 / 3.0 * float(np.max(initial.profile.values)), rel=2e-2)


@pytest.mark.unit
def test_csv_profile_with_negative_density(tmp_path: Path) -> None:
    path = tmp_path / "profile.csv"
    path.write_text("v,p\n0.0,1.0\n1.0,-1.0\n", encoding="utf-8")

    with pytest.raises(DomainValidationError, match="negative"):
        ic_from_csv(path, make_grid(EXCITATORY, dv=0.05))


@pytest.mark.unit
def test_csv_profile_missing_file(tmp_path: Path) -> None:
    with pytest.raises(DomainValidationError, match="cannot read"):
        ic_from_csv(tmp_path / "absent.csv", make_grid(EXCITATORY, dv=0.05))


@pytest.mark.unit
@pytest.mark.parametrize(
    "spec",
    [
        InitialConditionSpec(family="pseudo_equilibrium"),
        InitialConditionSpec(family="double_maxwellian", mu=0.4),
        InitialConditionSpec(family="csv"),
    ],
)
def test_build_rejects_incomplete_specs(spec: InitialConditionSpec) -> None:
    with pytest.raises(DomainValidationError):
        build_initial_condition(EXCITATORY, make_grid(EXCITATORY, dv=0.05), spec)
