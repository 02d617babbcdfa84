import numpy as np
import pytest

from app.domain.discrete import find_two_cycle, fixed_points_of_F
from app.domain.errors import DomainValidationError, NoCycleFoundError
from app.domain.models import ModelParams
from app.domain.specfun import eval_F, eval_f, eval_g, eval_I, find_b_star, solve_stationary


@pytest.mark.unit
def test_flip_point_sits_near_minus_nine_point_four() -> None:
    params = ModelParams(b=-1.0)

    b_star = find_b_star(params)

    assert -9.5 <= b_star <= -9.3
    assert eval_g(params, b_star) == pytest.approx(-1.0, abs=1e-6)


@pytest.mark.unit
def test_flip_point_ignores_the_placeholder_coupling() -> None:
    assert find_b_star(ModelParams(b=-1.0)) == pytest.approx(find_b_star(ModelParams(b=-30.0)), abs=1e-9)


@pytest.mark.unit
def test_two_cycle_for_strong_inhibition() -> None:
    params = ModelParams(b=-14.0)

    cycle = find_two_cycle(params)

    assert cycle.n_minus == pytest.approx(0.0022, abs=2e-3)
    assert cycle.n_plus == pytest.approx(0.1136, abs=2e-3)
    assert cycle.residual < 1e-9
    assert eval_f(params, cycle.n_minus) == pytest.approx(cycle.n_plus, rel=1e-6)
    assert eval_F(params, cycle.n_plus) == pytest.approx(cycle.n_plus, rel=1e-6)


@pytest.mark.unit
def test_two_cycle_approaches_zero_and_uncoupled_rate() -> None:
    params = ModelParams(b=-100.0)

    cycle = find_two_cycle(params)

    assert cycle.n_minus < 0.005
    assert cycle.n_plus == pytest.approx(1.0 / eval_I(params, 0.0), abs=0.01)


@pytest.mark.unit
def test_fixed_points_of_second_iterate_bracket_the_stationary_rate() -> None:
    params = ModelParams(b=-14.0)

    points = fixed_points_of_F(params)
    n_star = solve_stationary(params).roots[0].rate

    assert len(points) == 3
    assert points[0] < n_star < points[2]
    assert points[1] == pytest.approx(n_star, rel=1e-9)


@pytest.mark.unit
def test_no_cycle_above_flip_point() -> None:
    with pytest.raises(NoCycleFoundError):
        find_two_cycle(ModelParams(b=-5.0))


@pytest.mark.unit
def test_second_iterate_scan_is_inhibitory_only() -> None:
    with pytest.raises(DomainValidationError):
        fixed_points_of_F(ModelParams(b=1.5))


@pytest.mark.unit
def test_flip_point_matches_dense_scan() -> None:
    params = ModelParams(b=-1.0)
    couplings = np.arange(-10.0, -9.0, 0.01)
    shifted = [eval_g(params, float(b)) + 1.0 for b in couplings]
    crossings = [float(b) for b, lo, hi in zip(couplings, shifted, shifted[1:]) if lo * hi <= 0]

    assert len(crossings) == 1
    assert find_b_star(params) == pytest.approx(crossings[0] + 0.005, abs=0.01)
