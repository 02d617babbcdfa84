import pytest

from app.lib.numerics.delay import DelayBuffer, FrozenRate


@pytest.mark.unit
def test_history_before_start_is_initial_rate() -> None:
    buffer = DelayBuffer(delay=1.0, initial_rate=0.4)

    assert buffer.lookup(-0.5) == 0.4
    buffer.append(0.0, 0.7)
    assert buffer.lookup(-0.5) == 0.4
    assert buffer.lookup(0.0) == 0.4


@pytest.mark.unit
def test_lookup_interpolates_between_samples() -> None:
    buffer = DelayBuffer(delay=1.0, initial_rate=0.0)
    buffer.append(0.0, 1.0)
    buffer.append(0.5, 2.0)
    buffer.append(1.0, 4.0)

    assert buffer.lookup(0.25) == pytest.approx(1.5)
    assert buffer.lookup(0.75) == pytest.approx(3.0)
    assert buffer.lookup(5.0) == 4.0


@pytest.mark.unit
def test_old_samples_leave_the_window() -> None:
    buffer = DelayBuffer(delay=0.5, initial_rate=0.0)
    for step in range(1, 101):
        buffer.append(0.1 * step, float(step))

    assert len(buffer) <= 7
    assert buffer.lookup(10.0 - 0.5) == pytest.approx(95.0)
    with pytest.raises(ValueError):
        buffer.lookup(2.0)


@pytest.mark.unit
def test_samples_must_move_forward() -> None:
    buffer = DelayBuffer(delay=1.0, initial_rate=0.0)
    buffer.append(0.0, 1.0)

    with pytest.raises(ValueError, match="not after"):
        buffer.append(0.0, 2.0)


@pytest.mark.unit
def test_negative_delay_is_rejected() -> None:
    with pytest.raises(ValueError):
        DelayBuffer(delay=-1.0, initial_rate=0.0)


@pytest.mark.unit
def test_frozen_rate_ignores_appends() -> None:
    history = FrozenRate(0.25)
    history.append(1.0, 9.0)

    assert history.lookup(1.0) == 0.25
