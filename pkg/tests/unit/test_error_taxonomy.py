import pytest

from app.domain.error_taxonomy import (
    EXIT_NUMERICAL,
    EXIT_USAGE,
    classify_error,
    error_code_for,
    exit_code_for,
    is_canonical_error_code,
)
from app.domain.errors import (
    ConfigError,
    DomainValidationError,
    MonotonicityViolationError,
    NoCycleFoundError,
    ProfileTruncationError,
    QuadratureError,
    SimulationInstabilityError,
)


@pytest.mark.unit
def test_canonical_error_codes_are_enforced() -> None:
    assert is_canonical_error_code("config_error") is True
    assert is_canonical_error_code("scan_exhausted") is True
    assert is_canonical_error_code("unknown_error") is False


@pytest.mark.unit
@pytest.mark.parametrize(
    ("exc", "code"),
    [
        (ConfigError("bad"), "config_error"),
        (DomainValidationError("bad"), "validation_error"),
        (QuadratureError("bad", partial=1.0, abserr=1.0), "quadrature_failed"),
        (NoCycleFoundError("bad"), "no_cycle_found"),
        (MonotonicityViolationError("bad", index=3), "monotonicity_violation"),
        (ProfileTruncationError("bad", deficit=0.1), "profile_truncated"),
        (SimulationInstabilityError("bad", t=1.0), "simulation_unstable"),
        (RuntimeError("bad"), "internal_error"),
    ],
)
def test_exceptions_map_to_most_specific_code(exc: BaseException, code: str) -> None:
    assert error_code_for(exc) == code


@pytest.mark.unit
def test_classification_separates_usage_and_numerical_failures() -> None:
    assert classify_error("config_error") == "usage"
    assert classify_error("validation_error") == "usage"
    assert classify_error("scan_exhausted") == "numerical"


@pytest.mark.unit
def test_exit_codes_follow_classification() -> None:
    assert exit_code_for("config_error") == EXIT_USAGE
    assert exit_code_for("simulation_unstable") == EXIT_NUMERICAL
    assert exit_code_for("made_up") == EXIT_NUMERICAL
