from __future__ import annotations

from collections.abc import Mapping
from typing import Literal, cast

from app.domain.errors import (
    BracketNotFoundError,
    ConfigError,
    DomainError,
    DomainValidationError,
    MonotonicityViolationError,
    NoCycleFoundError,
    ProfileTruncationError,
    QuadratureError,
    ScanExhaustedError,
    SimulationInstabilityError,
)

# Canonical error vocabulary for all commands.
ErrorCode = Literal[
    "config_error",
    "validation_error",
    "quadrature_failed",
    "scan_exhausted",
    "bracket_not_found",
    "no_cycle_found",
    "monotonicity_violation",
    "profile_truncated",
    "simulation_unstable",
    "internal_error",
]

ErrorClassification = Literal["usage", "numerical"]

CANONICAL_ERROR_CODES: tuple[ErrorCode, ...] = (
    "config_error",
    "validation_error",
    "quadrature_failed",
    "scan_exhausted",
    "bracket_not_found",
    "no_cycle_found",
    "monotonicity_violation",
    "profile_truncated",
    "simulation_unstable",
    "internal_error",
)

# Caller mistakes; everything else is a numerical failure.
USAGE_ERROR_CODES: frozenset[ErrorCode] = frozenset({"config_error", "validation_error"})

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

# Most specific class first: ConfigError is a DomainValidationError.
_EXCEPTION_CODES: tuple[tuple[type[DomainError], ErrorCode], ...] = (
    (ConfigError, "config_error"),
    (DomainValidationError, "validation_error"),
    (QuadratureError, "quadrature_failed"),
    (ScanExhaustedError, "scan_exhausted"),
    (BracketNotFoundError, "bracket_not_found"),
    (NoCycleFoundError, "no_cycle_found"),
    (MonotonicityViolationError, "monotonicity_violation"),
    (ProfileTruncationError, "profile_truncated"),
    (SimulationInstabilityError, "simulation_unstable"),
)

EXIT_CODES: Mapping[ErrorClassification, int] = {
    "usage": EXIT_USAGE,
    "numerical": EXIT_NUMERICAL,
}


def is_canonical_error_code(code: str) -> bool:
    return code in CANONICAL_ERROR_CODES


def classify_error(code: ErrorCode) -> ErrorClassification:
    if code in USAGE_ERROR_CODES:
        return "usage"
    return "numerical"


def error_code_for(exc: BaseException) -> ErrorCode:
    for exc_type, code in _EXCEPTION_CODES:
        if isinstance(exc, exc_type):
            return code
    return "internal_error"


def exit_code_for(code: str) -> int:
    if not is_canonical_error_code(code):
        # Unknown codes are reported as internal failures.
        return EXIT_NUMERICAL
    return EXIT_CODES[classify_error(cast(ErrorCode, code))]
