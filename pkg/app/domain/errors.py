from __future__ import annotations


class DomainError(Exception):
    pass


class DomainValidationError(DomainError):
    pass


class ConfigError(DomainValidationError):
    pass


class NumericalFailureError(DomainError):
    pass


class QuadratureError(NumericalFailureError):
    def __init__(self, message: str, *, partial: float, abserr: float) -> None:
        super().__init__(message)
        self.partial = partial
        self.abserr = abserr


class ScanExhaustedError(NumericalFailureError):
    pass


class BracketNotFoundError(NumericalFailureError):
    pass


class NoCycleFoundError(NumericalFailureError):
    pass


class MonotonicityViolationError(NumericalFailureError):
    def __init__(self, message: str, *, index: int) -> None:
        super().__init__(message)
        self.index = index


class ProfileTruncationError(NumericalFailureError):
    def __init__(self, message: str, *, deficit: float) -> None:
        super().__init__(message)
        self.deficit = deficit


class SimulationInstabilityError(NumericalFailureError):
    def __init__(self, message: str, *, t: float) -> None:
        super().__init__(message)
        self.t = t
