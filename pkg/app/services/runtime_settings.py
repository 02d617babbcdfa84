from __future__ import annotations

from dataclasses import dataclass
from os import environ as os_environ
from pathlib import Path

LOG_LEVEL_DEBUG = "DEBUG"
LOG_LEVEL_INFO = "INFO"
LOG_LEVEL_WARNING = "WARNING"
LOG_LEVEL_ERROR = "ERROR"
SUPPORTED_LOG_LEVELS = (
    LOG_LEVEL_DEBUG,
    LOG_LEVEL_INFO,
    LOG_LEVEL_WARNING,
    LOG_LEVEL_ERROR,
)

DEFAULT_OUTPUT_ROOT = "runs"
DEFAULT_SWEEP_WORKERS = 1

RUNTIME_ENV_KEYS = (
    "NNLIF_OUTPUT_ROOT",
    "NNLIF_LOG_LEVEL",
    "NNLIF_SWEEP_WORKERS",
)


@dataclass(frozen=True)
class RuntimeSettings:
    output_root: Path
    log_level: str
    sweep_workers: int


def log_level_from_env() -> str:
    level = os_environ.get("NNLIF_LOG_LEVEL", LOG_LEVEL_INFO).strip().upper()
    if level in SUPPORTED_LOG_LEVELS:
        return level
    supported = ", ".join(SUPPORTED_LOG_LEVELS)
    raise ValueError(f"NNLIF_LOG_LEVEL must be one of: {supported}")


def output_root_from_env() -> Path:
    raw = os_environ.get("NNLIF_OUTPUT_ROOT", "").strip()
    return Path(raw or DEFAULT_OUTPUT_ROOT)


def sweep_workers_from_env() -> int:
    return _read_optional_positive_int("NNLIF_SWEEP_WORKERS", default=DEFAULT_SWEEP_WORKERS)


def runtime_settings_from_env() -> RuntimeSettings:
    errors: list[str] = []
    log_level = LOG_LEVEL_INFO
    workers = DEFAULT_SWEEP_WORKERS
    try:
        log_level = log_level_from_env()
    except ValueError as exc:
        errors.append(str(exc))
    try:
        workers = sweep_workers_from_env()
    except ValueError as exc:
        errors.append(str(exc))
    if errors:
        joined = "; ".join(errors)
        raise ValueError(f"Runtime configuration validation failed: {joined}")
    return RuntimeSettings(output_root=output_root_from_env(), log_level=log_level, sweep_workers=workers)


def _read_optional_positive_int(name: str, *, default: int) -> int:
    raw = os_environ.get(name, "").strip()
    if not raw:
        return default
    try:
        parsed = int(raw)
    except ValueError as exc:
        raise ValueError(f"{name} must be a positive integer") from exc
    if parsed <= 0:
        raise ValueError(f"{name} must be a positive integer")
    return parsed
