from __future__ import annotations

from pathlib import Path

import pytest

from app.main import run
from app.services.runtime_settings import (
    RUNTIME_ENV_KEYS,
    log_level_from_env,
    output_root_from_env,
    runtime_settings_from_env,
    sweep_workers_from_env,
)


def _clear_runtime_env(monkeypatch: pytest.MonkeyPatch) -> None:
    for key in RUNTIME_ENV_KEYS:
        monkeypatch.delenv(key, raising=False)


@pytest.mark.unit
def test_defaults_without_environment(monkeypatch: pytest.MonkeyPatch) -> None:
    _clear_runtime_env(monkeypatch)

    settings = runtime_settings_from_env()

    assert settings.output_root == Path("runs")
    assert settings.log_level == "INFO"
    assert settings.sweep_workers == 1


@pytest.mark.unit
def test_log_level_is_case_insensitive(monkeypatch: pytest.MonkeyPatch) -> None:
    _clear_runtime_env(monkeypatch)
    monkeypatch.setenv("NNLIF_LOG_LEVEL", "debug")

    assert log_level_from_env() == "DEBUG"


@pytest.mark.unit
def test_log_level_rejects_invalid_value(monkeypatch: pytest.MonkeyPatch) -> None:
    _clear_runtime_env(monkeypatch)
    monkeypatch.setenv("NNLIF_LOG_LEVEL", "verbose")

    with pytest.raises(ValueError, match="NNLIF_LOG_LEVEL"):
        log_level_from_env()


@pytest.mark.unit
def test_output_root_from_env(monkeypatch: pytest.MonkeyPatch, tmp_path: Path) -> None:
    _clear_runtime_env(monkeypatch)
    monkeypatch.setenv("NNLIF_OUTPUT_ROOT", str(tmp_path))

    assert output_root_from_env() == tmp_path


@pytest.mark.unit
@pytest.mark.parametrize("raw", ["0", "-2", "many"])
def test_sweep_workers_reject_invalid_values(monkeypatch: pytest.MonkeyPatch, raw: str) -> None:
    _clear_runtime_env(monkeypatch)
    monkeypatch.setenv("NNLIF_SWEEP_WORKERS", raw)

    with pytest.raises(ValueError, match="NNLIF_SWEEP_WORKERS"):
        sweep_workers_from_env()


@pytest.mark.unit
def test_validation_aggregates_all_errors(monkeypatch: pytest.MonkeyPatch) -> None:
    _clear_runtime_env(monkeypatch)
    monkeypatch.setenv("NNLIF_LOG_LEVEL", "verbose")
    monkeypatch.setenv("NNLIF_SWEEP_WORKERS", "0")

    with pytest.raises(ValueError) as exc_info:
        runtime_settings_from_env()

    message = str(exc_info.value)
    assert "Runtime configuration validation failed" in message
    assert "NNLIF_LOG_LEVEL" in message
    assert "NNLIF_SWEEP_WORKERS" in message


@pytest.mark.unit
def test_dotenv_output_root_is_used(
    monkeypatch: pytest.MonkeyPatch,
    capsys: pytest.CaptureFixture[str],
    tmp_path: Path,
) -> None:
    _clear_runtime_env(monkeypatch)
    workdir = tmp_path / "dotenv-startup"
    workdir.mkdir()
    (workdir / ".env").write_text("NNLIF_OUTPUT_ROOT=from-dotenv\n", encoding="utf-8")
    monkeypatch.chdir(workdir)

    exit_code = run(["discrete", "--b", "1.5", "--n0", "0.1", "--max-k", "5"])

    capsys.readouterr()
    assert exit_code == 0
    assert (workdir / "from-dotenv" / "discrete").is_dir()


@pytest.mark.unit
def test_process_env_overrides_dotenv_values(
    monkeypatch: pytest.MonkeyPatch,
    capsys: pytest.CaptureFixture[str],
    tmp_path: Path,
) -> None:
    _clear_runtime_env(monkeypatch)
    workdir = tmp_path / "dotenv-precedence"
    workdir.mkdir()
    (workdir / ".env").write_text("NNLIF_LOG_LEVEL=verbose\n", encoding="utf-8")
    monkeypatch.chdir(workdir)
    monkeypatch.setenv("NNLIF_LOG_LEVEL", "WARNING")

    exit_code = run(["stationary", "--b", "0.5"])

    capsys.readouterr()
    assert exit_code == 0


@pytest.mark.unit
def test_invalid_runtime_settings_exit_with_usage_code(
    monkeypatch: pytest.MonkeyPatch,
    capsys: pytest.CaptureFixture[str],
) -> None:
    _clear_runtime_env(monkeypatch)
    monkeypatch.setattr("app.main.load_dotenv", lambda *_args, **_kwargs: False)
    monkeypatch.setenv("NNLIF_SWEEP_WORKERS", "zero")

    exit_code = run(["stationary", "--b", "0.5"])

    captured = capsys.readouterr()
    assert exit_code == 2
    assert "ERROR:" in captured.err
    assert "NNLIF_SWEEP_WORKERS" in captured.err
