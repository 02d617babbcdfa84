import pytest

from app.commands import SUPPORTED_COMMANDS, SUPPORTED_EXPERIMENTS, validate_command, validate_experiment


@pytest.mark.unit
@pytest.mark.parametrize("command", SUPPORTED_COMMANDS)
def test_supported_command_is_accepted(command: str) -> None:
    assert validate_command(command) == command


@pytest.mark.unit
@pytest.mark.parametrize("name", SUPPORTED_EXPERIMENTS)
def test_named_experiment_points_at_shipped_config(name: str) -> None:
    experiment = validate_experiment(name)

    assert experiment.name == name
    assert experiment.config_path.is_file()


@pytest.mark.unit
def test_invalid_experiment_rejected_with_actionable_message() -> None:
    with pytest.raises(ValueError) as exc_info:
        validate_experiment("fig99")

    message = str(exc_info.value)
    assert "Unsupported experiment 'fig99'" in message
    assert "Supported experiments:" in message
    assert "experiment --config <file>" in message


@pytest.mark.unit
def test_invalid_command_rejected() -> None:
    with pytest.raises(ValueError, match="Unsupported command 'serve'"):
        validate_command("serve")
