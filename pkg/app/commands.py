from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from app.services.run_config import EXPERIMENT_CONFIG_DIR

SUPPORTED_COMMANDS = (
    "stationary",
    "discrete",
    "bifurcation",
    "pseudo",
    "map-plot",
    "simulate",
    "experiment",
)

SUPPORTED_EXPERIMENTS = (
    "bistability",
    "delay-sweep-excitatory",
    "delay-sweep-no-eq",
    "inhibitory-periodic",
    "fig13-sync",
)


@dataclass(frozen=True)
class NamedExperiment:
    name: str
    config_path: Path


def validate_command(command: str) -> str:
    if command in SUPPORTED_COMMANDS:
        return command

    supported = ", ".join(SUPPORTED_COMMANDS)
    raise ValueError(f"Unsupported command '{command}'. Supported commands: {supported}")


def validate_experiment(name: str) -> NamedExperiment:
    if name in SUPPORTED_EXPERIMENTS:
        return NamedExperiment(name=name, config_path=EXPERIMENT_CONFIG_DIR / f"{name}.yaml")

    supported = ", ".join(SUPPORTED_EXPERIMENTS)
    raise ValueError(
        f"Unsupported experiment '{name}'. Supported experiments: {supported}. "
        "Note: custom studies run through `experiment --config <file>`."
    )
