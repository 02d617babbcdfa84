from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

from matplotlib.figure import Figure
from pydantic import BaseModel

from app.domain.models import DensityProfile, SimRecord
from app.lib.artifacts.codecs import (
    encode_json_artifact,
    encode_profile,
    encode_rows,
    encode_timeseries,
    encode_trajectory,
)

logger = logging.getLogger("runtime")

SCHEMA_VERSION_BY_CONTRACT: dict[str, dict[str, str]] = {
    "v1": {
        "stationary": "stationary:v1",
        "bifurcation": "bifurcation:v1",
        "report": "report:v1",
        "sync": "sync:v1",
        "visits": "visits:v1",
    }
}


def profile_file_name(t: float) -> str:
    return f"profile_t{t:g}.csv"


@dataclass
class RunDirectory:
    """Artifact writer rooted at one run directory; file names are fixed so reruns overwrite."""

    root: Path
    active_contract_version: str = "v1"
    written: list[Path] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.active_contract_version not in SCHEMA_VERSION_BY_CONTRACT:
            raise ValueError(f"unsupported artifact contract version: {self.active_contract_version}")
        self.root.mkdir(parents=True, exist_ok=True)

    def put_bytes(self, *, name: str, payload: bytes) -> Path:
        path = self.root / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(payload)
        self.written.append(path)
        return path

    def save_timeseries(self, *, record: SimRecord, stride: int = 1, prefix: str = "") -> Path:
        return self.put_bytes(name=f"{prefix}timeseries.csv", payload=encode_timeseries(record, stride=stride))

    def save_profile(self, *, profile: DensityProfile, name: str) -> Path:
        return self.put_bytes(name=name, payload=encode_profile(profile))

    def save_snapshots(self, *, record: SimRecord, prefix: str = "") -> list[Path]:
        return [
            self.save_profile(profile=profile, name=f"{prefix}{profile_file_name(t)}")
            for t, profile in sorted(record.snapshots.items())
        ]

    def save_trajectory(self, *, values: Sequence[float], name: str = "trajectory.csv") -> Path:
        return self.put_bytes(name=name, payload=encode_trajectory(values))

    def save_json(self, *, kind: str, artifact: BaseModel, name: str) -> Path:
        self._validate_schema(kind, _schema_version(artifact))
        return self.put_bytes(name=name, payload=encode_json_artifact(artifact))

    def save_rows(self, *, kind: str, rows: Sequence[BaseModel], name: str) -> Path:
        for row in rows:
            self._validate_schema(kind, _schema_version(row))
        return self.put_bytes(name=name, payload=encode_rows(rows))

    def save_figure(self, *, figure: Figure, name: str) -> Path:
        path = self.root / name
        path.parent.mkdir(parents=True, exist_ok=True)
        # No date metadata so reruns produce identical files.
        figure.savefig(path, format="svg", metadata={"Date": None})
        self.written.append(path)
        return path

    def finish(self) -> list[Path]:
        logger.info("artifacts written", extra={"directory": str(self.root), "files": len(self.written)})
        return list(self.written)

    def _validate_schema(self, artifact_kind: str, actual_schema_version: str) -> None:
        expected = SCHEMA_VERSION_BY_CONTRACT[self.active_contract_version].get(artifact_kind)
        if expected is None:
            raise ValueError(f"unknown artifact kind: {artifact_kind}")
        if actual_schema_version != expected:
            raise ValueError(
                f"artifact schema mismatch for {artifact_kind}: expected {expected}, got {actual_schema_version}"
            )


def _schema_version(artifact: BaseModel) -> str:
    version = getattr(artifact, "schema_version", None)
    if not isinstance(version, str):
        raise ValueError(f"{type(artifact).__name__} carries no schema_version")
    return version
