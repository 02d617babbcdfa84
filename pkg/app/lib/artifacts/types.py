from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field

# v1 contracts for files a run directory holds next to its CSV tables.


class StationaryRootRow(BaseModel):
    rate: float
    # f'(N) at the root; |slope| < 1 means the discrete map attracts there.
    slope: float


class StationaryArtifact(BaseModel):
    b: float
    a: float
    v_reset: float
    v_fire: float
    count: int = Field(ge=0)
    roots: list[StationaryRootRow]
    regime: str
    schema_version: str = Field(default="stationary:v1")


class BifurcationArtifact(BaseModel):
    b_star: float
    # The stationary rate and map slope at b_star.
    rate: float
    slope: float
    a: float
    v_reset: float
    v_fire: float
    schema_version: str = Field(default="bifurcation:v1")


class ReportRowArtifact(BaseModel):
    # One flat row per simulated case in report.csv.
    label: str
    b: float
    d: float
    initial_rate: float
    discrete: Literal["converged", "two_cycle", "diverging", "undetermined"]
    discrete_detail: str
    verdict: Literal["steady", "plateau", "periodic", "undetermined"]
    steady_rate: float | None = None
    period: float | None = None
    n_min: float | None = None
    n_max: float | None = None
    agreement: bool
    final_rate: float
    diverged: bool
    max_sup_distance: float | None = None
    max_rate_deviation: float | None = None
    schema_version: str = Field(default="report:v1")


class SyncRowArtifact(BaseModel):
    label_a: str
    label_b: str
    max_relative_deviation: float
    phase_shift: float
    schema_version: str = Field(default="sync:v1")


class VisitRowArtifact(BaseModel):
    label: str
    t: float
    sup_distance: float
    schema_version: str = Field(default="visits:v1")
