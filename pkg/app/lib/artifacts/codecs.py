from __future__ import annotations

import csv
import io
import json
from collections.abc import Sequence

import numpy as np
from pydantic import BaseModel

from app.domain.models import (
    ConvergedToFixedPoint,
    DensityProfile,
    ExperimentReport,
    FloatArray,
    Periodic,
    SimRecord,
    SteadyState,
    TwoCycle,
)
from app.lib.artifacts.types import ReportRowArtifact

# Seventeen significant digits round-trip every float64.
FLOAT_FORMAT = "%.17g"


def encode_table(header: Sequence[str], columns: Sequence[FloatArray], *, formats: Sequence[str] | None = None) -> bytes:
    if len(header) != len(columns):
        raise ValueError("table header and columns differ in length")
    buffer = io.StringIO()
    np.savetxt(
        buffer,
        np.column_stack(columns) if columns[0].size else np.empty((0, len(columns))),
        fmt=list(formats) if formats is not None else FLOAT_FORMAT,
        delimiter=",",
        header=",".join(header),
        comments="",
    )
    return buffer.getvalue().encode("utf-8")


def encode_timeseries(record: SimRecord, *, stride: int = 1) -> bytes:
    """Columns t, N, mass; every `stride`-th step plus the last one."""
    if stride <= 0:
        raise ValueError("stride must be positive")
    picked = np.arange(0, record.times.size, stride)
    if picked[-1] != record.times.size - 1:
        picked = np.append(picked, record.times.size - 1)
    return encode_table(("t", "N", "mass"), (record.times[picked], record.rates[picked], record.masses[picked]))


def encode_profile(profile: DensityProfile) -> bytes:
    return encode_table(("v", "p"), (profile.grid.nodes, profile.values))


def encode_trajectory(values: Sequence[float]) -> bytes:
    ks = np.arange(len(values), dtype=np.float64)
    return encode_table(("k", "N_k"), (ks, np.asarray(values, dtype=np.float64)), formats=("%d", FLOAT_FORMAT))


def encode_json_artifact(artifact: BaseModel) -> bytes:
    return json.dumps(
        artifact.model_dump(mode="json"),
        sort_keys=True,
        indent=2,
        ensure_ascii=False,
    ).encode("utf-8")


def encode_rows(rows: Sequence[BaseModel]) -> bytes:
    if not rows:
        return b""

    fieldnames = list(rows[0].model_dump(mode="json").keys())
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row.model_dump(mode="json"))
    return buffer.getvalue().encode("utf-8")


def report_row(report: ExperimentReport) -> ReportRowArtifact:
    discrete = report.discrete
    detail = ""
    if isinstance(discrete, ConvergedToFixedPoint):
        detail = f"limit={discrete.limit:.6g}"
    elif isinstance(discrete, TwoCycle):
        detail = f"n_minus={discrete.n_minus:.6g};n_plus={discrete.n_plus:.6g}"
    verdict = report.pde
    periodic = verdict if isinstance(verdict, Periodic) else None
    return ReportRowArtifact(
        label=report.label,
        b=report.params.b,
        d=report.params.d,
        initial_rate=report.initial_rate,
        discrete=discrete.kind,
        discrete_detail=detail,
        verdict=verdict.kind,
        steady_rate=verdict.rate if isinstance(verdict, SteadyState) else None,
        period=periodic.period if periodic else None,
        n_min=periodic.n_min if periodic else None,
        n_max=periodic.n_max if periodic else None,
        agreement=report.agreement,
        final_rate=report.final_rate,
        diverged=report.diverged,
        max_sup_distance=max(report.sup_distances) if report.sup_distances else None,
        max_rate_deviation=max(report.rate_deviations) if report.rate_deviations else None,
    )
