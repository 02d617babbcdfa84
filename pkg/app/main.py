from __future__ import annotations

import argparse
import json
import logging
import sys
import uuid
from collections.abc import Callable
from pathlib import Path

import numpy as np
from dotenv import find_dotenv, load_dotenv

from app.commands import SUPPORTED_COMMANDS, SUPPORTED_EXPERIMENTS, validate_command, validate_experiment
from app.domain.discrete import classify_regime, iterate_firing_rate, monotonicity_report
from app.domain.error_taxonomy import EXIT_OK, EXIT_USAGE, error_code_for, exit_code_for
from app.domain.errors import DomainError
from app.domain.models import DensityProfile, ExperimentReport, FloatArray, ModelParams
from app.domain.pde import make_grid
from app.domain.specfun import (
    default_v_min,
    eval_f,
    find_b_star,
    pseudo_equilibrium_profile,
    solve_stationary,
)
from app.domain.use_cases.experiments import ExperimentOutcome, evaluate_case, run_experiment
from app.lib.artifacts import RunDirectory
from app.lib.artifacts.codecs import report_row
from app.lib.artifacts.types import (
    BifurcationArtifact,
    StationaryArtifact,
    StationaryRootRow,
    SyncRowArtifact,
    VisitRowArtifact,
)
from app.lib.plots import plot_cobweb, plot_firing_rates, plot_maps, plot_profiles
from app.logging_setup import configure_logging
from app.services.run_config import load_experiment_config, load_run_config
from app.services.runtime_settings import RuntimeSettings, runtime_settings_from_env

logger = logging.getLogger("runtime")

Payload = dict[str, object]
CommandHandler = Callable[[argparse.Namespace, RuntimeSettings], Payload]


def _add_model_args(parser: argparse.ArgumentParser, *, with_b: bool = True) -> None:
    if with_b:
        parser.add_argument("--b", type=float, required=True, help="Connectivity")
    parser.add_argument("--a", type=float, default=1.0, help="Diffusion coefficient")
    parser.add_argument("--v-reset", type=float, default=1.0)
    parser.add_argument("--v-fire", type=float, default=2.0)


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(prog="nnlif", description="Delayed NNLIF laboratory")
    commands = parser.add_subparsers(dest="command", required=True, metavar="|".join(SUPPORTED_COMMANDS))

    stationary = commands.add_parser("stationary", help="Stationary firing rates")
    _add_model_args(stationary)
    stationary.add_argument("--out", type=Path, default=None, help="Also write stationary.json here")

    discrete = commands.add_parser("discrete", help="Iterate the firing-rate sequence")
    _add_model_args(discrete)
    discrete.add_argument("--n0", type=float, required=True)
    discrete.add_argument("--max-k", type=int, default=10_000)
    discrete.add_argument("--tol", type=float, default=1e-9)
    discrete.add_argument("--out", type=Path, default=None)

    bifurcation = commands.add_parser("bifurcation", help="Inhibitory flip point b*")
    _add_model_args(bifurcation, with_b=False)
    bifurcation.add_argument("--out", type=Path, default=None)

    pseudo = commands.add_parser("pseudo", help="Pseudo-equilibrium profile CSV")
    _add_model_args(pseudo)
    pseudo.add_argument("--rate", type=float, required=True)
    pseudo.add_argument("--dv", type=float, default=0.02)
    pseudo.add_argument("--v-min", type=float, default=None)
    pseudo.add_argument("--out", type=Path, default=None)

    map_plot = commands.add_parser("map-plot", help="f and F curves")
    _add_model_args(map_plot, with_b=False)
    map_plot.add_argument("--b", type=float, nargs="+", required=True)
    map_plot.add_argument("--n-max", type=float, default=1.0)
    map_plot.add_argument("--samples", type=int, default=200)
    map_plot.add_argument("--out", type=Path, default=None)

    simulate = commands.add_parser("simulate", help="Run one PDE config")
    simulate.add_argument(
        "config",
        type=Path,
        help=(
            "Run config YAML. run.reinjection defaults to boundary_flux (the source carries "
            "minus the discrete flux balance, so mass is conserved exactly); firing_rate "
            "reinjects N(t) from the boundary stencil"
        ),
    )
    simulate.add_argument("--out", type=Path, default=None)

    experiment = commands.add_parser("experiment", help="Run a named experiment")
    experiment.add_argument("name", nargs="?", default=None, help=", ".join(SUPPORTED_EXPERIMENTS))
    experiment.add_argument("--config", type=Path, default=None)
    experiment.add_argument("--smoke", action="store_true", help="Coarse mesh, shorter runs")
    experiment.add_argument("--workers", type=int, default=None)
    experiment.add_argument("--out", type=Path, default=None)
    return parser.parse_args(argv)


def _params(args: argparse.Namespace, *, b: float | None = None) -> ModelParams:
    return ModelParams(
        b=args.b if b is None else b,
        a=args.a,
        v_reset=args.v_reset,
        v_fire=args.v_fire,
    )


def cmd_stationary(args: argparse.Namespace, settings: RuntimeSettings) -> Payload:
    del settings
    params = _params(args)
    stationary = solve_stationary(params)
    artifact = StationaryArtifact(
        b=params.b,
        a=params.a,
        v_reset=params.v_reset,
        v_fire=params.v_fire,
        count=stationary.count,
        roots=[StationaryRootRow(rate=root.rate, slope=root.slope) for root in stationary.roots],
        regime=classify_regime(params),
    )
    if args.out is not None:
        RunDirectory(args.out).save_json(kind="stationary", artifact=artifact, name="stationary.json")
    return artifact.model_dump(mode="json")


def cmd_discrete(args: argparse.Namespace, settings: RuntimeSettings) -> Payload:
    params = _params(args)
    trajectory = iterate_firing_rate(params, args.n0, max_k=args.max_k, tol=args.tol)
    report = monotonicity_report(trajectory)
    directory = RunDirectory(args.out or settings.output_root / "discrete" / f"b{params.b:g}-n0{args.n0:g}")
    directory.save_trajectory(values=trajectory.values)

    upper = 1.2 * max(max(trajectory.values[: min(len(trajectory.values), 50)]), 1e-3)
    figure = plot_cobweb(
        lambda rate: eval_f(params, rate),
        trajectory.values[:50],
        n_max=upper,
        title=f"b={params.b:g}, N0={args.n0:g}",
    )
    directory.save_figure(figure=figure, name="cobweb.svg")
    files = directory.finish()
    return {
        "b": params.b,
        "n0": args.n0,
        "classification": trajectory.classification.kind,
        "iterations": trajectory.iterations_used,
        "tail": list(trajectory.values[-4:]),
        "monotonicity": report.kind,
        "even_direction": report.even_direction,
        "odd_direction": report.odd_direction,
        "direction": report.direction,
        "files": [str(path) for path in files],
    }


def cmd_bifurcation(args: argparse.Namespace, settings: RuntimeSettings) -> Payload:
    del settings
    params = _params(args, b=0.0)
    b_star = find_b_star(params)
    root = solve_stationary(params.with_b(b_star)).roots[0]
    artifact = BifurcationArtifact(
        b_star=b_star,
        rate=root.rate,
        slope=root.slope,
        a=params.a,
        v_reset=params.v_reset,
        v_fire=params.v_fire,
    )
    if args.out is not None:
        RunDirectory(args.out).save_json(kind="bifurcation", artifact=artifact, name="bifurcation.json")
    return artifact.model_dump(mode="json")


def cmd_pseudo(args: argparse.Namespace, settings: RuntimeSettings) -> Payload:
    params = _params(args)
    v_min = args.v_min if args.v_min is not None else default_v_min(params, args.rate)
    grid = make_grid(params, v_min, args.dv)
    profile = pseudo_equilibrium_profile(params, args.rate, grid)
    directory = RunDirectory(args.out or settings.output_root / "pseudo")
    path = directory.save_profile(profile=profile, name=f"pseudo_b{params.b:g}_N{args.rate:g}.csv")
    directory.finish()
    return {
        "b": params.b,
        "rate": args.rate,
        "firing_rate": eval_f(params, args.rate),
        "mass": profile.mass,
        "v_min": grid.v_min,
        "dv": grid.dv,
        "file": str(path),
    }


def cmd_map_plot(args: argparse.Namespace, settings: RuntimeSettings) -> Payload:
    if args.n_max <= 0 or args.samples < 2:
        raise ValueError("--n-max must be positive and --samples at least 2")
    params = _params(args, b=0.0)
    xs = np.linspace(0.0, args.n_max, args.samples)
    # F is left blank where f already leaves the plotted window by far.
    ceiling = 100.0 * args.n_max
    curves: dict[float, tuple[FloatArray, FloatArray, FloatArray]] = {}
    for b in args.b:
        coupled = params.with_b(b)
        f_values = np.array([eval_f(coupled, float(x)) for x in xs])
        ff_values = np.array([eval_f(coupled, float(y)) if y <= ceiling else np.nan for y in f_values])
        curves[b] = (xs, f_values, ff_values)
    directory = RunDirectory(args.out or settings.output_root / "map-plot")
    path = directory.save_figure(figure=plot_maps(curves, params), name="maps.svg")
    directory.finish()
    return {"b": list(args.b), "n_max": args.n_max, "file": str(path)}


def _write_case(
    directory: RunDirectory, report: ExperimentReport, *, stride: int, plots: bool, prefix: str = ""
) -> None:
    record = report.record
    if record is None:
        return
    directory.save_timeseries(record=record, stride=stride, prefix=prefix)
    directory.save_snapshots(record=record, prefix=prefix)
    if not plots:
        return
    figure = plot_firing_rates({report.label: (record.times, record.rates)}, title=report.label)
    directory.save_figure(figure=figure, name=f"{prefix}firing_rate.svg")
    shown: dict[str, DensityProfile] = {f"t={t:g}": profile for t, profile in sorted(record.snapshots.items())[:8]}
    shown[f"t={record.t_end:g} (final)"] = record.final
    directory.save_figure(figure=plot_profiles(shown, title=report.label), name=f"{prefix}profiles.svg")


def cmd_simulate(args: argparse.Namespace, settings: RuntimeSettings) -> Payload:
    config = load_run_config(file_path=args.config)
    report = evaluate_case(config.as_case())
    root = args.out or config.output.directory or settings.output_root / "simulate" / config.name
    directory = RunDirectory(root)
    _write_case(directory, report, stride=config.output.timeseries_stride, plots=config.output.plots)
    directory.save_rows(kind="report", rows=[report_row(report)], name="report.csv")
    files = directory.finish()
    return {
        "name": config.name,
        "verdict": report.pde.kind,
        "discrete": report.discrete.kind,
        "agreement": report.agreement,
        "final_rate": report.final_rate,
        "diverged": report.diverged,
        "directory": str(root),
        "files": len(files),
    }


def _write_outcome(directory: RunDirectory, outcome: ExperimentOutcome, *, stride: int, plots: bool) -> None:
    for report in outcome.reports:
        _write_case(directory, report, stride=stride, plots=plots, prefix=f"{report.label}/")
    directory.save_rows(kind="report", rows=[report_row(report) for report in outcome.reports], name="report.csv")
    if outcome.sync:
        rows = [
            SyncRowArtifact(
                label_a=item.label_a,
                label_b=item.label_b,
                max_relative_deviation=item.max_relative_deviation,
                phase_shift=item.phase_shift,
            )
            for item in outcome.sync
        ]
        directory.save_rows(kind="sync", rows=rows, name="sync.csv")
    visit_rows = [
        VisitRowArtifact(label=label, t=t, sup_distance=distance)
        for label, visits in outcome.visits.items()
        for t, distance in visits
    ]
    if visit_rows:
        directory.save_rows(kind="visits", rows=visit_rows, name="visits.csv")
    if not plots:
        return
    traces = {
        report.label: (report.record.times, report.record.rates)
        for report in outcome.reports
        if report.record is not None
    }
    directory.save_figure(figure=plot_firing_rates(traces, title=outcome.plan.name), name="firing_rates.svg")


def cmd_experiment(args: argparse.Namespace, settings: RuntimeSettings) -> Payload:
    if (args.name is None) == (args.config is None):
        raise ValueError("experiment takes either a name or --config")
    config_path = args.config if args.config is not None else validate_experiment(args.name).config_path
    config = load_experiment_config(file_path=config_path)
    plan = config.resolved_plan(smoke=args.smoke)
    workers = args.workers if args.workers is not None else settings.sweep_workers
    if workers <= 0:
        raise ValueError("--workers must be positive")
    outcome = run_experiment(plan, workers=workers)

    suffix = "-smoke" if args.smoke else ""
    root = args.out or config.output.directory or settings.output_root / "experiments" / f"{plan.name}{suffix}"
    directory = RunDirectory(root)
    _write_outcome(directory, outcome, stride=config.output.timeseries_stride, plots=config.output.plots)
    files = directory.finish()
    return {
        "experiment": plan.name,
        "smoke": args.smoke,
        "cases": [
            {"label": report.label, "discrete": report.discrete.kind, "verdict": report.pde.kind}
            for report in outcome.reports
        ],
        "agreement": all(report.agreement for report in outcome.reports),
        "sync": [
            {"pair": [item.label_a, item.label_b], "max_relative_deviation": item.max_relative_deviation}
            for item in outcome.sync
        ],
        "directory": str(root),
        "files": len(files),
    }


COMMAND_HANDLERS: dict[str, CommandHandler] = {
    "stationary": cmd_stationary,
    "discrete": cmd_discrete,
    "bifurcation": cmd_bifurcation,
    "pseudo": cmd_pseudo,
    "map-plot": cmd_map_plot,
    "simulate": cmd_simulate,
    "experiment": cmd_experiment,
}


def run(argv: list[str] | None = None) -> int:
    load_dotenv(find_dotenv(usecwd=True), override=False)
    args = parse_args(argv)

    try:
        command = validate_command(args.command)
        settings = runtime_settings_from_env()
    except ValueError as exc:
        sys.stderr.write(f"ERROR: {exc}\n")
        return EXIT_USAGE

    configure_logging(settings.log_level)
    run_id = str(uuid.uuid4())
    logger.info("command started", extra={"command": args.command, "run_id": run_id})

    handler = COMMAND_HANDLERS[command]
    try:
        payload = handler(args, settings)
    except ValueError as exc:
        sys.stderr.write(f"ERROR: {exc}\n")
        logger.error("command rejected", extra={"command": args.command, "run_id": run_id, "code": "validation_error"})
        return EXIT_USAGE
    except DomainError as exc:
        code = error_code_for(exc)
        sys.stderr.write(f"ERROR: {exc}\n")
        logger.error("command failed", extra={"command": args.command, "run_id": run_id, "code": code})
        return exit_code_for(code)
    except Exception as exc:
        sys.stderr.write(f"ERROR: {exc}\n")
        logger.exception("command crashed", extra={"command": args.command, "run_id": run_id, "code": "internal_error"})
        return exit_code_for("internal_error")

    sys.stdout.write(json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n")
    logger.info("command finished", extra={"command": args.command, "run_id": run_id})
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(run())
