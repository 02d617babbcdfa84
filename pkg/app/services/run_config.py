from __future__ import annotations

import logging
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import cast, get_args

import yaml

from app.domain.detectors import DetectorSettings
from app.domain.errors import ConfigError, DomainValidationError
from app.domain.initial_conditions import IC_FAMILIES, ICFamily, InitialConditionSpec
from app.domain.models import ModelParams
from app.domain.pde import ReinjectionMode, SimOptions
from app.domain.use_cases.experiments import CaseSpec, ExperimentPlan, GridSpec, smoke_plan, sweep_cases

logger = logging.getLogger("runtime")

CONFIG_ROOT = Path(__file__).resolve().parent.parent / "configs"
RUN_CONFIG_DIR = CONFIG_ROOT / "runs"
EXPERIMENT_CONFIG_DIR = CONFIG_ROOT / "experiments"
CONFIG_VERSION = "nnlif-config:v1"


@dataclass(frozen=True)
class OutputSettings:
    directory: Path | None = None
    # Every n-th solver step lands in timeseries.csv.
    timeseries_stride: int = 1
    plots: bool = True


@dataclass(frozen=True)
class RunConfig:
    name: str
    params: ModelParams
    grid: GridSpec
    initial: InitialConditionSpec
    t_end: float
    snapshot_times: tuple[float, ...]
    options: SimOptions
    detectors: DetectorSettings
    output: OutputSettings

    def as_case(self) -> CaseSpec:
        return CaseSpec(
            label=self.name,
            params=self.params,
            initial=self.initial,
            t_end=self.t_end,
            grid=self.grid,
            snapshot_times=self.snapshot_times,
            options=self.options,
            detectors=self.detectors,
        )


@dataclass(frozen=True)
class SmokeSettings:
    dv: float
    t_end_scale: float


@dataclass(frozen=True)
class ExperimentConfig:
    plan: ExperimentPlan
    output: OutputSettings
    smoke: SmokeSettings | None = None

    def resolved_plan(self, *, smoke: bool) -> ExperimentPlan:
        if not smoke:
            return self.plan
        if self.smoke is None:
            raise ConfigError(f"experiment {self.plan.name} has no smoke section")
        return smoke_plan(self.plan, dv=self.smoke.dv, t_end_scale=self.smoke.t_end_scale)


def _load_yaml(file_path: str | Path) -> dict[str, object]:
    path = Path(file_path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a YAML object")
    return data


def load_run_config(*, file_path: str | Path) -> RunConfig:
    config = parse_run_config(_load_yaml(file_path))
    logger.info("run config loaded", extra={"config": str(file_path), "b": config.params.b, "d": config.params.d})
    return config


def load_experiment_config(*, file_path: str | Path) -> ExperimentConfig:
    config = parse_experiment_config(_load_yaml(file_path))
    logger.info(
        "experiment config loaded",
        extra={"config": str(file_path), "experiment": config.plan.name, "cases": len(config.plan.cases)},
    )
    return config


def parse_run_config(data: dict[str, object], *, path: str = "") -> RunConfig:
    if not path:
        _check_version(data)
    name = _optional_str(data, "name", path=path) or "run"
    run_raw = _required_obj(data, "run", path=path)
    run_path = _join(path, "run")
    t_end = _required_float(run_raw, "t_end", path=run_path)
    if t_end <= 0:
        raise ConfigError(f"{_join(run_path, 't_end')} must be positive")
    try:
        params = _parse_model(_required_obj(data, "model", path=path), path=_join(path, "model"))
    except DomainValidationError as exc:
        raise ConfigError(f"{_join(path, 'model')}: {exc}") from exc
    return RunConfig(
        name=name,
        params=params,
        grid=_parse_grid(_optional_obj(data, "grid", path=path), path=_join(path, "grid")),
        initial=_parse_initial(_required_obj(data, "initial", path=path), path=_join(path, "initial")),
        t_end=t_end,
        snapshot_times=tuple(_optional_float_list(run_raw, "snapshot_times", path=run_path)),
        options=_parse_options(run_raw, path=run_path),
        detectors=_parse_detectors(_optional_obj(data, "detectors", path=path), path=_join(path, "detectors")),
        output=_parse_output(_optional_obj(data, "output", path=path), path=_join(path, "output")),
    )


def parse_experiment_config(data: dict[str, object]) -> ExperimentConfig:
    _check_version(data)
    name = _required_str(data, "experiment", path="")
    base = _required_obj(data, "base", path="")
    base.setdefault("name", name)

    cases: list[CaseSpec] = []
    for index, raw_case in enumerate(_optional_list(data, "cases", path="")):
        case_path = f"cases[{index}]"
        if not isinstance(raw_case, dict):
            raise ConfigError(f"{case_path} must be object")
        label = _required_str(raw_case, "label", path=case_path)
        merged = _merge_sections(base, raw_case)
        merged["name"] = label
        cases.append(parse_run_config(merged, path=case_path).as_case())

    sweep_raw = _optional_obj(data, "sweep", path="")
    if sweep_raw:
        delays = _optional_float_list(sweep_raw, "delays", path="sweep")
        if not delays:
            raise ConfigError("sweep.delays is required and must be non-empty list of numbers")
        t_end_delays = _optional_float(sweep_raw, "t_end_delays", path="sweep")
        if t_end_delays is not None and t_end_delays <= 0:
            raise ConfigError("sweep.t_end_delays must be positive")
        template_raw = base
        if t_end_delays is not None and "t_end" not in _optional_obj(base, "run", path="base"):
            template_raw = _merge_sections(base, {"run": {"t_end": t_end_delays * max(delays)}})
        template = parse_run_config(template_raw, path="base")
        try:
            cases.extend(
                sweep_cases(
                    template.params,
                    delays,
                    template.initial,
                    None if t_end_delays is not None else template.t_end,
                    t_end_delays=t_end_delays,
                    grid=template.grid,
                    options=template.options,
                    detectors=template.detectors,
                )
            )
        except DomainValidationError as exc:
            raise ConfigError(f"sweep: {exc}") from exc
    if not cases:
        raise ConfigError(f"experiment {name} defines neither cases nor sweep")

    labels = [case.label for case in cases]
    if len(set(labels)) != len(labels):
        raise ConfigError(f"experiment {name} has duplicate case labels")

    sync_raw = _optional_obj(data, "sync", path="")
    pairs: list[tuple[str, str]] = []
    for index, pair in enumerate(_optional_list(sync_raw, "pairs", path="sync")):
        if not (isinstance(pair, list) and len(pair) == 2 and all(label in labels for label in pair)):
            raise ConfigError(f"sync.pairs[{index}] must name two case labels")
        pairs.append((str(pair[0]), str(pair[1])))
    visits_raw = _optional_obj(data, "visits", path="")

    smoke_raw = _optional_obj(data, "smoke", path="")
    smoke = None
    if smoke_raw:
        smoke = SmokeSettings(
            dv=_positive(_required_float(smoke_raw, "dv", path="smoke"), "smoke.dv"),
            t_end_scale=_positive(_optional_float(smoke_raw, "t_end_scale", path="smoke") or 1.0, "smoke.t_end_scale"),
        )

    plan = ExperimentPlan(
        name=name,
        cases=tuple(cases),
        sync_pairs=tuple(pairs),
        sync_from=_optional_float(sync_raw, "from", path="sync") or 0.0,
        visits_from=_optional_float(visits_raw, "from", path="visits"),
    )
    output = _parse_output(_optional_obj(data, "output", path=""), path="output")
    return ExperimentConfig(plan=plan, output=output, smoke=smoke)


def _merge_sections(base: dict[str, object], override: dict[str, object]) -> dict[str, object]:
    """Section-wise merge; `initial` is replaced whole since families take different keys."""
    merged: dict[str, object] = dict(base)
    for key, value in override.items():
        if key == "label":
            continue
        current = merged.get(key)
        if key != "initial" and isinstance(current, dict) and isinstance(value, dict):
            merged[key] = {**current, **value}
        else:
            merged[key] = value
    return merged


def _parse_model(data: dict[str, object], *, path: str) -> ModelParams:
    defaults = ModelParams(b=0.0)
    return ModelParams(
        b=_required_float(data, "b", path=path),
        a=_float_or(data, "a", defaults.a, path=path),
        v_reset=_float_or(data, "v_reset", defaults.v_reset, path=path),
        v_fire=_float_or(data, "v_fire", defaults.v_fire, path=path),
        d=_float_or(data, "d", defaults.d, path=path),
    )


def _parse_grid(data: dict[str, object], *, path: str) -> GridSpec:
    defaults = GridSpec()
    return GridSpec(
        dv=_positive(_float_or(data, "dv", defaults.dv, path=path), _join(path, "dv")),
        v_min=_optional_float(data, "v_min", path=path),
    )


def _parse_initial(data: dict[str, object], *, path: str) -> InitialConditionSpec:
    family = _required_str(data, "family", path=path)
    if family not in IC_FAMILIES:
        supported = ", ".join(IC_FAMILIES)
        raise ConfigError(f"{_join(path, 'family')} must be one of: {supported}")
    raw_path = _optional_str(data, "path", path=path)
    spec = InitialConditionSpec(
        family=cast(ICFamily, family),
        rate=_optional_float(data, "rate", path=path),
        nominal_rate=_optional_float(data, "nominal_rate", path=path),
        mu=_optional_float(data, "mu", path=path),
        sigma=_optional_float(data, "sigma", path=path),
        path=Path(raw_path) if raw_path else None,
    )
    required: dict[str, tuple[str, ...]] = {
        "double_maxwellian": ("mu", "sigma"),
        "csv": ("path",),
    }
    for key in required.get(family, ()):
        if getattr(spec, key) is None:
            raise ConfigError(f"{_join(path, key)} is required for family {family}")
    if family == "pseudo_equilibrium" and spec.rate is None and spec.nominal_rate is None:
        raise ConfigError(f"{path} needs rate or nominal_rate for family pseudo_equilibrium")
    return spec


def _parse_options(data: dict[str, object], *, path: str) -> SimOptions:
    defaults = SimOptions()
    reinjection = _optional_str(data, "reinjection", path=path) or defaults.reinjection
    if reinjection not in get_args(ReinjectionMode):
        supported = ", ".join(get_args(ReinjectionMode))
        raise ConfigError(f"{_join(path, 'reinjection')} must be one of: {supported}")
    single_node = data.get("single_node_source", defaults.single_node_source)
    if not isinstance(single_node, bool):
        raise ConfigError(f"{_join(path, 'single_node_source')} must be boolean")
    return SimOptions(
        sigma=_positive(_float_or(data, "sigma", defaults.sigma, path=path), _join(path, "sigma")),
        single_node_source=single_node,
        c_cfl=_positive(_float_or(data, "c_cfl", defaults.c_cfl, path=path), _join(path, "c_cfl")),
        reinjection=cast(ReinjectionMode, reinjection),
        divergence_cap=_optional_float(data, "divergence_cap", path=path),
        progress_every=_optional_float(data, "progress_every", path=path),
    )


def _parse_detectors(data: dict[str, object], *, path: str) -> DetectorSettings:
    defaults = DetectorSettings()
    values: dict[str, float | int] = {}
    for item in fields(DetectorSettings):
        if item.name not in data:
            continue
        default = getattr(defaults, item.name)
        if isinstance(default, int):
            parsed = _optional_int(data, item.name, path=path)
            values[item.name] = default if parsed is None else parsed
        else:
            values[item.name] = _positive(_float_or(data, item.name, default, path=path), _join(path, item.name))
    unknown = sorted(set(data) - {item.name for item in fields(DetectorSettings)})
    if unknown:
        raise ConfigError(f"{path} has unknown keys: {', '.join(unknown)}")
    return replace(defaults, **values)


def _parse_output(data: dict[str, object], *, path: str) -> OutputSettings:
    directory = _optional_str(data, "directory", path=path)
    stride = _optional_int(data, "timeseries_stride", path=path)
    if stride is not None and stride <= 0:
        raise ConfigError(f"{_join(path, 'timeseries_stride')} must be positive")
    plots = data.get("plots", True)
    if not isinstance(plots, bool):
        raise ConfigError(f"{_join(path, 'plots')} must be boolean")
    return OutputSettings(
        directory=Path(directory) if directory else None,
        timeseries_stride=stride or 1,
        plots=plots,
    )


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _positive(value: float, key: str) -> float:
    if value <= 0:
        raise ConfigError(f"{key} must be positive")
    return value


def _required_str(data: dict[str, object], key: str, *, path: str) -> str:
    value = data.get(key)
    if not isinstance(value, str) or not value:
        raise ConfigError(f"{_join(path, key)} is required and must be non-empty string")
    return value


def _optional_str(data: dict[str, object], key: str, *, path: str) -> str | None:
    value = data.get(key)
    if value is None:
        return None
    if not isinstance(value, str):
        raise ConfigError(f"{_join(path, key)} must be string or null")
    return value


def _required_float(data: dict[str, object], key: str, *, path: str) -> float:
    value = data.get(key)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{_join(path, key)} is required and must be number")
    return float(value)


def _optional_float(data: dict[str, object], key: str, *, path: str) -> float | None:
    if data.get(key) is None:
        return None
    return _required_float(data, key, path=path)


def _float_or(data: dict[str, object], key: str, default: float, *, path: str) -> float:
    value = _optional_float(data, key, path=path)
    return default if value is None else value


def _optional_int(data: dict[str, object], key: str, *, path: str) -> int | None:
    value = data.get(key)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{_join(path, key)} must be integer or null")
    return value


def _required_obj(data: dict[str, object], key: str, *, path: str) -> dict[str, object]:
    value = data.get(key)
    if not isinstance(value, dict):
        raise ConfigError(f"{_join(path, key)} is required and must be object")
    return value


def _optional_obj(data: dict[str, object], key: str, *, path: str) -> dict[str, object]:
    if data.get(key) is None:
        return {}
    return _required_obj(data, key, path=path)


def _optional_list(data: dict[str, object], key: str, *, path: str) -> list[object]:
    value = data.get(key)
    if value is None:
        return []
    if not isinstance(value, list):
        raise ConfigError(f"{_join(path, key)} must be list")
    return value


def _optional_float_list(data: dict[str, object], key: str, *, path: str) -> list[float]:
    result: list[float] = []
    for value in _optional_list(data, key, path=path):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{_join(path, key)} must contain numbers")
        result.append(float(value))
    return result


def _check_version(data: dict[str, object]) -> None:
    version = data.get("config_version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ConfigError(f"config_version must be {CONFIG_VERSION}")
