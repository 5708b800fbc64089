#  TomoUnfold
#
#  Unfolded sparse recovery for differential SAR tomography
#  Copyright (C) 2024ff TomoUnfold Authors
#
#  This program is free software: you can redistribute it and/or modify
#  it under the terms of the GNU General Public License as published by
#  the Free Software Foundation, either version 3 of the License, or
#  (at your option) any later version.
#
#  This program is distributed in the hope that it will be useful,
#  but WITHOUT ANY WARRANTY; without even the implied warranty of
#  MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
#  GNU General Public License for more details.
#
#  You should have received a copy of the GNU General Public License
#  along with this program.  If not, see <https://www.gnu.org/licenses/>.

import logging
import math
import os
from ast import literal_eval
from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace
from pathlib import Path

from PySide6.QtCore import QSettings

from .Benchmark import (
    BenchmarkSettings,
    DetectionTolerance,
    TrialConfig,
    placement_bounds,
)
from .Coherence import WeightOptConfig
from .Errors import ConfigError
from .Files import read_geometry, read_tabulated
from .Solver import ABTConfig, BlockNorm, Engine, Hyperparameters
from .Solver import ResidualMode, ScheduleMode
from .TomoModel import (
    AcquisitionGeometry,
    MotionBasis,
    ParameterGrid,
    SteeringMatrix,
    build_steering_matrix,
    linear_term,
    rayleigh_resolution,
    regular_geometry,
    regular_grid,
    sinusoidal_term,
    tabulated_term,
)
from .Tuning import TuningConfig

logger = logging.getLogger(__name__)

THREADS_ENV = "TOMO_UNFOLD_THREADS"


# pylint: disable=too-few-public-methods
# pylint: disable=too-many-instance-attributes
@dataclass
class GeometryConfig:
    csv: str = ""
    wavelength: float = 0.031
    slant_range: float = 697000.0
    incidence_angle: float = 0.0
    baselines: int = 25
    baseline_span: float = 270.0
    time_span: float = 1.0


@dataclass
class BasisConfig:
    # linear, sinusoidal or tabulated:<csv path>
    terms: list = field(default_factory=list)
    period: float = 1.0
    phase_offset: float = 0.0


@dataclass
class GridConfig:
    elevation_min: float = -100.0
    elevation_max: float = 100.0
    elevation_points: int = 200
    motion_min: list = field(default_factory=list)
    motion_max: list = field(default_factory=list)
    motion_points: list = field(default_factory=list)


@dataclass
class WeightsConfig:
    zeta_init: float = 0.1
    alpha_init: float = 0.1
    shrink_factor: float = 0.1
    f1_plateau_rtol: float = 1e-6
    f1_f2_match_rtol: float = 1e-3
    max_outer_iters: int = 5000
    step_normalization: bool = True


@dataclass
class SolverConfig:
    engine: str = "abt"
    c1: float = 0.05
    c2: float = 0.0
    c3: float = 0.5
    num_layers: int = 15
    support_selection: bool = True
    schedule_mode: str = "weighted_random"
    residual_mode: str = "full"
    block_norm: str = "spectral"
    initial_blocksize: int = 0
    threshold_rcond: float = 1e-2


@dataclass
class TuningSection:
    c1_grid: list = field(
        default_factory=lambda: list(TuningConfig().c1_grid)
    )
    c2_grid: list = field(default_factory=lambda: [0.0, 1e-4, 1e-3, 1e-2, 1e-1])
    c3_grid: list = field(default_factory=lambda: [0.3, 0.45, 0.6, 0.75, 0.9])
    refine_factor: int = 2
    samples: int = 256
    snr_db: float = math.inf
    num_scatterers: int = 1


@dataclass
class BenchmarkConfig:
    num_scatterers: int = 2
    distances: list = field(
        default_factory=lambda: [0.2, 0.4, 0.6, 0.8, 1.0, 1.2]
    )
    # every combination of the lists below is one curve
    amplitude_ratio: list = field(default_factory=lambda: [1.0])
    phase_difference: float = 0.0
    snr_db: list = field(default_factory=lambda: [6.0])
    # empty runs solver.engine only
    engines: list = field(default_factory=list)
    trials: int = 500
    on_grid: bool = True
    kappa: float = 0.05
    k_max: int = 2
    min_separation: int = 2
    detection_tolerance: float = 0.25


@dataclass
class RunSection:
    seed: int = 0
    threads: int = 1
    output_dir: str = "."


@dataclass
class RunConfig:
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    basis: BasisConfig = field(default_factory=BasisConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    weights: WeightsConfig = field(default_factory=WeightsConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    tuning: TuningSection = field(default_factory=TuningSection)
    benchmark: BenchmarkConfig = field(default_factory=BenchmarkConfig)
    run: RunSection = field(default_factory=RunSection)

    def as_dict(self) -> dict:
        return asdict(self)


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in {"true", "1", "yes", "on"}:
        return True
    if lowered in {"false", "0", "no", "off"}:
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_list(text: str) -> list:
    stripped = text.strip()
    if not stripped:
        return []
    if not stripped.startswith("["):
        stripped = f"[{stripped}]"
    try:
        value = literal_eval(stripped)
    except (ValueError, SyntaxError):
        # bare words, e.g. "linear, sinusoidal"
        return [item.strip() for item in stripped[1:-1].split(",") if item.strip()]
    if not isinstance(value, list):
        raise ValueError(f"not a list: {text!r}")
    return value


def _to_type(data: object, data_type: type) -> object:
    if isinstance(data, (list, tuple)):
        data = ", ".join(str(item) for item in data)
    text = str(data)
    type_map = {
        bool: _parse_bool,
        list: _parse_list,
        str: lambda x: x.strip().strip('"'),
    }
    return (
        type_map[data_type](text)
        if data_type in type_map
        else data_type(text.strip())
    )


class ConfigFile(QSettings):
    """strict INI reader mapping sections onto the RunConfig dataclasses"""

    def __init__(self, filename: str | Path) -> None:
        super().__init__(str(filename), QSettings.Format.IniFormat)

    def _restore_dataclass(self, name: str, data: object) -> object:
        assert is_dataclass(data)
        result = replace(data)
        known = {field_it.name: field_it for field_it in fields(data)}
        self.beginGroup(name)
        try:
            for key in self.childKeys():
                if key not in known:
                    raise ConfigError(f"unknown key {name}.{key}")
                try:
                    setattr(
                        result,
                        key,
                        _to_type(self.value(key), known[key].type),
                    )
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"{name}.{key}: {exc}") from exc
        finally:
            self.endGroup()
        return result

    def restore_config(self) -> RunConfig:
        logger.info("Loading configuration from: %s", self.fileName())
        if self.status() != QSettings.Status.NoError:
            raise ConfigError(f"{self.fileName()}: unreadable configuration")
        result = RunConfig()
        sections = {field_it.name for field_it in fields(result)}
        if self.childKeys():
            raise ConfigError(
                f"keys outside a section: {', '.join(self.childKeys())}"
            )
        for group in self.childGroups():
            if group not in sections:
                raise ConfigError(f"unknown section [{group}]")
        for field_it in fields(result):
            setattr(
                result,
                field_it.name,
                self._restore_dataclass(
                    field_it.name, getattr(result, field_it.name)
                ),
            )
        logger.debug("restored\n(\n%s\n)", result)
        return result


def load_config(filename: str | Path | None) -> RunConfig:
    if filename is None:
        return RunConfig()
    if not Path(filename).is_file():
        raise ConfigError(f"configuration file not found: {filename}")
    return ConfigFile(filename).restore_config()


def apply_override(config: RunConfig, assignment: str) -> None:
    """section.key=value"""
    target, sep, value = assignment.partition("=")
    section, dot, key = target.strip().partition(".")
    if not (sep and dot):
        raise ConfigError(f"override {assignment!r} is not section.key=value")
    data = getattr(config, section, None)
    if data is None or not is_dataclass(data):
        raise ConfigError(f"unknown section [{section}]")
    known = {field_it.name: field_it for field_it in fields(data)}
    if key not in known:
        raise ConfigError(f"unknown key {section}.{key}")
    try:
        setattr(data, key, _to_type(value, known[key].type))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{section}.{key}: {exc}") from exc


def resolve_threads(config: RunConfig, cli_value: int | None) -> int:
    """--threads > environment > configuration file"""
    if cli_value is not None:
        threads = cli_value
    elif os.environ.get(THREADS_ENV):
        try:
            threads = int(os.environ[THREADS_ENV])
        except ValueError as exc:
            raise ConfigError(f"{THREADS_ENV} is not an integer") from exc
    else:
        threads = config.run.threads
    if threads < 1:
        raise ConfigError(f"Illegal thread count: {threads}")
    return threads


def _choice(enum_type, value: str, name: str):
    try:
        return enum_type(value.strip().lower())
    except ValueError as exc:
        choices = ", ".join(e.value for e in enum_type)
        raise ConfigError(f"{name} must be one of {choices}") from exc


def build_geometry(config: RunConfig) -> AcquisitionGeometry:
    geo = config.geometry
    angle = geo.incidence_angle or None
    if geo.csv:
        return read_geometry(geo.csv, geo.wavelength, geo.slant_range, angle)
    return regular_geometry(
        geo.baselines,
        geo.baseline_span,
        geo.time_span,
        geo.wavelength,
        geo.slant_range,
        angle,
    )


def build_basis(config: RunConfig) -> MotionBasis:
    terms = []
    for term in config.basis.terms:
        name, _, source = str(term).partition(":")
        name = name.strip().lower()
        if name == "linear":
            terms.append(linear_term())
        elif name == "sinusoidal":
            terms.append(
                sinusoidal_term(config.basis.period, config.basis.phase_offset)
            )
        elif name == "tabulated" and source:
            terms.append(tabulated_term(*read_tabulated(source.strip())))
        else:
            raise ConfigError(f"unknown basis term {term!r}")
    return MotionBasis(tuple(terms))


def build_grid(config: RunConfig) -> ParameterGrid:
    grid = config.grid
    motion = (grid.motion_min, grid.motion_max, grid.motion_points)
    if len({len(m) for m in motion}) != 1:
        raise ConfigError("motion_min, motion_max, motion_points differ in length")
    if len(grid.motion_min) != len(config.basis.terms):
        raise ConfigError(
            f"{len(grid.motion_min)} motion axes for"
            f" {len(config.basis.terms)} basis terms"
        )
    return regular_grid(
        (grid.elevation_min, grid.elevation_max, grid.elevation_points),
        [
            (float(lo), float(hi), int(n))
            for lo, hi, n in zip(*motion, strict=True)
        ],
    )


def build_steering(config: RunConfig) -> SteeringMatrix:
    return build_steering_matrix(
        build_geometry(config),
        build_basis(config),
        build_grid(config),
        normalize=True,
    )


def build_weight_config(config: RunConfig) -> WeightOptConfig:
    return WeightOptConfig(**asdict(config.weights))


def build_hyperparameters(config: RunConfig) -> Hyperparameters:
    solver = config.solver
    if not solver.c1 > 0:
        raise ConfigError(f"solver.c1 must be positive, got {solver.c1}")
    if solver.num_layers < 1:
        raise ConfigError("solver.num_layers must be at least 1")
    return Hyperparameters(
        solver.c1,
        solver.c2,
        solver.c3,
        solver.num_layers,
        solver.support_selection,
    )


def build_abt_config(config: RunConfig, engine: str | None = None) -> ABTConfig:
    solver = config.solver
    try:
        return ABTConfig(
            _choice(Engine, engine or solver.engine, "solver.engine"),
            _choice(ScheduleMode, solver.schedule_mode, "solver.schedule_mode"),
            _choice(ResidualMode, solver.residual_mode, "solver.residual_mode"),
            _choice(BlockNorm, solver.block_norm, "solver.block_norm"),
            solver.initial_blocksize,
            solver.threshold_rcond,
            config.run.seed,
        )
    except ValueError as exc:
        raise ConfigError(f"solver: {exc}") from exc


def build_engines(config: RunConfig) -> list[ABTConfig]:
    """one ABTConfig per benchmark engine, solver.engine if none listed"""
    engines = [str(e) for e in config.benchmark.engines] or [config.solver.engine]
    return [build_abt_config(config, engine) for engine in engines]


def _floats(values: list, name: str) -> list[float]:
    if not values:
        raise ConfigError(f"{name} is empty")
    try:
        return [float(v) for v in values]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from exc


def build_trial_config(
    config: RunConfig,
    distance: float,
    snr_db: float | None = None,
    amplitude_ratio: float | None = None,
) -> TrialConfig:
    """first SNR and amplitude ratio of the benchmark lists unless given"""
    bench = config.benchmark
    if snr_db is None:
        snr_db = _floats(bench.snr_db, "benchmark.snr_db")[0]
    if amplitude_ratio is None:
        amplitude_ratio = _floats(
            bench.amplitude_ratio, "benchmark.amplitude_ratio"
        )[0]
    return TrialConfig(
        bench.num_scatterers,
        float(distance),
        amplitude_ratio,
        bench.phase_difference,
        snr_db,
        bench.trials,
        config.run.seed,
        bench.on_grid,
    )


def build_sweep(config: RunConfig) -> list[TrialConfig]:
    """amplitude ratio slowest, then SNR, distance fastest"""
    bench = config.benchmark
    distances = _floats(bench.distances, "benchmark.distances")
    return [
        build_trial_config(config, distance, snr_db, ratio)
        for ratio in _floats(bench.amplitude_ratio, "benchmark.amplitude_ratio")
        for snr_db in _floats(bench.snr_db, "benchmark.snr_db")
        for distance in distances
    ]


def build_benchmark_settings(config: RunConfig) -> BenchmarkSettings:
    bench = config.benchmark
    return BenchmarkSettings(
        bench.kappa,
        bench.k_max,
        bench.min_separation,
        DetectionTolerance(bench.detection_tolerance),
    )


def build_tuning_config(config: RunConfig) -> TuningConfig:
    tuning = config.tuning
    bench = config.benchmark
    return TuningConfig(
        tuple(float(c) for c in tuning.c1_grid),
        tuple(float(c) for c in tuning.c2_grid),
        tuple(float(c) for c in tuning.c3_grid),
        tuning.refine_factor,
        tuning.samples,
        tuning.snr_db,
        TrialConfig(
            tuning.num_scatterers,
            float(bench.distances[-1]) if bench.distances else 1.0,
            _floats(bench.amplitude_ratio, "benchmark.amplitude_ratio")[0],
            bench.phase_difference,
            tuning.snr_db,
            tuning.samples,
            config.run.seed,
            bench.on_grid,
        ),
        config.run.seed,
        config.solver.num_layers,
        config.solver.support_selection,
    )


def validate(config: RunConfig) -> None:
    """check every section against its domain type before any work

    Builds the geometry (CSV included), evaluates the motion basis
    (tabulated tables included) at its times, builds the grid and places
    the widest benchmark scatterer pair on it. File problems surface as
    OSError.
    """
    try:
        geometry = build_geometry(config)
        build_basis(config).matrix(geometry.times)
        grid = build_grid(config)
        build_weight_config(config)
        build_hyperparameters(config)
        build_engines(config)
        sweep = build_sweep(config)
        build_benchmark_settings(config)
        build_tuning_config(config)
        if not 0 <= config.benchmark.kappa < 1:
            raise ConfigError("benchmark.kappa must be in [0,1)")
        if config.benchmark.k_max < 1:
            raise ConfigError("benchmark.k_max must be at least 1")
        if config.benchmark.num_scatterers == 2:
            widest = max(cfg.normalized_distance for cfg in sweep)
            placement_bounds(grid, widest * rayleigh_resolution(geometry))
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
