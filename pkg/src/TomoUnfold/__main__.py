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
"""
TomoUnfold

Unfolded sparse recovery (HyperLISTA with adaptive blockwise
thresholding) for SAR tomography and differential SAR tomography:
analytic weights, hyperparameter tuning, inversion and Monte Carlo
detection benchmarks.
"""

import argparse
import logging
import sys
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Callable, Iterator

import numpy as np

from TomoUnfold import Container
from TomoUnfold.About import INFO, VERSION
from TomoUnfold.Benchmark import (
    cleanup_profile,
    curve_families,
    model_order_selection,
    run_benchmark,
    simulate_trial,
)
from TomoUnfold.Coherence import AnalyticWeights, mutual_coherence, optimize_weights
from TomoUnfold.Defaults import (
    RunConfig,
    apply_override,
    build_abt_config,
    build_benchmark_settings,
    build_engines,
    build_hyperparameters,
    build_steering,
    build_sweep,
    build_trial_config,
    build_tuning_config,
    build_weight_config,
    load_config,
    resolve_threads,
    validate,
)
from TomoUnfold.Errors import ConfigError, FileFormatError, NonConvergenceError
from TomoUnfold.Files import (
    file_digest,
    read_json,
    read_measurement,
    write_curve,
    write_json,
)
from TomoUnfold.Formatting import (
    format_coherence,
    format_distance,
    format_phase,
    format_rate,
    format_snr,
)
from TomoUnfold.Solver import ABTConfig, Hyperparameters, InversionContext
from TomoUnfold.TomoModel import SteeringMatrix, elevation_to_height
from TomoUnfold.Tuning import grid_search
from TomoUnfold.utils import get_runtime_information, get_stack_versions

logger = logging.getLogger("TomoUnfold")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NONCONVERGENCE = 2
EXIT_IO = 3


class UsageError(ConfigError):
    pass


class ArgumentParser(argparse.ArgumentParser):
    """parse errors raise instead of exiting"""

    def error(self, message: str):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog="TomoUnfold",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("-c", "--config", help="INI configuration file")
    parser.add_argument("--seed", type=int, help="master random seed")
    parser.add_argument("--threads", type=int, help="worker threads")
    parser.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override a configuration value (repeatable)",
    )
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="Set loglevel to debug"
    )
    parser.add_argument(
        "-D", "--debug-file", help="File to write debug logging output to"
    )
    parser.add_argument(
        "--version", action="version", version=f"TomoUnfold {VERSION}"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    cmd = commands.add_parser("weights", help="optimize the analytic weights")
    cmd.add_argument("-o", "--output", help="weight container (weights.cmx)")

    cmd = commands.add_parser("coherence", help="report mutual coherences")
    cmd.add_argument("-w", "--weights", help="weight container")

    cmd = commands.add_parser("tune", help="grid search c1, c2, c3")
    cmd.add_argument("-w", "--weights", help="weight container")
    cmd.add_argument("-o", "--output", help="result document (hyper.json)")

    cmd = commands.add_parser("invert", help="invert one measurement vector")
    cmd.add_argument("-i", "--input", required=True, help="CMX1 or CSV")
    cmd.add_argument("-w", "--weights", help="weight container")
    cmd.add_argument("-p", "--hyper", help="tuned hyperparameters (JSON)")
    cmd.add_argument("-o", "--output", help="profile container (gamma.cmx)")
    cmd.add_argument(
        "-s", "--scatterers", help="detected scatterers (scatterers.json)"
    )

    cmd = commands.add_parser("simulate", help="emit (truth, measurement) pairs")
    cmd.add_argument("-n", "--samples", type=int, help="number of samples")
    cmd.add_argument("-d", "--distance", type=float, help="in Rayleigh units")

    cmd = commands.add_parser("benchmark", help="detection rate sweep")
    cmd.add_argument("-w", "--weights", help="weight container")
    cmd.add_argument("-p", "--hyper", help="tuned hyperparameters (JSON)")
    cmd.add_argument("-o", "--output", help="curve CSV (curve.csv)")
    cmd.add_argument("-m", "--manifest", help="run manifest (manifest.json)")
    return parser


def setup_logging(verbose: bool, debug_file: str | None) -> None:
    console_log_level = logging.DEBUG if verbose else logging.WARNING
    file_log_level = logging.DEBUG

    logger.setLevel(logging.DEBUG)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    ch = logging.StreamHandler()
    ch.setLevel(console_log_level)
    formatter = logging.Formatter(
        "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    )
    ch.setFormatter(formatter)
    logger.addHandler(ch)

    if debug_file:
        fh = logging.FileHandler(debug_file)
        fh.setLevel(file_log_level)
        fh.setFormatter(formatter)
        logger.addHandler(fh)

    if verbose:
        for line in INFO.splitlines():
            logger.debug("%s", line)
        logger.debug("Runtime information:")
        for lib in get_runtime_information():
            logger.debug(" - %s", lib)


class Run:
    """one CLI invocation with its resolved configuration"""

    def __init__(self, args: argparse.Namespace, config: RunConfig) -> None:
        self.args = args
        self.config = config
        self.threads = resolve_threads(config, args.threads)
        self.started = time.monotonic()
        self.digests: dict[str, str] = {}
        if args.config:
            self.digests["config"] = file_digest(args.config)
        if config.geometry.csv:
            self.digests["geometry"] = file_digest(config.geometry.csv)
        for index, term in enumerate(config.basis.terms):
            name, _, source = str(term).partition(":")
            if name.strip().lower() == "tabulated" and source:
                self.digests[f"tabulated_{index}"] = file_digest(source.strip())
        self.timings: dict[str, float] = {}
        self._steering: SteeringMatrix | None = None

    @property
    def seed(self) -> int:
        return self.config.run.seed

    @property
    def steering(self) -> SteeringMatrix:
        if self._steering is None:
            self._steering = build_steering(self.config)
            self.digests["steering"] = Container.matrix_digest(
                self._steering.entries
            )
        return self._steering

    @contextmanager
    def timed(self, name: str) -> Iterator[None]:
        """accumulate wall time under timings[name]"""
        started = time.monotonic()
        try:
            yield
        finally:
            elapsed = time.monotonic() - started
            self.timings[name] = self.timings.get(name, 0.0) + elapsed
            logger.debug("%s took %.3f s", name, elapsed)

    def output(self, given: str | None, default: str) -> Path:
        if given:
            return Path(given)
        directory = Path(self.config.run.output_dir)
        directory.mkdir(parents=True, exist_ok=True)
        return directory / default

    def weights(self, path: str | None) -> AnalyticWeights | np.ndarray:
        with self.timed("weights_s"):
            return self._weights(path)

    def _weights(self, path: str | None) -> AnalyticWeights | np.ndarray:
        steering = self.steering
        if not path:
            logger.info("No weight file given, optimizing weights")
            result = optimize_weights(steering, build_weight_config(self.config))
            self.digests["weights"] = Container.matrix_digest(result.entries)
            return result
        entries = Container.load(path)
        if entries.shape != steering.shape:
            raise ConfigError(
                f"{path}: weights {entries.shape} do not match"
                f" dictionary {steering.shape}"
            )
        sidecar = Path(path).with_suffix(".json")
        if sidecar.is_file():
            expected = read_json(sidecar).get("source_matrix_digest")
            if expected and expected != self.digests["steering"]:
                raise ConfigError(
                    f"{path}: weights were optimized for another dictionary"
                )
        self.digests["weights"] = file_digest(path)
        return entries

    def hyperparameters(self, path: str | None) -> Hyperparameters:
        hp = build_hyperparameters(self.config)
        if not path:
            return hp
        document = read_json(path)
        self.digests["hyperparameters"] = file_digest(path)
        try:
            return Hyperparameters(
                float(document.get("c1", hp.c1)),
                float(document.get("c2", hp.c2)),
                float(document.get("c3", hp.c3)),
                int(document.get("num_layers", hp.num_layers)),
                bool(document.get("support_selection", hp.support_selection)),
            )
        except (AttributeError, TypeError, ValueError) as exc:
            raise FileFormatError(f"{path}: {exc}") from exc

    def context(
        self,
        weights: AnalyticWeights | np.ndarray,
        abt_config: ABTConfig | None = None,
    ) -> InversionContext:
        return InversionContext(
            self.steering,
            weights,
            abt_config or build_abt_config(self.config),
        )

    def manifest(self, **extra) -> dict:
        document = {
            "command": self.args.command,
            "config": self.config.as_dict(),
            "seed": self.seed,
            "threads": self.threads,
            "engine": self.config.solver.engine,
            "digests": dict(self.digests),
            "versions": get_stack_versions(),
            "elapsed_s": round(time.monotonic() - self.started, 3),
            "timings": {k: round(v, 3) for k, v in self.timings.items()},
        }
        document.update(extra)
        return document


def cmd_weights(run: Run) -> int:
    result = optimize_weights(run.steering, build_weight_config(run.config))
    path = run.output(run.args.output, "weights.cmx")
    Container.save(path, result.entries)
    write_json(path.with_suffix(".json"), result.sidecar())
    print(f"mu(W,R) = {format_coherence(result.coherence)}")
    print(f"iterations = {result.iterations}")
    if not result.converged:
        print(
            f"weights: no convergence after {result.iterations} iterations,"
            " best-so-far weights written",
            file=sys.stderr,
        )
        return EXIT_NONCONVERGENCE
    return EXIT_OK


def cmd_coherence(run: Run) -> int:
    R = run.steering.entries
    weights = run.weights(run.args.weights)
    W = weights.entries if isinstance(weights, AnalyticWeights) else weights
    print(f"mu(W,R) = {format_coherence(mutual_coherence(W, R))}")
    print(f"mu(R,R) = {format_coherence(mutual_coherence(R, R))}")
    return EXIT_OK


def cmd_tune(run: Run) -> int:
    context = run.context(run.weights(run.args.weights))
    with run.timed("tuning_s"):
        result = grid_search(
            context, build_tuning_config(run.config), run.threads
        )
    path = run.output(run.args.output, "hyper.json")
    write_json(path, result.document() | {"manifest": run.manifest()})
    hp = result.hyperparameters
    print(f"c1 = {hp.c1:g}, c2 = {hp.c2:g}, c3 = {hp.c3:g}, NMSE = {result.nmse:g}")
    return EXIT_OK


def _read_input(path: str) -> np.ndarray:
    if Path(path).suffix.lower() == ".csv":
        return read_measurement(path)
    return Container.load_vector(path)


def cmd_invert(run: Run) -> int:
    g = _read_input(run.args.input)
    run.digests["input"] = file_digest(run.args.input)
    steering = run.steering
    if g.size != steering.num_acquisitions:
        raise FileFormatError(
            f"{run.args.input}: {g.size} values for"
            f" {steering.num_acquisitions} acquisitions"
        )
    context = run.context(run.weights(run.args.weights))
    hp = run.hyperparameters(run.args.hyper)
    with run.timed("inference_s"):
        estimate = context.run(g, hp, np.random.default_rng(run.seed))
    settings = build_benchmark_settings(run.config)
    detected = model_order_selection(
        cleanup_profile(estimate, settings.kappa),
        settings.k_max,
        settings.min_separation,
    )
    Container.save(run.output(run.args.output, "gamma.cmx"), estimate.entries)

    geo = steering.geometry
    scatterers = []
    for spec in detected:
        entry = {
            "elevation_m": spec.elevation,
            "motion_coeffs": list(spec.motion_coeffs),
            "amplitude": spec.amplitude,
            "phase_rad": spec.phase,
        }
        height = ""
        if geo is not None and geo.incidence_angle is not None:
            entry["height_m"] = elevation_to_height(geo, spec.elevation)
            height = f", height {format_distance(entry['height_m'])}"
        scatterers.append(entry)
        print(
            f"elevation {format_distance(spec.elevation)}{height},"
            f" amplitude {spec.amplitude:.4g}, phase {format_phase(spec.phase)}"
        )
    write_json(
        run.output(run.args.scatterers, "scatterers.json"),
        {"scatterers": scatterers, "manifest": run.manifest()},
    )
    return EXIT_OK


def cmd_simulate(run: Run) -> int:
    samples = run.args.samples or run.config.tuning.samples
    if samples < 1:
        raise ConfigError(f"Illegal sample count: {samples}")
    distance = (
        run.args.distance
        if run.args.distance is not None
        else run.config.benchmark.distances[0]
    )
    cfg = build_trial_config(run.config, distance)
    steering = run.steering
    truths, measurements = [], []
    for index in range(samples):
        trial = simulate_trial(
            cfg, steering, np.random.default_rng([run.seed, index])
        )
        truths.append(trial.truth.entries)
        measurements.append(trial.measurement.entries)
    truth_path = run.output(None, "truth.cmx")
    meas_path = run.output(None, "measurements.cmx")
    Container.save(truth_path, np.array(truths))
    Container.save(meas_path, np.array(measurements))
    run.digests["truth"] = file_digest(truth_path)
    run.digests["measurements"] = file_digest(meas_path)
    write_json(
        run.output(None, "simulate.json"),
        run.manifest(samples=samples, normalized_distance=distance),
    )
    print(f"{samples} samples written to {truth_path.parent}")
    return EXIT_OK


def cmd_benchmark(run: Run) -> int:
    sweep = build_sweep(run.config)
    engines = build_engines(run.config)
    weights = run.weights(run.args.weights)
    hp = run.hyperparameters(run.args.hyper)
    settings = build_benchmark_settings(run.config)
    points = []
    for abt_config in engines:
        context = run.context(weights, abt_config)
        with run.timed("inference_s"):
            points += run_benchmark(sweep, context, hp, settings, run.threads)
    write_curve(run.output(run.args.output, "curve.csv"), points)
    write_json(
        run.output(run.args.manifest, "manifest.json"),
        run.manifest(
            hyperparameters={
                "c1": hp.c1,
                "c2": hp.c2,
                "c3": hp.c3,
                "num_layers": hp.num_layers,
                "support_selection": hp.support_selection,
            },
            engines=[c.engine.value for c in engines],
            curve=[p._asdict() | {"rate": p.rate} for p in points],
        ),
    )
    for (engine, snr_db, ratio), family in curve_families(points).items():
        print(f"{engine}, SNR {format_snr(snr_db)}, amplitude ratio {ratio:g}")
        for point in family:
            print(f"  {point.normalized_distance:g} {format_rate(point.rate)}")
    return EXIT_OK


COMMANDS: dict[str, Callable[[Run], int]] = {
    "weights": cmd_weights,
    "coherence": cmd_coherence,
    "tune": cmd_tune,
    "invert": cmd_invert,
    "simulate": cmd_simulate,
    "benchmark": cmd_benchmark,
}


def _configure(args: argparse.Namespace) -> RunConfig:
    config = load_config(args.config)
    for assignment in args.set:
        apply_override(config, assignment)
    if args.seed is not None:
        config.run.seed = args.seed
    validate(config)
    return config


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        setup_logging(args.verbose, args.debug_file)
        run = Run(args, _configure(args))
        return COMMANDS[args.command](run)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NonConvergenceError as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
