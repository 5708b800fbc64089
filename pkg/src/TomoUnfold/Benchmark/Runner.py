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
"""Monte Carlo sweeps: simulate, invert, clean up, select the model
order and count effective detections."""

import logging
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from TomoUnfold.Solver import Hyperparameters, InversionContext
from TomoUnfold.Worker import run_parallel

from .Detection import (
    DetectionTolerance,
    cleanup_profile,
    is_effective,
    model_order_selection,
)
from .Scenario import TrialConfig, simulate_trial

logger = logging.getLogger(__name__)


class CurvePoint(NamedTuple):
    normalized_distance: float
    snr_db: float
    amplitude_ratio: float
    trials: int
    effective_detections: int
    engine: str = ""

    @property
    def rate(self) -> float:
        return self.effective_detections / self.trials


@dataclass(frozen=True)
class BenchmarkSettings:
    kappa: float = 0.05
    k_max: int = 2
    min_separation: int = 2
    tolerance: DetectionTolerance = field(default_factory=DetectionTolerance)


def trial_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def run_trial(
    context: InversionContext,
    hp: Hyperparameters,
    cfg: TrialConfig,
    index: int,
    settings: BenchmarkSettings,
) -> bool:
    rng = trial_rng(cfg.seed, index)
    trial = simulate_trial(cfg, context.steering, rng, context.rho_s)
    estimate = context.run(trial.measurement.entries, hp, rng)
    detected = model_order_selection(
        cleanup_profile(estimate, settings.kappa),
        settings.k_max,
        settings.min_separation,
    )
    limit = settings.tolerance.fraction_of_rayleigh * context.rho_s
    return is_effective(detected, trial.scatterers, limit)


def _safe_trial(
    context: InversionContext,
    hp: Hyperparameters,
    cfg: TrialConfig,
    index: int,
    settings: BenchmarkSettings,
) -> bool:
    try:
        return run_trial(context, hp, cfg, index, settings)
    except (ValueError, ArithmeticError, np.linalg.LinAlgError):
        logger.exception("trial %d failed", index)
        return False


def run_curve_point(
    cfg: TrialConfig,
    context: InversionContext,
    hp: Hyperparameters,
    settings: BenchmarkSettings | None = None,
    threads: int = 1,
) -> CurvePoint:
    settings = settings or BenchmarkSettings()
    outcomes = run_parallel(
        lambda index: _safe_trial(context, hp, cfg, index, settings),
        range(cfg.trials),
        threads,
    )
    point = CurvePoint(
        cfg.normalized_distance,
        cfg.snr_db,
        cfg.amplitude_ratio,
        cfg.trials,
        sum(outcomes),
        context.config.engine.value,
    )
    logger.debug(
        "%s distance %.3f, SNR %g dB, ratio %g: %d/%d effective",
        point.engine,
        point.normalized_distance,
        point.snr_db,
        point.amplitude_ratio,
        point.effective_detections,
        point.trials,
    )
    return point


def run_benchmark(
    sweep: Sequence[TrialConfig],
    context: InversionContext,
    hp: Hyperparameters,
    settings: BenchmarkSettings | None = None,
    threads: int = 1,
) -> list[CurvePoint]:
    context.prepare(hp)
    points = [
        run_curve_point(cfg, context, hp, settings, threads) for cfg in sweep
    ]
    logger.info(
        "%s benchmark finished: %s",
        context.config.engine.value,
        ", ".join(f"{p.normalized_distance:g}:{p.rate:.3f}" for p in points),
    )
    return points


def curve_families(
    points: Iterable[CurvePoint],
) -> dict[tuple[str, float, float], list[CurvePoint]]:
    """(engine, snr_db, amplitude_ratio) -> points by ascending distance"""
    families: dict[tuple[str, float, float], list[CurvePoint]] = {}
    for point in points:
        key = (point.engine, point.snr_db, point.amplitude_ratio)
        families.setdefault(key, []).append(point)
    for family in families.values():
        family.sort(key=lambda p: p.normalized_distance)
    return families
