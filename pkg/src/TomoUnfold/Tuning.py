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
"""Coarse-to-fine grid search of (c1, c2, c3) minimizing the NMSE over a
fixed set of simulated samples."""

import hashlib
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from TomoUnfold.Benchmark.Scenario import TrialConfig, simulate_trial
from TomoUnfold.Errors import NonConvergenceError
from TomoUnfold.Solver import Hyperparameters, InversionContext
from TomoUnfold.TomoModel import ReflectivityProfile
from TomoUnfold.Worker import run_parallel

logger = logging.getLogger(__name__)

# stream offset keeping solver draws apart from the sample draws
SOLVER_STREAM = 1


def _default_c1() -> tuple[float, ...]:
    return tuple(float(c) for c in np.logspace(-3, 0, 7))


@dataclass(frozen=True)
class TuningConfig:
    c1_grid: tuple[float, ...] = field(default_factory=_default_c1)
    c2_grid: tuple[float, ...] = (0.0, 1e-4, 1e-3, 1e-2, 1e-1)
    c3_grid: tuple[float, ...] = (0.3, 0.45, 0.6, 0.75, 0.9)
    refine_factor: int = 2
    samples: int = 256
    snr_db: float = math.inf
    scatterers: TrialConfig = field(
        default_factory=lambda: TrialConfig(num_scatterers=1)
    )
    seed: int = 0
    num_layers: int = 15
    support_selection: bool = True

    def __post_init__(self) -> None:
        for name, grid in (
            ("c1", self.c1_grid),
            ("c2", self.c2_grid),
            ("c3", self.c3_grid),
        ):
            if not grid:
                raise ValueError(f"empty {name} grid")
            if not all(_legal(name, value) for value in grid):
                raise ValueError(f"{name} grid {grid} outside the legal range")
        if self.refine_factor < 0:
            raise ValueError(f"Illegal refine factor: {self.refine_factor}")
        if self.samples < 1:
            raise ValueError(f"Illegal sample count: {self.samples}")
        if self.num_layers < 1:
            raise ValueError(f"Illegal layer count: {self.num_layers}")


def _legal(name: str, value: float) -> bool:
    if not math.isfinite(value):
        return False
    if name == "c1":
        return value > 0
    if name == "c2":
        return value >= 0
    return 0 < value < 1


class Sample(NamedTuple):
    truth: np.ndarray
    measurement: np.ndarray


class Candidate(NamedTuple):
    level: int
    c1: float
    c2: float
    c3: float
    nmse: float


@dataclass(frozen=True)
class TuningResult:
    hyperparameters: Hyperparameters
    nmse: float
    sample_digest: str
    trace: tuple[Candidate, ...]
    level_best: tuple[float, ...]

    def document(self) -> dict:
        return {
            "c1": self.hyperparameters.c1,
            "c2": self.hyperparameters.c2,
            "c3": self.hyperparameters.c3,
            "num_layers": self.hyperparameters.num_layers,
            "support_selection": self.hyperparameters.support_selection,
            "nmse": self.nmse,
            "sample_digest": self.sample_digest,
            "level_best": list(self.level_best),
            "trace": [c._asdict() for c in self.trace],
        }


def nmse(
    estimates: Sequence[ReflectivityProfile | np.ndarray],
    truths: Sequence[ReflectivityProfile | np.ndarray],
) -> float:
    """mean of ||gamma_hat - gamma||^2 / ||gamma||^2"""
    if len(estimates) != len(truths):
        raise ValueError(f"{len(estimates)} estimates for {len(truths)} truths")
    if not truths:
        raise ValueError("no samples")
    total = 0.0
    for estimate, truth in zip(estimates, truths, strict=True):
        est = getattr(estimate, "entries", estimate)
        ref = getattr(truth, "entries", truth)
        power = float(np.vdot(ref, ref).real)
        if power == 0:
            raise ValueError("truth vector with zero norm")
        diff = np.asarray(est) - np.asarray(ref)
        total += float(np.vdot(diff, diff).real) / power
    return total / len(truths)


def draw_samples(context: InversionContext, cfg: TuningConfig) -> list[Sample]:
    scenario = TrialConfig(
        num_scatterers=cfg.scatterers.num_scatterers,
        normalized_distance=cfg.scatterers.normalized_distance,
        amplitude_ratio=cfg.scatterers.amplitude_ratio,
        phase_difference=cfg.scatterers.phase_difference,
        snr_db=cfg.snr_db,
        trials=cfg.samples,
        seed=cfg.seed,
        on_grid=cfg.scatterers.on_grid,
    )
    samples = []
    for index in range(cfg.samples):
        trial = simulate_trial(
            scenario,
            context.steering,
            np.random.default_rng([cfg.seed, index]),
            context.rho_s,
        )
        samples.append(
            Sample(np.array(trial.truth.entries), np.array(trial.measurement.entries))
        )
    return samples


def samples_digest(samples: Sequence[Sample]) -> str:
    digest = hashlib.sha256()
    for sample in samples:
        digest.update(np.ascontiguousarray(sample.truth, "<c16").tobytes())
        digest.update(np.ascontiguousarray(sample.measurement, "<c16").tobytes())
    return digest.hexdigest()


def score(
    context: InversionContext,
    samples: Sequence[Sample],
    hp: Hyperparameters,
    seed: int = 0,
) -> float:
    """NMSE of one candidate, inf when the inversion breaks down"""
    try:
        estimates = [
            context.run(
                sample.measurement,
                hp,
                np.random.default_rng([seed, index, SOLVER_STREAM]),
            )
            for index, sample in enumerate(samples)
        ]
        with np.errstate(all="ignore"):
            value = nmse(estimates, [s.truth for s in samples])
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        logger.debug("candidate %s failed: %s", hp, exc)
        return math.inf
    return value if math.isfinite(value) else math.inf


def refine_axis(name: str, values: Sequence[float], best: float) -> tuple[float, ...]:
    """same number of points over two cells around best"""
    ordered = sorted(set(values))
    if len(ordered) < 2:
        return tuple(ordered)
    idx = ordered.index(best)
    cell = max(
        ordered[i + 1] - ordered[i]
        for i in (idx - 1, idx)
        if 0 <= i < len(ordered) - 1
    )
    fine = np.linspace(best - cell, best + cell, len(ordered))
    return tuple(
        sorted({best} | {float(v) for v in fine if _legal(name, float(v))})
    )


def grid_search(
    context: InversionContext, cfg: TuningConfig, threads: int = 1
) -> TuningResult:
    samples = draw_samples(context, cfg)
    digest = samples_digest(samples)
    axes = {"c1": cfg.c1_grid, "c2": cfg.c2_grid, "c3": cfg.c3_grid}
    trace: list[Candidate] = []
    level_best: list[float] = []
    best: Candidate | None = None

    for level in range(cfg.refine_factor + 1):
        points = list(itertools.product(axes["c1"], axes["c2"], axes["c3"]))
        candidates = [
            Hyperparameters(
                c1, c2, c3, cfg.num_layers, cfg.support_selection
            )
            for c1, c2, c3 in points
        ]
        for hp in candidates:
            context.prepare(hp)
        scores = run_parallel(
            lambda hp: score(context, samples, hp, cfg.seed),
            candidates,
            threads,
        )
        for (c1, c2, c3), value in zip(points, scores, strict=True):
            candidate = Candidate(level, c1, c2, c3, value)
            trace.append(candidate)
            if best is None or value < best.nmse:
                best = candidate
        assert best is not None
        level_best.append(best.nmse)
        logger.debug(
            "zoom level %d: %d candidates, best NMSE %g at c1=%g c2=%g c3=%g",
            level,
            len(points),
            best.nmse,
            best.c1,
            best.c2,
            best.c3,
        )
        axes = {
            "c1": refine_axis("c1", axes["c1"], best.c1),
            "c2": refine_axis("c2", axes["c2"], best.c2),
            "c3": refine_axis("c3", axes["c3"], best.c3),
        }

    if best is None or not math.isfinite(best.nmse):
        raise NonConvergenceError("no hyperparameter candidate gave a finite NMSE")
    logger.info(
        "tuned c1=%g c2=%g c3=%g, NMSE %g", best.c1, best.c2, best.c3, best.nmse
    )
    return TuningResult(
        Hyperparameters(
            best.c1, best.c2, best.c3, cfg.num_layers, cfg.support_selection
        ),
        best.nmse,
        digest,
        tuple(trace),
        tuple(level_best),
    )
