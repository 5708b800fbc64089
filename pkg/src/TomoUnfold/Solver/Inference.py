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
from dataclasses import dataclass
from enum import Enum

import numpy as np

from TomoUnfold.Coherence import AnalyticWeights, pseudoinverse
from TomoUnfold.TomoModel import (
    ReflectivityProfile,
    SteeringMatrix,
    rayleigh_resolution,
)

from .ABT import ResidualMode, hyperlista_abt_layer
from .Blocks import (
    BlockCache,
    BlockNorm,
    ScheduleMode,
    blocksize_schedule,
    half_rayleigh_blocksize,
)
from .HyperLISTA import (
    Hyperparameters,
    hyperlista_layer,
    initial_state,
    lipschitz_step,
)

logger = logging.getLogger(__name__)


class Engine(Enum):
    ABT = "abt"
    BASELINE = "baseline"


@dataclass(frozen=True)
class ABTConfig:
    engine: Engine = Engine.ABT
    schedule_mode: ScheduleMode = ScheduleMode.WEIGHTED_RANDOM
    residual_mode: ResidualMode = ResidualMode.FULL
    block_norm: BlockNorm = BlockNorm.SPECTRAL
    # 0 selects half a Rayleigh cell along elevation
    initial_blocksize: int = 0
    # relative singular value cutoff of the threshold pseudoinverses
    threshold_rcond: float = 1e-2
    # seeds the block draws when run() gets no generator
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.threshold_rcond < 1:
            raise ValueError(f"threshold_rcond {self.threshold_rcond} not in [0,1)")
        if self.initial_blocksize < 0:
            raise ValueError(
                f"Illegal initial blocksize: {self.initial_blocksize}"
            )


class InversionContext:
    """Prepared inputs of one dictionary: normalized R, weights W, R^+,
    the step 1 / ||W^H R||_2, Rayleigh resolution and block cache.
    Read-only after construction, so one instance serves any number of
    workers."""

    def __init__(
        self,
        steering: SteeringMatrix,
        weights: AnalyticWeights | np.ndarray,
        config: ABTConfig | None = None,
        rho_s: float | None = None,
    ) -> None:
        self.steering = steering.normalize()
        self.config = config or ABTConfig()
        self.R = self.steering.entries
        W = weights.entries if isinstance(weights, AnalyticWeights) else weights
        self.W = np.asarray(W, dtype=complex)
        if self.W.shape != self.R.shape:
            raise ValueError(
                f"weights {self.W.shape} do not match dictionary {self.R.shape}"
            )
        if rho_s is None:
            if self.steering.geometry is None:
                raise ValueError("Rayleigh resolution unknown without geometry")
            rho_s = rayleigh_resolution(self.steering.geometry)
        self.rho_s = rho_s
        self.R_pinv = pseudoinverse(self.R, self.config.threshold_rcond)
        self.step = lipschitz_step(self.W, self.R)
        grid = self.steering.grid
        self.first_blocksize = self.config.initial_blocksize or (
            half_rayleigh_blocksize(grid.elevation_step, rho_s, grid.motion_size)
        )
        self.blocks = BlockCache(
            self.R, self.config.block_norm, self.W, self.config.threshold_rcond
        )
        logger.debug(
            "inversion context: R %s, rho_s %.3f m, B1 %d, step %.4g, engine %s",
            self.R.shape,
            rho_s,
            self.first_blocksize,
            self.step,
            self.config.engine.value,
        )

    def prepare(self, hp: Hyperparameters) -> None:
        if self.config.engine is Engine.ABT:
            self.blocks.prepare(
                blocksize_schedule(self.first_blocksize, hp.c3, hp.num_layers)
            )

    def run(
        self,
        g: np.ndarray,
        hp: Hyperparameters,
        rng: np.random.Generator | None = None,
    ) -> ReflectivityProfile:
        """rng defaults to a generator seeded with config.seed"""
        g = np.asarray(g, dtype=complex)
        if g.shape != (self.R.shape[0],):
            raise ValueError(
                f"measurement of shape {g.shape} for {self.R.shape[0]} acquisitions"
            )
        if rng is None:
            rng = np.random.default_rng(self.config.seed)
        state = initial_state(g, self.R, self.first_blocksize)
        for _ in range(hp.num_layers):
            if self.config.engine is Engine.BASELINE:
                state = hyperlista_layer(
                    state, g, self.R, self.W, self.R_pinv, hp, self.step
                )
                if state.converged:
                    break
            else:
                state = hyperlista_abt_layer(
                    state,
                    g,
                    self.R,
                    self.W,
                    self.blocks.level(state.blocksize),
                    self.config.schedule_mode,
                    hp,
                    rng,
                    self.config.residual_mode,
                )
        return ReflectivityProfile(state.gamma, self.steering.grid)


def run_inference(
    g: np.ndarray,
    R: SteeringMatrix,
    W: AnalyticWeights | np.ndarray,
    hp: Hyperparameters,
    abt_config: ABTConfig | None = None,
    rng: np.random.Generator | None = None,
) -> ReflectivityProfile:
    """one-shot inversion; build an InversionContext for repeated use"""
    return InversionContext(R, W, abt_config).run(g, hp, rng)
