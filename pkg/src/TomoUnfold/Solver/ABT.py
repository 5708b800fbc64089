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
"""HyperLISTA with adaptive blockwise thresholding.

Each layer visits J_k blocks (in order or drawn from the block weight
distribution) and updates them Gauss-Seidel style:

    gamma_i <- eta_st(gamma_i + t_i W_i^H r + beta_i (gamma_i - gamma_i^prev),
                      theta_i)
    theta_i  = c1 ||R_i^+ (R_i gamma_i - g)||_1
    beta_i   = c2 ||gamma_i||_0
    t_i      = 1 / ||W_i^H R_i||_2

The blocksize shrinks geometrically by c3 from layer to layer.
"""

import logging
from enum import Enum

import numpy as np

from .Blocks import BlockLevel, ScheduleMode, next_blocksize
from .HyperLISTA import (
    ZERO_RTOL,
    Hyperparameters,
    SolverState,
    l1_norm,
)
from .Threshold import complex_soft_threshold

logger = logging.getLogger(__name__)


class ResidualMode(Enum):
    FULL = "full"
    BLOCKWISE = "blockwise"


def block_order(
    level: BlockLevel, mode: ScheduleMode, rng: np.random.Generator | None
) -> np.ndarray:
    count = level.partition.count
    if mode is ScheduleMode.SWEEP:
        return np.arange(count)
    if rng is None:
        raise ValueError("weighted random block schedule needs a generator")
    return rng.choice(count, size=count, p=level.probabilities)


def hyperlista_abt_layer(
    state: SolverState,
    g: np.ndarray,
    R: np.ndarray,
    W: np.ndarray,
    level: BlockLevel,
    mode: ScheduleMode,
    hp: Hyperparameters,
    rng: np.random.Generator | None = None,
    residual_mode: ResidualMode = ResidualMode.FULL,
) -> SolverState:
    partition = level.partition
    if partition.blocksize != state.blocksize:
        raise LookupError(
            f"no block pseudoinverses for blocksize {state.blocksize}"
        )
    order = block_order(level, mode, rng)

    gamma = state.gamma.copy()
    residual = state.residual.copy()
    peak = float(np.abs(state.gamma).max(initial=0.0))
    limit = ZERO_RTOL * peak

    for index in order:
        block = partition.ranges[index]
        cols = slice(block.start, block.stop)
        R_i = R[:, cols]
        gamma_i = gamma[cols]
        local = R_i @ gamma_i - g
        theta = hp.c1 * l1_norm(level.pinvs[index] @ local)
        beta = hp.c2 * (
            int(np.count_nonzero(np.abs(gamma_i) > limit)) if peak else 0
        )
        r = residual if residual_mode is ResidualMode.FULL else -local
        update = (
            gamma_i
            + level.steps[index] * (W[:, cols].conj().T @ r)
            + beta * (gamma_i - state.gamma_prev[cols])
        )
        new_i = complex_soft_threshold(update, theta)
        delta = new_i - gamma_i
        if np.any(delta):
            residual -= R_i @ delta
            gamma[cols] = new_i

    return SolverState(
        gamma,
        state.gamma,
        residual,
        state.layer + 1,
        next_blocksize(partition.blocksize, hp.c3),
    )
