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
"""Block partitions of the flattened grid, block Lipschitz weights
and the per-blocksize cache of block pseudoinverses and steps."""

import logging
import math
from enum import Enum
from threading import Lock
from typing import Iterable, NamedTuple

import numpy as np

from TomoUnfold.Coherence import pseudoinverse

from .HyperLISTA import lipschitz_step, round_half_up

logger = logging.getLogger(__name__)


class ScheduleMode(Enum):
    SWEEP = "sweep"
    WEIGHTED_RANDOM = "weighted_random"


class BlockNorm(Enum):
    SPECTRAL = "spectral"
    FROBENIUS = "frobenius"


class BlockPartition(NamedTuple):
    blocksize: int
    ranges: tuple[range, ...]

    @property
    def count(self) -> int:
        return len(self.ranges)


def partition_blocks(size: int, blocksize: int) -> BlockPartition:
    if blocksize < 1:
        raise ValueError(f"Illegal blocksize: {blocksize}")
    if size < 1:
        raise ValueError(f"Illegal vector length: {size}")
    return BlockPartition(
        blocksize,
        tuple(
            range(start, min(start + blocksize, size))
            for start in range(0, size, blocksize)
        ),
    )


def next_blocksize(blocksize: int, c3: float) -> int:
    return max(1, round_half_up(c3 * blocksize))


def blocksize_schedule(first: int, c3: float, layers: int) -> list[int]:
    schedule: list[int] = []
    blocksize = first
    for _ in range(layers):
        schedule.append(blocksize)
        blocksize = next_blocksize(blocksize, c3)
    return schedule


def largest_eigenvalue(
    gram: np.ndarray, rtol: float = 1e-8, max_iter: int = 10000
) -> float:
    """power iteration on a Hermitian positive semidefinite matrix"""
    size = gram.shape[0]
    vec = np.ones(size, dtype=complex) + 1j * np.linspace(0.0, 0.5, size)
    vec /= np.linalg.norm(vec)
    value = 0.0
    for _ in range(max_iter):
        image = gram @ vec
        value = float(np.vdot(vec, image).real)
        if np.linalg.norm(image - value * vec) <= rtol * abs(value):
            return value
        norm = np.linalg.norm(image)
        if norm == 0:
            return 0.0
        vec = image / norm
    logger.warning("power iteration did not settle, eigenvalue %g", value)
    return value


def block_weight(
    R: np.ndarray, block: range, norm: BlockNorm = BlockNorm.SPECTRAL
) -> float:
    """L_i = ||R_i^H R_i||"""
    if len(block) == 0:
        raise ValueError("empty block")
    if block.start < 0 or block.stop > R.shape[1]:
        raise ValueError(f"block {block} outside [0, {R.shape[1]})")
    sub = R[:, block.start : block.stop]
    # same nonzero spectrum, pick the smaller Gram matrix
    gram = (
        sub.conj().T @ sub if sub.shape[1] <= sub.shape[0] else sub @ sub.conj().T
    )
    if norm is BlockNorm.FROBENIUS:
        return float(np.linalg.norm(gram))
    return largest_eigenvalue(gram)


def block_probabilities(weights: Iterable[float]) -> np.ndarray:
    values = np.asarray(list(weights), dtype=float)
    if values.size == 0 or not np.all(np.isfinite(values)):
        raise ValueError("block weights must be finite")
    if np.any(values < 0):
        raise ValueError("negative block weight")
    total = values.sum()
    if total <= 0:
        raise ValueError("all block weights are zero")
    return values / total


class BlockLevel(NamedTuple):
    partition: BlockPartition
    pinvs: tuple[np.ndarray, ...]
    weights: np.ndarray
    probabilities: np.ndarray
    # 1 / ||W_i^H R_i||_2
    steps: np.ndarray


class BlockCache:
    """Lazily filled, thread safe map blocksize -> BlockLevel.

    Levels are immutable once built and shared by all workers. Without
    W the steps are those of W = R; rcond truncates the block
    pseudoinverses as in pseudoinverse.
    """

    def __init__(
        self,
        R: np.ndarray,
        norm: BlockNorm = BlockNorm.SPECTRAL,
        W: np.ndarray | None = None,
        rcond: float | None = None,
    ) -> None:
        if W is not None and W.shape != R.shape:
            raise ValueError(f"weights {W.shape} do not match dictionary {R.shape}")
        self.R = R
        self.W = R if W is None else W
        self.norm = norm
        self.rcond = rcond
        self._levels: dict[int, BlockLevel] = {}
        self._lock = Lock()

    def __contains__(self, blocksize: int) -> bool:
        return blocksize in self._levels

    def level(self, blocksize: int) -> BlockLevel:
        with self._lock:
            if blocksize not in self._levels:
                self._levels[blocksize] = self._build(blocksize)
            return self._levels[blocksize]

    def prepare(self, blocksizes: Iterable[int]) -> None:
        for blocksize in blocksizes:
            self.level(blocksize)

    def _build(self, blocksize: int) -> BlockLevel:
        partition = partition_blocks(self.R.shape[1], blocksize)
        pinvs = tuple(
            pseudoinverse(self.R[:, blk.start : blk.stop], self.rcond)
            for blk in partition.ranges
        )
        weights = np.array(
            [block_weight(self.R, blk, self.norm) for blk in partition.ranges]
        )
        steps = np.array(
            [
                lipschitz_step(
                    self.W[:, blk.start : blk.stop], self.R[:, blk.start : blk.stop]
                )
                for blk in partition.ranges
            ]
        )
        logger.debug(
            "block level %d: %d blocks", blocksize, partition.count
        )
        return BlockLevel(
            partition, pinvs, weights, block_probabilities(weights), steps
        )


def half_rayleigh_blocksize(
    elevation_step: float, rho_s: float, motion_size: int = 1
) -> int:
    """grid points within rho_s / 2 along elevation, times the
    motion hypotheses sharing each elevation"""
    steps = 1
    if math.isfinite(elevation_step) and elevation_step > 0:
        steps = max(1, round_half_up(rho_s / 2 / elevation_step))
    return steps * motion_size
