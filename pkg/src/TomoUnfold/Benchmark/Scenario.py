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
"""Simulated single and double scatterer resolution cells"""

import cmath
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from TomoUnfold.TomoModel import (
    MeasurementVector,
    ParameterGrid,
    ReflectivityProfile,
    SteeringMatrix,
    add_noise,
    rayleigh_resolution,
    steering_vector,
)

logger = logging.getLogger(__name__)


class ScattererSpec(NamedTuple):
    elevation: float
    motion_coeffs: tuple[float, ...] = ()
    amplitude: float = 1.0
    phase: float = 0.0

    @property
    def value(self) -> complex:
        return cmath.rect(self.amplitude, self.phase)


@dataclass(frozen=True)
class TrialConfig:
    num_scatterers: int = 2
    normalized_distance: float = 1.0
    amplitude_ratio: float = 1.0
    phase_difference: float = 0.0
    snr_db: float = 6.0
    trials: int = 500
    seed: int = 0
    on_grid: bool = True

    def __post_init__(self) -> None:
        if self.num_scatterers not in (1, 2):
            raise ValueError(
                f"{self.num_scatterers} scatterers, only 1 or 2 supported"
            )
        if self.trials < 1:
            raise ValueError(f"Illegal trial count: {self.trials}")
        if self.num_scatterers == 2 and not self.normalized_distance > 0:
            raise ValueError(
                f"Illegal normalized distance: {self.normalized_distance}"
            )
        if not self.amplitude_ratio >= 1:
            raise ValueError(f"amplitude ratio {self.amplitude_ratio} < 1")
        if math.isnan(self.snr_db):
            raise ValueError("SNR is not a number")


class Trial(NamedTuple):
    truth: ReflectivityProfile
    measurement: MeasurementVector
    scatterers: tuple[ScattererSpec, ...]


def _draw_motion(
    steering: SteeringMatrix, on_grid: bool, rng: np.random.Generator
) -> tuple[float, ...]:
    if on_grid:
        return tuple(
            float(axis[rng.integers(axis.size)])
            for axis in steering.grid.motion_axes
        )
    return tuple(
        float(rng.uniform(axis[0], axis[-1]))
        for axis in steering.grid.motion_axes
    )


def placement_bounds(grid: ParameterGrid, separation: float) -> tuple[float, float]:
    """range of the first scatterer elevation, one grid step inside the
    grid and leaving room for the second one"""
    elevation = grid.elevation
    margin = grid.elevation_step if elevation.size > 1 else 0.0
    low = float(elevation[0] + margin)
    high = float(elevation[-1] - margin - separation)
    if high < low:
        raise ValueError(
            f"second scatterer at {separation:.2f} m does not fit the grid"
        )
    return low, high


def simulate_trial(
    cfg: TrialConfig,
    steering: SteeringMatrix,
    rng: np.random.Generator,
    rho_s: float | None = None,
) -> Trial:
    """place the scatterers, synthesize the noisy measurement"""
    grid = steering.grid
    if rho_s is None:
        if steering.geometry is None:
            raise ValueError("Rayleigh resolution unknown without geometry")
        rho_s = rayleigh_resolution(steering.geometry)
    elevation = grid.elevation
    separation = (
        cfg.normalized_distance * rho_s if cfg.num_scatterers == 2 else 0.0
    )
    low, high = placement_bounds(grid, separation)

    first = float(rng.uniform(low, high))
    positions = [first, first + separation][: cfg.num_scatterers]
    if cfg.on_grid:
        positions = [
            float(elevation[np.argmin(np.abs(elevation - s))]) for s in positions
        ]
    phase = float(rng.uniform(0.0, math.tau))
    scatterers = tuple(
        ScattererSpec(
            s,
            _draw_motion(steering, cfg.on_grid, rng),
            1.0 / cfg.amplitude_ratio**index,
            phase + index * cfg.phase_difference,
        )
        for index, s in enumerate(positions)
    )

    truth = np.zeros(grid.size, dtype=complex)
    for spec in scatterers:
        truth[grid.nearest_index(spec.elevation, spec.motion_coeffs)] += spec.value
    if cfg.on_grid:
        signal = steering.entries @ truth
    elif steering.geometry is None:
        raise ValueError("off-grid synthesis needs the acquisition geometry")
    else:
        signal = sum(
            spec.value
            * steering_vector(
                steering.geometry,
                steering.basis,
                spec.elevation,
                spec.motion_coeffs,
                steering.normalized,
            )
            for spec in scatterers
        )
    measurement = MeasurementVector(add_noise(signal, cfg.snr_db, rng), cfg.snr_db)
    return Trial(ReflectivityProfile(truth, grid), measurement, scatterers)
