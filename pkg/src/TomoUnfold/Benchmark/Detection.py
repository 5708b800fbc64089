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
from dataclasses import dataclass
from typing import Sequence

import numpy as np

# pylint: disable=import-error, no-name-in-module
from scipy.signal import find_peaks

from TomoUnfold.TomoModel import ReflectivityProfile

from .Scenario import ScattererSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DetectionTolerance:
    fraction_of_rayleigh: float = 0.25

    def __post_init__(self) -> None:
        if not self.fraction_of_rayleigh > 0:
            raise ValueError(
                f"Illegal detection tolerance: {self.fraction_of_rayleigh}"
            )


def cleanup_profile(
    gamma_hat: ReflectivityProfile, kappa: float = 0.05
) -> ReflectivityProfile:
    """zero every entry below kappa times the peak modulus

    Args:
        gamma_hat (ReflectivityProfile): solver output
        kappa (float, optional): relative floor in [0, 1). Defaults to 0.05.

    Returns:
        ReflectivityProfile: cleaned copy on the same grid
    """
    if not 0 <= kappa < 1:
        raise ValueError(f"kappa {kappa} not in [0,1)")
    entries = np.array(gamma_hat.entries)
    magnitude = np.abs(entries)
    entries[magnitude < kappa * magnitude.max(initial=0.0)] = 0
    return ReflectivityProfile(entries, gamma_hat.grid)


def elevation_projection(profile: ReflectivityProfile) -> np.ndarray:
    """max modulus over the motion hypotheses of each elevation"""
    grid = profile.grid
    return np.abs(profile.entries).reshape(grid.elevation.size, -1).max(axis=1)


def local_maxima(data: np.ndarray) -> list[int]:
    """indices of strictly positive local maxima, borders included

    Args:
        data (np.ndarray): non-negative 1-D data

    Returns:
        list[int]: ascending indices
    """
    padded = np.pad(np.asarray(data, dtype=float), 1)
    peaks = find_peaks(padded, height=np.finfo(float).tiny)[0]
    return (peaks - 1).tolist()


def model_order_selection(
    cleaned: ReflectivityProfile, k_max: int = 2, min_separation: int = 2
) -> list[ScattererSpec]:
    """Strongest elevation peaks, pairwise at least min_separation grid
    steps apart, strongest first.

    Args:
        cleaned (ReflectivityProfile): cleaned solver output
        k_max (int, optional): model order limit. Defaults to 2.
        min_separation (int, optional): in grid steps. Defaults to 2.

    Returns:
        list[ScattererSpec]: grid coordinates and value of each peak
    """
    if k_max < 1:
        raise ValueError(f"Illegal model order limit: {k_max}")
    if min_separation < 0:
        raise ValueError(f"Illegal peak separation: {min_separation}")
    grid = cleaned.grid
    projection = elevation_projection(cleaned)
    candidates = sorted(
        local_maxima(projection), key=lambda i: (-projection[i], i)
    )
    kept: list[int] = []
    for idx in candidates:
        if all(abs(idx - other) >= min_separation for other in kept):
            kept.append(idx)
        if len(kept) == k_max:
            break

    per_elevation = cleaned.entries.reshape(grid.elevation.size, -1)
    result = []
    for idx in kept:
        motion = int(np.argmax(np.abs(per_elevation[idx])))
        flat = idx * grid.motion_size + motion
        elevation, coeffs = grid.coordinates(flat)
        value = cleaned.entries[flat]
        result.append(
            ScattererSpec(elevation, coeffs, float(abs(value)), float(np.angle(value)))
        )
    return result


def match_errors(
    detections: Sequence[ScattererSpec], truths: Sequence[ScattererSpec]
) -> list[float]:
    """greedy nearest-first one-to-one matching by elevation"""
    pairs = sorted(
        (abs(d.elevation - t.elevation), i, j)
        for i, d in enumerate(detections)
        for j, t in enumerate(truths)
    )
    used_d: set[int] = set()
    used_t: set[int] = set()
    errors = []
    for error, i, j in pairs:
        if i in used_d or j in used_t:
            continue
        used_d.add(i)
        used_t.add(j)
        errors.append(error)
    return errors


def is_effective(
    detections: Sequence[ScattererSpec],
    truths: Sequence[ScattererSpec],
    limit: float,
) -> bool:
    if len(detections) != len(truths):
        return False
    return all(e <= limit for e in match_errors(detections, truths))


def effective_detection_rate(
    detections: Sequence[Sequence[ScattererSpec]],
    truths: Sequence[Sequence[ScattererSpec]],
    tol: DetectionTolerance,
    rho_s: float,
) -> float:
    if tol.fraction_of_rayleigh <= 0:
        raise ValueError("detection tolerance must be positive")
    if len(detections) != len(truths):
        raise ValueError(
            f"{len(detections)} detection lists for {len(truths)} trials"
        )
    if not truths:
        raise ValueError("no trials")
    if not (math.isfinite(rho_s) and rho_s > 0):
        raise ValueError(f"Illegal Rayleigh resolution: {rho_s}")
    limit = tol.fraction_of_rayleigh * rho_s
    effective = sum(
        is_effective(d, t, limit) for d, t in zip(detections, truths, strict=True)
    )
    return effective / len(truths)
