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
import numpy as np


def complex_soft_threshold(x, theta: float):
    """shrink |x| by theta, keep the phase"""
    if theta < 0:
        raise ValueError(f"negative threshold {theta}")
    values = np.asarray(x, dtype=complex)
    magnitude = np.abs(values)
    scale = np.zeros_like(magnitude)
    np.divide(magnitude - theta, magnitude, out=scale, where=magnitude > theta)
    result = values * scale
    return complex(result) if result.ndim == 0 else result


def support_selection_threshold(
    gamma: np.ndarray, theta: float, p: int
) -> np.ndarray:
    """soft threshold except for the p largest magnitudes

    ties are resolved in favor of the lower index
    """
    gamma = np.asarray(gamma, dtype=complex)
    if not 0 <= p <= gamma.size:
        raise ValueError(f"support size {p} outside [0, {gamma.size}]")
    result = complex_soft_threshold(gamma, theta)
    if p:
        keep = np.argsort(-np.abs(gamma), kind="stable")[:p]
        result[keep] = gamma[keep]
    return result
