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
from .Detection import (
    DetectionTolerance,
    cleanup_profile,
    effective_detection_rate,
    model_order_selection,
)
from .Runner import BenchmarkSettings, CurvePoint, curve_families, run_benchmark
from .Scenario import ScattererSpec, TrialConfig, placement_bounds, simulate_trial

__all__ = [
    "BenchmarkSettings",
    "CurvePoint",
    "DetectionTolerance",
    "ScattererSpec",
    "TrialConfig",
    "cleanup_profile",
    "curve_families",
    "effective_detection_rate",
    "model_order_selection",
    "placement_bounds",
    "run_benchmark",
    "simulate_trial",
]
