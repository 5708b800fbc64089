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
from .ABT import ResidualMode, hyperlista_abt_layer
from .Blocks import BlockNorm, ScheduleMode
from .HyperLISTA import Hyperparameters, SolverState, hyperlista_layer
from .Inference import ABTConfig, Engine, InversionContext, run_inference

__all__ = [
    "ABTConfig",
    "BlockNorm",
    "Engine",
    "Hyperparameters",
    "InversionContext",
    "ResidualMode",
    "ScheduleMode",
    "SolverState",
    "hyperlista_abt_layer",
    "hyperlista_layer",
    "run_inference",
]
