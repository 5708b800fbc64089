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
"""Baseline HyperLISTA layer

    gamma_{k+1} = eta^{p_k}_{theta_k}(gamma_k + t W^H r
                                       + beta_k (gamma_k - gamma_{k-1}))

with r = g - R gamma_k and the analytic schedule
    theta_k = c1 ||R^+ r||_1
    beta_k  = c2 ||gamma_k||_0
    p_k     = c3 min(ln(||R^+ g||_1 / ||R^+ r||_1), L)

and the fixed step t = 1 / ||W^H R||_2.
"""

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from .Threshold import support_selection_threshold

logger = logging.getLogger(__name__)

# relative l1 residual below which a layer reports convergence
CONVERGED_RTOL: float = 1e-13
# entries below this fraction of the peak modulus count as zero
ZERO_RTOL: float = 1e-6


@dataclass(frozen=True)
class Hyperparameters:
    c1: float = 0.05
    c2: float = 0.0
    c3: float = 0.5
    num_layers: int = 15
    support_selection: bool = True

    def __post_init__(self) -> None:
        if not (math.isfinite(self.c1) and self.c1 >= 0):
            raise ValueError(f"Illegal c1: {self.c1}")
        if not (math.isfinite(self.c2) and self.c2 >= 0):
            raise ValueError(f"Illegal c2: {self.c2}")
        if not 0 < self.c3 < 1:
            raise ValueError(f"c3 {self.c3} not in (0,1)")
        if self.num_layers < 0:
            raise ValueError(f"Illegal layer count: {self.num_layers}")


@dataclass(frozen=True, eq=False)
class SolverState:
    gamma: np.ndarray
    gamma_prev: np.ndarray
    residual: np.ndarray
    layer: int = 0
    blocksize: int = 0
    converged: bool = False


def initial_state(g: np.ndarray, R: np.ndarray, blocksize: int = 0) -> SolverState:
    """gamma_0 = gamma_{-1} = R^H g"""
    gamma = R.conj().T @ g
    return SolverState(gamma, gamma, g - R @ gamma, 0, blocksize)


def l1_norm(values: np.ndarray) -> float:
    return float(np.sum(np.abs(values)))


def l0_norm(values: np.ndarray, peak: float | None = None) -> int:
    magnitude = np.abs(values)
    if peak is None:
        peak = float(magnitude.max(initial=0.0))
    if peak == 0:
        return 0
    return int(np.count_nonzero(magnitude > ZERO_RTOL * peak))


def round_half_up(value: float) -> int:
    return math.floor(value + 0.5)


def lipschitz_step(W: np.ndarray, R: np.ndarray) -> float:
    """1 / ||W^H R||_2"""
    gram = W.conj().T @ R
    if not np.all(np.isfinite(gram)):
        raise ValueError("non-finite weights or dictionary")
    norm = float(np.linalg.norm(gram, 2))
    # zero gradient, any step leaves gamma unchanged
    return 1.0 / norm if norm > 0 else 1.0


def support_size(c3: float, norm_g: float, norm_r: float, size: int) -> int:
    if norm_g <= 0 or norm_r <= 0:
        return 0
    value = c3 * min(math.log(norm_g / norm_r), size)
    return min(max(round_half_up(value), 0), size)


def hyperlista_layer(
    state: SolverState,
    g: np.ndarray,
    R: np.ndarray,
    W: np.ndarray,
    R_pinv: np.ndarray,
    hp: Hyperparameters,
    step: float | None = None,
) -> SolverState:
    """step defaults to lipschitz_step(W, R)"""
    residual = state.residual
    norm_r = l1_norm(R_pinv @ residual)
    norm_g = l1_norm(R_pinv @ g)
    if norm_r <= CONVERGED_RTOL * norm_g:
        logger.debug("layer %d: residual vanished", state.layer)
        return replace(state, converged=True)

    if step is None:
        step = lipschitz_step(W, R)
    theta = hp.c1 * norm_r
    beta = hp.c2 * l0_norm(state.gamma)
    p = (
        support_size(hp.c3, norm_g, norm_r, state.gamma.size)
        if hp.support_selection
        else 0
    )
    update = (
        state.gamma
        + step * (W.conj().T @ residual)
        + beta * (state.gamma - state.gamma_prev)
    )
    gamma = support_selection_threshold(update, theta, p)
    return SolverState(
        gamma,
        state.gamma,
        g - R @ gamma,
        state.layer + 1,
        state.blocksize,
    )
