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
"""Analytic weight matrix by minimal generalized mutual coherence.

    min_W max_{i!=j} |W_i^H R_j|   s.t.  W_i^H R_i = 1

solved through the alternating D / G scheme: projected gradient steps on
a unit-norm frame D, least squares fit G = D R^+ and step size shrinking
whenever the frame potential stalls.
"""

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from TomoUnfold.Container import matrix_digest
from TomoUnfold.TomoModel import SteeringMatrix, normalize_columns

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WeightOptConfig:
    zeta_init: float = 0.1
    alpha_init: float = 0.1
    shrink_factor: float = 0.1
    f1_plateau_rtol: float = 1e-6
    f1_f2_match_rtol: float = 1e-3
    max_outer_iters: int = 5000
    # divide the frame potential step by ||R||_2^2
    step_normalization: bool = True

    def __post_init__(self) -> None:
        if not (self.zeta_init > 0 and self.alpha_init > 0):
            raise ValueError("zeta_init and alpha_init must be positive")
        if not 0 < self.shrink_factor < 1:
            raise ValueError(f"shrink_factor {self.shrink_factor} not in (0,1)")
        if not (self.f1_plateau_rtol > 0 and self.f1_f2_match_rtol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be at least 1")


@dataclass(frozen=True, eq=False)
class WeightOptState:
    D: np.ndarray
    G: np.ndarray
    zeta: float
    alpha: float
    f1_history: list[float] = field(default_factory=list)
    f2_history: list[float] = field(default_factory=list)
    # curvature scale of the frame potential gradient
    curvature: float = 1.0

    def __post_init__(self) -> None:
        if not (self.zeta > 0 and self.alpha > 0):
            raise ValueError("zeta and alpha must be positive")


@dataclass(frozen=True, eq=False)
class AnalyticWeights:
    entries: np.ndarray
    source_matrix_digest: str
    converged: bool = True
    iterations: int = 0
    coherence: float = math.nan
    f1_history: tuple[float, ...] = ()
    f2_history: tuple[float, ...] = ()
    config: WeightOptConfig = field(default_factory=WeightOptConfig)

    def sidecar(self) -> dict:
        """JSON-ready description stored next to the weight container"""
        return {
            "source_matrix_digest": self.source_matrix_digest,
            "weights_digest": matrix_digest(self.entries),
            "converged": self.converged,
            "iterations": self.iterations,
            "coherence": self.coherence,
            "f1_history": list(self.f1_history),
            "f2_history": list(self.f2_history),
            "config": {
                "zeta_init": self.config.zeta_init,
                "alpha_init": self.config.alpha_init,
                "shrink_factor": self.config.shrink_factor,
                "f1_plateau_rtol": self.config.f1_plateau_rtol,
                "f1_f2_match_rtol": self.config.f1_f2_match_rtol,
                "max_outer_iters": self.config.max_outer_iters,
                "step_normalization": self.config.step_normalization,
            },
        }


def _diagonal_scale(W: np.ndarray, R: np.ndarray) -> np.ndarray:
    diag = np.einsum("ij,ij->j", W.conj(), R)
    limit = np.finfo(float).eps * max(1.0, float(np.max(np.abs(diag), initial=0)))
    if np.any(np.abs(diag) <= limit):
        col = int(np.argmin(np.abs(diag)))
        raise ValueError(f"weight column {col} is orthogonal to its atom")
    return diag


def rescale_weights(W: np.ndarray, R: np.ndarray) -> np.ndarray:
    """scale columns so that diag(W^H R) = 1"""
    return W / _diagonal_scale(W, R).conj()


def mutual_coherence(W: np.ndarray, R: np.ndarray) -> float:
    W = np.asarray(W)
    R = np.asarray(R)
    if W.shape != R.shape:
        raise ValueError(f"shape mismatch: W {W.shape}, R {R.shape}")
    if R.shape[1] < 2:
        return 0.0
    diag = _diagonal_scale(W, R)
    gram = np.abs((W.conj().T @ R) / diag[:, None])
    np.fill_diagonal(gram, 0)
    return float(gram.max())


def pseudoinverse(R: np.ndarray, rcond: float | None = None) -> np.ndarray:
    """Moore-Penrose inverse by SVD, cutoff sigma_max max(N, L) eps

    rcond raises the cutoff to rcond sigma_max: the result then never
    amplifies by more than 1 / (rcond sigma_max).
    """
    R = np.asarray(R)
    if not np.all(np.isfinite(R)):
        raise ValueError("matrix contains non-finite entries")
    if rcond is not None and not 0 <= rcond < 1:
        raise ValueError(f"rcond {rcond} not in [0,1)")
    u, s, vh = scipy.linalg.svd(R, full_matrices=False, lapack_driver="gesvd")
    if s.size == 0 or s[0] == 0:
        return np.zeros(R.shape[::-1], dtype=np.result_type(R, complex))
    cutoff = s[0] * max(R.shape) * np.finfo(float).eps
    if rcond:
        cutoff = max(cutoff, rcond * s[0])
    s_inv = np.divide(1.0, s, out=np.zeros_like(s), where=s > cutoff)
    return (vh.conj().T * s_inv) @ u.conj().T


def frame_potential(D: np.ndarray) -> float:
    """||D^H D - I||_F^2 without forming the L x L Gram matrix"""
    small = D @ D.conj().T
    value = (
        np.linalg.norm(small) ** 2
        - 2 * np.linalg.norm(D) ** 2
        + D.shape[1]
    )
    return max(0.0, float(value))


def pgd_step_D(state: WeightOptState, R: np.ndarray) -> WeightOptState:
    D = state.D
    gradient = (D @ D.conj().T) @ D - D
    step = (
        D
        - (state.zeta / state.curvature) * gradient
        - (state.zeta / state.alpha) * (D - state.G @ R)
    )
    norms = np.linalg.norm(step, axis=0)
    if np.any(norms == 0):
        raise ArithmeticError(
            f"frame column {int(np.argmin(norms))} collapsed to zero"
        )
    return replace(state, D=step / norms)


def update_G(D: np.ndarray, R_pinv: np.ndarray) -> np.ndarray:
    return D @ R_pinv


def _weights(G: np.ndarray, R: np.ndarray) -> np.ndarray | None:
    try:
        return rescale_weights(G.conj().T @ (G @ R), R)
    except ValueError:
        return None


def optimize_weights(
    R: SteeringMatrix | np.ndarray, cfg: WeightOptConfig | None = None
) -> AnalyticWeights:
    cfg = cfg or WeightOptConfig()
    if isinstance(R, SteeringMatrix):
        entries = R.normalize().entries
    else:
        entries = normalize_columns(np.asarray(R, dtype=complex))
    digest = matrix_digest(entries)
    R_pinv = pseudoinverse(entries)
    curvature = (
        max(float(scipy.linalg.norm(entries, 2)) ** 2, 1.0)
        if cfg.step_normalization
        else 1.0
    )
    n_acq = entries.shape[0]

    state = WeightOptState(
        D=entries.copy(),
        G=np.eye(n_acq, dtype=complex),
        zeta=cfg.zeta_init,
        alpha=cfg.alpha_init,
        curvature=curvature,
    )
    f1 = frame_potential(state.D)
    state.f1_history.append(f1)
    state.f2_history.append(frame_potential(state.G @ entries))

    best_w = rescale_weights(entries.copy(), entries)
    best_mu = mutual_coherence(best_w, entries)

    def checkpoint() -> None:
        nonlocal best_w, best_mu
        candidate = _weights(state.G, entries)
        if candidate is None:
            logger.debug("checkpoint skipped, weights not rescalable")
            return
        mu = mutual_coherence(candidate, entries)
        if mu < best_mu:
            best_w, best_mu = candidate, mu

    converged = False
    iteration = 0
    for iteration in range(1, cfg.max_outer_iters + 1):
        state = pgd_step_D(state, entries)
        state = replace(state, G=update_G(state.D, R_pinv))
        f1_prev, f1 = f1, frame_potential(state.D)
        f2 = frame_potential(state.G @ entries)
        state.f1_history.append(f1)
        state.f2_history.append(f2)
        if abs(f1 - f1_prev) > cfg.f1_plateau_rtol * max(1.0, f1):
            continue
        if abs(f1 - f2) <= cfg.f1_f2_match_rtol * max(1.0, f1):
            converged = True
            break
        checkpoint()
        state = replace(
            state,
            zeta=state.zeta * cfg.shrink_factor,
            alpha=state.alpha * cfg.shrink_factor,
        )
        logger.debug(
            "iteration %d: f1=%.6g f2=%.6g, step sizes reduced to %g",
            iteration,
            f1,
            f2,
            state.zeta,
        )
    checkpoint()

    if converged:
        logger.info(
            "Weights converged after %d iterations, coherence %.6f",
            iteration,
            best_mu,
        )
    else:
        logger.warning(
            "Weight optimization stopped after %d iterations without"
            " convergence, keeping best coherence %.6f",
            iteration,
            best_mu,
        )
    return AnalyticWeights(
        entries=best_w,
        source_matrix_digest=digest,
        converged=converged,
        iterations=iteration,
        coherence=best_mu,
        f1_history=tuple(state.f1_history),
        f2_history=tuple(state.f2_history),
        config=cfg,
    )
