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
"""Discrete (differential) TomoSAR forward model.

Acquisition geometry, motion base functions, the joint
elevation x motion parameter grid, the steering matrix and
measurement synthesis.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np

logger = logging.getLogger(__name__)

# tabulated base functions are looked up by acquisition time
TIME_MATCH_TOL: float = 1e-9


def _readonly(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class AcquisitionGeometry:
    """Baselines (m), acquisition times (years relative to master),
    wavelength (m), slant range (m) and optional incidence angle (deg)."""

    baselines: tuple[float, ...]
    times: tuple[float, ...]
    wavelength: float = 0.031
    slant_range: float = 697000.0
    incidence_angle: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "baselines", tuple(float(b) for b in self.baselines)
        )
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        if len(self.baselines) != len(self.times):
            raise ValueError(
                f"{len(self.baselines)} baselines but {len(self.times)} times"
            )
        if len(self.baselines) < 2:
            raise ValueError("at least two acquisitions required")
        if not all(math.isfinite(v) for v in self.baselines + self.times):
            raise ValueError("baselines and times must be finite")
        if not (math.isfinite(self.wavelength) and self.wavelength > 0):
            raise ValueError(f"Illegal wavelength: {self.wavelength}")
        if not (math.isfinite(self.slant_range) and self.slant_range > 0):
            raise ValueError(f"Illegal slant range: {self.slant_range}")
        if self.incidence_angle is not None and not (
            0 < self.incidence_angle < 90
        ):
            raise ValueError(
                f"Illegal incidence angle: {self.incidence_angle}"
            )

    @property
    def num_acquisitions(self) -> int:
        return len(self.baselines)

    @property
    def elevation_frequencies(self) -> np.ndarray:
        """xi_n = 2 b_n / (lambda r)"""
        return (
            2 * np.array(self.baselines) / (self.wavelength * self.slant_range)
        )


def regular_geometry(
    num: int = 25,
    baseline_span: float = 270.0,
    time_span: float = 1.0,
    wavelength: float = 0.031,
    slant_range: float = 697000.0,
    incidence_angle: float | None = None,
    order_seed: int = 0,
) -> AcquisitionGeometry:
    """Regularly distributed baselines over [-span/2, span/2] and
    regular acquisition times over [0, time_span].

    Baselines are assigned to the acquisition dates in a fixed shuffled
    order so that elevation and linear motion are not collinear.
    """
    baselines = np.linspace(-baseline_span / 2, baseline_span / 2, num)
    times = np.linspace(0.0, time_span, num)
    if time_span:
        baselines = baselines[np.random.default_rng(order_seed).permutation(num)]
    return AcquisitionGeometry(
        tuple(baselines), tuple(times), wavelength, slant_range, incidence_angle
    )


def rayleigh_resolution(geo: AcquisitionGeometry) -> float:
    """inherent elevation resolution rho_s = lambda r / (2 delta_b)"""
    aperture = max(geo.baselines) - min(geo.baselines)
    if aperture <= 0:
        raise ValueError("Rayleigh resolution needs two distinct baselines")
    return geo.wavelength * geo.slant_range / (2 * aperture)


def elevation_to_height(geo: AcquisitionGeometry, elevation: float) -> float:
    if geo.incidence_angle is None:
        raise ValueError("incidence angle unknown, no height conversion")
    return elevation * math.sin(math.radians(geo.incidence_angle))


class TermKind(Enum):
    LINEAR = "linear"
    SINUSOIDAL = "sinusoidal"
    TABULATED = "tabulated"


class BasisTerm(NamedTuple):
    kind: TermKind = TermKind.LINEAR
    period: float = 1.0
    phase_offset: float = 0.0
    times: tuple[float, ...] = ()
    values: tuple[float, ...] = ()

    def __call__(self, t: float) -> float:
        if self.kind is TermKind.LINEAR:
            return t
        if self.kind is TermKind.SINUSOIDAL:
            return math.sin(math.tau * (t - self.phase_offset) / self.period)
        for t_n, value in zip(self.times, self.values, strict=True):
            if abs(t_n - t) <= TIME_MATCH_TOL:
                return value
        raise ValueError(f"No tabulated motion value for t={t}")


def linear_term() -> BasisTerm:
    return BasisTerm(TermKind.LINEAR)


def sinusoidal_term(period: float = 1.0, phase_offset: float = 0.0) -> BasisTerm:
    if not period > 0:
        raise ValueError(f"Illegal period: {period}")
    return BasisTerm(TermKind.SINUSOIDAL, period, phase_offset)


def tabulated_term(
    times: Sequence[float], values: Sequence[float]
) -> BasisTerm:
    if len(times) != len(values):
        raise ValueError("tabulated term needs one value per time")
    return BasisTerm(
        TermKind.TABULATED,
        times=tuple(float(t) for t in times),
        values=tuple(float(v) for v in values),
    )


@dataclass(frozen=True)
class MotionBasis:
    """ordered base functions tau_m; no terms means plain 3-D TomoSAR"""

    terms: tuple[BasisTerm, ...] = ()

    @property
    def num_terms(self) -> int:
        return len(self.terms)

    def matrix(self, times: Sequence[float]) -> np.ndarray:
        """tau_m(t_n) as (M, N) array"""
        for term in self.terms:
            if term.kind is TermKind.TABULATED and len(term.values) != len(
                times
            ):
                raise ValueError(
                    f"tabulated term has {len(term.values)} values,"
                    f" expected {len(times)}"
                )
        return np.array(
            [[term(t) for t in times] for term in self.terms], dtype=float
        ).reshape(self.num_terms, len(times))


def eval_motion_basis(basis: MotionBasis, term_index: int, t: float) -> float:
    if not 0 <= term_index < basis.num_terms:
        raise IndexError(
            f"term index {term_index} out of range for {basis.num_terms} terms"
        )
    return basis.terms[term_index](t)


@dataclass(frozen=True, eq=False)
class ParameterGrid:
    """Joint grid; flat index runs elevation slowest, then the motion
    axes in declaration order (C order)."""

    elevation: np.ndarray
    motion_axes: tuple[np.ndarray, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "elevation", _readonly(self.elevation))
        object.__setattr__(
            self, "motion_axes", tuple(_readonly(a) for a in self.motion_axes)
        )
        for name, axis in (("elevation", self.elevation),) + tuple(
            (f"motion axis {i}", a) for i, a in enumerate(self.motion_axes)
        ):
            if axis.ndim != 1 or axis.size < 1:
                raise ValueError(f"{name} must be a non-empty 1-D axis")
            if not np.all(np.isfinite(axis)):
                raise ValueError(f"{name} must be finite")
            if np.any(np.diff(axis) <= 0):
                raise ValueError(f"{name} must be strictly increasing")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.elevation.size,) + tuple(a.size for a in self.motion_axes)

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    @property
    def motion_size(self) -> int:
        return math.prod(a.size for a in self.motion_axes)

    @property
    def elevation_step(self) -> float:
        if self.elevation.size < 2:
            return math.inf
        return float(np.median(np.diff(self.elevation)))

    def flat_index(self, multi_index: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(multi_index), self.shape))

    def multi_index(self, flat_index: int) -> tuple[int, ...]:
        return tuple(int(i) for i in np.unravel_index(flat_index, self.shape))

    def coordinates(self, flat_index: int) -> tuple[float, tuple[float, ...]]:
        elev, *motion = self.multi_index(flat_index)
        return float(self.elevation[elev]), tuple(
            float(axis[i]) for axis, i in zip(self.motion_axes, motion, strict=True)
        )

    def nearest_index(
        self, elevation: float, motion_coeffs: Sequence[float] = ()
    ) -> int:
        axes = (self.elevation,) + self.motion_axes
        values = (elevation,) + tuple(motion_coeffs)
        if len(values) != len(axes):
            raise ValueError("coordinate count does not match the grid")
        return self.flat_index(
            [int(np.argmin(np.abs(a - v))) for a, v in zip(axes, values, strict=True)]
        )


def regular_grid(
    elevation_range: tuple[float, float, int],
    motion_ranges: Sequence[tuple[float, float, int]] = (),
) -> ParameterGrid:
    """grid from (min, max, points) triplets"""
    return ParameterGrid(
        np.linspace(*elevation_range),
        tuple(np.linspace(*r) for r in motion_ranges),
    )


@dataclass(frozen=True, eq=False)
class SteeringMatrix:
    entries: np.ndarray
    grid: ParameterGrid
    normalized: bool = False
    geometry: AcquisitionGeometry | None = None
    basis: MotionBasis = field(default_factory=MotionBasis)

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", _readonly(self.entries, complex))
        if self.entries.ndim != 2 or self.entries.shape[1] != self.grid.size:
            raise ValueError(
                f"steering matrix shape {self.entries.shape}"
                f" does not match grid size {self.grid.size}"
            )

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    @property
    def num_acquisitions(self) -> int:
        return self.entries.shape[0]

    @property
    def size(self) -> int:
        return self.entries.shape[1]

    def normalize(self) -> "SteeringMatrix":
        if self.normalized:
            return self
        return SteeringMatrix(
            normalize_columns(self.entries),
            self.grid,
            True,
            self.geometry,
            self.basis,
        )


def normalize_columns(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=0)
    if np.any(norms == 0):
        raise ValueError("cannot normalize a zero column")
    return matrix / norms


def _phases(
    geo: AcquisitionGeometry,
    basis: MotionBasis,
    elevation: np.ndarray,
    motion_axes: Sequence[np.ndarray],
) -> np.ndarray:
    """xi_n s + sum_m eta_mn p_m broadcast to (N, L_s, L_1, ..., L_M)"""
    n_acq = geo.num_acquisitions
    dims = len(motion_axes)
    eta = 2 * basis.matrix(geo.times) / geo.wavelength
    phase = np.multiply.outer(geo.elevation_frequencies, elevation)
    phase = phase.reshape(phase.shape + (1,) * dims)
    for m, axis in enumerate(motion_axes):
        shape = [n_acq] + [1] * (dims + 1)
        shape[m + 2] = axis.size
        phase = phase + np.multiply.outer(eta[m], axis).reshape(shape)
    return phase


def build_steering_matrix(
    geo: AcquisitionGeometry,
    basis: MotionBasis,
    grid: ParameterGrid,
    normalize: bool = False,
) -> SteeringMatrix:
    """R[n, l(s, p)] = exp(+j 2 pi (xi_n s + sum_m eta_mn p_m))"""
    if len(grid.motion_axes) != basis.num_terms:
        raise ValueError(
            f"grid has {len(grid.motion_axes)} motion axes,"
            f" basis has {basis.num_terms} terms"
        )
    phase = _phases(geo, basis, grid.elevation, grid.motion_axes)
    entries = np.exp(2j * np.pi * phase).reshape(geo.num_acquisitions, grid.size)
    if normalize:
        entries = normalize_columns(entries)
    logger.debug(
        "Steering matrix %dx%d (grid %s, normalized=%s)",
        entries.shape[0],
        entries.shape[1],
        grid.shape,
        normalize,
    )
    return SteeringMatrix(entries, grid, normalize, geo, basis)


def steering_vector(
    geo: AcquisitionGeometry,
    basis: MotionBasis,
    elevation: float,
    motion_coeffs: Sequence[float] = (),
    normalize: bool = False,
) -> np.ndarray:
    """single atom at continuous parameters"""
    if len(motion_coeffs) != basis.num_terms:
        raise ValueError("one motion coefficient per basis term required")
    phase = _phases(
        geo,
        basis,
        np.array([elevation], dtype=float),
        [np.array([p], dtype=float) for p in motion_coeffs],
    )
    atom = np.exp(2j * np.pi * phase).reshape(geo.num_acquisitions)
    return atom / math.sqrt(geo.num_acquisitions) if normalize else atom


@dataclass(frozen=True, eq=False)
class ReflectivityProfile:
    entries: np.ndarray
    grid: ParameterGrid

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", _readonly(self.entries, complex))
        if self.entries.shape != (self.grid.size,):
            raise ValueError(
                f"profile length {self.entries.shape} does not match"
                f" grid size {self.grid.size}"
            )


@dataclass(frozen=True, eq=False)
class MeasurementVector:
    entries: np.ndarray
    snr_db: float = math.inf

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", _readonly(self.entries, complex))


def add_noise(
    signal: np.ndarray, snr_db: float, rng: np.random.Generator
) -> np.ndarray:
    """circular complex white noise at per-sample SNR"""
    if math.isinf(snr_db) and snr_db > 0:
        return np.array(signal, dtype=complex)
    power = float(np.vdot(signal, signal).real) / signal.size
    if power == 0:
        raise ValueError("zero signal with finite SNR requested")
    sigma2 = power / 10 ** (snr_db / 10)
    noise = rng.standard_normal(signal.size) + 1j * rng.standard_normal(
        signal.size
    )
    return signal + math.sqrt(sigma2 / 2) * noise


def synthesize_measurements(
    R: SteeringMatrix,
    gamma: ReflectivityProfile,
    snr_db: float = math.inf,
    rng_seed: int | np.random.Generator = 0,
) -> MeasurementVector:
    """g = R gamma + epsilon"""
    if gamma.entries.shape != (R.size,):
        raise ValueError(
            f"profile of length {gamma.entries.size} for {R.size} columns"
        )
    rng = (
        rng_seed
        if isinstance(rng_seed, np.random.Generator)
        else np.random.default_rng(rng_seed)
    )
    return MeasurementVector(add_noise(R.entries @ gamma.entries, snr_db, rng), snr_db)
