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
import math
import unittest

import numpy as np

from TomoUnfold.Benchmark import ScattererSpec, TrialConfig, simulate_trial
from TomoUnfold.TomoModel import (
    MotionBasis,
    build_steering_matrix,
    linear_term,
    rayleigh_resolution,
    regular_grid,
    steering_vector,
)
from tests.dictionaries import benchmark_geometry, benchmark_steering


class TestTrialConfig(unittest.TestCase):
    def test_defaults(self):
        cfg = TrialConfig()
        self.assertEqual(cfg.num_scatterers, 2)
        self.assertEqual(cfg.snr_db, 6.0)
        self.assertEqual(cfg.trials, 500)

    def test_illegal(self):
        for kwargs in (
            {"num_scatterers": 3},
            {"trials": 0},
            {"normalized_distance": 0.0},
            {"amplitude_ratio": 0.5},
            {"snr_db": math.nan},
        ):
            with self.subTest(**kwargs), self.assertRaises(ValueError):
                TrialConfig(**kwargs)


class TestSimulateTrial(unittest.TestCase):
    def setUp(self):
        self.R = benchmark_steering()
        self.rho_s = rayleigh_resolution(benchmark_geometry())

    def test_single(self):
        cfg = TrialConfig(num_scatterers=1, snr_db=math.inf)
        trial = simulate_trial(cfg, self.R, np.random.default_rng(1))
        self.assertEqual(np.count_nonzero(trial.truth.entries), 1)
        self.assertEqual(len(trial.scatterers), 1)
        self.assertIn(trial.scatterers[0].elevation, self.R.grid.elevation)
        np.testing.assert_array_equal(
            trial.measurement.entries, self.R.entries @ trial.truth.entries
        )

    def test_pair_on_grid(self):
        cfg = TrialConfig(
            normalized_distance=1.0, amplitude_ratio=2.0, phase_difference=0.5
        )
        trial = simulate_trial(cfg, self.R, np.random.default_rng(2))
        support = np.flatnonzero(trial.truth.entries)
        self.assertEqual(support.size, 2)
        first, second = trial.scatterers
        self.assertAlmostEqual(
            second.elevation - first.elevation,
            self.rho_s,
            delta=self.R.grid.elevation_step,
        )
        self.assertAlmostEqual(first.amplitude / second.amplitude, 2.0)
        self.assertAlmostEqual(second.phase - first.phase, 0.5)
        for spec in trial.scatterers:
            self.assertIn(spec.elevation, self.R.grid.elevation)
            self.assertGreater(spec.elevation, self.R.grid.elevation[0])

    def test_deterministic(self):
        cfg = TrialConfig()
        first = simulate_trial(cfg, self.R, np.random.default_rng(3))
        second = simulate_trial(cfg, self.R, np.random.default_rng(3))
        np.testing.assert_array_equal(
            first.measurement.entries, second.measurement.entries
        )
        self.assertEqual(first.scatterers, second.scatterers)

    def test_off_grid(self):
        geo = benchmark_geometry()
        basis = MotionBasis((linear_term(),))
        R = build_steering_matrix(
            geo,
            basis,
            regular_grid((-60.0, 60.0, 61), [(-10.0, 10.0, 5)]),
            normalize=True,
        )
        cfg = TrialConfig(num_scatterers=1, snr_db=math.inf, on_grid=False)
        trial = simulate_trial(cfg, R, np.random.default_rng(4))
        spec = trial.scatterers[0]
        expected = spec.value * steering_vector(
            geo, basis, spec.elevation, spec.motion_coeffs, normalize=True
        )
        np.testing.assert_allclose(trial.measurement.entries, expected)
        self.assertEqual(np.count_nonzero(trial.truth.entries), 1)
        self.assertEqual(len(spec.motion_coeffs), 1)

    def test_does_not_fit(self):
        cfg = TrialConfig(normalized_distance=10.0)
        with self.assertRaises(ValueError):
            simulate_trial(cfg, self.R, np.random.default_rng(5))


def test_scatterer_value():
    spec = ScattererSpec(1.0, (), 2.0, math.pi / 2)
    assert abs(spec.value - 2j) < 1e-15
