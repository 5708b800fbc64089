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
import cmath
import unittest

import numpy as np

from TomoUnfold.Solver.Threshold import (
    complex_soft_threshold,
    support_selection_threshold,
)


class TestSoftThreshold(unittest.TestCase):
    def test_shrinkage(self):
        x = 3 + 4j
        result = complex_soft_threshold(x, 1.0)
        self.assertAlmostEqual(abs(result), 4.0)
        self.assertAlmostEqual(cmath.phase(result), cmath.phase(x), places=12)
        self.assertEqual(complex_soft_threshold(x, 5.0), 0)
        self.assertEqual(complex_soft_threshold(x, 7.5), 0)
        self.assertEqual(complex_soft_threshold(x, 0.0), x)
        with self.assertRaises(ValueError):
            complex_soft_threshold(x, -0.1)

    def test_vector_properties(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal(1000) + 1j * rng.standard_normal(1000)
        for theta in (0.0, 0.3, 1.0, 2.5):
            result = complex_soft_threshold(x, theta)
            self.assertTrue(np.all(np.abs(result) <= np.abs(x)))
            alive = result != 0
            np.testing.assert_allclose(
                np.angle(result[alive]), np.angle(x[alive]), atol=1e-12
            )
        np.testing.assert_array_equal(complex_soft_threshold(x, 0.0), x)
        np.testing.assert_array_equal(complex_soft_threshold(np.zeros(3), 1.0), 0)


class TestSupportSelection(unittest.TestCase):
    def test_examples(self):
        gamma = np.array([3.0, 1.0, 0.5], dtype=complex)
        np.testing.assert_allclose(
            np.abs(support_selection_threshold(gamma, 0.8, 1)), [3.0, 0.2, 0.0]
        )
        np.testing.assert_array_equal(
            support_selection_threshold(gamma, 0.8, 3), gamma
        )
        np.testing.assert_array_equal(
            support_selection_threshold(gamma, 0.8, 0),
            complex_soft_threshold(gamma, 0.8),
        )

    def test_ties_lower_index(self):
        gamma = np.array([1.0, 2.0, 2.0, 0.5], dtype=complex)
        result = support_selection_threshold(gamma, 1.5, 1)
        np.testing.assert_allclose(np.abs(result), [0.0, 2.0, 0.5, 0.0])

    def test_range(self):
        gamma = np.ones(3, dtype=complex)
        with self.assertRaises(ValueError):
            support_selection_threshold(gamma, 0.1, 4)
        with self.assertRaises(ValueError):
            support_selection_threshold(gamma, 0.1, -1)

    def test_magnitude_non_increase(self):
        rng = np.random.default_rng(1)
        gamma = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        for p in (0, 5, 64):
            result = support_selection_threshold(gamma, 0.7, p)
            self.assertTrue(np.all(np.abs(result) <= np.abs(gamma)))
