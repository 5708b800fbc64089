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
import unittest

import numpy as np

from TomoUnfold.Coherence import (
    WeightOptConfig,
    WeightOptState,
    frame_potential,
    mutual_coherence,
    optimize_weights,
    pgd_step_D,
    pseudoinverse,
    update_G,
)
from TomoUnfold.Container import matrix_digest
from tests.dictionaries import benchmark_steering, dft_steering, random_complex


def brute_force_coherence(W: np.ndarray, R: np.ndarray) -> float:
    size = R.shape[1]
    result = 0.0
    for i in range(size):
        diag = np.vdot(W[:, i], R[:, i])
        for j in range(size):
            if i != j:
                result = max(result, abs(np.vdot(W[:, i], R[:, j]) / diag))
    return result


def assert_penrose(test: unittest.TestCase, A: np.ndarray) -> None:
    P = pseudoinverse(A)
    self_check = [
        (A @ P @ A, A),
        (P @ A @ P, P),
        ((A @ P).conj().T, A @ P),
        ((P @ A).conj().T, P @ A),
    ]
    for lhs, rhs in self_check:
        err = np.linalg.norm(lhs - rhs) / max(np.linalg.norm(rhs), 1.0)
        test.assertLess(err, 1e-8)


class TestMutualCoherence(unittest.TestCase):
    def test_unitary(self):
        R = dft_steering(8).entries
        self.assertAlmostEqual(mutual_coherence(R, R), 0.0, places=12)

    def test_duplicate_columns(self):
        rng = np.random.default_rng(0)
        R = random_complex(rng, (6, 5))
        R /= np.linalg.norm(R, axis=0)
        R[:, 3] = R[:, 1]
        self.assertAlmostEqual(mutual_coherence(R, R), 1.0, places=12)

    def test_brute_force(self):
        R = benchmark_steering().entries
        self.assertAlmostEqual(
            mutual_coherence(R, R), brute_force_coherence(R, R), places=12
        )

    def test_weighted(self):
        rng = np.random.default_rng(5)
        R = random_complex(rng, (5, 12))
        W = R + 0.1 * random_complex(rng, (5, 12))
        self.assertAlmostEqual(
            mutual_coherence(W, R), brute_force_coherence(W, R), places=12
        )

    def test_illegal(self):
        R = np.eye(3, dtype=complex)
        with self.assertRaises(ValueError):
            mutual_coherence(R[:, :2], R)
        W = np.roll(R, 1, axis=1)
        with self.assertRaises(ValueError):
            mutual_coherence(W, R)


class TestPseudoinverse(unittest.TestCase):
    def test_identity(self):
        np.testing.assert_allclose(
            pseudoinverse(np.eye(4)), np.eye(4), atol=1e-15
        )

    def test_unitary(self):
        R = dft_steering(8).entries
        np.testing.assert_allclose(pseudoinverse(R), R.conj().T, atol=1e-12)

    def test_penrose(self):
        rng = np.random.default_rng(11)
        A = random_complex(rng, (4, 7))
        np.testing.assert_allclose(
            A @ pseudoinverse(A) @ A, A, atol=1e-10 * np.abs(A).max()
        )
        for shape in ((4, 7), (7, 4), (25, 200), (50, 500)):
            assert_penrose(self, random_complex(rng, shape))

    def test_rank_deficient(self):
        R = benchmark_steering().entries
        assert_penrose(self, R)
        zero = pseudoinverse(np.zeros((3, 5)))
        np.testing.assert_array_equal(zero, np.zeros((5, 3)))


class TestAlternatingSteps(unittest.TestCase):
    def test_fixed_point(self):
        R = dft_steering(8).entries
        state = WeightOptState(R.copy(), np.eye(8, dtype=complex), 0.1, 0.1)
        result = pgd_step_D(state, R)
        np.testing.assert_allclose(result.D, R, atol=1e-12)
        self.assertIs(result.G, state.G)

    def test_dense_oracle(self):
        rng = np.random.default_rng(2)
        R = random_complex(rng, (3, 4))
        R /= np.linalg.norm(R, axis=0)
        D = random_complex(rng, (3, 4))
        D /= np.linalg.norm(D, axis=0)
        G = random_complex(rng, (3, 3))
        zeta, alpha = 0.1, 0.05
        state = WeightOptState(D, G, zeta, alpha)
        result = pgd_step_D(state, R)

        expected = np.zeros((3, 4), dtype=complex)
        gram = np.zeros((4, 4), dtype=complex)
        for i in range(4):
            for j in range(4):
                gram[i, j] = sum(D[k, i].conjugate() * D[k, j] for k in range(3))
            gram[i, i] -= 1
        GR = np.array(
            [[sum(G[n, k] * R[k, j] for k in range(3)) for j in range(4)]
             for n in range(3)]
        )
        for n in range(3):
            for j in range(4):
                grad = sum(D[n, i] * gram[i, j] for i in range(4))
                expected[n, j] = (
                    D[n, j] - zeta * grad - zeta / alpha * (D[n, j] - GR[n, j])
                )
        expected /= np.linalg.norm(expected, axis=0)
        np.testing.assert_allclose(result.D, expected, atol=1e-12)
        np.testing.assert_allclose(
            np.linalg.norm(result.D, axis=0), np.ones(4), atol=1e-12
        )

    def test_update_G(self):
        rng = np.random.default_rng(4)
        R = random_complex(rng, (3, 3))
        np.testing.assert_allclose(
            update_G(R, pseudoinverse(R)), np.eye(3), atol=1e-10
        )
        self.assertFalse(np.any(update_G(np.zeros((3, 3)), pseudoinverse(R))))
        D = random_complex(rng, (3, 4))
        P = random_complex(rng, (4, 3))
        dense = np.array(
            [[sum(D[i, k] * P[k, j] for k in range(4)) for j in range(3)]
             for i in range(3)]
        )
        self.assertLessEqual(np.abs(update_G(D, P) - dense).max(), 1e-12)

    def test_frame_potential(self):
        rng = np.random.default_rng(6)
        D = random_complex(rng, (5, 9))
        dense = np.linalg.norm(D.conj().T @ D - np.eye(9)) ** 2
        self.assertAlmostEqual(frame_potential(D) / dense, 1.0, places=10)

    def test_config(self):
        with self.assertRaises(ValueError):
            WeightOptConfig(shrink_factor=1.0)
        with self.assertRaises(ValueError):
            WeightOptConfig(f1_plateau_rtol=0.0)
        with self.assertRaises(ValueError):
            WeightOptState(np.eye(2), np.eye(2), 0.0, 0.1)


class TestOptimizeWeightsUnitary(unittest.TestCase):
    def test_unitary(self):
        R = dft_steering(8)
        result = optimize_weights(R)
        self.assertTrue(result.converged)
        self.assertEqual(result.iterations, 1)
        np.testing.assert_allclose(result.entries, R.entries, atol=1e-12)
        self.assertAlmostEqual(result.f1_history[-1], 0.0, places=10)
        self.assertAlmostEqual(result.f2_history[-1], 0.0, places=10)
        self.assertEqual(result.source_matrix_digest, matrix_digest(R.entries))


class TestOptimizeWeightsBenchmark(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.R = benchmark_steering()
        cls.result = optimize_weights(cls.R)

    def test_constraint(self):
        W = self.result.entries
        R = self.R.entries
        diag = np.einsum("ij,ij->j", W.conj(), R)
        np.testing.assert_allclose(diag, np.ones(200), atol=1e-8)

    def test_coherence_lower(self):
        R = self.R.entries
        mu_w = brute_force_coherence(self.result.entries, R)
        mu_r = brute_force_coherence(R, R)
        self.assertLess(mu_w, mu_r)
        self.assertAlmostEqual(self.result.coherence, mu_w, places=10)
        self.assertLessEqual(self.result.iterations, 5000)

    def test_frame_potential_history(self):
        R = self.R.entries
        initial = np.linalg.norm(R.conj().T @ R - np.eye(200)) ** 2
        self.assertAlmostEqual(self.result.f1_history[0] / initial, 1.0, places=9)
        self.assertLessEqual(
            self.result.f1_history[-1], self.result.f1_history[0]
        )
        self.assertEqual(
            len(self.result.f1_history), self.result.iterations + 1
        )

    def test_deterministic(self):
        again = optimize_weights(self.R)
        np.testing.assert_array_equal(again.entries, self.result.entries)
        self.assertEqual(again.iterations, self.result.iterations)
