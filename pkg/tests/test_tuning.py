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
import pytest

from TomoUnfold import Tuning
from TomoUnfold.Errors import NonConvergenceError
from TomoUnfold.Solver import (
    ABTConfig,
    Engine,
    Hyperparameters,
    InversionContext,
)
from TomoUnfold.Tuning import (
    Sample,
    TuningConfig,
    draw_samples,
    grid_search,
    nmse,
    refine_axis,
    samples_digest,
    score,
)
from tests.dictionaries import benchmark_steering, identity_dft_steering


class TestNMSE(unittest.TestCase):
    def test_examples(self):
        truth = [np.array([1.0, 2j]), np.array([0.5, 0.0])]
        self.assertEqual(nmse(truth, truth), 0.0)
        self.assertEqual(nmse([np.zeros(2), np.zeros(2)], truth), 1.0)
        self.assertAlmostEqual(
            nmse(
                [np.array([0.5, 0.0]), np.array([0.9])],
                [np.array([1.0, 0.0]), np.array([1.0])],
            ),
            0.13,
        )

    def test_illegal(self):
        with self.assertRaises(ValueError):
            nmse([], [])
        with self.assertRaises(ValueError):
            nmse([np.ones(2)], [np.ones(2), np.ones(2)])
        with self.assertRaises(ValueError):
            nmse([np.ones(2)], [np.zeros(2)])


class TestRefineAxis(unittest.TestCase):
    def test_interior(self):
        fine = refine_axis("c3", (0.3, 0.45, 0.6, 0.75, 0.9), 0.6)
        self.assertIn(0.6, fine)
        self.assertAlmostEqual(min(fine), 0.45)
        self.assertAlmostEqual(max(fine), 0.75)
        self.assertEqual(list(fine), sorted(fine))

    def test_legal_range(self):
        fine = refine_axis("c3", (0.3, 0.6, 0.9), 0.9)
        self.assertTrue(all(0 < v < 1 for v in fine))
        self.assertIn(0.9, fine)
        c1 = refine_axis("c1", tuple(np.logspace(-3, 0, 7)), 0.001)
        self.assertTrue(all(v > 0 for v in c1))
        self.assertIn(0.001, c1)

    def test_single(self):
        self.assertEqual(refine_axis("c2", (0.0,), 0.0), (0.0,))


class TestTuningConfig(unittest.TestCase):
    def test_defaults(self):
        cfg = TuningConfig()
        self.assertEqual(len(cfg.c1_grid), 7)
        self.assertAlmostEqual(cfg.c1_grid[0], 1e-3)
        self.assertAlmostEqual(cfg.c1_grid[-1], 1.0)
        self.assertEqual(cfg.scatterers.num_scatterers, 1)

    def test_illegal(self):
        for kwargs in (
            {"c1_grid": ()},
            {"c1_grid": (0.0,)},
            {"c2_grid": (-1.0,)},
            {"c3_grid": (1.0,)},
            {"samples": 0},
            {"refine_factor": -1},
        ):
            with self.subTest(**kwargs), self.assertRaises(ValueError):
                TuningConfig(**kwargs)


class TestGridSearch(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        R = benchmark_steering()
        cls.context = InversionContext(R, R.entries)

    def test_single_point(self):
        cfg = TuningConfig(
            c1_grid=(0.1,),
            c2_grid=(0.0,),
            c3_grid=(0.5,),
            refine_factor=0,
            samples=3,
        )
        result = grid_search(self.context, cfg)
        self.assertEqual(len(result.trace), 1)
        self.assertEqual(
            (result.hyperparameters.c1, result.hyperparameters.c2),
            (0.1, 0.0),
        )
        self.assertEqual(result.hyperparameters.c3, 0.5)
        self.assertEqual(result.hyperparameters.num_layers, 15)
        self.assertEqual(result.nmse, result.trace[0].nmse)

    def test_argmin(self):
        cfg = TuningConfig(
            c1_grid=(0.01, 0.1),
            c2_grid=(0.0,),
            c3_grid=(0.5, 0.75),
            refine_factor=1,
            samples=4,
            num_layers=6,
        )
        result = grid_search(self.context, cfg)
        self.assertEqual(sum(c.level == 0 for c in result.trace), 4)
        self.assertEqual(result.nmse, min(c.nmse for c in result.trace))
        self.assertEqual(len(result.level_best), 2)
        self.assertLessEqual(result.level_best[1], result.level_best[0])
        document = result.document()
        self.assertEqual(document["nmse"], result.nmse)
        self.assertEqual(document["sample_digest"], result.sample_digest)
        self.assertEqual(len(document["trace"]), len(result.trace))

    def test_threads(self):
        cfg = TuningConfig(
            c1_grid=(0.01, 0.1),
            c2_grid=(0.0,),
            c3_grid=(0.5,),
            refine_factor=0,
            samples=3,
            num_layers=5,
        )
        single = grid_search(self.context, cfg, threads=1)
        pooled = grid_search(self.context, cfg, threads=2)
        self.assertEqual(single.trace, pooled.trace)

    def test_common_samples(self):
        cfg = TuningConfig(samples=5, seed=3)
        first = samples_digest(draw_samples(self.context, cfg))
        second = samples_digest(draw_samples(self.context, cfg))
        other = samples_digest(
            draw_samples(self.context, TuningConfig(samples=5, seed=4))
        )
        self.assertEqual(first, second)
        self.assertNotEqual(first, other)

    def test_failed_candidate(self):
        broken = [Sample(np.ones(200, dtype=complex), np.zeros(24, dtype=complex))]
        self.assertEqual(score(self.context, broken, Hyperparameters()), math.inf)

    def test_single_scatterer_nmse(self):
        R = identity_dft_steering()
        context = InversionContext(
            R, R.entries, ABTConfig(Engine.BASELINE), 2.0
        )
        cfg = TuningConfig(
            c1_grid=(0.015, 0.1),
            c2_grid=(0.0,),
            c3_grid=(0.5,),
            refine_factor=0,
            samples=8,
            support_selection=False,
        )
        result = grid_search(context, cfg)
        self.assertEqual(result.hyperparameters.c1, 0.015)
        self.assertLessEqual(result.nmse, 1e-2)
        worse = [c.nmse for c in result.trace if c.c1 == 0.1]
        self.assertGreater(worse[0], 0.1)


def test_nothing_finite(monkeypatch):
    R = benchmark_steering()
    context = InversionContext(R, R.entries)
    monkeypatch.setattr(Tuning, "score", lambda *args: math.inf)
    cfg = TuningConfig(
        c1_grid=(0.1,), c2_grid=(0.0,), c3_grid=(0.5,), samples=2
    )
    with pytest.raises(NonConvergenceError):
        grid_search(context, cfg)
