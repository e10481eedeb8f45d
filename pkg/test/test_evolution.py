# -*- coding: utf-8 -*-
#
# Copyright 2024 dpa-IT Services GmbH
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import unittest
import logging
import math

import numpy as np

from lib.evolution import (PdeState, RadialFiniteVolume, exact_derivative, exact_solution, initial_state,
                           locality_bound, lp_distance, mol_simulate, surface_area, tracking_error,
                           type_one_ratio, u_star)
from lib.radial import DomainError, ParameterError
from .generate_profiles import explicit_solution

logger = logging.getLogger('test_logger')
logger.setLevel(logging.INFO)

formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')

handler = logging.StreamHandler()
handler.setLevel(logging.INFO)

handler.setFormatter(formatter)
logger.addHandler(handler)


def u3(r, d=3):
    c = 2.0 * (d - 2)
    return 2 * c * (2 * d + r * r) / (c + r * r) ** 2


class TestExactSolution(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.sol = explicit_solution()

    def test_matches_explicit_profile_at_start(self):
        x = np.array([0.05, 0.5, 2.0, 10.0, 25.0, 50.0, 200.0])
        np.testing.assert_allclose(exact_solution(self.sol, x, 0.0), u3(x), rtol=1e-8)
        self.assertAlmostEqual(exact_solution(self.sol, 0.0, 0.0), 6.0, delta=1e-6)

    def test_self_similar_scaling(self):
        x = np.geomspace(0.01, 5.0, 30)
        early = 1.0 * exact_solution(self.sol, x, 0.0)
        late = 0.01 * exact_solution(self.sol, 0.1 * x, 0.99)
        np.testing.assert_allclose(late, early, rtol=1e-12)

    def test_derivative(self):
        x = np.array([0.3, 1.0, 3.0])
        h = 1e-6
        numeric = (exact_solution(self.sol, x + h, 0.5) - exact_solution(self.sol, x - h, 0.5)) / (2 * h)
        np.testing.assert_allclose(exact_derivative(self.sol, x, 0.5), numeric, rtol=1e-5)

    def test_limit_profile(self):
        self.assertAlmostEqual(self.sol.tail_amplitude, 4.0)
        self.assertAlmostEqual(float(u_star(self.sol, 2.0)), 1.0)
        x = np.array([0.5, 1.0, 2.0])
        np.testing.assert_allclose(exact_solution(self.sol, x, 1 - 1e-10), u_star(self.sol, x), rtol=1e-6)

    def test_time_outside_lifespan(self):
        for t in (1.0, 1.5, -0.1):
            with self.assertRaises(DomainError):
                exact_solution(self.sol, 1.0, t)
        with self.assertRaises(DomainError):
            exact_derivative(self.sol, 1.0, 1.0)

    def test_surface_area(self):
        self.assertAlmostEqual(surface_area(3), 4 * math.pi)
        self.assertAlmostEqual(surface_area(2), 2 * math.pi)


class TestBlowupDiagnostics(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.sol = explicit_solution()

    def test_type_one_ratio_is_constant(self):
        ratios = type_one_ratio(self.sol, (0.0, 0.5, 0.9, 0.999))
        self.assertAlmostEqual(ratios[0], 6.0, delta=1e-6)
        self.assertLess(max(ratios) - min(ratios), 1e-12 * ratios[0])

    def test_lp_distance_decreases(self):
        for p in (1.0, 1.4):
            totals = [lp_distance(self.sol, t, p).total for t in (0.9, 0.99, 0.999)]
            logger.info(f'p={p}: L^p distances {totals}')
            self.assertTrue(totals[0] > totals[1] > totals[2] > 0)

    def test_lp_distance_scaling(self):
        # for p = 1 the distance on the whole space scales like (T-t)^(d/2-1)
        first = lp_distance(self.sol, 0.99, 1.0, radius=1e3)
        second = lp_distance(self.sol, 0.9999, 1.0, radius=1e3)
        self.assertAlmostEqual(second.total / first.total, 0.1, delta=1e-3)
        self.assertIn('near', first.as_dict())

    def test_lp_distance_rejects_bad_arguments(self):
        with self.assertRaises(ParameterError):
            lp_distance(self.sol, 0.5, 1.5)
        with self.assertRaises(ParameterError):
            lp_distance(self.sol, 0.5, 1.0, cutoff=20.0)
        with self.assertRaises(DomainError):
            lp_distance(self.sol, 1.0, 1.0)

    def test_locality(self):
        bounds = locality_bound(self.sol)
        self.assertEqual(sorted(bounds), [0.1, 0.5, 1.0])
        for value in bounds.values():
            self.assertGreater(value, 0)
            self.assertLess(value, 4.6)


class TestFiniteVolume(unittest.TestCase):

    def test_cell_volumes(self):
        r = np.linspace(0.0, 2.0, 21)
        scheme = RadialFiniteVolume(r, 3)
        self.assertAlmostEqual(scheme.mass(np.ones_like(r)), 8 / 3, places=12)
        rate, outflow = scheme.rate(np.zeros_like(r))
        self.assertFalse(np.any(rate))
        self.assertEqual(outflow, 0.0)

    def test_state_validation(self):
        with self.assertRaises(ParameterError):
            PdeState(np.array([0.1, 0.2]), np.ones(2), 0.0, 3)
        with self.assertRaises(ParameterError):
            PdeState(np.array([0.0, 0.2]), np.array([1.0, -1.0]), 0.0, 3)

    def test_rejects_backward_run(self):
        sol = explicit_solution()
        state = initial_state(sol, np.linspace(0.0, 10.0, 101))
        with self.assertRaises(ParameterError):
            mol_simulate(state, 0.0)

    def test_step_cap_and_snapshots(self):
        sol = explicit_solution()
        state = initial_state(sol, np.linspace(0.0, 10.0, 101))
        capped = mol_simulate(state, 0.5, steps=5)
        self.assertEqual(capped.steps, 5)
        self.assertLess(capped.final.t, 0.5)
        run = mol_simulate(state, 0.01, snapshot_times=(0.005,))
        np.testing.assert_allclose([s.t for s in run.states], [0.0, 0.005, 0.01], rtol=1e-12)
        self.assertEqual(run.final.t, 0.01)


class TestSimulationTracksExactSolution(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.sol = explicit_solution()

    def simulate(self, nodes, t_end=0.5):
        state = initial_state(self.sol, np.linspace(0.0, 10.0, nodes + 1))
        return mol_simulate(state, t_end)

    def test_tracks_to_half_the_lifespan(self):
        logger.info('Simulating the explicit solution on 800 cells to t=0.5')
        run = self.simulate(800)
        self.assertFalse(run.stopped_early)
        self.assertEqual(run.final.t, 0.5)
        error = tracking_error(self.sol, run.final)
        logger.info(f'tracking error {error:.3g}, mass drift {run.mass_drift():.3g}')
        self.assertLess(error, 0.02)
        self.assertLess(run.mass_drift(), 1e-6)
        ratios = run.type_one_ratios(self.sol.T)
        self.assertAlmostEqual(ratios[-1] / ratios[0], 1.0, delta=0.05)

    def test_halving_cell_size_and_step_cuts_error_threefold(self):
        runs = []
        for cells, dt in ((200, 1e-4), (400, 5e-5)):
            state = initial_state(self.sol, np.linspace(0.0, 10.0, cells + 1))
            runs.append(mol_simulate(state, 0.25, dt=dt))
        coarse, fine = (tracking_error(self.sol, run.final) for run in runs)
        logger.info(f'tracking error {coarse:.3g} at h=0.05, {fine:.3g} at h=0.025')
        self.assertEqual([run.steps for run in runs], [2500, 5000])
        self.assertEqual(runs[1].final.t, 0.25)
        self.assertGreaterEqual(coarse / fine, 3.0)

    def test_fixed_step_above_cfl_limit(self):
        state = initial_state(self.sol, np.linspace(0.0, 10.0, 401))
        with self.assertRaises(ParameterError):
            mol_simulate(state, 0.25, dt=1e-3)
        with self.assertRaises(ParameterError):
            mol_simulate(state, 0.25, dt=0.0)


if __name__ == '__main__':
    unittest.main()
