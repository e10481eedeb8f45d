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

import numpy as np

from unittest.mock import patch

from lib.exterior import (ShootFailed, far_field_series, picard_exterior, relative_residual, scaled_residual,
                          shoot_exterior)
from lib.linear import exterior_pair
from lib.radial import IntegrationFailed, ParameterError, RadialProfile, make_decade_grid
from lib.steady import Dimension

logger = logging.getLogger('test_logger')
logger.setLevel(logging.INFO)

formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')

handler = logging.StreamHandler()
handler.setLevel(logging.INFO)

handler.setFormatter(formatter)
logger.addHandler(handler)

D3 = Dimension(3)
R0 = 0.05


class TestFarField(unittest.TestCase):

    def test_phi_star_has_no_corrections(self):
        for d in range(3, 10):
            self.assertEqual(far_field_series(1.0, Dimension(d))[1:], [0.0, 0.0, 0.0])

    def test_recursion(self):
        p = far_field_series(1.5, D3)
        self.assertAlmostEqual(p[0], 1.5)
        self.assertAlmostEqual(p[1], -1.5)

    def test_phi_star_residual_vanishes(self):
        grid = make_decade_grid(R0, 30, 100, 100)
        phi = RadialProfile.from_function(grid, lambda r: r ** -2, lambda r: -2 * r ** -3, lambda r: 6 * r ** -4)
        self.assertLess(scaled_residual(phi, D3), 1e-12)


class TestShootExterior(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.u1 = exterior_pair(D3).first.profile

    def test_zero_amplitude_returns_phi_star(self):
        solution = shoot_exterior(0.0, R0, D3)
        value, deriv = solution.boundary
        self.assertAlmostEqual(value * R0 ** 2, 1.0, delta=1e-7)
        self.assertAlmostEqual(deriv * R0 ** 3, -2.0, delta=1e-6)
        self.assertEqual(solution.profile.nodes[0], R0)

    def test_linear_response_is_u1(self):
        eps = 1e-5
        value, _ = shoot_exterior(eps, R0, D3).boundary
        response = (value - R0 ** -2) / eps
        # u1 oscillates near the origin; compare on its envelope r^-5/2
        self.assertLess(abs(response - self.u1(R0)) * R0 ** 2.5, 1e-3)

    def test_residual(self):
        solution = shoot_exterior(1e-3, R0, D3)
        self.assertLess(np.max(relative_residual(solution.profile, D3)), 1e-5)

    @patch('lib.exterior.integrate_ivp')
    def test_failed_integration(self, integrate):
        integrate.side_effect = IntegrationFailed('step size underflow', 0.3)
        with self.assertRaises(ShootFailed) as context:
            shoot_exterior(0.5, R0, D3)
        self.assertEqual(context.exception.radius, 0.3)

    def test_invalid_radii(self):
        with self.assertRaises(ParameterError):
            shoot_exterior(0.0, 1.5, D3)
        with self.assertRaises(ParameterError):
            shoot_exterior(0.0, R0, D3, seed_radius=10)


class TestPicardExterior(unittest.TestCase):

    def test_agrees_with_shooting(self):
        logger.info('Running the exterior fixed point for epsilon=1e-3')
        eps = 1e-3
        picard, w = picard_exterior(eps, R0, D3)
        self.assertTrue(picard.picard_report.converged)
        self.assertTrue(all(q < 1 for q in picard.picard_report.ratios))
        shot = shoot_exterior(eps, R0, D3)
        r = picard.profile.nodes
        inside = r <= 5.0
        gap = np.abs(picard.profile.values[inside] - shot.profile(r[inside])) / np.abs(shot.profile(r[inside]))
        self.assertLess(np.max(gap), 1e-5)
        self.assertEqual(len(w.nodes), len(r))
        self.assertIn('increments', picard.picard_report.as_dict())

    def test_contraction_across_amplitude_sweep(self):
        scaled = np.geomspace(5e-4, 0.05, 10)
        constants = []
        for eps in scaled * R0 ** 0.5:
            picard, _ = picard_exterior(eps, R0, D3)
            report = picard.picard_report
            self.assertTrue(report.converged)
            self.assertTrue(all(q < 0.5 for q in report.ratios), report.ratios)
            constants.append(report.norm / (eps * R0 ** -0.5))
        logger.info(f'|w|_X / (eps r0^-1/2) over the sweep: {min(constants):.4g} .. {max(constants):.4g}')
        self.assertTrue(all(np.isfinite(constants)))
        self.assertLess(max(constants) / min(constants), 1.5)

    def test_rejects_large_amplitude(self):
        with self.assertRaises(ParameterError):
            picard_exterior(0.1, R0, D3)


if __name__ == '__main__':
    unittest.main()
