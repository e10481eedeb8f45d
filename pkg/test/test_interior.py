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

from unittest.mock import patch

from lib.exterior import ShootFailed
from lib.interior import (central_value_for_scale, extract_Q1, interior_ansatz, picard_interior,
                          scale_for_central_value, series_coefficient, shoot_interior)
from lib.kummer import PrecisionError
from lib.linear import NormSpec, weighted_norm
from lib.radial import IntegrationFailed, ParameterError, RadialProfile
from lib.steady import Dimension, solve_steady

logger = logging.getLogger('test_logger')
logger.setLevel(logging.INFO)

formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')

handler = logging.StreamHandler()
handler.setLevel(logging.INFO)

handler.setFormatter(formatter)
logger.addHandler(handler)

D3 = Dimension(3)
R0 = 0.05


class TestParametrization(unittest.TestCase):

    def test_series_coefficient(self):
        self.assertAlmostEqual(series_coefficient(1.0, D3), -0.5)
        self.assertEqual(series_coefficient(1 / 6, D3), 0.0)

    def test_scale_round_trip(self):
        for lam in (1.0, 0.3, 1e-3):
            a = central_value_for_scale(lam, D3)
            self.assertAlmostEqual(scale_for_central_value(a, D3) / lam, 1.0, places=12)
        self.assertAlmostEqual(central_value_for_scale(0.5, D3, q1_origin=2.0), 4 / 6 + 2 * 0.25 ** 2 / 0.25)


class TestShootInterior(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        logger.info('Integrating the steady state for the interior tests')
        cls.steady = solve_steady(D3)

    def test_unit_scale_tracks_steady(self):
        solution = shoot_interior(1 / 6, R0, D3)
        value, _ = solution.boundary
        qbar = self.steady.qbar(R0)
        self.assertLess(abs(value - qbar), 1e-2 * abs(qbar))
        self.assertAlmostEqual(solution.lam, 1.0, places=12)

    def test_regular_at_origin(self):
        for a in (1.0, 50.0):
            solution = shoot_interior(a, R0, D3)
            r_min = solution.r_min
            self.assertAlmostEqual(r_min, 1e-6 * min(1.0, 1 / math.sqrt(a)))
            slope = solution.profile.derivs[0] / r_min
            self.assertAlmostEqual(slope / (2 * series_coefficient(a, D3)), 1.0, delta=0.01)
            self.assertEqual(solution.profile.nodes[-1], R0)

    def test_large_central_value_is_rescaled_steady(self):
        a = 1e4
        solution = shoot_interior(a, R0, D3)
        lam = solution.lam
        z = np.linspace(0.1, 5.0, 50)
        rescaled = lam ** 2 * solution.profile(lam * z)
        np.testing.assert_allclose(rescaled, self.steady.qbar(z), rtol=0.02)

    def test_continuous_in_central_value(self):
        values = [shoot_interior(a, R0, D3).boundary[0] for a in (20.0, 20.0 + 1e-6)]
        self.assertLess(abs(values[1] - values[0]), 1e-4)

    def test_rejects_bad_parameters(self):
        with self.assertRaises(ParameterError):
            shoot_interior(0.0, R0, D3)
        with self.assertRaises(ParameterError):
            shoot_interior(1.0, 1.0, D3)

    @patch('lib.interior.integrate_ivp')
    def test_failed_integration(self, integrate):
        integrate.side_effect = IntegrationFailed('non-finite state', 0.01)
        with self.assertRaises(ShootFailed) as context:
            shoot_interior(1.0, R0, D3)
        self.assertEqual(context.exception.radius, 0.01)


class TestCorrection(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.steady = solve_steady(D3)

    def shoot_at_scale(self, lam, r0=R0):
        return shoot_interior(central_value_for_scale(lam, D3), r0, D3)

    def test_extract_at_moderate_scale(self):
        solution = self.shoot_at_scale(0.1)
        extraction = extract_Q1(solution, self.steady)
        self.assertTrue(math.isfinite(extraction.y_norm))
        self.assertAlmostEqual(extraction.profile.nodes[-1], R0 / 0.1)
        self.assertGreaterEqual(extraction.profile.nodes[0], 10 * solution.r_min / 0.1 * (1 - 1e-12))

    def test_ansatz_reproduces_boundary_data(self):
        lam = 0.1
        solution = self.shoot_at_scale(lam)
        extraction = extract_Q1(solution, self.steady)
        value, deriv = interior_ansatz(extraction.profile, self.steady, lam, R0)
        shot_value, shot_deriv = solution.boundary
        self.assertAlmostEqual(float(value) / shot_value, 1.0, delta=1e-9)
        self.assertAlmostEqual(float(deriv) / shot_deriv, 1.0, delta=1e-9)

    def test_extraction_continuous_in_central_value(self):
        first = extract_Q1(shoot_interior(16.0, R0, D3), self.steady)
        second = extract_Q1(shoot_interior(16.0 + 1e-7, R0, D3), self.steady)
        z = np.linspace(0.05, 0.4, 20)
        self.assertLess(np.max(np.abs(first.profile(z) - second.profile(z))), 1e-3 * first.y_norm + 1e-6)

    def test_tiny_scale_is_rejected(self):
        solution = shoot_interior(1e7, 1e-3, D3)
        with self.assertRaises(PrecisionError):
            extract_Q1(solution, self.steady)

    def test_dimension_mismatch(self):
        with self.assertRaises(ParameterError):
            extract_Q1(shoot_interior(1.0, R0, Dimension(4)), self.steady)


class TestPicardInterior(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        logger.info('Running the interior fixed point at lambda=0.3')
        cls.steady = solve_steady(D3)
        cls.lam = 0.3
        cls.q1, cls.report = picard_interior(cls.lam, R0, cls.steady)

    def test_contracts(self):
        self.assertTrue(self.report.converged)
        self.assertTrue(all(q < 1 for q in self.report.ratios))
        self.assertAlmostEqual(self.q1.nodes[-1], R0 / self.lam)

    def test_agrees_with_extraction(self):
        solution = shoot_interior(central_value_for_scale(self.lam, D3), R0, D3)
        extraction = extract_Q1(solution, self.steady)
        self.assertAlmostEqual(self.report.norm / extraction.y_norm, 1.0, delta=0.05)

    def test_nonlinear_terms_are_small(self):
        linear, _ = picard_interior(self.lam, R0, self.steady, nonlinear=False)
        difference = RadialProfile(self.q1.grid, self.q1.values - linear.values, self.q1.derivs - linear.derivs)
        gap = weighted_norm(NormSpec('Y', R0 / self.lam), difference)
        self.assertLessEqual(gap, 10 * self.lam ** 4 * self.report.norm ** 2 + 1e-12)

    def test_rejects_bad_parameters(self):
        with self.assertRaises(ParameterError):
            picard_interior(self.lam, 1.5, self.steady)
        with self.assertRaises(ParameterError):
            picard_interior(-1.0, R0, self.steady)


if __name__ == '__main__':
    unittest.main()
