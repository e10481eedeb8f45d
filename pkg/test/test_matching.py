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
from unittest.mock import patch

import numpy as np

from lib.interior import central_value_for_scale
from lib.matching import (AssemblyRejected, MatchingProblem, MatchPoint, MatchScan, RefinementFailed, explicit_grid,
                          explicit_phi, explicit_profile, explicit_u, nonlocal_residual, pair_roots,
                          scaled_terms_residual, sequence_checks, verify_explicit)
from lib.radial import ParameterError
from lib.steady import Dimension, mass_transform, mass_transform_inverse

logger = logging.getLogger('test_logger')
logger.setLevel(logging.INFO)

formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')

handler = logging.StreamHandler()
handler.setLevel(logging.INFO)

handler.setFormatter(formatter)
logger.addHandler(handler)

D3 = Dimension(3)


def point(lam, mismatch, predicted=None):
    return MatchPoint(central_value_for_scale(lam, D3), lam, 0.0, 0.0, mismatch, predicted)


class TestExplicitSolutions(unittest.TestCase):

    def test_residuals_in_every_dimension(self):
        for d in range(3, 10):
            report = verify_explicit(Dimension(d))
            logger.info(f'd={d}: max scaled residual {report["max_residual"]:.3g}')
            self.assertLess(report['max_residual'], 1e-8)
            self.assertEqual(report['dim'], d)

    def test_mass_transform_links_u3_and_phi3(self):
        grid = explicit_grid()
        phi = mass_transform(explicit_u(3, D3, grid), D3)
        exact = explicit_phi(3, D3, grid)
        inside = grid.nodes >= 0.1
        np.testing.assert_allclose(phi.values[inside], exact.values[inside], rtol=1e-6)

    def test_inverse_mass_transform_recovers_u3(self):
        grid = explicit_grid()
        u = mass_transform_inverse(explicit_phi(3, D3, grid), D3)
        exact = explicit_u(3, D3, grid)
        inside = (grid.nodes >= 0.1) & (grid.nodes <= 20)
        np.testing.assert_allclose(u.values[inside], exact.values[inside], rtol=1e-6)
        self.assertAlmostEqual(u.values[0] / exact.values[0], 1.0, places=4)

    def test_singular_solution_is_u_star(self):
        grid = explicit_grid()
        np.testing.assert_allclose(explicit_u(2, D3, grid).values, D3.u_star(grid.nodes), rtol=1e-14)
        self.assertLess(nonlocal_residual(explicit_u(2, D3, grid), D3), 1e-10)

    def test_unknown_index(self):
        with self.assertRaises(ParameterError):
            explicit_u(4, D3, explicit_grid())
        with self.assertRaises(ParameterError):
            explicit_phi(-1, D3, explicit_grid())

    def test_explicit_profile(self):
        profile = explicit_profile(D3)
        self.assertEqual(profile.n, 0)
        self.assertEqual(profile.eps_n, 1.0)
        self.assertAlmostEqual(profile.r_max, 30.0)
        self.assertAlmostEqual(profile.u.values[0], 4 * 6 / 4, delta=1e-6)
        self.assertEqual(profile.tail_coefficients(4)[0], 2.0)

    def test_scaled_terms_residual(self):
        self.assertEqual(scaled_terms_residual(np.array([[1.0, 2.0], [-1.0, -2.0]])), 0.0)
        self.assertEqual(scaled_terms_residual(np.array([[1.0, 0.0], [1.0, 0.0]])), 1.0)


class TestMatchScan(unittest.TestCase):

    def test_root_estimates_interpolate_in_log_lambda(self):
        plus, minus = point(math.exp(-1.0), 1.0), point(math.exp(-2.0), -1.0)
        scan = MatchScan([plus, minus], [(plus, minus)], D3.root_spacing)
        self.assertAlmostEqual(scan.root_estimates()[0], -1.5)
        self.assertEqual(scan.spacings(), [])

    def test_spacings_and_agreement(self):
        points = [point(math.exp(-k), (-1) ** k, (-1) ** k) for k in range(4)]
        brackets = list(zip(points, points[1:]))
        scan = MatchScan(points, brackets, D3.root_spacing)
        np.testing.assert_allclose(scan.spacings(), [1.0, 1.0])
        self.assertEqual(scan.predictor_agreement(), 1.0)
        summary = scan.as_dict()
        self.assertEqual(len(summary['brackets']), 3)
        self.assertEqual(summary['predicted_spacing'], D3.root_spacing)

    def test_match_point_serialization(self):
        p = point(0.01, 0.5)
        self.assertEqual(set(p.as_dict()), {'a', 'lambda', 'epsilon', 'value_gap', 'deriv_mismatch', 'predicted'})
        self.assertIsNone(p.stripped().interior)


def sequence_report(inner, outer, eps, mu):
    return {'sup_inner_steady_distance': inner, 'sup_outer_weighted_distance': outer, 'eps_n': eps,
            'eps_over_sqrt_mu': eps / math.sqrt(mu)}


class TestProfileSequence(unittest.TestCase):

    def setUp(self):
        q = math.exp(-D3.root_spacing)
        self.mus = [1e-3, 1e-3 * q, 1e-3 * q * q]
        self.reports = [sequence_report(0.3 / n, 0.02 / n, (-1) ** n * 0.04 * math.sqrt(mu), mu)
                        for n, mu in enumerate(self.mus, start=1)]

    def test_well_behaved_sequence(self):
        checks = sequence_checks(self.reports)
        self.assertEqual(set(checks), {'inner_distance_decreasing', 'outer_distance_decreasing', 'eps_decreasing',
                                       'eps_scale_growth', 'eps_sign_alternates'})
        self.assertTrue(all(passed for _, passed in checks.values()))
        self.assertAlmostEqual(checks['eps_scale_growth'][0], 1.0)

    def test_single_profile_passes(self):
        checks = sequence_checks(self.reports[:1])
        self.assertTrue(all(passed for _, passed in checks.values()))

    def test_non_decreasing_distances(self):
        self.reports[2]['sup_inner_steady_distance'] = 0.3
        self.reports[1]['sup_outer_weighted_distance'] = 0.02
        checks = sequence_checks(self.reports)
        self.assertFalse(checks['inner_distance_decreasing'][1])
        self.assertFalse(checks['outer_distance_decreasing'][1])
        self.assertTrue(checks['eps_decreasing'][1])

    def test_epsilon_growth_and_sign(self):
        mu = self.mus[2]
        self.reports[2] = sequence_report(0.1, 0.006, 0.2 * math.sqrt(mu), mu)
        checks = sequence_checks(self.reports)
        self.assertFalse(checks['eps_scale_growth'][1])
        self.assertAlmostEqual(checks['eps_scale_growth'][0], 5.0)
        self.assertFalse(checks['eps_sign_alternates'][1])

    def test_missing_inner_distance_fails(self):
        self.reports[1]['sup_inner_steady_distance'] = math.nan
        self.assertFalse(sequence_checks(self.reports)['inner_distance_decreasing'][1])


class TestPairRoots(unittest.TestCase):

    def test_pairs_by_nearest_log_mu(self):
        mus = {0.03: [1.0e-3, 9.3e-5, 8.6e-6], 0.05: [1.001e-3, 9.31e-5, 8.61e-6], 0.08: [0.999e-3, 9.29e-5, 8.6e-6]}
        groups = pair_roots(mus, 0.5 * D3.root_spacing)
        self.assertEqual(groups, [[1.0e-3, 1.001e-3, 0.999e-3], [9.3e-5, 9.31e-5, 9.29e-5],
                                  [8.6e-6, 8.61e-6, 8.6e-6]])

    def test_lost_root_does_not_shift_later_pairs(self):
        mus = {0.03: [1.0e-3, 9.3e-5, 8.6e-6], 0.05: [1.001e-3, 8.61e-6], 0.08: [0.999e-3, 9.29e-5, 8.6e-6]}
        groups = pair_roots(mus, 0.5 * D3.root_spacing)
        self.assertEqual(groups[0], [1.0e-3, 1.001e-3, 0.999e-3])
        self.assertIsNone(groups[1])
        self.assertEqual(groups[2], [8.6e-6, 8.61e-6, 8.6e-6])

    def test_empty_lists(self):
        self.assertEqual(pair_roots({}, 1.0), [])
        self.assertEqual(pair_roots({0.03: [1e-3], 0.05: []}, 1.0), [None])


class TestMatchingProblem(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        logger.info('Setting up the d=3 matching problem at r0=0.05')
        cls.problem = MatchingProblem(D3)

    def test_value_slope_is_u1(self):
        # u1 may sit near a zero at r0; compare on its envelope r^-5/2
        self.assertLess(abs(self.problem.value_slope() - self.problem.u1_r0) * 0.05 ** 2.5, 1e-4)

    def test_predicted_roots_are_evenly_spaced(self):
        roots = self.problem.predicted_roots(3e-3, 1e-7)
        self.assertGreaterEqual(len(roots), 2)
        gaps = -np.diff(np.log(roots))
        np.testing.assert_allclose(gaps, D3.root_spacing, rtol=1e-12)
        self.assertTrue(all(1e-7 <= lam <= 3e-3 for lam in roots))
        for lam in roots:
            self.assertLess(abs(self.problem.predictor(lam)), 1e-9 * self.problem.predictor_amplitude(lam))

    def test_default_range_spans_the_periods(self):
        a_lo, a_hi = self.problem.default_a_range(periods=3)
        span = 0.5 * math.log(a_hi / a_lo)
        self.assertAlmostEqual(span, 3 * 2 * math.pi / D3.omega)
        self.assertAlmostEqual(a_lo, central_value_for_scale(3e-3, D3))

    def test_short_scan_is_rejected(self):
        with self.assertRaises(ParameterError):
            self.problem.scan_mismatch((1e5, 2e5))
        with self.assertRaises(ParameterError):
            self.problem.scan_mismatch((2e5, 1e5))

    def test_solve_eps_matches_value(self):
        a = central_value_for_scale(2e-3, D3)
        matched = self.problem.solve_eps(a)
        self.assertLess(matched.value_gap, 1e-12 * float(D3.phi_star(0.05)))
        self.assertTrue(math.isfinite(matched.deriv_mismatch))
        self.assertIsNotNone(matched.predicted)
        self.assertAlmostEqual(matched.lam, 2e-3)

    def test_assembly_rejects_unmatched_derivative(self):
        a = central_value_for_scale(2e-3, D3)
        matched = self.problem.solve_eps(a)
        if abs(matched.deriv_mismatch) * 0.05 ** 3 / 2 <= 1e-8:
            self.skipTest('sample happens to sit on a root')
        with self.assertRaises(AssemblyRejected):
            self.problem.assemble_profile(1, matched)

    def test_refine_mu_on_synthetic_mismatch(self):
        root_a = central_value_for_scale(1e-3, D3)

        def fake_solve(a):
            return MatchPoint(a, 0.0, 0.0, 0.0, math.log(a / root_a))

        with patch.object(self.problem, 'solve_eps', side_effect=fake_solve):
            refined = self.problem.refine_mu((point(2e-3, 1.0), point(5e-4, -1.0)))
        self.assertAlmostEqual(refined.a / root_a, 1.0, places=9)

    def test_refine_mu_without_sign_change(self):
        with patch.object(self.problem, 'solve_eps', side_effect=lambda a: MatchPoint(a, 0.0, 0.0, 0.0, 1.0)):
            with self.assertRaises(RefinementFailed):
                self.problem.refine_mu((point(2e-3, 1.0), point(5e-4, 1.0)))

    def test_rejects_bad_radius(self):
        with self.assertRaises(ParameterError):
            MatchingProblem(D3, r0=1.5, steady=self.problem.steady, tails=self.problem.tails)


if __name__ == '__main__':
    unittest.main()
