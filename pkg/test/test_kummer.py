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

from lib.kummer import (GAMMA_PLUS, PoleError, gamma_complex, kummer_M, kummer_parameters, origin_frequency,
                        pochhammer, pochhammer_ratio_gamma, tricomi_U, u1_complex, u1_via_kummer)
from lib.linear import exterior_pair
from lib.radial import DomainError, ParameterError
from lib.steady import Dimension

logger = logging.getLogger('test_logger')
logger.setLevel(logging.INFO)

formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')

handler = logging.StreamHandler()
handler.setLevel(logging.INFO)

handler.setFormatter(formatter)
logger.addHandler(handler)


class TestGamma(unittest.TestCase):

    def test_real_values(self):
        self.assertAlmostEqual(abs(gamma_complex(5) - 24), 0.0, delta=1e-12)
        self.assertAlmostEqual(abs(gamma_complex(0.5) - math.sqrt(math.pi)), 0.0, delta=1e-13)
        self.assertAlmostEqual(abs(gamma_complex(-0.5) + 2 * math.sqrt(math.pi)), 0.0, delta=1e-12)

    def test_recurrence_in_complex_plane(self):
        for z in (GAMMA_PLUS, complex(0.3, -2.0), complex(-1.7, 0.4)):
            self.assertLess(abs(gamma_complex(z + 1) / (z * gamma_complex(z)) - 1), 1e-12)

    def test_poles(self):
        for z in (0, -1, -4):
            with self.assertRaises(PoleError):
                gamma_complex(z)

    def test_pochhammer_product_and_ratio(self):
        a = complex(0.25, 1.3)
        for n in (0, 1, 5, 12):
            self.assertLess(abs(pochhammer(a, n) / pochhammer_ratio_gamma(a, n) - 1), 1e-11)
        self.assertEqual(pochhammer(3, 2), 12)


class TestConfluent(unittest.TestCase):

    def test_exponential_case(self):
        self.assertLess(abs(kummer_M(1, 1, 10.0) / math.exp(10.0) - 1), 1e-13)
        self.assertLess(abs(kummer_M(1, 1, 25.0, mode='asymptotic') / math.exp(25.0) - 1), 1e-14)

    def test_modes_agree_in_overlap(self):
        a, b = kummer_parameters()
        series = kummer_M(a, b, 25.0)
        asymptotic = kummer_M(a, b, 25.0, mode='asymptotic')
        self.assertLess(abs(series / asymptotic - 1), 1e-6)

    def test_mode_ranges(self):
        with self.assertRaises(DomainError):
            kummer_M(1, 1, 31.0)
        with self.assertRaises(DomainError):
            kummer_M(1, 1, 10.0, mode='asymptotic')
        with self.assertRaises(ParameterError):
            kummer_M(1, 1, 1.0, mode='continued-fraction')
        with self.assertRaises(PoleError):
            kummer_M(1, -2, 1.0)

    def test_tricomi_branches_join(self):
        a, b = kummer_parameters()
        below = tricomi_U(a, b, 16.0)
        above = tricomi_U(a, b, 16.0 + 1e-9)
        self.assertLess(abs(above / below - 1), 1e-5)


class TestU1(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.u1 = exterior_pair(Dimension(3)).first.profile

    def test_real_and_normalized(self):
        self.assertLess(abs(u1_complex(5.0).imag), 1e-10)
        self.assertAlmostEqual(900 * u1_via_kummer(30.0), 1 - 2 / 900 + 4 / 900 ** 2, delta=1e-6)

    def test_agrees_with_ode(self):
        for r in (2.0, 3.0, 5.0, 7.5, 10.0):
            self.assertAlmostEqual(u1_via_kummer(r) / self.u1(r), 1.0, delta=1e-5)

    def test_rejects_small_radius(self):
        with self.assertRaises(DomainError):
            u1_complex(1.0)

    def test_origin_frequency(self):
        self.assertAlmostEqual(origin_frequency() / (math.sqrt(7) / 2), 1.0, delta=0.01)


if __name__ == '__main__':
    unittest.main()
