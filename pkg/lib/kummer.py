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

"""
Closed-form cross-check of the decaying solution u1 of L in d=3.

With u = z^(-g/2) nu(z/4), z = r^2 and g = 5/2 +- i sqrt(7)/2, L u = 0 turns into
Kummer's equation  xi nu'' + (b - xi) nu' - a nu = 0  with a = 1 - g/2, b = 7/2 - g.
The decaying branch is Tricomi's U(a, b, xi) ~ xi^(-a).
Complex values are plain Python complex numbers.
"""

import cmath
import logging
import math

import numpy as np

from .radial import DomainError, ParameterError
from .steady import Dimension, fit_oscillation

logger = logging.getLogger(__name__)

LANCZOS_G = 7
LANCZOS_COEFFICIENTS = (
    0.99999999999980993, 676.5203681218851, -1259.1392167224028,
    771.32342877765313, -176.61502916214059, 12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7,
)
SERIES_MAX_TERMS = 10000
SERIES_RTOL = 1e-16
SERIES_MAX_XI = 30.0
ASYMPTOTIC_MIN_XI = 20.0
CONNECTION_MAX_XI = 16.0
ASYMPTOTIC_MAX_TERMS = 200
MIN_RADIUS = 2.0

GAMMA_PLUS = complex(2.5, math.sqrt(7) / 2)


class PoleError(Exception):
    pass


class PrecisionError(Exception):
    pass


def _is_pole(z):
    return z.imag == 0 and z.real <= 0 and z.real == round(z.real)


def gamma_complex(z):
    """
    Lanczos approximation (g=7, 9 coefficients) with reflection for re(z) < 1/2

    :param z: complex or real argument, not a non-positive integer
    :return: complex
    """
    z = complex(z)
    if _is_pole(z):
        raise PoleError(f'gamma has a pole at {z.real:g}')
    if z.real < 0.5:
        return cmath.pi / (cmath.sin(cmath.pi * z) * gamma_complex(1 - z))
    z -= 1
    x = LANCZOS_COEFFICIENTS[0]
    for i, coefficient in enumerate(LANCZOS_COEFFICIENTS[1:], start=1):
        x += coefficient / (z + i)
    t = z + LANCZOS_G + 0.5
    return cmath.sqrt(2 * cmath.pi) * t ** (z + 0.5) * cmath.exp(-t) * x


def pochhammer(a, n):
    """ Rising factorial (a)_n = a (a+1) ... (a+n-1) """
    out = complex(1.0)
    for k in range(n):
        out *= a + k
    return out


def pochhammer_ratio_gamma(a, n):
    """ (a)_n as Gamma(a+n)/Gamma(a) """
    return gamma_complex(a + n) / gamma_complex(a)


def kummer_series(a, b, xi):
    b = complex(b)
    if _is_pole(b):
        raise PoleError(f'M(a, b, xi) is undefined for b={b.real:g}')
    term = complex(1.0)
    total = complex(1.0)
    for n in range(SERIES_MAX_TERMS):
        term *= (a + n) / (b + n) * xi / (n + 1)
        total += term
        if abs(term) < SERIES_RTOL * abs(total):
            return total
    raise PrecisionError(f'Kummer series did not converge in {SERIES_MAX_TERMS} terms at xi={xi:g}')


def kummer_asymptotic(a, b, xi):
    """
    Gamma(b)/Gamma(a) xi^(a-b) e^xi sum_k (b-a)_k (1-a)_k / k! xi^(-k), cut at the smallest term
    """
    total = complex(1.0)
    term = complex(1.0)
    smallest = math.inf
    for k in range(ASYMPTOTIC_MAX_TERMS):
        nxt = term * (b - a + k) * (1 - a + k) / ((k + 1) * xi)
        if abs(nxt) >= smallest:
            break
        smallest = abs(nxt)
        term = nxt
        total += term
        if smallest < SERIES_RTOL * abs(total):
            break
    return gamma_complex(b) / gamma_complex(a) * xi ** (a - b) * cmath.exp(xi) * total


def kummer_M(a, b, xi, mode='series'):
    """
    Confluent hypergeometric M(a, b, xi)

    :param mode: 'series' (xi <= 30) or 'asymptotic' (xi >= 20)
    """
    if mode == 'series':
        if xi > SERIES_MAX_XI:
            raise DomainError(f'series mode needs xi <= {SERIES_MAX_XI:g}, got {xi:g}')
        return kummer_series(a, b, xi)
    if mode == 'asymptotic':
        if xi < ASYMPTOTIC_MIN_XI:
            raise DomainError(f'asymptotic mode needs xi >= {ASYMPTOTIC_MIN_XI:g}, got {xi:g}')
        return kummer_asymptotic(a, b, xi)
    raise ParameterError(f'unknown mode {mode}')


def tricomi_U(a, b, xi):
    """
    Tricomi U through the two-M connection formula for xi <= 16, and the
    asymptotic series xi^(-a) sum_k (a)_k (a-b+1)_k / k! (-xi)^(-k) beyond
    """
    if xi <= CONNECTION_MAX_XI:
        first = gamma_complex(1 - b) / gamma_complex(a - b + 1) * kummer_series(a, b, xi)
        second = gamma_complex(b - 1) / gamma_complex(a) * xi ** (1 - b) * kummer_series(a - b + 1, 2 - b, xi)
        return first + second
    total = term = complex(1.0)
    smallest = math.inf
    for k in range(ASYMPTOTIC_MAX_TERMS):
        nxt = -term * (a + k) * (a - b + 1 + k) / ((k + 1) * xi)
        if abs(nxt) >= smallest:
            break
        smallest = abs(nxt)
        term = nxt
        total += term
        if smallest < SERIES_RTOL * abs(total):
            break
    return xi ** -a * total


def kummer_parameters(gamma=GAMMA_PLUS):
    return 1 - gamma / 2, 3.5 - gamma


def u1_complex(r, gamma=GAMMA_PLUS):
    """ 4^(-a) z^(-g/2) U(a, b, r^2/4); real up to rounding, r^2 u1 -> 1 """
    if r < MIN_RADIUS:
        raise DomainError(f'the Tricomi branch is used for r >= {MIN_RADIUS:g}, got {r:g}')
    a, b = kummer_parameters(gamma)
    z = r * r
    return 4 ** -a * z ** (-gamma / 2) * tricomi_U(a, b, z / 4)


def u1_via_kummer(r):
    """ The decaying solution of L in d=3, normalized to r^2 u1 -> 1 """
    return u1_complex(r).real


def m_branch_solution(r, gamma=GAMMA_PLUS):
    """ Re[z^(-g/2) M(a, b, z/4)]: a real solution regular in xi, oscillating like r^(-5/2) near 0 """
    a, b = kummer_parameters(gamma)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    out = np.array([((ri * ri) ** (-gamma / 2) * kummer_series(a, b, ri * ri / 4)).real for ri in r])
    return out


def origin_frequency(window=(1e-4, 1e-1)):
    """ Frequency of r^(5/2) m_branch_solution near the origin, expected sqrt(7)/2 """
    dim = Dimension(3)
    fit = fit_oscillation(m_branch_solution, None, dim.decay, window, dim.omega)
    logger.info(f'Kummer M branch frequency {fit.frequency:.8f} (expected {dim.omega:.8f})')
    return fit.frequency
