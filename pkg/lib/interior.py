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
Interior solutions regular at the origin, parametrized by the central value a = Phi(0),
and the rescaled-steady decomposition Phi = lambda^-2 (Qb + lambda^4 Q1)(r/lambda).
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from .exterior import (MAX_ITERATIONS, NON_CONTRACTION_LIMIT, TOL_PICARD, ConvergenceFailed,
                       PicardReport, ShootFailed, reduced_mass_rhs)
from .kummer import PrecisionError
from .linear import NormSpec, interior_pair, resolvent_s, weighted_norm
from .radial import (IntegrationFailed, IvpSpec, ParameterError, RadialProfile, RadialGrid,
                     integrate_ivp, make_decade_grid)

logger = logging.getLogger(__name__)

R_MIN_FACTOR = 1e-6
TOL_ODE = 1e-11
PER_DECADE = 400
Z_MIN_FACTOR = 10.0
MIN_LAMBDA4 = 1e-14
PICARD_Z_MIN = 1e-4
PICARD_INNER_PER_DECADE = 200
PICARD_OUTER_PER_DECADE = 400


@dataclass(frozen=True)
class InteriorSolution:
    a: float
    lam: float
    r0: float
    profile: RadialProfile
    dim: object

    @property
    def boundary(self):
        return self.profile.values[-1], self.profile.derivs[-1]

    @property
    def r_min(self):
        return self.profile.nodes[0]


@dataclass(frozen=True)
class Q1Extraction:
    profile: RadialProfile
    y_norm: float
    lam: float


def series_coefficient(a, dim):
    """ b in Phi = a + b r^2 near the origin """
    d = dim.d
    return a * (1 - 2 * d * a) / (2 * (d + 2))


def scale_for_central_value(a, dim):
    return 1.0 / math.sqrt(2 * dim.d * a)


def central_value_for_scale(lam, dim, q1_origin=0.0):
    """ a = lambda^-2 (Qb(0) + lambda^4 Q1(0)) """
    return (1.0 / (2 * dim.d) + lam ** 4 * q1_origin) / lam ** 2


def shoot_interior(a, r0, dim, tol=TOL_ODE):
    """
    Forward shot from the regular series Phi = a + b r^2 at r_min = 1e-6 min(1, 1/sqrt(a))

    :param a: central value Phi(0) > 0
    :param r0: matching radius < 1
    :return: InteriorSolution on [r_min, r0]
    """
    if a <= 0:
        raise ParameterError(f'central value must be positive, got {a}')
    if not 0 < r0 < 1:
        raise ParameterError(f'r0 must be in (0, 1), got {r0}')
    r_min = R_MIN_FACTOR * min(1.0, 1.0 / math.sqrt(a))
    b = series_coefficient(a, dim)
    spec = IvpSpec(reduced_mass_rhs(dim), r_min, (a + b * r_min ** 2, 2 * b * r_min), r0,
                   rtol=tol, atol=tol * 1e-12 * min(1.0, a))
    try:
        trajectory = integrate_ivp(spec)
    except IntegrationFailed as e:
        raise ShootFailed(f'interior shot with a={a:.6g} failed: {e}', e.radius) from e
    grid = make_decade_grid(r_min, r0, PER_DECADE, PER_DECADE)
    return InteriorSolution(a, scale_for_central_value(a, dim), r0, trajectory.profile(grid), dim)


def extract_Q1(sol, steady):
    """
    Q1(z) = (lambda^2 Phi(lambda z) - Qb(z)) / lambda^4 on [10 r_min/lambda, r0/lambda]

    :return: Q1Extraction with the Y norm over z <= r0/lambda
    """
    if sol.dim != steady.dim:
        raise ParameterError('interior solution and steady pair differ in dimension')
    lam = sol.lam
    lam4 = lam ** 4
    if lam4 < MIN_LAMBDA4:
        raise PrecisionError(f'lambda^4 = {lam4:.3g} below {MIN_LAMBDA4:g}, Q1 is cancellation noise')
    profile = sol.profile
    r = profile.nodes
    z = r / lam
    keep = z >= Z_MIN_FACTOR * sol.r_min / lam
    z, r = z[keep], r[keep]
    values = (lam ** 2 * profile.values[keep] - steady.qbar(z)) / lam4
    derivs = (lam ** 3 * profile.derivs[keep] - steady.qbar.derivative(z)) / lam4
    q1 = RadialProfile(RadialGrid(z, grading='log'), values, derivs)
    return Q1Extraction(q1, weighted_norm(NormSpec('Y', z[-1]), q1), lam)


def _interior_source(lam, lam_q, q1, dq1, d2q1, r, d, nonlinear):
    """ J = -Lambda Qb/(2 lambda^2) - lambda^2 Lambda Q1 / 2 + lambda^4 (2d Q1^2 + r (Q1^2)') and J' """
    lq, dlq = lam_q
    j = -lq / (2 * lam ** 2) - 0.5 * lam ** 2 * (2 * q1 + r * dq1)
    dj = -dlq / (2 * lam ** 2) - 0.5 * lam ** 2 * (3 * dq1 + r * d2q1)
    if nonlinear:
        j = j + lam ** 4 * (2 * d * q1 * q1 + 2 * r * q1 * dq1)
        dj = dj + lam ** 4 * (4 * d * q1 * dq1 + 2 * q1 * dq1 + 2 * r * (dq1 * dq1 + q1 * d2q1))
    return j, dj


def picard_interior(lam, r0, steady, tol=TOL_PICARD, max_iterations=MAX_ITERATIONS, nonlinear=True):
    """
    Fixed point Q1 = S(J[Qb, lambda] Q1) from Q1 = 0 on [1e-4, r0/lambda]

    :param nonlinear: keep the lambda^4 terms of J
    :return: (Q1 profile, PicardReport)
    """
    if not 0 < r0 < 1:
        raise ParameterError(f'r0 must be in (0, 1), got {r0}')
    if lam <= 0:
        raise ParameterError(f'lambda must be positive, got {lam}')
    dim = steady.dim
    d = dim.d
    r1 = r0 / lam
    if r1 <= PICARD_Z_MIN * 10:
        raise ParameterError(f'r0/lambda = {r1:.3g} too small')
    pair = interior_pair(steady, r_hi=max(r1, 10.0))
    grid = make_decade_grid(PICARD_Z_MIN, r1, PICARD_INNER_PER_DECADE, PICARD_OUTER_PER_DECADE)
    z = grid.nodes
    lam_qbar = pair.first.profile
    lam_q = (lam_qbar(z), lam_qbar.derivative(z))
    qbar, dqbar = steady.qbar(z), steady.qbar.derivative(z)

    norm = NormSpec('Y', r1)
    report = PicardReport()
    q1 = RadialProfile(grid, np.zeros_like(z), np.zeros_like(z))
    d2q1 = np.zeros_like(z)
    for _ in range(max_iterations):
        j, dj = _interior_source(lam, lam_q, q1.values, q1.derivs, d2q1, z, d, nonlinear)
        updated = resolvent_s(pair, RadialProfile(grid, j, dj))
        step = RadialProfile(grid, updated.values - q1.values, updated.derivs - q1.derivs)
        increment = weighted_norm(norm, step)
        if report.increments and report.increments[-1] > 0:
            report.ratios.append(increment / report.increments[-1])
        report.increments.append(increment)
        q1 = updated
        d2q1 = (-((d + 1) / z + 2 * z * qbar) * q1.derivs - (4 * d * qbar + 2 * z * dqbar) * q1.values - j)
        if increment < tol * max(1.0, weighted_norm(norm, q1)):
            report.converged = True
            break
        if len(report.ratios) >= NON_CONTRACTION_LIMIT and all(q >= 1 for q in report.ratios[-NON_CONTRACTION_LIMIT:]):
            raise ConvergenceFailed(f'interior Picard iteration not contracting at lambda={lam:g}')
    else:
        logger.warning(f'interior Picard stopped at {max_iterations} iterations, '
                       f'last increment {report.increments[-1]:.3g}')
    report.norm = weighted_norm(norm, q1)
    logger.info(f'interior Picard lambda={lam:g}: {report.iterations} iterations, |Q1|_Y={report.norm:.4g}')
    return q1, report


def interior_ansatz(q1, steady, lam, r):
    """ lambda^-2 (Qb + lambda^4 Q1)(r/lambda) and its r-derivative """
    z = np.asarray(r, dtype=float) / lam
    value = (steady.qbar(z) + lam ** 4 * q1(z)) / lam ** 2
    deriv = (steady.qbar.derivative(z) + lam ** 4 * q1.derivative(z)) / lam ** 3
    return value, deriv
