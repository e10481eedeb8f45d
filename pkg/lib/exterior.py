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
Exterior solutions of the reduced-mass self-similar equation

    Phi'' + (d+1)/r Phi' - Phi - r Phi'/2 + 2d Phi^2 + 2r Phi Phi' = 0

on [r0, R], decaying like A/r^2 at infinity.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .linear import NormSpec, exterior_pair, tau, weighted_norm
from .radial import (IntegrationFailed, IvpSpec, ParameterError, RadialProfile,
                     integrate_ivp, make_decade_grid)

logger = logging.getLogger(__name__)

SEED_RADIUS = 30.0
SERIES_ORDER = 4
TOL_ODE = 1e-11
PROFILE_INNER_PER_DECADE = 600
PROFILE_OUTER_PER_DECADE = 400
PICARD_INNER_PER_DECADE = 400
PICARD_OUTER_PER_DECADE = 200
TOL_PICARD = 1e-9
MAX_ITERATIONS = 50
NON_CONTRACTION_LIMIT = 3


class ShootFailed(Exception):
    def __init__(self, message, radius):
        super().__init__(f'{message} (stopped at r={radius:.6g})')
        self.radius = radius


class ConvergenceFailed(Exception):
    pass


@dataclass
class PicardReport:
    increments: List[float] = field(default_factory=list)
    ratios: List[float] = field(default_factory=list)
    norm: float = 0.0
    converged: bool = False

    @property
    def iterations(self):
        return len(self.increments)

    def as_dict(self):
        return {'iterations': self.iterations, 'increments': self.increments, 'ratios': self.ratios,
                'norm': self.norm, 'converged': self.converged}


@dataclass(frozen=True)
class ExteriorSolution:
    epsilon: float
    r0: float
    profile: RadialProfile
    dim: object
    picard_report: Optional[PicardReport] = None

    @property
    def boundary(self):
        return self.profile.values[0], self.profile.derivs[0]


def reduced_mass_rhs(dim):
    d = dim.d

    def rhs(r, y):
        phi, dphi = y
        return np.array([dphi, -(d + 1) / r * dphi + phi + 0.5 * r * dphi - 2 * d * phi * phi
                         - 2 * r * phi * dphi])

    return rhs


def reduced_mass_terms(profile, dim):
    """ The individual terms of the reduced-mass equation on the profile nodes """
    d = dim.d
    r = profile.nodes
    phi, dphi = profile.values, profile.derivs
    return np.array([profile.second_derivative(), (d + 1) / r * dphi, -phi, -0.5 * r * dphi,
                     2 * d * phi * phi, 2 * r * phi * dphi])


def nonlinear_residual(profile, dim):
    return np.sum(reduced_mass_terms(profile, dim), axis=0)


def relative_residual(profile, dim):
    """ |residual| over the sum of the absolute term magnitudes, node by node """
    terms = reduced_mass_terms(profile, dim)
    return np.abs(np.sum(terms, axis=0)) / np.sum(np.abs(terms), axis=0)


def scaled_residual(profile, dim):
    """ sup of r^((d+4)/2)|res| below r = 1 and r^4|res| above """
    r = profile.nodes
    res = np.abs(nonlinear_residual(profile, dim))
    weight = np.where(r < 1.0, r ** ((dim.d + 4) / 2), r ** 4)
    return float(np.max(weight * res))


def far_field_series(amplitude, dim, order=SERIES_ORDER):
    """
    Coefficients p_k of Phi = sum p_k r^(-2-2k) with p_0 = amplitude:
    (k+1) p_(k+1) = -(2+2k)(2+2k-d) p_k - (2d-4-2k) sum_(i+j=k) p_i p_j
    """
    d = dim.d
    p = [float(amplitude)]
    for k in range(order - 1):
        quadratic = sum(p[i] * p[k - i] for i in range(k + 1))
        p.append((-(2 + 2 * k) * (2 + 2 * k - d) * p[k] - (2 * d - 4 - 2 * k) * quadratic) / (k + 1))
    return p


def evaluate_far_field(coefficients, r):
    r = np.asarray(r, dtype=float)
    value = sum(c * r ** (-2 - 2 * k) for k, c in enumerate(coefficients))
    deriv = sum((-2 - 2 * k) * c * r ** (-3 - 2 * k) for k, c in enumerate(coefficients))
    return value, deriv


def _check_radii(r0, seed_radius):
    if not 0 < r0 < 1:
        raise ParameterError(f'r0 must be in (0, 1), got {r0}')
    if seed_radius < 30:
        raise ParameterError(f'seed radius must be at least 30, got {seed_radius}')


def shoot_exterior(epsilon, r0, dim, seed_radius=SEED_RADIUS, tol=TOL_ODE):
    """
    Backward shot from the far-field series with r^-2 coefficient 1 + epsilon

    :return: ExteriorSolution on [r0, seed_radius]
    """
    _check_radii(r0, seed_radius)
    value, deriv = evaluate_far_field(far_field_series(1.0 + epsilon, dim), seed_radius)
    spec = IvpSpec(reduced_mass_rhs(dim), seed_radius, (float(value), float(deriv)), r0,
                   rtol=tol, atol=tol * 1e-12)
    try:
        trajectory = integrate_ivp(spec)
    except IntegrationFailed as e:
        raise ShootFailed(f'exterior shot with epsilon={epsilon:g} failed: {e}', e.radius) from e
    grid = make_decade_grid(r0, seed_radius, PROFILE_INNER_PER_DECADE, PROFILE_OUTER_PER_DECADE)
    solution = ExteriorSolution(epsilon, r0, trajectory.profile(grid), dim)
    logger.debug(f'exterior epsilon={epsilon:.6g}: Phi(r0)={solution.boundary[0]:.10g} '
                 f'in {trajectory.diagnostics.n_steps} steps')
    return solution


def _quadratic_source(h, dh, d2h, r, d):
    """ G = r (h^2)' + 2d h^2 and its derivative """
    g = 2 * r * h * dh + 2 * d * h * h
    dg = 2 * h * dh + 2 * r * (dh * dh + h * d2h) + 4 * d * h * dh
    return g, dg


def picard_exterior(epsilon, r0, dim, seed_radius=SEED_RADIUS, tol=TOL_PICARD, max_iterations=MAX_ITERATIONS):
    """
    Fixed point w = epsilon tau(G[u1] w), G[u1] w = r d/dr (u1+w)^2 + 2d (u1+w)^2

    :return: (ExteriorSolution of Phi* + epsilon u1 + epsilon w, w profile)
    """
    _check_radii(r0, seed_radius)
    if abs(epsilon) * r0 ** -0.5 >= 0.1:
        raise ParameterError(f'epsilon r0^(-1/2) = {abs(epsilon) * r0 ** -0.5:.3g} too large for contraction')
    d = dim.d
    pair = exterior_pair(dim, r_lo=r0, r_hi=seed_radius)
    grid = make_decade_grid(r0, seed_radius, PICARD_INNER_PER_DECADE, PICARD_OUTER_PER_DECADE)
    r = grid.nodes
    u1 = pair.first.profile
    u, du = u1(r), u1.derivative(r)
    d2u = -(d + 3) / r * du + u + 0.5 * r * du - 4 * (d - 1) * u / r ** 2

    norm = NormSpec('X', r0, d)
    report = PicardReport()
    w = RadialProfile(grid, np.zeros_like(r), np.zeros_like(r))
    d2w = np.zeros_like(r)
    source = np.zeros_like(r)
    for _ in range(max_iterations):
        g, dg = _quadratic_source(u + w.values, du + w.derivs, d2u + d2w, r, d)
        source = epsilon * g
        updated = tau(pair, RadialProfile(grid, source, epsilon * dg))
        step = RadialProfile(grid, updated.values - w.values, updated.derivs - w.derivs)
        increment = weighted_norm(norm, step)
        if report.increments and report.increments[-1] > 0:
            report.ratios.append(increment / report.increments[-1])
        report.increments.append(increment)
        w = updated
        d2w = -(d + 3) / r * w.derivs + w.values + 0.5 * r * w.derivs - 4 * (d - 1) * w.values / r ** 2 - source
        if increment < tol:
            report.converged = True
            break
        if len(report.ratios) >= NON_CONTRACTION_LIMIT and all(q >= 1 for q in report.ratios[-NON_CONTRACTION_LIMIT:]):
            raise ConvergenceFailed(f'exterior Picard iteration not contracting, ratios {report.ratios[-3:]}')
    else:
        logger.warning(f'exterior Picard stopped at {max_iterations} iterations, '
                       f'last increment {report.increments[-1]:.3g}')

    report.norm = weighted_norm(norm, w)
    phi = dim.phi_star(r) + epsilon * (u + w.values)
    dphi = -2.0 / r ** 3 + epsilon * (du + w.derivs)
    logger.info(f'exterior Picard epsilon={epsilon:g}, r0={r0:g}: {report.iterations} iterations, '
                f'|w|_X={report.norm:.4g}')
    return ExteriorSolution(epsilon, r0, RadialProfile(grid, phi, dphi), dim, report), w
