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

"""Steady states Q and Q-bar, the reduced-mass transform and oscillatory tail fits."""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .radial import (IvpSpec, ParameterError, RadialProfile, cumulative_integral,
                     integrate_ivp, make_decade_grid)

logger = logging.getLogger(__name__)

R_MIN = 1e-6
STEADY_R_MAX = 1200.0
STEADY_TOL = 1e-11
INNER_PER_DECADE = 100
OUTER_PER_DECADE = 400
TAIL_WINDOW = (10.0, 1000.0)
FIT_SAMPLES = 600
FIT_RELATIVE_RESIDUAL = 0.05
FIT_MIN_AMPLITUDE = 1e-12
FREQUENCY_BAND = 0.2
DECAY_BAND = 0.5


class FitQualityError(Exception):
    pass


class DegenerateSignal(Exception):
    pass


@dataclass(frozen=True)
class Dimension:
    d: int

    def __post_init__(self):
        if int(self.d) != self.d or not 3 <= self.d <= 9:
            raise ParameterError(f'dimension must be an integer in [3, 9], got {self.d}')
        object.__setattr__(self, 'd', int(self.d))

    @property
    def omega(self):
        """ Imaginary part of the roots of x^2 + (d+2)x + 4(d-1) = 0 """
        return math.sqrt((self.d - 2) * (10 - self.d)) / 2

    @property
    def decay(self):
        return (self.d + 2) / 2

    @property
    def root_spacing(self):
        """ Distance in log(lambda) between consecutive zeros of the matching mismatch """
        return math.pi / self.omega

    def phi_star(self, r):
        return 1.0 / np.asarray(r, dtype=float) ** 2

    def u_star(self, r):
        return 2.0 * (self.d - 2) / np.asarray(r, dtype=float) ** 2


@dataclass(frozen=True)
class SteadyPair:
    qbar: RadialProfile
    q: RadialProfile
    dim: Dimension


@dataclass(frozen=True)
class OscillationFit:
    """ c * sin(omega * log(r) + phase) / r^decay fitted on window """
    amplitude: float
    phase: float
    frequency: float
    decay: float
    window: tuple
    rms_residual: float

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return self.amplitude * np.sin(self.frequency * np.log(r) + self.phase) / r ** self.decay

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        theta = self.frequency * np.log(r) + self.phase
        return (self.amplitude * r ** (-self.decay - 1)
                * (self.frequency * np.cos(theta) - self.decay * np.sin(theta)))

    def as_dict(self):
        return {'amplitude': self.amplitude, 'phase': self.phase, 'frequency': self.frequency,
                'decay': self.decay, 'window': list(self.window), 'rms_residual': self.rms_residual}


def qbar_rhs(dim):
    d = dim.d

    def rhs(r, y):
        q, dq = y
        return np.array([dq, -(d + 1) / r * dq - 2 * d * q * q - 2 * r * q * dq])

    return rhs


def solve_steady(dim, r_max=STEADY_R_MAX, tol=STEADY_TOL):
    """
    Integrate the reduced-mass steady equation from the origin outwards

    :param dim: Dimension
    :param r_max: outermost radius (>= 30)
    :param tol: relative tolerance of the integration (<= 1e-9)
    :return: SteadyPair with Q-bar and Q = 2d Q-bar + 2r Q-bar'
    """
    if r_max < 30:
        raise ParameterError(f'r_max must be at least 30, got {r_max}')
    if not 0 < tol <= 1e-9:
        raise ParameterError(f'tol must be in (0, 1e-9], got {tol}')

    d = dim.d
    a = 1.0 / (2 * d)
    b = -d * a * a / (d + 2)
    rhs = qbar_rhs(dim)
    # atol far below the 1/r^2 tail so that the error control stays relative
    spec = IvpSpec(rhs, R_MIN, (a + b * R_MIN ** 2, 2 * b * R_MIN), r_max, rtol=tol, atol=tol * 1e-20)
    trajectory = integrate_ivp(spec)
    logger.info(f'steady state d={d} integrated to r={r_max:g} in {trajectory.diagnostics.n_steps} steps')

    grid = make_decade_grid(R_MIN, r_max, INNER_PER_DECADE, OUTER_PER_DECADE)
    r = grid.nodes
    states = trajectory(r)
    qbar, dqbar = states[:, 0], states[:, 1]
    d2qbar = np.array([rhs(ri, si)[1] for ri, si in zip(r, states)])

    q = 2 * d * qbar + 2 * r * dqbar
    dq = 2 * (d + 1) * dqbar + 2 * r * d2qbar
    return SteadyPair(RadialProfile(grid, qbar, dqbar), RadialProfile(grid, q, dq), dim)


def solve_steady_nonlocal(dim, r_max=60.0, tol=STEADY_TOL):
    """ Q from Q'' + (d-1)/r Q' + Q^2 + m Q'/r^(d-1) = 0, m' = Q r^(d-1), Q(0) = 1 """
    d = dim.d

    def rhs(r, y):
        q, dq, m = y
        return np.array([dq, -(d - 1) / r * dq - q * q - m * dq / r ** (d - 1), q * r ** (d - 1)])

    r0 = R_MIN
    seed = (1 - r0 ** 2 / (2 * d), -r0 / d, r0 ** d / d - r0 ** (d + 2) / (2 * d * (d + 2)))
    trajectory = integrate_ivp(IvpSpec(rhs, r0, seed, r_max, rtol=tol, atol=tol * 1e-20))
    grid = make_decade_grid(R_MIN, r_max, INNER_PER_DECADE, OUTER_PER_DECADE)
    return trajectory.profile(grid)


def mass_transform(u, dim):
    """ Phi(r) = (1 / 2r^d) * integral_0^r U(s) s^(d-1) ds """
    d = dim.d
    r = u.nodes
    mass = cumulative_integral(u, d - 1)
    phi = mass.values / (2 * r ** d)
    dphi = (u.values - 2 * d * phi) / (2 * r)
    return RadialProfile(u.grid, phi, dphi)


def mass_transform_inverse(phi, dim):
    """ U = 2d Phi + 2r Phi' """
    d = dim.d
    r = phi.nodes
    u = 2 * d * phi.values + 2 * r * phi.derivs
    du = 2 * (d + 1) * phi.derivs + 2 * r * phi.second_derivative()
    return RadialProfile(phi.grid, u, du)


def residual_profile(grid, values):
    return RadialProfile(grid, values, np.gradient(values, grid.nodes))


def steady_residual(qbar, dim):
    """ Residual of Q'' + (d+1)/r Q' + 2d Q^2 + 2r Q Q' on the profile nodes """
    d = dim.d
    r = qbar.nodes
    q, dq = qbar.values, qbar.derivs
    res = qbar.second_derivative() + (d + 1) / r * dq + 2 * d * q * q + 2 * r * q * dq
    return residual_profile(qbar.grid, res)


def _evaluate(reference, r):
    if reference is None:
        return np.zeros_like(r)
    return np.asarray(reference(r), dtype=float)


def _fit_at(log_r, signal, omega):
    basis = np.column_stack([np.sin(omega * log_r), np.cos(omega * log_r)])
    coef, *_ = np.linalg.lstsq(basis, signal, rcond=None)
    residual = signal - basis @ coef
    return float(np.sqrt(np.mean(residual ** 2))), coef


def fit_oscillation(profile, reference, p, window, omega_guess, free_decay=False, samples=FIT_SAMPLES):
    """
    Least-squares fit of r^p (profile - reference) to c sin(omega log r + phase)

    :param profile: RadialProfile or callable of r
    :param reference: RadialProfile, callable or None for zero
    :param p: decay exponent (starting value when free_decay is set)
    :param window: (r_lo, r_hi)
    :param omega_guess: expected frequency, the search covers +-20% around it
    :param free_decay: also search p within +-0.5
    :return: OscillationFit
    """
    r_lo, r_hi = window
    if not 0 < r_lo < r_hi:
        raise ParameterError(f'invalid fit window {window}')
    span = (math.log(r_hi) - math.log(r_lo)) * omega_guess
    if span < math.pi / 2:
        raise ParameterError(f'fit window {window} covers less than a quarter oscillation period')
    if span < 6 * math.pi:
        logger.warning(f'fit window {window} covers {span / (2 * math.pi):.2f} periods (3 expected)')

    r = np.geomspace(r_lo, r_hi, samples)
    log_r = np.log(r)
    difference = np.asarray(profile(r), dtype=float) - _evaluate(reference, r)

    def best_frequency(decay):
        signal = r ** decay * difference
        scale = float(np.max(np.abs(signal)))
        if scale < FIT_MIN_AMPLITUDE:
            raise DegenerateSignal(f'signal amplitude {scale:.3g} too small to fit')
        found = minimize_scalar(lambda w: _fit_at(log_r, signal, w)[0],
                                bounds=((1 - FREQUENCY_BAND) * omega_guess, (1 + FREQUENCY_BAND) * omega_guess),
                                method='bounded', options={'xatol': 1e-12})
        rms, coef = _fit_at(log_r, signal, found.x)
        return found.x, rms, coef

    def relative_rms(decay):
        _, rms, coef = best_frequency(decay)
        return rms / max(math.hypot(*coef), FIT_MIN_AMPLITUDE)

    if free_decay:
        p = minimize_scalar(relative_rms, bounds=(p - DECAY_BAND, p + DECAY_BAND),
                            method='bounded', options={'xatol': 1e-8}).x

    omega, rms, (sin_coef, cos_coef) = best_frequency(p)
    amplitude = math.hypot(sin_coef, cos_coef)
    if amplitude < FIT_MIN_AMPLITUDE:
        raise DegenerateSignal(f'fitted amplitude {amplitude:.3g} too small')
    phase = math.atan2(cos_coef, sin_coef) % (2 * math.pi)
    fit = OscillationFit(amplitude, phase, float(omega), float(p), (r_lo, r_hi), rms)
    if rms > FIT_RELATIVE_RESIDUAL * amplitude:
        raise FitQualityError(f'rms residual {rms:.3g} above 5% of amplitude {amplitude:.3g}')
    return fit


@dataclass(frozen=True)
class SteadyTails:
    qbar_tail: OscillationFit
    q_tail: OscillationFit
    decay_fit: Optional[OscillationFit] = None

    def as_dict(self):
        out = {'qbar_minus_phi_star': self.qbar_tail.as_dict(), 'q_minus_u_star': self.q_tail.as_dict()}
        if self.decay_fit is not None:
            out['qbar_free_decay'] = self.decay_fit.as_dict()
        return out


def fit_steady_tails(pair, window=TAIL_WINDOW, free_decay=True):
    """ Tail oscillations of Q-bar - 1/r^2 and of Q - 2(d-2)/r^2, fitted independently """
    dim = pair.dim
    qbar_tail = fit_oscillation(pair.qbar, dim.phi_star, dim.decay, window, dim.omega)
    q_tail = fit_oscillation(pair.q, dim.u_star, dim.decay, window, dim.omega)
    decay_fit = None
    if free_decay:
        decay_fit = fit_oscillation(pair.qbar, dim.phi_star, dim.decay, window, dim.omega, free_decay=True)
    logger.info(f'steady tail d={dim.d}: omega={qbar_tail.frequency:.6f} (expected {dim.omega:.6f}), '
                f'amplitude={qbar_tail.amplitude:.4g}')
    return SteadyTails(qbar_tail, q_tail, decay_fit)
