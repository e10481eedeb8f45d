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

"""Radial grids, profiles, adaptive ODE integration and radial quadrature."""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicHermiteSpline, CubicSpline

logger = logging.getLogger(__name__)

MAX_STEPS = 200000
SAFETY = 0.9
PI_BETA = 0.04
PI_ALPHA = 0.2 - 0.75 * PI_BETA
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
BLOWUP_BOUND = 1e150
GAUSS_POINTS = 6
SUPPORT_SLACK = 1e-12

# Dormand-Prince 5(4), FSAL
DOPRI_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
DOPRI_A = [
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
DOPRI_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])


class ParameterError(ValueError):
    pass


class DomainError(Exception):
    pass


class IntegrationFailed(Exception):
    def __init__(self, message, radius):
        super().__init__(f'{message} (at r={radius:.6g})')
        self.radius = radius


@dataclass(frozen=True)
class RadialGrid:
    nodes: np.ndarray
    grading: str = 'log'
    r_min: Optional[float] = None
    r_max: Optional[float] = None

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, 'nodes', nodes)
        if nodes.ndim != 1 or len(nodes) < 2:
            raise ParameterError('a radial grid needs at least 2 nodes')
        if not np.all(np.diff(nodes) > 0):
            raise ParameterError('grid nodes must be strictly increasing')
        if self.r_min is None:
            object.__setattr__(self, 'r_min', float(nodes[0]))
        if self.r_max is None:
            object.__setattr__(self, 'r_max', float(nodes[-1]))
        if not 0 < self.r_min <= nodes[0] or nodes[-1] > self.r_max:
            raise ParameterError(f'grid nodes outside [{self.r_min}, {self.r_max}]')

    def __len__(self):
        return len(self.nodes)

    def restrict(self, lo, hi):
        keep = (self.nodes >= lo * (1 - SUPPORT_SLACK)) & (self.nodes <= hi * (1 + SUPPORT_SLACK))
        return RadialGrid(self.nodes[keep], grading=self.grading)


def _log_segment(lo, hi, count):
    nodes = np.geomspace(lo, hi, count)
    nodes[0], nodes[-1] = lo, hi
    return nodes


def make_log_grid(r_lo, r_hi, count):
    if not 0 < r_lo < r_hi:
        raise ParameterError(f'invalid log grid [{r_lo}, {r_hi}]')
    if count < 2:
        raise ParameterError('node count must be at least 2')
    return RadialGrid(_log_segment(r_lo, r_hi, count), grading='log')


def make_graded_grid(r_min, r_max, n_inner, n_outer):
    """
    Log-uniform nodes on [r_min, 1] and on [1, r_max], sharing the node 1.0

    :param r_min: innermost radius, 0 < r_min < 1
    :param r_max: outermost radius, r_max > 1
    :param n_inner: node count on [r_min, 1]
    :param n_outer: node count on [1, r_max]
    :return: RadialGrid
    """
    if not 0 < r_min < 1 < r_max:
        raise ParameterError(f'need 0 < r_min < 1 < r_max, got r_min={r_min}, r_max={r_max}')
    if n_inner < 2 or n_outer < 2:
        raise ParameterError('node counts must be at least 2')
    inner = _log_segment(r_min, 1.0, n_inner)
    outer = _log_segment(1.0, r_max, n_outer)
    return RadialGrid(np.concatenate([inner, outer[1:]]), grading='log-log', r_min=r_min, r_max=r_max)


def make_decade_grid(r_lo, r_hi, inner_per_decade, outer_per_decade, pivot=1.0):
    """ Log grid with a node density given per decade, denser below the pivot radius """
    def count(lo, hi, per_decade):
        return max(2, int(math.ceil(per_decade * math.log10(hi / lo))) + 1)

    if not 0 < r_lo < r_hi:
        raise ParameterError(f'invalid grid range [{r_lo}, {r_hi}]')
    if r_hi <= pivot:
        return make_log_grid(r_lo, r_hi, count(r_lo, r_hi, inner_per_decade))
    if r_lo >= pivot:
        return make_log_grid(r_lo, r_hi, count(r_lo, r_hi, outer_per_decade))
    inner = _log_segment(r_lo, pivot, count(r_lo, pivot, inner_per_decade))
    outer = _log_segment(pivot, r_hi, count(pivot, r_hi, outer_per_decade))
    return RadialGrid(np.concatenate([inner, outer[1:]]), grading='log-log')


@dataclass(frozen=True)
class RadialProfile:
    """
    A function of radius sampled on a grid with its first derivative.

    Dense evaluation uses the cubic Hermite interpolant of (values, derivs).
    `curvature` holds exact second derivatives when the producer knows them
    (closed forms); otherwise second derivatives come from a cubic spline
    through the first derivatives.
    """
    grid: RadialGrid
    values: np.ndarray
    derivs: np.ndarray
    curvature: Optional[np.ndarray] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        derivs = np.asarray(self.derivs, dtype=float)
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'derivs', derivs)
        if values.shape != self.grid.nodes.shape or derivs.shape != self.grid.nodes.shape:
            raise ParameterError('values and derivs must match the grid length')
        if self.curvature is not None:
            curvature = np.asarray(self.curvature, dtype=float)
            if curvature.shape != self.grid.nodes.shape:
                raise ParameterError('curvature must match the grid length')
            object.__setattr__(self, 'curvature', curvature)

    @classmethod
    def from_function(cls, grid, f, df, d2f=None):
        nodes = grid.nodes
        curvature = None if d2f is None else d2f(nodes)
        return cls(grid, f(nodes), df(nodes), curvature)

    @property
    def nodes(self):
        return self.grid.nodes

    @cached_property
    def spline(self):
        return CubicHermiteSpline(self.nodes, self.values, self.derivs)

    @cached_property
    def _slope_spline(self):
        return CubicSpline(self.nodes, self.derivs)

    def check_support(self, r):
        r = np.asarray(r, dtype=float)
        lo = self.nodes[0] * (1 - SUPPORT_SLACK)
        hi = self.nodes[-1] * (1 + SUPPORT_SLACK)
        if np.any(r < lo) or np.any(r > hi):
            raise DomainError(f'radius outside profile support [{self.nodes[0]:.6g}, {self.nodes[-1]:.6g}]')
        return np.clip(r, self.nodes[0], self.nodes[-1])

    def __call__(self, r):
        out = self.spline(self.check_support(r))
        return float(out) if np.ndim(out) == 0 else out

    def derivative(self, r):
        out = self.spline(self.check_support(r), 1)
        return float(out) if np.ndim(out) == 0 else out

    def second_derivative(self, r=None):
        if r is None:
            if self.curvature is not None:
                return self.curvature
            return self._slope_spline(self.nodes, 1)
        return self._slope_spline(self.check_support(r), 1)

    def restrict(self, lo, hi):
        keep = (self.nodes >= lo * (1 - SUPPORT_SLACK)) & (self.nodes <= hi * (1 + SUPPORT_SLACK))
        curvature = None if self.curvature is None else self.curvature[keep]
        return RadialProfile(RadialGrid(self.nodes[keep], grading=self.grid.grading),
                             self.values[keep], self.derivs[keep], curvature)

    def resample(self, grid):
        return RadialProfile(grid, self(grid.nodes), self.derivative(grid.nodes))


@dataclass(frozen=True)
class IvpSpec:
    """ First order system y' = rhs(r, y) from r_start towards r_end """
    rhs: Callable
    r_start: float
    y0: tuple
    r_end: float
    rtol: float = 1e-10
    atol: float = 1e-12
    max_steps: int = MAX_STEPS
    blowup_bound: float = BLOWUP_BOUND
    first_step: Optional[float] = None

    def __post_init__(self):
        if self.rtol <= 0 or self.atol <= 0:
            raise ParameterError('tolerances must be positive')
        if self.r_start == self.r_end:
            raise ParameterError('empty integration interval')
        if not np.all(np.isfinite(self.y0)):
            raise ParameterError('initial state must be finite')

    @property
    def direction(self):
        return 1.0 if self.r_end > self.r_start else -1.0


@dataclass(frozen=True)
class IvpDiagnostics:
    n_steps: int
    n_rejected: int
    n_rhs: int
    h_min: float
    h_max: float


@dataclass(frozen=True)
class Trajectory:
    r: np.ndarray
    y: np.ndarray
    dy: np.ndarray
    diagnostics: IvpDiagnostics = field(compare=False)

    @cached_property
    def _dense(self):
        order = np.argsort(self.r)
        return CubicHermiteSpline(self.r[order], self.y[order], self.dy[order], axis=0)

    @property
    def final(self):
        return self.y[-1]

    def __call__(self, r):
        lo, hi = min(self.r[0], self.r[-1]), max(self.r[0], self.r[-1])
        r = np.asarray(r, dtype=float)
        if np.any(r < lo * (1 - SUPPORT_SLACK)) or np.any(r > hi * (1 + SUPPORT_SLACK)):
            raise DomainError(f'radius outside trajectory [{lo:.6g}, {hi:.6g}]')
        return self._dense(np.clip(r, lo, hi))

    def profile(self, grid, value=0, deriv=1):
        """ Sample one component and its derivative component onto a grid """
        states = self(grid.nodes)
        return RadialProfile(grid, states[:, value], states[:, deriv])


def _error_norm(vector, scale):
    return float(np.sqrt(np.mean((vector / scale) ** 2)))


def _initial_step(rhs, r, y, f, direction, spec):
    scale = spec.atol + spec.rtol * np.abs(y)
    d0 = _error_norm(y, scale)
    d1 = _error_norm(f, scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    f1 = np.asarray(rhs(r + direction * h0, y + direction * h0 * f), dtype=float)
    d2 = _error_norm(f1 - f, scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, abs(spec.r_end - r))


def _dopri_step(rhs, r, y, f, h):
    stages = np.empty((7, len(y)))
    stages[0] = f
    for i, row in enumerate(DOPRI_A, start=1):
        state = y + h * (row @ stages[:i])
        stages[i] = rhs(r + DOPRI_C[i] * h, state)
    # the last stage is evaluated at the propagated solution
    return state, stages[6], h * (DOPRI_E @ stages)


def integrate_ivp(spec):
    """
    Adaptive Dormand-Prince 5(4) integration with PI step size control

    :param spec: IvpSpec
    :return: Trajectory with accepted steps, their right-hand sides and diagnostics
    """
    rhs = spec.rhs
    direction = spec.direction
    r = float(spec.r_start)
    y = np.array(spec.y0, dtype=float)
    f = np.asarray(rhs(r, y), dtype=float)
    if not np.all(np.isfinite(f)):
        raise IntegrationFailed('right-hand side not finite at the initial state', r)

    h = spec.first_step if spec.first_step else _initial_step(rhs, r, y, f, direction, spec)
    n_rhs = 2
    rs, ys, fs = [r], [y], [f]
    n_steps = n_rejected = 0
    h_min, h_max = math.inf, 0.0
    err_old = 1e-4
    rejected_last = False

    while direction * (spec.r_end - r) > 0:
        if n_steps + n_rejected >= spec.max_steps:
            raise IntegrationFailed(f'max steps {spec.max_steps} exceeded', r)
        remaining = abs(spec.r_end - r)
        if remaining <= 1e-15 * max(1.0, abs(r)):
            rs[-1] = r = spec.r_end
            break
        last = h >= remaining
        if last:
            h = remaining
        if h < 1e-14 * max(1.0, abs(r)):
            raise IntegrationFailed('step size underflow', r)

        y_new, f_new, err_vec = _dopri_step(rhs, r, y, f, direction * h)
        n_rhs += 6
        if np.all(np.isfinite(y_new)) and np.all(np.isfinite(f_new)):
            scale = spec.atol + spec.rtol * np.maximum(np.abs(y), np.abs(y_new))
            err = _error_norm(err_vec, scale)
        else:
            err = math.inf

        if err <= 1.0:
            r = spec.r_end if last else r + direction * h
            y, f = y_new, f_new
            rs.append(r)
            ys.append(y)
            fs.append(f)
            n_steps += 1
            h_min, h_max = min(h_min, h), max(h_max, h)
            if np.max(np.abs(y)) > spec.blowup_bound:
                raise IntegrationFailed('trajectory exceeded the blow-up bound', r)

            err = max(err, 1e-10)
            factor = SAFETY * err ** -PI_ALPHA * err_old ** PI_BETA
            factor = min(MAX_FACTOR, max(MIN_FACTOR, factor))
            if rejected_last:
                factor = min(factor, 1.0)
            err_old = max(err, 1e-4)
            rejected_last = False
            h *= factor
        else:
            n_rejected += 1
            rejected_last = True
            shrink = MIN_FACTOR if not math.isfinite(err) else max(MIN_FACTOR, SAFETY * err ** -0.2)
            h *= shrink

    diagnostics = IvpDiagnostics(n_steps, n_rejected, n_rhs, h_min if n_steps else 0.0, h_max)
    logger.debug(f'integrated {spec.r_start:.4g} -> {spec.r_end:.4g} in {n_steps} steps '
                 f'({n_rejected} rejected)')
    return Trajectory(np.array(rs), np.array(ys), np.array(fs), diagnostics)


def segment_integrals(nodes, integrand):
    """
    Gauss-Legendre integral of integrand(s) over each interval between nodes

    :param nodes: increasing radii
    :param integrand: vectorized callable of an array of radii
    :return: array of len(nodes) - 1 interval integrals
    """
    x, w = leggauss(GAUSS_POINTS)
    a, b = nodes[:-1], nodes[1:]
    half = 0.5 * (b - a)
    s = 0.5 * (a + b)[:, None] + half[:, None] * x[None, :]
    return np.sum(half[:, None] * w[None, :] * integrand(s), axis=1)


def power_law_head(r0, r1, f0, f1, m):
    """ Integral of f(s) s^m over [0, r0] for f fitted as A s^k through two nodes """
    if f0 == 0.0:
        return 0.0
    if f0 * f1 > 0:
        k = math.log(f1 / f0) / math.log(r1 / r0)
    else:
        k = 0.0
    if k + m + 1 <= 0:
        raise DomainError(f'non-integrable singularity at the origin (local exponent {k:.3f}, m={m})')
    return f0 * r0 ** (m + 1) / (k + m + 1)


def cumulative_integral(profile, m):
    """
    Running integral of f(s) s^m from 0 to each grid node

    :param profile: RadialProfile of f
    :param m: weight exponent
    :return: RadialProfile of the integral, derivative f(r) r^m
    """
    nodes = profile.nodes
    weight = lambda s: profile.spline(s) * s ** m
    segments = segment_integrals(nodes, weight)
    head = power_law_head(nodes[0], nodes[1], profile.values[0], profile.values[1], m)
    values = head + np.concatenate([[0.0], np.cumsum(segments)])
    return RadialProfile(profile.grid, values, profile.values * nodes ** m)
