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
Matching of interior and exterior solutions at r0.

For a central value a the exterior amplitude epsilon(a) is found so that both
solutions take the same value at r0. The derivative mismatch F(a) then
oscillates in log(lambda), lambda = 1/sqrt(2da), and every sign change
brackets one self-similar profile U_n with scale mu_n.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import repeat
from typing import List, Optional

import numpy as np
from scipy.optimize import brentq, root_scalar

from .exterior import SEED_RADIUS, ShootFailed, far_field_series, reduced_mass_rhs, relative_residual, \
    shoot_exterior
from .interior import central_value_for_scale, scale_for_central_value, shoot_interior
from .linear import EXTERIOR_INNER_RADIUS, exterior_pair, fit_origin
from .radial import (ParameterError, RadialGrid, RadialProfile, cumulative_integral,
                     make_decade_grid)
from .steady import fit_steady_tails, mass_transform, mass_transform_inverse, solve_steady

logger = logging.getLogger(__name__)

R0 = 0.05
TOL_MATCH = 1e-12
TOL_REFINE = 2e-12
SAMPLES_PER_PERIOD = 40
SCAN_PERIODS = 2
LAMBDA_MAX = 0.003
C1_GAP_LIMIT = 1e-8
SECANT_MAX_ITERATIONS = 50
EXPLICIT_GRID = (0.01, 30.0)
EXPLICIT_PER_DECADE = 400
EPS_SCALE_GROWTH = 2.0


class MatchingFailed(Exception):
    pass


class ScanRangeError(Exception):
    def __init__(self, message, predicted):
        super().__init__(f'{message}; predictor expects sign changes at lambda = '
                         + ', '.join(f'{lam:.6g}' for lam in predicted))
        self.predicted = predicted


class RefinementFailed(Exception):
    pass


class AssemblyRejected(Exception):
    pass


@dataclass(frozen=True)
class MatchPoint:
    a: float
    lam: float
    epsilon: float
    value_gap: float
    deriv_mismatch: float
    predicted: Optional[float] = None
    interior: Optional[object] = field(default=None, compare=False, repr=False)
    exterior: Optional[object] = field(default=None, compare=False, repr=False)

    def stripped(self):
        return replace(self, interior=None, exterior=None)

    def as_dict(self):
        return {'a': self.a, 'lambda': self.lam, 'epsilon': self.epsilon, 'value_gap': self.value_gap,
                'deriv_mismatch': self.deriv_mismatch, 'predicted': self.predicted}


@dataclass
class MatchScan:
    points: List[MatchPoint]
    brackets: List[tuple]
    predicted_spacing: float
    failures: List[float] = field(default_factory=list)

    def root_estimates(self):
        """ log(lambda) of each sign change by linear interpolation of F """
        out = []
        for plus, minus in self.brackets:
            x0, x1 = math.log(plus.lam), math.log(minus.lam)
            f0, f1 = plus.deriv_mismatch, minus.deriv_mismatch
            out.append(x0 - f0 * (x1 - x0) / (f1 - f0))
        return out

    def spacings(self):
        roots = self.root_estimates()
        return [abs(b - a) for a, b in zip(roots, roots[1:])]

    def predictor_agreement(self):
        """ Fraction of sampled points where predictor and F share a sign """
        signs = [np.sign(p.predicted) == np.sign(p.deriv_mismatch) for p in self.points if p.predicted is not None]
        return float(np.mean(signs)) if signs else math.nan

    def as_dict(self):
        return {'points': [p.as_dict() for p in self.points],
                'brackets': [[plus.lam, minus.lam] for plus, minus in self.brackets],
                'root_log_lambda': self.root_estimates(), 'spacings': self.spacings(),
                'predicted_spacing': self.predicted_spacing,
                'predictor_agreement': self.predictor_agreement(), 'failed_a': self.failures}


@dataclass(frozen=True)
class SelfSimilarProfile:
    n: int
    mu_n: float
    eps_n: float
    r0: float
    dim: object
    phi: RadialProfile
    u: RadialProfile
    report: dict = field(default_factory=dict, compare=False)

    def tail_coefficients(self, order=6):
        """ Far-field series of Phi beyond the profile grid """
        return far_field_series(1.0 + self.eps_n, self.dim, order)

    @property
    def r_max(self):
        return self.u.nodes[-1]


def _solve_point(problem, a):
    """ Process pool worker: one matched point without the profiles """
    try:
        return problem.solve_eps(a).stripped()
    except (MatchingFailed, ShootFailed) as e:
        logger.warning(f'matching failed at a={a:.6g}: {e}')
        return None


def _refine_bracket(problem, bracket):
    return problem.refine_mu(bracket).stripped()


class MatchingProblem(object):
    """
    Matching at one radius r0 for one dimension. Holds the steady pair, the
    value u1(r0) and the constants of the mismatch predictor.
    """

    def __init__(self, dim, r0=R0, seed_radius=SEED_RADIUS, tol_match=TOL_MATCH, tol_ode=None,
                 threads=1, steady=None, tails=None):
        if not 0 < r0 < 1:
            raise ParameterError(f'r0 must be in (0, 1), got {r0}')
        self.dim = dim
        self.r0 = r0
        self.seed_radius = seed_radius
        self.tol_match = tol_match
        self.tol_ode = tol_ode
        self.threads = threads
        self.steady = steady if steady is not None else solve_steady(dim)
        self.tails = tails if tails is not None else fit_steady_tails(self.steady, free_decay=False)
        pair = exterior_pair(dim, r_lo=min(r0, EXTERIOR_INNER_RADIUS), r_hi=seed_radius)
        u1 = pair.first.profile
        self.u1_r0 = u1(r0)
        self.origin_fit = fit_origin(u1, dim, min(r0, EXTERIOR_INNER_RADIUS))
        logger.info(f'matching d={dim.d} at r0={r0:g}: u1(r0)={self.u1_r0:.8g}, '
                    f'c1={self.origin_fit.amplitude:.6g}, c2={self.origin_fit.phase:.6g}')

    def _shoot_kwargs(self):
        return {} if self.tol_ode is None else {'tol': self.tol_ode}

    def exterior(self, epsilon):
        return shoot_exterior(epsilon, self.r0, self.dim, self.seed_radius, **self._shoot_kwargs())

    def interior(self, a):
        return shoot_interior(a, self.r0, self.dim, **self._shoot_kwargs())

    def predictor(self, lam):
        """
        c1 c_tail omega lambda^(p-2) / (u1(r0) r0^(2p+1)) sin(-omega log lambda + phase_tail - c2), p = (d+2)/2
        """
        dim = self.dim
        p, w = dim.decay, dim.omega
        tail = self.tails.qbar_tail
        amplitude = self.origin_fit.amplitude * tail.amplitude * w / (self.u1_r0 * self.r0 ** (2 * p + 1))
        return amplitude * lam ** (p - 2) * math.sin(-w * math.log(lam) + tail.phase - self.origin_fit.phase)

    def predictor_amplitude(self, lam):
        dim = self.dim
        return abs(self.origin_fit.amplitude * self.tails.qbar_tail.amplitude * dim.omega
                   / (self.u1_r0 * self.r0 ** (2 * dim.decay + 1))) * lam ** (dim.decay - 2)

    def predicted_roots(self, lam_hi, lam_lo):
        """ Zeros of the predictor in [lam_lo, lam_hi], decreasing """
        w = self.dim.omega
        shift = self.tails.qbar_tail.phase - self.origin_fit.phase
        k_lo = math.ceil((shift - w * math.log(lam_hi)) / math.pi)
        k_hi = math.floor((shift - w * math.log(lam_lo)) / math.pi)
        return [math.exp((shift - k * math.pi) / w) for k in range(k_lo, k_hi + 1)]

    def solve_eps_for_value(self, target):
        """ epsilon with Phi_ext[epsilon](r0) = target, secant started from the linear estimate """
        phi_star = float(self.dim.phi_star(self.r0))
        eps0 = (target - phi_star) / self.u1_r0

        def gap(eps):
            return self.exterior(eps).boundary[0] - target

        step = 1e-3 * abs(eps0) + 1e-9
        try:
            found = root_scalar(gap, method='secant', x0=eps0, x1=eps0 + step,
                                xtol=1e-15, rtol=1e-13, maxiter=SECANT_MAX_ITERATIONS)
        except (ShootFailed, ArithmeticError) as e:
            raise MatchingFailed(f'secant iteration for target {target:.10g} failed: {e}') from e
        solution = self.exterior(found.root)
        residual = abs(solution.boundary[0] - target)
        if not math.isfinite(found.root) or residual > self.tol_match * phi_star:
            raise MatchingFailed(f'secant iteration did not converge (|F|={residual:.3g}, '
                                 f'{found.iterations} iterations)')
        return found.root, solution

    def solve_eps(self, a):
        """
        :return: MatchPoint for central value a with the matched exterior amplitude
        """
        interior = self.interior(a)
        value, deriv = interior.boundary
        eps, exterior = self.solve_eps_for_value(value)
        ext_value, ext_deriv = exterior.boundary
        lam = interior.lam
        return MatchPoint(a, lam, eps, abs(ext_value - value), ext_deriv - deriv,
                          self.predictor(lam), interior, exterior)

    def value_slope(self, delta=1e-6):
        """ Central difference of Phi_ext[epsilon](r0) in epsilon at 0, expected u1(r0) """
        return (self.exterior(delta).boundary[0] - self.exterior(-delta).boundary[0]) / (2 * delta)

    def default_a_range(self, lambda_max=LAMBDA_MAX, periods=SCAN_PERIODS):
        """ From lambda_max = min(r0/10, lambda_max) over the given number of mismatch periods """
        lam_hi = min(self.r0 / 10, lambda_max)
        lam_lo = lam_hi * math.exp(-periods * 2 * math.pi / self.dim.omega)
        return central_value_for_scale(lam_hi, self.dim), central_value_for_scale(lam_lo, self.dim)

    def _map(self, worker, items):
        if self.threads <= 1 or len(items) < 2:
            return [worker(self, item) for item in items]
        with ProcessPoolExecutor(max_workers=self.threads) as executor:
            return list(executor.map(worker, repeat(self), items))

    def scan_mismatch(self, a_range, n_samples=None, samples_per_period=SAMPLES_PER_PERIOD):
        """
        Sample F on a log-uniform grid of central values and bracket its sign changes

        :param a_range: (a_lo, a_hi); log(a_hi/a_lo) must cover two periods of F in log(lambda)
        :return: MatchScan with brackets ordered by decreasing lambda
        """
        a_lo, a_hi = a_range
        if not 0 < a_lo < a_hi:
            raise ParameterError(f'invalid central value range {a_range}')
        w = self.dim.omega
        period = 2 * math.pi / w
        span = 0.5 * math.log(a_hi / a_lo)
        if span < 2 * period * (1 - 1e-9):
            raise ParameterError(f'range covers {span / period:.2f} periods of the mismatch, 2 needed')
        if n_samples is None:
            n_samples = int(math.ceil(samples_per_period * span / period)) + 1
        a_values = list(np.geomspace(a_lo, a_hi, n_samples))
        logger.info(f'scanning {n_samples} central values in [{a_lo:.4g}, {a_hi:.4g}] with {self.threads} worker(s)')

        results = self._map(_solve_point, a_values)
        points = [p for p in results if p is not None]
        failures = [a for a, p in zip(a_values, results) if p is None]
        brackets = [(p, q) for p, q in zip(points, points[1:]) if p.deriv_mismatch * q.deriv_mismatch < 0]
        scan = MatchScan(points, brackets, self.dim.root_spacing, failures)
        if not brackets:
            lam_hi, lam_lo = scale_for_central_value(a_lo, self.dim), scale_for_central_value(a_hi, self.dim)
            raise ScanRangeError('no sign change of the derivative mismatch found',
                                 self.predicted_roots(lam_hi, lam_lo))
        logger.info(f'found {len(brackets)} sign changes, spacings {[round(s, 4) for s in scan.spacings()]} '
                    f'(predicted {self.dim.root_spacing:.4f})')
        return scan

    def refine_mu(self, bracket, tol=TOL_REFINE):
        """
        Brent's method on log(a) inside a sign-change bracket

        :return: fully matched MatchPoint at the root, lam = mu_n
        """
        plus, minus = bracket
        x_lo, x_hi = sorted((math.log(plus.a), math.log(minus.a)))

        def mismatch(x):
            return self.solve_eps(math.exp(x)).deriv_mismatch

        f_lo, f_hi = mismatch(x_lo), mismatch(x_hi)
        if f_lo * f_hi > 0:
            raise RefinementFailed(f'bracket [{math.exp(x_lo):.6g}, {math.exp(x_hi):.6g}] lost its sign change')
        try:
            root = brentq(mismatch, x_lo, x_hi, xtol=tol, rtol=4 * np.finfo(float).eps)
        except ValueError as e:
            raise RefinementFailed(str(e)) from e
        point = self.solve_eps(math.exp(root))
        logger.info(f'refined root at a={point.a:.10g}: mu={point.lam:.10g}, eps={point.epsilon:.6g}, '
                    f'|F|={abs(point.deriv_mismatch):.3g}')
        return point

    def find_profiles(self, n_profiles, a_range=None, samples_per_period=SAMPLES_PER_PERIOD):
        """
        Scan, then refine the first n_profiles brackets where F agrees in sign with its predictor

        :return: (MatchScan, list of refined MatchPoints, n = 1, 2, ...)
        """
        if a_range is None:
            a_range = self.default_a_range(periods=max(SCAN_PERIODS, math.ceil(n_profiles / 2) + 1))
        scan = self.scan_mismatch(a_range, samples_per_period=samples_per_period)
        validated = []
        for plus, minus in scan.brackets:
            if all(p.predicted is not None and np.sign(p.predicted) == np.sign(p.deriv_mismatch)
                   for p in (plus, minus)):
                validated.append((plus, minus))
            else:
                logger.warning(f'bracket at lambda~{plus.lam:.4g} disagrees with the predictor, skipped')
        if len(validated) < n_profiles:
            logger.warning(f'only {len(validated)} validated brackets for {n_profiles} requested profiles')
        roots = self._map(_refine_bracket, validated[:n_profiles])
        return scan, roots

    def assemble_profile(self, n, point):
        """
        Stitch interior and exterior Phi at r0, build U = 2d Phi + 2r Phi' and verify

        :param point: MatchPoint with profiles (refine_mu output or solve_eps)
        :return: SelfSimilarProfile
        """
        if point.interior is None or point.exterior is None:
            point = self.solve_eps(point.a)
        dim, r0 = self.dim, self.r0
        inner, outer = point.interior.profile, point.exterior.profile
        nodes = np.concatenate([inner.nodes[:-1], outer.nodes])
        values = np.concatenate([inner.values[:-1], outer.values])
        derivs = np.concatenate([inner.derivs[:-1], outer.derivs])
        rhs = reduced_mass_rhs(dim)
        curvature = np.array([rhs(r, (v, dv))[1] for r, v, dv in zip(nodes, values, derivs)])
        phi = RadialProfile(RadialGrid(nodes, grading='log-log'), values, derivs, curvature)

        phi_star, dphi_star = float(dim.phi_star(r0)), 2.0 / r0 ** 3
        value_gap = abs(inner.values[-1] - outer.values[0]) / phi_star
        deriv_gap = abs(inner.derivs[-1] - outer.derivs[0]) / dphi_star
        if max(value_gap, deriv_gap) > C1_GAP_LIMIT:
            raise AssemblyRejected(f'C1 gap at r0: value {value_gap:.3g}, derivative {deriv_gap:.3g}')

        u = mass_transform_inverse(phi, dim)
        report = profile_report(u, phi, dim, r0, point.lam, self.steady)
        report.update({'n': n, 'mu_n': point.lam, 'eps_n': point.epsilon, 'a': point.a,
                       'value_gap': value_gap, 'deriv_gap': deriv_gap,
                       'deriv_mismatch': point.deriv_mismatch,
                       'eps_over_sqrt_mu': point.epsilon / math.sqrt(point.lam)})
        logger.info(f'assembled U_{n}: mu={point.lam:.6g}, nonlocal residual {report["nonlocal_residual"]:.3g}')
        return SelfSimilarProfile(n, point.lam, point.epsilon, r0, dim, phi, u, report)


def nonlocal_terms(u, dim):
    """ Terms of U'' + (d-1)/r U' - r U'/2 - U + U^2 + m U'/r^(d-1), m = int_0^r U s^(d-1) """
    d = dim.d
    r = u.nodes
    f, df = u.values, u.derivs
    mass = cumulative_integral(u, d - 1).values
    return np.array([u.second_derivative(), (d - 1) / r * df, -0.5 * r * df, -f, f * f, mass * df / r ** (d - 1)])


def scaled_terms_residual(terms):
    """ max over nodes of |sum of terms| / sum of |terms| (0 where every term vanishes) """
    total = np.sum(np.abs(terms), axis=0)
    res = np.abs(np.sum(terms, axis=0))
    ratio = np.divide(res, total, out=np.zeros_like(res), where=total > 0)
    return float(np.max(ratio))


def nonlocal_residual(u, dim):
    return scaled_terms_residual(nonlocal_terms(u, dim))


def profile_report(u, phi, dim, r0, mu, steady):
    """ Residuals and asymptotic distances of an assembled profile """
    r = u.nodes
    inside = r <= r0 * (1 + 1e-12)
    outside = r >= r0 * (1 - 1e-12)
    z = r[inside] / mu
    z_ok = (z >= steady.q.nodes[0]) & (z <= steady.q.nodes[-1])
    near = np.abs(u.values[inside][z_ok] - steady.q(z[z_ok]) / mu ** 2)
    far = (1 + r[outside] ** 2) * np.abs(u.values[outside] - dim.u_star(r[outside]))
    back = mass_transform(u, dim)
    return {
        'nonlocal_residual': nonlocal_residual(u, dim),
        'phi_residual': float(np.max(relative_residual(phi, dim))),
        'transform_gap': float(np.max(np.abs(back.values - phi.values) / np.abs(phi.values))),
        'sup_inner_steady_distance': float(np.max(near)) if near.size else math.nan,
        'inner_steady_window': [float(z[z_ok][0] * mu), float(z[z_ok][-1] * mu)] if near.size else None,
        'sup_outer_weighted_distance': float(np.max(far)),
        'r_min': float(r[0]), 'r_max': float(r[-1]),
    }


def _strictly_decreasing(values):
    return all(b < a for a, b in zip(values, values[1:]))


def sequence_checks(reports):
    """
    Checks across the assembled sequence U_1, U_2, ...

    The inner and outer distances and |eps_n| must strictly decrease in n,
    eps_n mu_n^(-1/2) must not grow beyond EPS_SCALE_GROWTH times its first value,
    and eps_n alternates in sign since consecutive roots sit half a period apart.

    :param reports: profile reports ordered by n
    :return: dict name -> (value, passed)
    """
    inner = [r['sup_inner_steady_distance'] for r in reports]
    outer = [r['sup_outer_weighted_distance'] for r in reports]
    eps = [r['eps_n'] for r in reports]
    scaled = [abs(r['eps_over_sqrt_mu']) for r in reports]
    if not scaled:
        growth = 1.0
    else:
        growth = max(scaled) / scaled[0] if scaled[0] > 0 else math.inf
    return {
        'inner_distance_decreasing': (inner, _strictly_decreasing(inner)),
        'outer_distance_decreasing': (outer, _strictly_decreasing(outer)),
        'eps_decreasing': ([abs(e) for e in eps], _strictly_decreasing([abs(e) for e in eps])),
        'eps_scale_growth': (growth, growth <= EPS_SCALE_GROWTH),
        'eps_sign_alternates': (eps, all(a * b < 0 for a, b in zip(eps, eps[1:]))),
    }


def explicit_phi(index, dim, grid):
    """ Phi_0 = 0, Phi_1 = 1/(2d), Phi_2 = 1/r^2, Phi_3 = 2/(2(d-2) + r^2) with exact derivatives """
    d = dim.d
    c = 2.0 * (d - 2)
    forms = {
        0: (lambda r: 0 * r, lambda r: 0 * r, lambda r: 0 * r),
        1: (lambda r: 0 * r + 1 / (2 * d), lambda r: 0 * r, lambda r: 0 * r),
        2: (lambda r: r ** -2, lambda r: -2 * r ** -3, lambda r: 6 * r ** -4),
        3: (lambda r: 2 / (c + r * r), lambda r: -4 * r / (c + r * r) ** 2,
            lambda r: -4 / (c + r * r) ** 2 + 16 * r * r / (c + r * r) ** 3),
    }
    if index not in forms:
        raise ParameterError(f'no explicit solution with index {index}')
    return RadialProfile.from_function(grid, *forms[index])


def explicit_u(index, dim, grid):
    """ U_0 = 0, U_1 = 1, U_2 = 2(d-2)/r^2, U_3 = 4(d-2)(2d+r^2)/(2(d-2)+r^2)^2 """
    d = dim.d
    c = 2.0 * (d - 2)

    def u3(r):
        return 2 * c * (2 * d + r * r) / (c + r * r) ** 2

    def du3(r):
        return 4 * c * r * (c - 4 * d - r * r) / (c + r * r) ** 3

    def d2u3(r):
        s = c + r * r
        return 4 * c * ((c - 4 * d - 3 * r * r) * s - 6 * r * r * (c - 4 * d - r * r)) / s ** 4

    forms = {
        0: (lambda r: 0 * r, lambda r: 0 * r, lambda r: 0 * r),
        1: (lambda r: 0 * r + 1.0, lambda r: 0 * r, lambda r: 0 * r),
        2: (lambda r: c / r ** 2, lambda r: -2 * c / r ** 3, lambda r: 6 * c / r ** 4),
        3: (u3, du3, d2u3),
    }
    if index not in forms:
        raise ParameterError(f'no explicit solution with index {index}')
    return RadialProfile.from_function(grid, *forms[index])


def explicit_grid(r_lo=EXPLICIT_GRID[0], r_hi=EXPLICIT_GRID[1], per_decade=EXPLICIT_PER_DECADE):
    return make_decade_grid(r_lo, r_hi, per_decade, per_decade)


def verify_explicit(dim, grid=None):
    """
    Scaled residuals of the nonlocal equation on U_0..U_3 and of the reduced-mass
    equation on Phi_0..Phi_3

    :return: dict with one entry per solution and the overall maximum
    """
    grid = grid if grid is not None else explicit_grid()
    report = {}
    for index in range(4):
        report[f'U{index}'] = nonlocal_residual(explicit_u(index, dim, grid), dim)
        phi = explicit_phi(index, dim, grid)
        # Phi_0 has all terms zero
        report[f'Phi{index}'] = 0.0 if index == 0 else float(np.max(relative_residual(phi, dim)))
    report['max_residual'] = max(report.values())
    report['dim'] = dim.d
    logger.info(f'explicit solutions d={dim.d}: max scaled residual {report["max_residual"]:.3g}')
    return report


def explicit_profile(dim, r_min=1e-4, r_max=SEED_RADIUS):
    """ U_3 wrapped as the n = 0 profile; its tail is 4(d-2)/r^2, so epsilon = 1 """
    grid = make_decade_grid(r_min, r_max, EXPLICIT_PER_DECADE, EXPLICIT_PER_DECADE)
    phi = explicit_phi(3, dim, grid)
    u = explicit_u(3, dim, grid)
    return SelfSimilarProfile(0, math.nan, 1.0, math.nan, dim, phi, u, {'explicit': True})


def stability_check(dim, r0_values=(0.03, 0.05, 0.08), n_profiles=2, threads=1, steady=None,
                    lambda_max=LAMBDA_MAX, samples_per_period=SAMPLES_PER_PERIOD):
    """
    Re-run the matching at several r0 on the lambda range usable by the smallest r0
    and report the relative spread of each mu_n

    :return: dict with per-r0 mu values and the relative spread per n
    """
    steady = steady if steady is not None else solve_steady(dim)
    tails = fit_steady_tails(steady, free_decay=False)
    lam_hi = min(min(r0_values) / 10, lambda_max)
    lam_lo = lam_hi * math.exp(-max(SCAN_PERIODS, math.ceil(n_profiles / 2) + 1) * 2 * math.pi / dim.omega)
    a_range = (central_value_for_scale(lam_hi, dim), central_value_for_scale(lam_lo, dim))
    mus = {}
    for r0 in r0_values:
        problem = MatchingProblem(dim, r0, threads=threads, steady=steady, tails=tails)
        _, roots = problem.find_profiles(n_profiles, a_range, samples_per_period)
        mus[r0] = [p.lam for p in roots]
    groups = pair_roots(mus, 0.5 * dim.root_spacing)
    spread = []
    for group in groups:
        if group is None:
            continue
        values = np.array(group)
        spread.append(float((values.max() - values.min()) / values.mean()))
    unpaired = sum(1 for group in groups if group is None)
    if unpaired:
        logger.warning(f'r0 stability d={dim.d}: {unpaired} root(s) without a partner at every r0')
    logger.info(f'r0 stability d={dim.d}: relative spread of mu_n {spread}')
    return {'r0_values': list(r0_values), 'mu': {str(k): v for k, v in mus.items()},
            'paired': groups, 'relative_spread': spread}


def pair_roots(mus, window):
    """
    Group the roots found at different r0 by nearest log(mu)

    The longest root list is the reference. A reference root gets a group when
    every list has a root within window of it in log(mu), otherwise None.

    :param mus: dict r0 -> list of mu values
    :param window: largest accepted distance in log(mu)
    :return: list of groups (mu per r0, in the order of mus) or None, one per reference root
    """
    keys = list(mus)
    if not keys:
        return []
    reference = max(keys, key=lambda k: len(mus[k]))
    groups = []
    for mu in mus[reference]:
        group = []
        for key in keys:
            candidates = mus[key]
            if not candidates:
                group = None
                break
            nearest = min(candidates, key=lambda m: abs(math.log(m / mu)))
            if abs(math.log(nearest / mu)) > window:
                group = None
                break
            group.append(nearest)
        groups.append(group)
    return groups
