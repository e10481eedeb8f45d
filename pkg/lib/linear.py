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
Linearized operators around the singular steady state and the steady profile.

    L    u = -u'' - (d+3)/r u' + u + r u'/2 - 4(d-1) u/r^2
    Hinf u = -u'' - (d+3)/r u' - 4(d-1) u/r^2
    H    u = -u'' - ((d+1)/r + 2r Qb) u' - (4d Qb + 2r Qb') u

Each operator comes with a pair of fundamental solutions, a weighted
Wronskian that is constant in r, and an integral resolvent built from them.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .radial import (DomainError, IvpSpec, ParameterError, RadialGrid, RadialProfile,
                     integrate_ivp, make_decade_grid, power_law_head, segment_integrals)
from .steady import OscillationFit, fit_oscillation, residual_profile

logger = logging.getLogger(__name__)

U1_SEED_RADIUS = 30.0
EXTERIOR_INNER_RADIUS = 1e-3
RHO_SEED_RADIUS = 1e-5
RHO_NORMALIZATION_RADIUS = 0.1
INTERIOR_OUTER_RADIUS = 10.0
ORIGIN_FIT_RADIUS = 0.1
SERIES_TERMS = 4
BASIS_TOL = 1e-12
INNER_PER_DECADE = 200
OUTER_PER_DECADE = 400
X_FAR_EXPONENTS = (4.0, 5.0)


class DivergentTail(Exception):
    pass


@dataclass(frozen=True)
class OperatorKind:
    tag: str
    dim: object
    steady: Optional[object] = None

    def __post_init__(self):
        if self.tag not in ('L', 'Hinf', 'H'):
            raise ParameterError(f'unknown operator {self.tag}')
        if self.tag == 'H' and self.steady is None:
            raise ParameterError('operator H needs a steady pair')


@dataclass(frozen=True)
class FundamentalSolution:
    """ For kind u2_factored the profile stores v with u2 = exp(r^2/4) v """
    kind: str
    profile: RadialProfile
    origin_fit: Optional[OscillationFit] = None


@dataclass(frozen=True)
class FundamentalPair:
    """
    Two solutions of one operator on a common grid and the constant of
    their weighted Wronskian. `drift` is the profile of integral_0^r 2s Qb ds
    for the H pair.
    """
    operator: str
    dim: object
    first: FundamentalSolution
    second: FundamentalSolution
    constant: float
    drift: Optional[RadialProfile] = None

    @property
    def nodes(self):
        return self.first.profile.nodes


@dataclass(frozen=True)
class NormSpec:
    tag: str
    radius: float
    d: int = 3

    def __post_init__(self):
        if self.tag not in ('X', 'Y'):
            raise ParameterError(f'unknown norm {self.tag}')
        if self.radius <= 0:
            raise ParameterError('norm radius must be positive')


def indicial_polynomial(dim, m):
    d = dim.d
    return -m * m + (d + 2) * m - 4 * (d - 1)


def u1_series(dim, terms=SERIES_TERMS):
    """ Coefficients a_k of u1 = sum a_k r^(-2-2k), a_0 = 1 """
    coefficients = [1.0]
    for k in range(terms - 1):
        m = 2 + 2 * k
        coefficients.append(2 * indicial_polynomial(dim, m) * coefficients[-1] / m)
    return coefficients


def v2_series(dim, terms=SERIES_TERMS):
    """ Coefficients b_k of v2 = sum b_k r^(-(d+2)-2k), b_0 = 1 """
    coefficients = [1.0]
    for k in range(terms - 1):
        n = dim.d + 2 + 2 * k
        coefficients.append(-indicial_polynomial(dim, n) * coefficients[-1] / (k + 1))
    return coefficients


def evaluate_series(coefficients, first_power, r):
    r = np.asarray(r, dtype=float)
    value = np.zeros_like(r)
    deriv = np.zeros_like(r)
    for k, c in enumerate(coefficients):
        m = first_power + 2 * k
        value = value + c * r ** -m
        deriv = deriv - m * c * r ** (-m - 1)
    return value, deriv


def l_rhs(dim):
    d = dim.d

    def rhs(r, y):
        u, du = y
        return np.array([du, -(d + 3) / r * du + u + 0.5 * r * du - 4 * (d - 1) * u / (r * r)])

    return rhs


def v_rhs(dim):
    d = dim.d

    def rhs(r, y):
        v, dv = y
        return np.array([dv, -(0.5 * r + (d + 3) / r) * dv - 0.5 * (d + 2) * v - 4 * (d - 1) * v / (r * r)])

    return rhs


def closed_form_phi(dim, grid, which):
    """ phi1 = sin(omega log r)/r^p, phi2 = cos(omega log r)/r^p with exact derivatives """
    w, p = dim.omega, dim.decay

    def parts(r):
        log_r = np.log(r)
        s, c = np.sin(w * log_r), np.cos(w * log_r)
        if which == 1:
            return s, w * c - p * s, -w * w * s - p * w * c
        return c, -w * s - p * c, -w * w * c + p * w * s

    def f(r):
        return parts(r)[0] * r ** -p

    def df(r):
        return parts(r)[1] * r ** (-p - 1)

    def d2f(r):
        _, h, dh = parts(r)
        return r ** (-p - 2) * ((-p - 1) * h + dh)

    return RadialProfile.from_function(grid, f, df, d2f)


def fit_origin(profile_like, dim, r_lo, r_hi=ORIGIN_FIT_RADIUS):
    """ Near-origin oscillation constants of r^((d+2)/2) u """
    return fit_oscillation(profile_like, None, dim.decay, (r_lo, r_hi), dim.omega)


def exterior_pair(dim, r_lo=EXTERIOR_INNER_RADIUS, r_hi=U1_SEED_RADIUS, tol=BASIS_TOL, with_fits=False):
    """
    Fundamental solutions of L: u1 by backward integration from the series seed
    at r_hi, and v2 = exp(-r^2/4) u2 by forward integration from r_lo

    :return: FundamentalPair tagged 'L'
    """
    if r_hi < 30:
        raise ParameterError(f'u1 seed radius must be at least 30, got {r_hi}')
    grid = make_decade_grid(r_lo, r_hi, INNER_PER_DECADE, OUTER_PER_DECADE)

    value, deriv = evaluate_series(u1_series(dim), 2, r_hi)
    u1_traj = integrate_ivp(IvpSpec(l_rhs(dim), r_hi, (float(value), float(deriv)), r_lo,
                                    rtol=tol, atol=tol * 1e-20))
    u1 = u1_traj.profile(grid)

    d = dim.d
    seed = (r_lo ** -(d + 2), -(d + 2) * r_lo ** -(d + 3))
    v_traj = integrate_ivp(IvpSpec(v_rhs(dim), r_lo, seed, r_hi, rtol=tol, atol=1e-300))
    raw = v_traj.profile(grid)
    target, _ = evaluate_series(v2_series(dim), d + 2, r_hi)
    scale = float(target) / raw.values[-1]
    v2 = RadialProfile(grid, scale * raw.values, scale * raw.derivs)

    r = grid.nodes
    weighted = r ** (d + 3) * (u1.derivs * v2.values - (v2.derivs + 0.5 * r * v2.values) * u1.values)
    constant = float(np.median(weighted))

    u1_fit = v2_fit = None
    if with_fits:
        u1_fit = fit_origin(u1, dim, r_lo)
        v2_fit = fit_origin(lambda s: np.exp(s * s / 4) * v2(s), dim, r_lo)
    logger.info(f'L basis d={dim.d} on [{r_lo:g}, {r_hi:g}], Wronskian constant {constant:.8g}')
    return FundamentalPair('L', dim, FundamentalSolution('u1', u1, u1_fit),
                           FundamentalSolution('u2_factored', v2, v2_fit), constant)


def far_steady_pair(dim, r_lo, r_hi, per_decade=OUTER_PER_DECADE):
    """ Closed-form phi1, phi2 of Hinf; weighted Wronskian r^(d+3) W = omega """
    grid = make_decade_grid(r_lo, r_hi, per_decade, per_decade)
    return FundamentalPair('Hinf', dim, FundamentalSolution('phi1', closed_form_phi(dim, grid, 1)),
                           FundamentalSolution('phi2', closed_form_phi(dim, grid, 2)), dim.omega)


def interior_pair(steady, r_lo=RHO_SEED_RADIUS, r_hi=INTERIOR_OUTER_RADIUS, tol=BASIS_TOL):
    """
    Fundamental solutions of H: Lambda Qb = 2Qb + r Qb' and the solution rho,
    singular like r^-d at the origin, integrated together with Qb from a series
    start. rho is scaled so that r^(d+1) exp(int 2s Qb) W(Lambda Qb, rho) = 1.
    """
    dim = steady.dim
    d = dim.d
    a = 1.0 / (2 * d)
    b = -d * a * a / (d + 2)

    def rhs(r, y):
        q, dq, rho, drho, _ = y
        d2q = -(d + 1) / r * dq - 2 * d * q * q - 2 * r * q * dq
        d2rho = -((d + 1) / r + 2 * r * q) * drho - (4 * d * q + 2 * r * dq) * rho
        return np.array([dq, d2q, drho, d2rho, 2 * r * q])

    r0 = r_lo
    seed = (a + b * r0 ** 2, 2 * b * r0,
            r0 ** -d * (1 + r0 ** 2 / (2 * (d - 2))), -d * r0 ** (-d - 1) - 0.5 * r0 ** (1 - d),
            a * r0 ** 2)
    trajectory = integrate_ivp(IvpSpec(rhs, r0, seed, r_hi, rtol=tol, atol=1e-300))

    grid = make_decade_grid(r_lo, r_hi, INNER_PER_DECADE, OUTER_PER_DECADE)
    r = grid.nodes
    states = trajectory(r)
    slopes = np.array([rhs(ri, si) for ri, si in zip(r, states)])
    q, dq, d2q = states[:, 0], states[:, 1], slopes[:, 1]
    lam = RadialProfile(grid, 2 * q + r * dq, 3 * dq + r * d2q)
    drift = RadialProfile(grid, states[:, 4], 2 * r * q)

    def weighted(rho_values, rho_derivs):
        return r ** (d + 1) * np.exp(drift.values) * (lam.derivs * rho_values - lam.values * rho_derivs)

    raw = weighted(states[:, 2], states[:, 3])
    constant = float(np.interp(RHO_NORMALIZATION_RADIUS, r, raw))
    rho = RadialProfile(grid, states[:, 2] / constant, states[:, 3] / constant)
    logger.info(f'H basis d={d} on [{r_lo:g}, {r_hi:g}], rho rescaled by {1 / constant:.8g}')
    return FundamentalPair('H', dim, FundamentalSolution('LambdaQbar', lam),
                           FundamentalSolution('rho', rho), 1.0, drift)


def lambda_qbar_profile(steady):
    """ Lambda Qb on the steady grid, derivative from the steady equation """
    d = steady.dim.d
    r = steady.qbar.nodes
    q, dq = steady.qbar.values, steady.qbar.derivs
    d2q = -(d + 1) / r * dq - 2 * d * q * q - 2 * r * q * dq
    return RadialProfile(steady.qbar.grid, 2 * q + r * dq, 3 * dq + r * d2q)


def fundamental(kind, dim, steady=None, r_lo=None, r_hi=None):
    """
    One fundamental solution by kind: u1, u2_factored, phi1, phi2, LambdaQbar, rho
    """
    if kind in ('u1', 'u2_factored'):
        pair = exterior_pair(dim, r_lo or EXTERIOR_INNER_RADIUS, r_hi or U1_SEED_RADIUS, with_fits=True)
        return pair.first if kind == 'u1' else pair.second
    if kind in ('phi1', 'phi2'):
        pair = far_steady_pair(dim, r_lo or 1e-3, r_hi or 1e3)
        return pair.first if kind == 'phi1' else pair.second
    if kind in ('LambdaQbar', 'rho'):
        if steady is None:
            raise ParameterError(f'{kind} needs a steady pair')
        pair = interior_pair(steady, r_lo or RHO_SEED_RADIUS, r_hi or INTERIOR_OUTER_RADIUS)
        return pair.first if kind == 'LambdaQbar' else pair.second
    raise ParameterError(f'unknown fundamental solution {kind}')


def weighted_wronskian(pair, r):
    """ The weighted Wronskian of a pair at radii r (constant for exact solutions) """
    d = pair.dim.d
    first, second = pair.first.profile, pair.second.profile
    f, df = first(r), first.derivative(r)
    g, dg = second(r), second.derivative(r)
    if pair.operator == 'L':
        return r ** (d + 3) * (df * g - (dg + 0.5 * r * g) * f)
    if pair.operator == 'Hinf':
        return r ** (d + 3) * (df * g - dg * f)
    return r ** (d + 1) * np.exp(pair.drift(r)) * (df * g - f * dg)


def wronskian_check(pair, window):
    """
    :return: (mean weighted Wronskian, max relative deviation from the mean) over grid nodes in window
    """
    r = pair.nodes
    r = r[(r >= window[0]) & (r <= window[1])]
    if len(r) < 2:
        raise DomainError(f'window {window} holds fewer than 2 grid nodes')
    values = weighted_wronskian(pair, r)
    mean = float(np.mean(values))
    return mean, float(np.max(np.abs(values - mean)) / abs(mean))


def apply_operator(kind, u):
    """
    Pointwise residual of L, Hinf or H applied to u on its grid nodes

    :param kind: OperatorKind
    :param u: RadialProfile (curvature used when present)
    :return: RadialProfile of the residual
    """
    d = kind.dim.d
    r = u.nodes
    f, df, d2f = u.values, u.derivs, u.second_derivative()
    if kind.tag == 'L':
        res = -d2f - (d + 3) / r * df + f + 0.5 * r * df - 4 * (d - 1) * f / r ** 2
    elif kind.tag == 'Hinf':
        res = -d2f - (d + 3) / r * df - 4 * (d - 1) * f / r ** 2
    else:
        qbar = kind.steady.qbar
        q, dq = qbar(r), qbar.derivative(r)
        res = -d2f - ((d + 1) / r + 2 * r * q) * df - (4 * d * q + 2 * r * dq) * f
    return residual_profile(u.grid, res)


def _power_tail(r1, r2, g1, g2):
    """ integral_r2^inf of g fitted as a power law through (r1, g1), (r2, g2) """
    if g2 == 0.0:
        return 0.0
    if g1 * g2 <= 0:
        raise DivergentTail('tail integrand changes sign at the truncation radius')
    k = math.log(g2 / g1) / math.log(r2 / r1)
    if k >= -1:
        raise DivergentTail(f'tail integrand decays like r^{k:.3f}, too slowly to integrate')
    return -g2 * r2 / (k + 1)


def _oscillating_tail(r_end, amplitude, q, omega, theta):
    """ integral_R^inf amplitude s^q sin(omega log s + theta) ds, for q < -1 """
    if q >= -1:
        raise DivergentTail(f'tail integrand decays like r^{q:.3f}, too slowly to integrate')
    t = math.log(r_end)
    angle = omega * t + theta
    return -amplitude * math.exp((q + 1) * t) * ((q + 1) * math.sin(angle) - omega * math.cos(angle)) \
        / ((q + 1) ** 2 + omega ** 2)


def _reverse_cumulative(segments, tail):
    return tail + np.concatenate([np.cumsum(segments[::-1])[::-1], [0.0]])


def _check_covered(pair, f):
    basis = pair.nodes
    if f.nodes[0] < basis[0] * (1 - 1e-12) or f.nodes[-1] > basis[-1] * (1 + 1e-12):
        raise DomainError(f'resolvent input on [{f.nodes[0]:.4g}, {f.nodes[-1]:.4g}] '
                          f'outside basis [{basis[0]:.4g}, {basis[-1]:.4g}]')


def tau(pair, f):
    """
    u1 int_r^inf f u2 / W - u2 int_r^inf f u1 / W, with u2 = exp(r^2/4) v2 handled in
    factored form: the second term is v2(r) int_r^inf f u1 s^(d+3) exp((r^2 - s^2)/4) / C ds
    """
    _check_covered(pair, f)
    d = pair.dim.d
    u1, v2, c = pair.first.profile, pair.second.profile, pair.constant
    nodes = f.nodes
    left = nodes[:-1, None]

    def g_a(s):
        return f.spline(s) * v2(s) * s ** (d + 3) / c

    def g_b(s):
        return f.spline(s) * u1(s) * s ** (d + 3) / c

    tail_a = _power_tail(nodes[-2], nodes[-1], float(g_a(nodes[-2])), float(g_a(nodes[-1])))
    a = _reverse_cumulative(segment_integrals(nodes, g_a), tail_a)

    segments_b = segment_integrals(nodes, lambda s: g_b(s) * np.exp((left ** 2 - s ** 2) / 4))
    b = np.empty_like(nodes)
    b[-1] = float(g_b(nodes[-1])) * 2 / nodes[-1]
    for i in range(len(nodes) - 2, -1, -1):
        b[i] = math.exp((nodes[i] ** 2 - nodes[i + 1] ** 2) / 4) * b[i + 1] + segments_b[i]

    r = nodes
    values = a * u1(r) - b * v2(r)
    derivs = a * u1.derivative(r) - b * (v2.derivative(r) + 0.5 * r * v2(r))
    return RadialProfile(f.grid, values, derivs)


def psi(pair, f):
    """ phi1 int_r^inf f phi2 s^(d+3)/omega - phi2 int_r^inf f phi1 s^(d+3)/omega """
    dim = pair.dim
    d, w, p = dim.d, dim.omega, dim.decay
    nodes = f.nodes

    def g(s, which):
        angle = w * np.log(s)
        basis = np.cos(angle) if which == 2 else np.sin(angle)
        return f.spline(s) * basis * s ** (d + 3 - p) / w

    f1, f2 = f.values[-2], f.values[-1]
    r1, r2 = nodes[-2], nodes[-1]
    if f2 == 0.0:
        tail_a = tail_b = 0.0
    else:
        if f1 * f2 <= 0:
            raise DivergentTail('resolvent input changes sign at the truncation radius')
        k = math.log(f2 / f1) / math.log(r2 / r1)
        amplitude = f2 * r2 ** -k / w
        q = k + d + 3 - p
        tail_a = _oscillating_tail(r2, amplitude, q, w, math.pi / 2)
        tail_b = _oscillating_tail(r2, amplitude, q, w, 0.0)

    a = _reverse_cumulative(segment_integrals(nodes, lambda s: g(s, 2)), tail_a)
    b = _reverse_cumulative(segment_integrals(nodes, lambda s: g(s, 1)), tail_b)
    grid = f.grid
    phi1, phi2 = closed_form_phi(dim, grid, 1), closed_form_phi(dim, grid, 2)
    values = a * phi1.values - b * phi2.values
    derivs = a * phi1.derivs - b * phi2.derivs
    return RadialProfile(grid, values, derivs)


def resolvent_s(pair, f):
    """ rho int_0^r f LambdaQb E s^(d+1) - LambdaQb int_0^r f rho E s^(d+1), E = exp(int 2s Qb) """
    _check_covered(pair, f)
    d = pair.dim.d
    lam, rho, drift = pair.first.profile, pair.second.profile, pair.drift
    nodes = f.nodes

    def weight(s):
        return f.spline(s) * np.exp(drift(s)) * s ** (d + 1) / pair.constant

    def g_a(s):
        return weight(s) * lam(s)

    def g_b(s):
        return weight(s) * rho(s)

    heads = []
    for g in (g_a, g_b):
        heads.append(power_law_head(nodes[0], nodes[1], float(g(nodes[0])), float(g(nodes[1])), 0))
    a = heads[0] + np.concatenate([[0.0], np.cumsum(segment_integrals(nodes, g_a))])
    b = heads[1] + np.concatenate([[0.0], np.cumsum(segment_integrals(nodes, g_b))])

    r = nodes
    values = rho(r) * a - lam(r) * b
    derivs = rho.derivative(r) * a - lam.derivative(r) * b
    return RadialProfile(f.grid, values, derivs)


def resolvent(kind, pair, f):
    """
    :param kind: 'tau', 'psi' or 'S'
    :param pair: FundamentalPair of the matching operator (L, Hinf, H)
    :param f: RadialProfile of the right-hand side
    """
    expected = {'tau': 'L', 'psi': 'Hinf', 'S': 'H'}
    if kind not in expected:
        raise ParameterError(f'unknown resolvent {kind}')
    if pair.operator != expected[kind]:
        raise ParameterError(f'resolvent {kind} needs the {expected[kind]} basis, got {pair.operator}')
    if kind == 'tau':
        return tau(pair, f)
    if kind == 'psi':
        return psi(pair, f)
    return resolvent_s(pair, f)


def weighted_norm(spec, w):
    """
    X: sup_{r0<=r<=1} (r^((d+2)/2)|w| + r^((d+4)/2)|w'|) + sup_{r>=1} (r^4|w| + r^5|w'|), spec.radius = r0
    Y: sup_{r<=r1} (1+r)^(-1/2) (|w| + |r w'|), spec.radius = r1

    Both are taken over the nodes of w.
    """
    d = spec.d
    r, f, df = w.nodes, np.abs(w.values), np.abs(w.derivs)
    if spec.tag == 'X':
        r0 = spec.radius
        if r[0] > r0 * (1 + 1e-9) or r[-1] < 1.0:
            raise DomainError(f'X norm needs nodes covering [{r0:g}, 1]')
        inner = (r >= r0 * (1 - 1e-9)) & (r <= 1.0)
        outer = r >= 1.0
        p_in = (d + 2) / 2
        near = np.max(r[inner] ** p_in * f[inner] + r[inner] ** (p_in + 1) * df[inner])
        e0, e1 = X_FAR_EXPONENTS
        far = np.max(r[outer] ** e0 * f[outer] + r[outer] ** e1 * df[outer])
        return float(near + far)
    r1 = spec.radius
    if r[-1] < r1 * (1 - 1e-9):
        raise DomainError(f'Y norm needs nodes up to {r1:g}')
    inside = r <= r1 * (1 + 1e-9)
    return float(np.max((1 + r[inside]) ** -0.5 * (f[inside] + r[inside] * df[inside])))
