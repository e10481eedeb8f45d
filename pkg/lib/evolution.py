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
Self-similar blow-up solutions u(x, t) = U(|x|/sqrt(T-t))/(T-t) of the radial
parabolic-elliptic Keller-Segel system, their L^p distance to the limit
profile u*, and a finite-volume method-of-lines simulation of the system.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List

import numpy as np
from scipy.special import gamma

from .radial import DomainError, ParameterError, segment_integrals

logger = logging.getLogger(__name__)

TAIL_ORDER = 6
LP_RADIUS = 10.0
LP_TAIL_NODES = 400
CFL_DIFFUSION = 0.4
CFL_ADVECTION = 0.4
CFL_REACTION = 0.2
DT_MIN = 1e-12
STEP_SLACK = 1e-6
CLIP_TOLERANCE = 1e-14


def surface_area(d):
    """ Area of the unit sphere in R^d """
    return 2 * math.pi ** (d / 2) / gamma(d / 2)


@dataclass(frozen=True)
class BlowupSolution:
    profile: object
    T: float

    def __post_init__(self):
        if not self.T > 0:
            raise ParameterError(f'blow-up time must be positive, got {self.T}')

    @property
    def dim(self):
        return self.profile.dim

    @property
    def tail_amplitude(self):
        """ Coefficient of 1/y^2 in U at infinity, 2(d-2)(1+epsilon) """
        return 2 * (self.dim.d - 2) * (1 + self.profile.eps_n)


def profile_u(profile, y):
    """
    U(y) on [0, inf): dense profile on its grid, the value at the first node
    below it and the far-field series of Phi beyond it
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    d = profile.dim.d
    u = profile.u
    lo, hi = u.nodes[0], u.nodes[-1]
    out = np.empty_like(y)
    inner = y < lo
    outer = y > hi
    grid = ~(inner | outer)
    out[inner] = u.values[0]
    if np.any(grid):
        out[grid] = u(y[grid])
    if np.any(outer):
        yo = y[outer]
        coefficients = profile.tail_coefficients(TAIL_ORDER)
        out[outer] = sum(c * (2 * d - 2 * (2 + 2 * k)) * yo ** (-2 - 2 * k) for k, c in enumerate(coefficients))
    return out


def profile_du(profile, y):
    """ U'(y) with the same extension as profile_u (zero slope below the grid) """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    d = profile.dim.d
    u = profile.u
    out = np.zeros_like(y)
    outer = y > u.nodes[-1]
    grid = (y >= u.nodes[0]) & ~outer
    if np.any(grid):
        out[grid] = u.derivative(y[grid])
    if np.any(outer):
        yo = y[outer]
        coefficients = profile.tail_coefficients(TAIL_ORDER)
        out[outer] = sum(c * (2 * d - 2 * (2 + 2 * k)) * (-2 - 2 * k) * yo ** (-3 - 2 * k)
                         for k, c in enumerate(coefficients))
    return out


def exact_derivative(sol, x, t):
    """ d/dx of the exact solution, U'(y)/(T-t)^(3/2) """
    if not 0 <= t < sol.T:
        raise DomainError(f'time {t} outside [0, T={sol.T})')
    tau = sol.T - t
    return profile_du(sol.profile, np.asarray(x, dtype=float) / math.sqrt(tau)) / tau ** 1.5


def exact_solution(sol, x, t):
    """ U(x/sqrt(T-t))/(T-t) for 0 <= t < T """
    if not 0 <= t < sol.T:
        raise DomainError(f'time {t} outside [0, T={sol.T})')
    tau = sol.T - t
    out = profile_u(sol.profile, np.asarray(x, dtype=float) / math.sqrt(tau)) / tau
    return float(out[0]) if np.ndim(x) == 0 else out


def u_star(sol, x):
    """ Pointwise limit 2(d-2)(1+epsilon)/|x|^2 as t -> T """
    return sol.tail_amplitude / np.asarray(x, dtype=float) ** 2


@dataclass(frozen=True)
class LpDistance:
    p: float
    t: float
    near: float
    far: float
    cutoff: float

    @property
    def total(self):
        return (self.near ** self.p + self.far ** self.p) ** (1 / self.p)

    def as_dict(self):
        return {'p': self.p, 't': self.t, 'near': self.near, 'far': self.far, 'cutoff': self.cutoff,
                'total': self.total}


def _y_nodes(profile, y_max):
    nodes = profile.u.nodes
    nodes = nodes[nodes < y_max]
    if y_max > profile.r_max:
        nodes = np.concatenate([nodes, np.geomspace(profile.r_max, y_max, LP_TAIL_NODES)[1:]])
    else:
        nodes = np.append(nodes, y_max)
    return nodes


def lp_distance(sol, t, p, cutoff=1.0, radius=LP_RADIUS):
    """
    ||u(., t) - u*||_(L^p(|x| < radius)), split at |x| = cutoff

    In y = x/sqrt(T-t) the p-th power is (T-t)^(d/2-p) S_d int |U(y) - A/y^2|^p y^(d-1) dy.

    :param p: exponent in [1, d/2)
    :return: LpDistance with the near (|x| < cutoff) and far parts
    """
    d = sol.dim.d
    if not 1 <= p < d / 2:
        raise ParameterError(f'p must lie in [1, {d / 2:g}), got {p}')
    if not 0 <= t < sol.T:
        raise DomainError(f'time {t} outside [0, T={sol.T})')
    if not 0 < cutoff < radius:
        raise ParameterError(f'cutoff must lie in (0, {radius:g})')
    tau = sol.T - t
    amplitude = sol.tail_amplitude

    def integrand(y):
        shape = y.shape
        flat = y.ravel()
        diff = np.abs(profile_u(sol.profile, flat) - amplitude / flat ** 2) ** p * flat ** (d - 1)
        return diff.reshape(shape)

    y_cut, y_max = cutoff / math.sqrt(tau), radius / math.sqrt(tau)
    nodes = _y_nodes(sol.profile, y_max)
    if nodes[0] < y_cut:
        nodes = np.union1d(nodes, [y_cut])
    segments = segment_integrals(nodes, integrand)
    # below the first node U is bounded and the integrand behaves like y^(d-1-2p)
    head = amplitude ** p * nodes[0] ** (d - 2 * p) / (d - 2 * p)
    mids = 0.5 * (nodes[:-1] + nodes[1:])
    near = head + float(np.sum(segments[mids < y_cut]))
    far = float(np.sum(segments[mids >= y_cut]))
    scale = tau ** (d / 2 - p) * surface_area(d)
    return LpDistance(p, t, (scale * near) ** (1 / p), (scale * far) ** (1 / p), cutoff)


def type_one_ratio(sol, times):
    """ (T-t) sup_x u(x, t) for each t, evaluated on x = sqrt(T-t) y over the profile nodes """
    nodes = np.concatenate([[0.0], sol.profile.u.nodes])
    ratios = []
    for t in times:
        tau = sol.T - t
        ratios.append(float(tau * np.max(exact_solution(sol, math.sqrt(tau) * nodes, t))))
    return ratios


def locality_bound(sol, deltas=(0.1, 0.5, 1.0), times=(0.0, 0.5, 0.9, 0.99, 0.999), x_max=100.0, samples=400):
    """ delta^2 sup_t sup_(|x| >= delta) u(x, t) for each delta """
    out = {}
    for delta in deltas:
        x = np.geomspace(delta, x_max, samples)
        out[delta] = float(delta ** 2 * max(np.max(exact_solution(sol, x, t)) for t in times))
    return out


@dataclass(frozen=True)
class PdeState:
    r: np.ndarray
    u: np.ndarray
    t: float
    d: int

    def __post_init__(self):
        if self.r[0] != 0.0 or not np.all(np.diff(self.r) > 0):
            raise ParameterError('simulation nodes must start at 0 and increase')
        if np.any(self.u < -CLIP_TOLERANCE * max(1.0, float(np.max(np.abs(self.u))))):
            raise ParameterError('simulation state must be non-negative')


@dataclass
class MolTrajectory:
    states: List[PdeState] = field(default_factory=list)
    times: List[float] = field(default_factory=list)
    masses: List[float] = field(default_factory=list)
    boundary_outflow: List[float] = field(default_factory=list)
    steps: int = 0
    stopped_early: bool = False

    @property
    def final(self):
        return self.states[-1]

    def mass_drift(self):
        """ max |M(t) - M(0) + outflow(t)| / M(0) """
        m0 = self.masses[0]
        if m0 == 0:
            return 0.0
        drift = np.abs(np.array(self.masses) - m0 + np.array(self.boundary_outflow))
        return float(np.max(drift) / m0)

    def type_one_ratios(self, T):
        return [(T - s.t) * float(np.max(s.u)) for s in self.states]


class RadialFiniteVolume(object):
    """
    Conservative update of u_t = r^(1-d) (r^(d-1) (u_r + u m/r^(d-1)))_r, m = int_0^r u s^(d-1) ds,
    on cells around the nodes. No flux through r = 0, and at r = R a ghost value
    enforcing d(log u)/d(log r) = -2.
    """

    def __init__(self, r, d):
        self.r = r
        self.d = d
        faces = np.concatenate([[0.0], 0.5 * (r[:-1] + r[1:]), [r[-1]]])
        self.faces = faces
        self.volumes = (faces[1:] ** d - faces[:-1] ** d) / d
        self.area = faces ** (d - 1)
        self.spacing = np.diff(r)

    def mass(self, u):
        return float(np.sum(self.volumes * u))

    def fluxes(self, u):
        """ Outward fluxes through every face, boundary face last """
        d = self.d
        inner = self.faces[1:-1]
        mass = np.cumsum(self.volumes * u)
        flux = np.zeros(len(self.faces))
        gradient = np.diff(u) / self.spacing
        flux[1:-1] = gradient + 0.5 * (u[:-1] + u[1:]) * mass[:-1] / inner ** (d - 1)
        big_r = self.faces[-1]
        flux[-1] = -2 * u[-1] / big_r + u[-1] * mass[-1] / big_r ** (d - 1)
        return flux

    def rate(self, u):
        """ (du/dt, outflow rate through r = R) """
        weighted = self.area * self.fluxes(u)
        return np.diff(weighted) / self.volumes, -weighted[-1]

    def stable_step(self, u):
        d = self.d
        h = float(np.min(self.spacing))
        dt = CFL_DIFFUSION * h * h / d
        mass = np.cumsum(self.volumes * u)[:-1]
        drift = np.max(np.abs(mass / self.faces[1:-1] ** (d - 1))) if len(mass) else 0.0
        if drift > 0:
            dt = min(dt, CFL_ADVECTION * h / drift)
        peak = float(np.max(u))
        if peak > 0:
            dt = min(dt, CFL_REACTION / peak)
        return dt


def _clip(u):
    tiny = CLIP_TOLERANCE * max(1.0, float(np.max(np.abs(u))))
    return np.where((u < 0) & (u > -tiny), 0.0, u)


def mol_simulate(u0, t_end, steps=None, snapshot_times=(), dt=None):
    """
    SSP-RK3 integration of the radial system from u0 to t_end with CFL-limited steps,
    or with the fixed step dt when given

    :param u0: PdeState
    :param t_end: final time
    :param steps: optional cap on the number of time steps
    :param snapshot_times: times at which states are stored in addition to the start and end
    :param dt: fixed time step; must not exceed the CFL limit of u0
    :return: MolTrajectory; stopped_early is set when the step size underflows
    """
    if t_end <= u0.t:
        raise ParameterError(f't_end {t_end} must exceed the initial time {u0.t}')
    scheme = RadialFiniteVolume(u0.r, u0.d)
    u, t = u0.u.astype(float), float(u0.t)
    if dt is not None:
        limit = scheme.stable_step(u)
        if not 0 < dt <= limit:
            raise ParameterError(f'time step {dt:g} outside (0, {limit:.3g}] allowed by the CFL limit')
    trajectory = MolTrajectory([u0], [t], [scheme.mass(u)], [0.0])
    outflow = 0.0
    pending = sorted(s for s in snapshot_times if u0.t < s < t_end)

    while t < t_end:
        if steps is not None and trajectory.steps >= steps:
            break
        step = scheme.stable_step(u) if dt is None else dt
        target = pending[0] if pending else t_end
        snapped = target - t <= step * (1 + STEP_SLACK)
        if snapped:
            step = target - t
        if step < DT_MIN:
            logger.warning(f'time step {step:.3g} below {DT_MIN:g} at t={t:.6g}, stopping')
            trajectory.stopped_early = True
            break
        k1, q1 = scheme.rate(u)
        u1 = u + step * k1
        k2, q2 = scheme.rate(u1)
        u2 = 0.75 * u + 0.25 * (u1 + step * k2)
        k3, q3 = scheme.rate(u2)
        u = _clip(u / 3 + 2 / 3 * (u2 + step * k3))
        outflow += step * (q1 + q2 + 4 * q3) / 6
        t = target if snapped else t + step
        trajectory.steps += 1
        if not np.all(np.isfinite(u)):
            logger.warning(f'non-finite state at t={t:.6g}, stopping')
            trajectory.stopped_early = True
            break
        trajectory.times.append(t)
        trajectory.masses.append(scheme.mass(u))
        trajectory.boundary_outflow.append(outflow)
        if pending and abs(t - pending[0]) <= 1e-15 * max(1.0, t):
            trajectory.states.append(PdeState(u0.r, u.copy(), t, u0.d))
            pending.pop(0)

    if trajectory.states[-1].t != t:
        trajectory.states.append(PdeState(u0.r, u.copy(), t, u0.d))
    logger.info(f'simulated to t={t:.6g} in {trajectory.steps} steps, mass drift {trajectory.mass_drift():.3g}')
    return trajectory


def initial_state(sol, r):
    """ PdeState at t = 0 sampled from the exact solution """
    r = np.asarray(r, dtype=float)
    return PdeState(r, exact_solution(sol, r, 0.0), 0.0, sol.dim.d)


def tracking_error(sol, state, window=(0.1, 5.0)):
    """ sup |u - exact| / sup |exact| over nodes in window """
    r = state.r
    inside = (r >= window[0]) & (r <= window[1])
    exact = exact_solution(sol, r[inside], state.t)
    return float(np.max(np.abs(state.u[inside] - exact)) / np.max(np.abs(exact)))
