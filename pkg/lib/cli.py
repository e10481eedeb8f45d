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
Command line entry point: python -m lib.cli <command> [flags]

Exit status 0 on success, 1 on usage or configuration errors and 2 when a
verification metric fails or a computation raises.
"""

import argparse
import dataclasses
import logging
import math
import os
import sys

import numpy as np

from . import evolution, kummer, linear, matching, steady as steady_state
from .config import ConfigError, load_config
from .exterior import picard_exterior, relative_residual, scaled_residual, shoot_exterior
from .interior import series_coefficient, shoot_interior
from .output import STDOUT, output_path, write_json, write_mu_table, write_profile_csv
from .radial import ParameterError, RadialGrid, RadialProfile

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILED = 2

KUMMER_RADII = (2.0, 3.0, 5.0, 10.0, 20.0, 30.0)
WRONSKIAN_WINDOWS = {'L': (2.0, 20.0), 'Hinf': (0.01, 100.0), 'H': (0.01, 5.0)}
WRONSKIAN_TOL = 1e-6
SPACING_TOL = 0.10
RATIO_TOL = 0.15
NONLOCAL_TOL = 1e-6
RESIDUAL_TOL = 1e-6
EXPLICIT_TOL = 1e-8
TRACKING_TOL = 0.02
MASS_TOL = 1e-6
EVOLVE_TIMES = (0.0, 0.5, 0.9)
LP_TIMES = (0.9, 0.99, 0.999)


class UsageError(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):
    """ Usage errors raise instead of exiting with status 2 """

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


class Run(object):
    """ One command invocation: configuration, output target and collected checks """

    def __init__(self, config, args):
        self.config = config
        self.args = args
        self.dim = steady_state.Dimension(config.dim)
        self.checks = {}
        self.report = {'config': config.as_dict()}
        self._steady = None

    @property
    def out(self):
        return self.config.out

    @property
    def streaming(self):
        return self.out == STDOUT

    def steady(self):
        if self._steady is None:
            self._steady = steady_state.solve_steady(self.dim, tol=min(self.config.tol_ode, 1e-9))
        return self._steady

    def check(self, name, value, passed):
        self.checks[name] = bool(passed)
        self.report.setdefault('checks', {})[name] = {'value': value, 'passed': bool(passed)}
        if not passed:
            logger.error(f'verification failed: {name} = {value}')

    def csv(self, name, profile, primary=False):
        if self.streaming and not primary:
            return
        write_profile_csv(output_path(self.out, name), profile)

    def json(self, name):
        if self.streaming:
            logger.info(f'{name}: {len(self.report)} report sections (not written when streaming)')
            return
        write_json(output_path(self.out, name), self.report)

    def matching_problem(self, r0=None):
        c = self.config
        return matching.MatchingProblem(self.dim, r0 or c.r0, seed_radius=c.r_max, tol_match=c.tol_match,
                                        tol_ode=c.tol_ode, threads=c.threads, steady=self.steady())

    def constructed_profiles(self):
        c = self.config
        problem = self.matching_problem()
        a_range = problem.default_a_range(c.lambda_max, max(c.scan_periods, math.ceil(c.n_profiles / 2) + 1))
        scan, roots = problem.find_profiles(c.n_profiles, a_range, c.samples_per_period)
        return problem, scan, roots

    def blowup_profile(self, which):
        if which == 'explicit':
            return matching.explicit_profile(self.dim, r_max=self.config.r_max)
        n = int(which)
        if n < 1:
            raise ParameterError(f'profile index must be at least 1, got {n}')
        self.config = dataclasses.replace(self.config, n_profiles=max(n, self.config.n_profiles))
        problem, _, roots = self.constructed_profiles()
        if len(roots) < n:
            raise matching.MatchingFailed(f'only {len(roots)} profiles found, {n} requested')
        return problem.assemble_profile(n, roots[n - 1])


def cmd_steady(run):
    pair = run.steady()
    dim = run.dim
    run.csv('qbar.csv', pair.qbar, primary=True)
    run.csv('q.csv', pair.q)
    tails = steady_state.fit_steady_tails(pair)
    nonlocal_q = steady_state.solve_steady_nonlocal(dim)
    window = nonlocal_q.nodes[(nonlocal_q.nodes >= 1e-3) & (nonlocal_q.nodes <= 50.0)]
    gap = float(np.max(np.abs(pair.q(window) - nonlocal_q(window)) / np.abs(nonlocal_q(window)).max()))
    residual = steady_state.steady_residual(pair.qbar, dim)
    run.report.update({'tails': tails.as_dict(), 'qbar_origin': pair.qbar.values[0],
                       'q_origin': pair.q.values[0], 'nonlocal_gap': gap,
                       'steady_residual': float(np.max(np.abs(residual.values)))})
    omega_error = abs(tails.qbar_tail.frequency - dim.omega) / dim.omega
    run.check('tail_frequency_error', omega_error, omega_error < 0.01)
    run.check('nonlocal_gap', gap, gap < 1e-6)
    run.json('steady_report.json')


def cmd_fundamental(run):
    dim = run.dim
    pair = run.steady()
    ext = linear.exterior_pair(dim, with_fits=True)
    far = linear.far_steady_pair(dim, 1e-3, 1e3)
    inner = linear.interior_pair(pair)
    run.csv('u1.csv', ext.first.profile, primary=True)
    run.csv('u2_factored.csv', ext.second.profile)
    run.csv('phi1.csv', far.first.profile)
    run.csv('phi2.csv', far.second.profile)
    run.csv('lambda_qbar.csv', inner.first.profile)
    run.csv('rho.csv', inner.second.profile)
    wronskians = {}
    for basis in (ext, far, inner):
        mean, deviation = linear.wronskian_check(basis, WRONSKIAN_WINDOWS[basis.operator])
        wronskians[basis.operator] = {'constant': mean, 'max_relative_deviation': deviation}
        run.check(f'wronskian_{basis.operator}', deviation, deviation < WRONSKIAN_TOL)
    lam_tail = steady_state.fit_oscillation(linear.lambda_qbar_profile(pair), None, dim.decay,
                                            steady_state.TAIL_WINDOW, dim.omega)
    run.report.update({
        'wronskian': wronskians,
        'u1_origin_fit_c1_c2': ext.first.origin_fit.as_dict(),
        'u2_origin_fit_c3_c4': ext.second.origin_fit.as_dict(),
        'lambda_qbar_tail_fit': lam_tail.as_dict(),
        'normalization': 'r^2 u1 -> 1; v2 = exp(-r^2/4) u2 with r^(d+2) v2 -> 1',
    })
    run.json('fundamental_report.json')


def cmd_kummer_check(run):
    if run.dim.d != 3:
        raise ParameterError('the Kummer cross-check is defined for d=3 only')
    ext = linear.exterior_pair(run.dim)
    u1 = ext.first.profile
    rows = []
    worst = 0.0
    for r in KUMMER_RADII:
        closed = kummer.u1_via_kummer(r)
        numeric = u1(r)
        rel = abs(closed - numeric) / abs(numeric)
        worst = max(worst, rel)
        rows.append({'r': r, 'kummer': closed, 'ode': numeric, 'relative_difference': rel})
    imaginary = abs(kummer.u1_complex(5.0).imag)
    r2u1 = 900.0 * kummer.u1_via_kummer(30.0)
    frequency = kummer.origin_frequency()
    run.report.update({'u1': rows, 'imaginary_part_r5': imaginary, 'r2_u1_30': r2u1,
                       'origin_frequency': frequency})
    run.check('u1_relative_difference', worst, worst < 1e-5)
    run.check('imaginary_part', imaginary, imaginary < 1e-10)
    run.check('origin_frequency_error', abs(frequency / run.dim.omega - 1), abs(frequency / run.dim.omega - 1) < 0.01)
    run.json('kummer_report.json')


def cmd_shoot_ext(run):
    c = run.config
    epsilon = run.args.epsilon
    solution = shoot_exterior(epsilon, c.r0, run.dim, c.r_max, c.tol_ode)
    run.csv('exterior.csv', solution.profile, primary=True)
    residual = scaled_residual(solution.profile, run.dim)
    relative = float(np.max(relative_residual(solution.profile, run.dim)))
    run.report.update({'epsilon': epsilon, 'boundary': list(solution.boundary), 'scaled_residual': residual,
                       'relative_residual': relative})
    if run.args.picard:
        picard, _ = picard_exterior(epsilon, c.r0, run.dim, c.r_max, c.tol_picard)
        gap = float(np.max(np.abs(picard.profile.values - solution.profile(picard.profile.nodes))
                           / np.abs(picard.profile.values)))
        run.report.update({'picard': picard.picard_report.as_dict(), 'picard_gap': gap})
    run.check('relative_residual', relative, relative < RESIDUAL_TOL)
    run.json('exterior_report.json')


def cmd_shoot_int(run):
    c = run.config
    a = run.args.a
    solution = shoot_interior(a, c.r0, run.dim, c.tol_ode)
    run.csv('interior.csv', solution.profile, primary=True)
    residual = float(np.max(relative_residual(solution.profile, run.dim)))
    run.report.update({'a': a, 'lambda': solution.lam, 'boundary': list(solution.boundary),
                       'relative_residual': residual})
    run.check('relative_residual', residual, residual < RESIDUAL_TOL)
    b = series_coefficient(a, run.dim)
    # b vanishes at the steady central value 1/(2d)
    if b != 0:
        slope = solution.profile.derivs[0] / solution.r_min / (2 * b)
        run.check('origin_slope_ratio', slope, abs(slope - 1) < 0.01)
    run.json('interior_report.json')


def _check_scan(run, scan, roots):
    dim = run.dim
    spacings = scan.spacings()
    spacing_error = max((abs(s / dim.root_spacing - 1) for s in spacings), default=0.0)
    run.check('bracket_spacing_error', spacing_error, spacing_error < SPACING_TOL)
    expected = math.exp(-dim.root_spacing)
    ratios = [b.lam / a.lam for a, b in zip(roots, roots[1:])]
    ratio_error = max((abs(q / expected - 1) for q in ratios), default=0.0)
    run.check('mu_ratio_error', ratio_error, ratio_error < RATIO_TOL)
    run.report.update({'scan': scan.as_dict(), 'mu_ratios': ratios, 'expected_ratio': expected,
                       'roots': [p.as_dict() for p in roots]})


def cmd_match(run):
    _, scan, roots = run.constructed_profiles()
    write_mu_table(output_path(run.out, 'mu_table.csv'), roots)
    _check_scan(run, scan, roots)
    if run.args.stability:
        c = run.config
        stability = matching.stability_check(run.dim, n_profiles=min(c.n_profiles, 2), threads=c.threads,
                                             steady=run.steady(), lambda_max=c.lambda_max,
                                             samples_per_period=c.samples_per_period)
        run.report['stability'] = stability
        spread = max(stability['relative_spread'], default=0.0)
        run.check('r0_relative_spread', spread, spread < 0.01)
    run.json('match_report.json')


def cmd_profile(run):
    problem, scan, roots = run.constructed_profiles()
    if not run.streaming:
        write_mu_table(output_path(run.out, 'mu_table.csv'), roots)
    _check_scan(run, scan, roots)
    profiles = []
    for n, point in enumerate(roots, start=1):
        profile = problem.assemble_profile(n, point)
        run.csv(f'profile_{n}_U.csv', profile.u, primary=(n == 1))
        run.csv(f'profile_{n}_Phi.csv', profile.phi)
        run.check(f'nonlocal_residual_{n}', profile.report['nonlocal_residual'],
                  profile.report['nonlocal_residual'] < NONLOCAL_TOL)
        profiles.append(profile.report)
    for name, (value, passed) in matching.sequence_checks(profiles).items():
        run.check(name, value, passed)
    run.report['profiles'] = profiles
    run.json('profile_report.json')


def cmd_verify_explicit(run):
    report = matching.verify_explicit(run.dim)
    run.report['residuals'] = report
    run.check('max_residual', report['max_residual'], report['max_residual'] < EXPLICIT_TOL)
    if run.streaming:
        write_json(STDOUT, run.report)
    else:
        run.json('explicit_report.json')


def _solution_table(sol, t, radius):
    x = np.linspace(0.0, radius, 401)[1:]
    grid = RadialGrid(x, grading='uniform')
    return RadialProfile(grid, evolution.exact_solution(sol, x, t), evolution.exact_derivative(sol, x, t))


def cmd_evolve(run):
    args = run.args
    sol = evolution.BlowupSolution(run.blowup_profile(args.profile), args.T)
    for i, frac in enumerate(EVOLVE_TIMES):
        run.csv(f'exact_t{frac:g}.csv', _solution_table(sol, frac * sol.T, args.radius), primary=(i == 0))
    table = []
    for p in args.p:
        series = [evolution.lp_distance(sol, frac * sol.T, p, args.cutoff, args.radius) for frac in LP_TIMES]
        totals = [d.total for d in series]
        table.extend(d.as_dict() for d in series)
        run.check(f'lp_decreasing_p{p:g}', totals, all(b < a for a, b in zip(totals, totals[1:])))
    ratios = evolution.type_one_ratio(sol, [frac * sol.T for frac in EVOLVE_TIMES])
    spread = (max(ratios) - min(ratios)) / max(ratios)
    run.check('type_one_spread', spread, spread < 1e-12)
    run.report.update({'lp': table, 'type_one': ratios, 'locality': evolution.locality_bound(sol),
                       'u_star_amplitude': sol.tail_amplitude})
    run.json('evolve_report.json')


def cmd_sim(run):
    args = run.args
    sol = evolution.BlowupSolution(run.blowup_profile(args.profile), args.T)
    r = np.linspace(0.0, args.radius, args.nodes)
    trajectory = evolution.mol_simulate(evolution.initial_state(sol, r), args.t_end)
    final = trajectory.final
    grid = RadialGrid(final.r[1:], grading='uniform')
    run.csv('sim_final.csv', RadialProfile(grid, final.u[1:], np.gradient(final.u, final.r)[1:]), primary=True)
    error = evolution.tracking_error(sol, final)
    drift = trajectory.mass_drift()
    run.report.update({'tracking_error': error, 'mass_drift': drift, 'steps': trajectory.steps,
                       'stopped_early': trajectory.stopped_early, 't_final': final.t,
                       'type_one_ratios': trajectory.type_one_ratios(sol.T)})
    run.check('tracking_error', error, error < TRACKING_TOL)
    run.check('mass_drift', drift, drift < MASS_TOL)
    run.json('sim_report.json')


def cmd_all(run):
    base = run.out
    if run.streaming:
        raise ParameterError('all writes a directory tree, --out - is not supported')
    stages = [('steady', cmd_steady), ('fundamental', cmd_fundamental), ('verify-explicit', cmd_verify_explicit),
              ('profile', cmd_profile), ('evolve', cmd_evolve), ('sim', cmd_sim)]
    if run.dim.d == 3:
        stages.insert(2, ('kummer-check', cmd_kummer_check))
    summary = {}
    for name, handler in stages:
        stage = Run(dataclasses.replace(run.config, out=os.path.join(base, name)), run.args)
        stage._steady = run._steady
        handler(stage)
        run._steady = stage._steady
        summary[name] = stage.checks
        run.checks.update({f'{name}.{k}': v for k, v in stage.checks.items()})
    run.report['stages'] = summary
    write_json(os.path.join(base, 'all_report.json'), run.report)


COMMANDS = {
    'steady': cmd_steady,
    'fundamental': cmd_fundamental,
    'kummer-check': cmd_kummer_check,
    'shoot-ext': cmd_shoot_ext,
    'shoot-int': cmd_shoot_int,
    'match': cmd_match,
    'profile': cmd_profile,
    'verify-explicit': cmd_verify_explicit,
    'evolve': cmd_evolve,
    'sim': cmd_sim,
    'all': cmd_all,
}


def build_parser():
    common = ArgumentParser(add_help=False)
    common.add_argument('--dim', type=int)
    common.add_argument('--r0', type=float)
    common.add_argument('--rmax', dest='r_max', type=float)
    common.add_argument('--tol-ode', dest='tol_ode', type=float)
    common.add_argument('--tol-match', dest='tol_match', type=float)
    common.add_argument('--n', dest='n_profiles', type=int)
    common.add_argument('--scan-periods', dest='scan_periods', type=int)
    common.add_argument('--out')
    common.add_argument('--config')
    common.add_argument('-v', '--verbose', action='store_true')

    parser = ArgumentParser(prog='python -m lib.cli', description='self-similar blow-up profiles')
    sub = parser.add_subparsers(dest='command', required=True, parser_class=ArgumentParser)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    sub.choices['shoot-ext'].add_argument('--epsilon', type=float, default=1e-3)
    sub.choices['shoot-ext'].add_argument('--picard', action='store_true')
    sub.choices['shoot-int'].add_argument('--a', type=float, default=1.0)
    sub.choices['match'].add_argument('--stability', action='store_true')
    for name in ('evolve', 'sim', 'all'):
        sub.choices[name].add_argument('--profile', default='explicit')
        sub.choices[name].add_argument('--T', type=float, default=1.0)
        sub.choices[name].add_argument('--radius', type=float, default=10.0)
    for name in ('evolve', 'all'):
        sub.choices[name].add_argument('--p', type=float, nargs='+', default=[1.0, 1.4])
        sub.choices[name].add_argument('--cutoff', type=float, default=1.0)
    for name in ('sim', 'all'):
        sub.choices[name].add_argument('--nodes', type=int, default=800)
        sub.choices[name].add_argument('--t-end', dest='t_end', type=float, default=0.5)
    return parser


def configure_logging(verbose):
    level = logging.DEBUG if verbose else os.environ.get('KS_SELFSIM_LOG_LEVEL', 'INFO').upper()
    logging.basicConfig(format=LOG_FORMAT, level=level)


def run_command(argv):
    """
    :param argv: arguments without the program name
    :return: exit status
    """
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        logger.error(f'usage error: {e}')
        return EXIT_USAGE
    configure_logging(args.verbose)

    overrides = {k: getattr(args, k) for k in ('dim', 'r0', 'r_max', 'tol_ode', 'tol_match', 'n_profiles',
                                               'scan_periods', 'out')}
    try:
        config = load_config(args.config, overrides)
        run = Run(config, args)
        COMMANDS[args.command](run)
    except (ConfigError, ParameterError) as e:
        logger.error(f'{args.command}: {e}')
        return EXIT_USAGE
    except Exception as e:
        logger.error(f'{args.command} failed: {type(e).__name__}: {e}')
        return EXIT_FAILED

    failed = [name for name, passed in run.checks.items() if not passed]
    if failed:
        logger.error(f'{args.command}: failed checks {", ".join(failed)}')
        return EXIT_FAILED
    logger.info(f'{args.command}: all {len(run.checks)} checks passed')
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(run_command(sys.argv[1:]))
