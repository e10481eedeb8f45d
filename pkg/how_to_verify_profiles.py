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
How is a self-similar blow-up profile built and checked?

Code example with test -- This file is an executable test!

* explicit solutions give an exact baseline for every residual
* the steady state Qb and its oscillating tail set the frequency omega
* interior shots (central value a) and exterior shots (amplitude epsilon)
  are glued at r0; the derivative mismatch changes sign once per half period
  of log(lambda)
* a refined sign change is a profile U_n, and U_n(|x|/sqrt(T-t))/(T-t) blows
  up at time T

Everything below runs for d=3 in a few minutes. The full scan over several
profiles is `npm run profile`.
"""

import math
from pprint import pprint

from lib.evolution import BlowupSolution, lp_distance, type_one_ratio
from lib.interior import central_value_for_scale
from lib.kummer import u1_via_kummer
from lib.linear import exterior_pair
from lib.matching import MatchingProblem, explicit_profile, verify_explicit
from lib.steady import Dimension, fit_steady_tails, solve_steady

D3 = Dimension(3)

"""
First step: the explicit solutions. Their residuals show how small a residual
of the nonlocal equation can get on the radial grid.
"""

explicit = {d: verify_explicit(Dimension(d))['max_residual'] for d in range(3, 10)}
print('\nLargest scaled residual of the explicit solutions per dimension:')
pprint(explicit)

assert all(residual < 1e-8 for residual in explicit.values())

"""
Second step: the steady state. Qb(0) = 1/(2d), and Qb - 1/r^2 oscillates
like sin(omega log r + phase) / r^((d+2)/2).
"""

steady = solve_steady(D3)
tails = fit_steady_tails(steady)

print('\nTail fit of the steady state:')
pprint(tails.as_dict())

assert abs(steady.qbar.values[0] - 1 / 6) < 1e-10
assert abs(tails.qbar_tail.frequency / D3.omega - 1) < 0.01

"""
Third step: the first fundamental solution u1 of the linearized exterior
operator agrees with its closed form through Kummer's functions.
"""

u1 = exterior_pair(D3).first.profile
for r in (3.0, 5.0, 10.0):
    print(f'u1({r:g}): ode {u1(r):.12g}, kummer {u1_via_kummer(r):.12g}')
    assert abs(u1_via_kummer(r) / u1(r) - 1) < 1e-5

"""
Fourth step: matching. The predictor locates one sign change of the
derivative mismatch F; sampling half a spacing to either side gives a bracket
for Brent's method.
"""

problem = MatchingProblem(D3, steady=steady)
lam_hi = 3e-3
predicted = problem.predicted_roots(lam_hi, lam_hi * math.exp(-D3.root_spacing))[0]
half = 0.5 * D3.root_spacing
upper = problem.solve_eps(central_value_for_scale(predicted * math.exp(half), D3))
lower = problem.solve_eps(central_value_for_scale(predicted * math.exp(-half), D3))

print(f'\npredicted sign change at lambda={predicted:.6g}')
print(f'F at lambda={upper.lam:.6g}: {upper.deriv_mismatch:.6g}')
print(f'F at lambda={lower.lam:.6g}: {lower.deriv_mismatch:.6g}')

assert upper.value_gap < 1e-12 * float(D3.phi_star(problem.r0))

if upper.deriv_mismatch * lower.deriv_mismatch < 0:
    root = problem.refine_mu((upper, lower))
    profile = problem.assemble_profile(1, root)
    print(f'refined: mu={root.lam:.10g}, eps={root.epsilon:.6g}')
    pprint({k: profile.report[k] for k in ('nonlocal_residual', 'value_gap', 'deriv_gap', 'eps_over_sqrt_mu')})
    assert profile.report['nonlocal_residual'] < 1e-6
else:
    print('the predictor phase is off by more than half a period here; use `npm run match` for a full scan')

"""
Fifth step: blow-up. With the explicit profile, (T-t) sup u stays constant and
the distance to the limit 4/|x|^2 shrinks as t approaches T.
"""

solution = BlowupSolution(explicit_profile(D3), 1.0)
ratios = type_one_ratio(solution, (0.0, 0.9, 0.999))
distances = [lp_distance(solution, t, 1.0).total for t in (0.9, 0.99, 0.999)]

print('\n(T-t) sup u:', ratios)
print('L^1 distance to u*:', distances)

assert max(ratios) - min(ratios) < 1e-12 * max(ratios)
assert distances[0] > distances[1] > distances[2]

"""
What do we see?
* explicit solutions and matched profiles reach residuals far below the
  matching tolerance
* the sign changes of F sit where the predictor puts them, one every
  pi/omega in log(lambda)
* the blow-up is of type one, with the profile concentrating at the origin
"""
