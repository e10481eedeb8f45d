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
Self-similar blow-up profiles of the radial parabolic-elliptic Keller-Segel system.

radial      grids, Hermite profiles, adaptive integration and quadrature
steady      steady state Qb, Q and oscillatory tail fits
linear      linearized operators, fundamental pairs, resolvents, weighted norms
kummer      closed form of u1 through confluent hypergeometric functions
exterior    exterior solutions by shooting and by fixed point
interior    interior solutions by shooting, Q1 extraction and fixed point
matching    matching at r0, mu_n search, profile assembly, explicit solutions
evolution   exact blow-up solutions, L^p distances, method-of-lines simulation
config      run configuration from defaults, environment, file and flags
output      CSV and JSON artifacts
cli         command line entry point
"""
