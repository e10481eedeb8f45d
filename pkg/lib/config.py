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
Run configuration.

Values are taken, in increasing priority, from the defaults below, the process
environment (after load_dotenv), a key=value file given with --config and
command-line flags. Keys are upper-case with the KS_SELFSIM_ prefix.
"""

import os
from dataclasses import asdict, dataclass, fields

from dotenv import dotenv_values, load_dotenv

ENV_PREFIX = 'KS_SELFSIM_'
OUTPUT_DIR = './ks-selfsim-output'
NON_CONFIG_KEYS = ('LOG_LEVEL', 'PIPELINE_TESTS')


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    dim: int = 3
    r0: float = 0.05
    r_max: float = 30.0
    tol_ode: float = 1e-11
    tol_match: float = 1e-12
    tol_picard: float = 1e-9
    n_profiles: int = 3
    scan_periods: int = 2
    samples_per_period: int = 40
    lambda_max: float = 0.003
    out: str = OUTPUT_DIR
    threads: int = 1

    def __post_init__(self):
        if not 3 <= self.dim <= 9:
            raise ConfigError(f'dim must be in [3, 9], got {self.dim}')
        if not 0 < self.r0 < 1 < self.r_max:
            raise ConfigError(f'need 0 < r0 < 1 < r_max, got r0={self.r0}, r_max={self.r_max}')
        if self.r_max < 30:
            raise ConfigError(f'r_max must be at least 30, got {self.r_max}')
        for name in ('tol_ode', 'tol_match', 'tol_picard', 'lambda_max'):
            if not getattr(self, name) > 0:
                raise ConfigError(f'{name} must be positive')
        if self.n_profiles < 1:
            raise ConfigError('n_profiles must be at least 1')
        if self.scan_periods < 2:
            raise ConfigError('scan_periods must be at least 2')
        if self.samples_per_period < 4:
            raise ConfigError('samples_per_period must be at least 4')
        if self.threads < 1:
            raise ConfigError('threads must be at least 1')

    def as_dict(self):
        return asdict(self)


def _convert(name, raw):
    kind = {f.name: f.type for f in fields(RunConfig)}[name]
    try:
        return kind(raw)
    except (TypeError, ValueError):
        raise ConfigError(f'invalid value {raw!r} for {ENV_PREFIX}{name.upper()}')


def resolve_threads(raw):
    """ unset -> 1 (serial), 0 -> os.cpu_count() """
    if raw is None or str(raw).strip() == '':
        return 1
    try:
        threads = int(raw)
    except ValueError:
        raise ConfigError(f'invalid value {raw!r} for {ENV_PREFIX}THREADS')
    if threads < 0:
        raise ConfigError('threads must not be negative')
    if threads == 0:
        return os.cpu_count() or 1
    return threads


def _from_mapping(mapping, strict):
    names = {f.name for f in fields(RunConfig)}
    values = {}
    for key, raw in mapping.items():
        if not key.startswith(ENV_PREFIX):
            if strict:
                raise ConfigError(f'unknown key {key} (expected prefix {ENV_PREFIX})')
            continue
        name = key[len(ENV_PREFIX):].lower()
        if name.upper() in NON_CONFIG_KEYS:
            continue
        if name not in names:
            if strict:
                raise ConfigError(f'unknown key {key}')
            continue
        if raw is None:
            continue
        values[name] = resolve_threads(raw) if name == 'threads' else _convert(name, raw)
    return values


def load_config(config_file=None, overrides=None, environ=None):
    """
    :param config_file: optional path of a flat key=value file
    :param overrides: dict of field values from command-line flags (None entries ignored)
    :param environ: mapping used instead of os.environ (after load_dotenv)
    :return: RunConfig
    """
    if environ is None:
        load_dotenv()
        environ = os.environ
    values = _from_mapping(environ, strict=False)
    if config_file is not None:
        if not os.path.exists(config_file):
            raise ConfigError(f'config file {config_file} not found')
        values.update(_from_mapping(dotenv_values(config_file), strict=True))
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**values)
