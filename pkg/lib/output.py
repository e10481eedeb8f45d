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

import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from os import makedirs
from os.path import dirname, exists, join as pjoin

import numpy as np

logger = logging.getLogger(__name__)

STDOUT = '-'
PROFILE_HEADER = ('r', 'value', 'deriv')
MU_HEADER = ('n', 'mu_n', 'eps_n', 'ratio', 'value_gap', 'deriv_mismatch')


def _number(x):
    return repr(float(x))


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def write_atomic(path, data):
    """
    Write bytes to path via a temporary file in the same directory and os.replace.
    path '-' writes to standard output.
    """
    if path == STDOUT:
        sys.stdout.write(data.decode('utf-8'))
        sys.stdout.flush()
        return
    target_dir = dirname(path) or '.'
    if not exists(target_dir):
        makedirs(target_dir)
    fd, tmp = tempfile.mkstemp(dir=target_dir, prefix='.tmp-')
    try:
        with os.fdopen(fd, 'wb') as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if exists(tmp):
            os.remove(tmp)
        raise
    logger.info(f'wrote {path} ({len(data)} bytes)')


def csv_bytes(header, rows):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([_number(x) if isinstance(x, (float, np.floating)) else x for x in row])
    return buffer.getvalue().encode('utf-8')


def write_profile_csv(path, profile):
    rows = zip(profile.nodes, profile.values, profile.derivs)
    write_atomic(path, csv_bytes(PROFILE_HEADER, rows))


def mu_rows(points):
    """ Rows of the mu table; ratio is mu_n / mu_(n-1) """
    rows = []
    for n, point in enumerate(points, start=1):
        ratio = point.lam / points[n - 2].lam if n > 1 else math.nan
        rows.append((n, point.lam, point.epsilon, ratio, point.value_gap, point.deriv_mismatch))
    return rows


def write_mu_table(path, points):
    write_atomic(path, csv_bytes(MU_HEADER, mu_rows(points)))


def write_json(path, report):
    write_atomic(path, (json.dumps(_jsonable(report), indent=2, sort_keys=True) + '\n').encode('utf-8'))


def output_path(out, name):
    """ Target path for one artifact; '-' stays standard output """
    return STDOUT if out == STDOUT else pjoin(out, name)
