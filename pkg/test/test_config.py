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

import unittest
import logging
import os
import tempfile
from os.path import join as pjoin

from unittest.mock import patch

from lib.config import ConfigError, RunConfig, load_config, resolve_threads

logger = logging.getLogger('test_logger')
logger.setLevel(logging.INFO)

formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')

handler = logging.StreamHandler()
handler.setLevel(logging.INFO)

handler.setFormatter(formatter)
logger.addHandler(handler)


class TestRunConfig(unittest.TestCase):

    def test_defaults(self):
        config = load_config(environ={})
        self.assertEqual(config, RunConfig())
        self.assertEqual(config.dim, 3)
        self.assertEqual(config.r0, 0.05)
        self.assertEqual(config.threads, 1)
        self.assertEqual(config.as_dict()['tol_match'], 1e-12)

    def test_validation(self):
        for bad in ({'dim': 2}, {'dim': 10}, {'r0': 1.5}, {'r_max': 20.0}, {'tol_ode': 0.0},
                    {'n_profiles': 0}, {'scan_periods': 1}, {'samples_per_period': 2}, {'threads': 0}):
            with self.assertRaises(ConfigError):
                RunConfig(**bad)


class TestLoadConfig(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def write_file(self, text):
        path = pjoin(self.tmp.name, 'run.env')
        with open(path, 'w') as f:
            f.write(text)
        return path

    def test_environment_values(self):
        environ = {'KS_SELFSIM_DIM': '5', 'KS_SELFSIM_R0': '0.08', 'KS_SELFSIM_LOG_LEVEL': 'DEBUG',
                   'HOME': '/root', 'KS_SELFSIM_SOMETHING_ELSE': '1'}
        config = load_config(environ=environ)
        self.assertEqual(config.dim, 5)
        self.assertEqual(config.r0, 0.08)

    def test_priority(self):
        path = self.write_file('KS_SELFSIM_DIM=4\nKS_SELFSIM_N_PROFILES=2\n')
        config = load_config(path, {'dim': 6, 'r0': None}, environ={'KS_SELFSIM_DIM': '5', 'KS_SELFSIM_R0': '0.03'})
        self.assertEqual(config.dim, 6)
        self.assertEqual(config.n_profiles, 2)
        self.assertEqual(config.r0, 0.03)

    def test_config_file_is_strict(self):
        with self.assertRaises(ConfigError):
            load_config(self.write_file('KS_SELFSIM_NOT_A_FIELD=1\n'), environ={})
        with self.assertRaises(ConfigError):
            load_config(self.write_file('DIM=3\n'), environ={})
        with self.assertRaises(ConfigError):
            load_config(pjoin(self.tmp.name, 'missing.env'), environ={})

    def test_invalid_values(self):
        with self.assertRaises(ConfigError):
            load_config(environ={'KS_SELFSIM_DIM': 'three'})
        with self.assertRaises(ConfigError):
            load_config(environ={'KS_SELFSIM_THREADS': '-2'})

    @patch.dict(os.environ, {'KS_SELFSIM_DIM': '7'})
    @patch('lib.config.load_dotenv')
    def test_process_environment(self, dotenv):
        config = load_config()
        dotenv.assert_called_once()
        self.assertEqual(config.dim, 7)


class TestThreads(unittest.TestCase):

    def test_resolve(self):
        self.assertEqual(resolve_threads(None), 1)
        self.assertEqual(resolve_threads(' '), 1)
        self.assertEqual(resolve_threads('4'), 4)
        with patch('lib.config.os.cpu_count', return_value=12):
            self.assertEqual(resolve_threads('0'), 12)
        with patch('lib.config.os.cpu_count', return_value=None):
            self.assertEqual(resolve_threads(0), 1)
        with self.assertRaises(ConfigError):
            resolve_threads('many')


if __name__ == '__main__':
    unittest.main()
