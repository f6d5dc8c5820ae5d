# Copyright (C) 2024 The bridgeblock developers

# This program is free software; you can redistribute it and/or modify
# it under the terms of the GNU Lesser General Public License as published by
# the Free Software Foundation; either version 2.1 of the License, or
# (at your option) any later version.

# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU Lesser General Public License for more details.

# You should have received a copy of the GNU Lesser General Public License
# along with this program; if not, write to the Free Software
# Foundation, Inc., 51 Franklin St, Fifth Floor, Boston, MA 02110-1301, USA

"""Tests for bridgeblock."""

__author__ = 'The bridgeblock developers'
__docformat__ = 'restructuredText'

import os
import shutil
import stat
import tempfile
import unittest

import numpy as np

from bridgeblock.config import parse_config

__all__ = ['TestCase', 'TestCaseInTempDir', 'test_suite']


def rmtree_with_readonly(path):
    """Simple wrapper for shutil.rmtree that can remove read-only files.

    In Windows a read-only file cannot be removed, and shutil.rmtree fails.
    """
    def force_rm_handle(remove_path, path, excinfo):
        os.chmod(path, os.stat(path).st_mode | stat.S_IWUSR | stat.S_IWGRP |
            stat.S_IWOTH)
        remove_path(path)
    shutil.rmtree(path, onerror=force_rm_handle)


class TestCase(unittest.TestCase):
    """Base test case.

    :note: Adds assertArrayAlmostEqual and assertWithin.
    """

    def assertArrayAlmostEqual(self, expected, actual, atol=1e-12,
                               rtol=0.0, msg=None):
        """Fail unless two arrays agree elementwise within tolerances."""
        expected = np.asarray(expected, dtype=float)
        actual = np.asarray(actual, dtype=float)
        if expected.shape != actual.shape:
            self.fail(msg or "shape %r != %r" % (expected.shape,
                                                 actual.shape))
        if not np.allclose(actual, expected, atol=atol, rtol=rtol):
            self.fail(msg or "%r != %r (atol=%g, rtol=%g)" % (
                expected, actual, atol, rtol))

    def assertWithin(self, value, lo, hi, msg=None):
        if not lo <= value <= hi:
            self.fail(msg or "%r is not within [%r, %r]" % (value, lo, hi))


class TestCaseInTempDir(TestCase):
    """Test case that runs in a temporary directory."""

    def setUp(self):
        TestCase.setUp(self)
        self._oldcwd = os.getcwd()
        self.test_dir = tempfile.mkdtemp()
        os.chdir(self.test_dir)

    def tearDown(self):
        TestCase.tearDown(self)
        os.chdir(self._oldcwd)
        rmtree_with_readonly(self.test_dir)

    def build_tree(self, files):
        """Create a directory tree.

        :param files: Dictionary mapping names to contents; None contents
            make a directory.
        """
        for name, contents in files.items():
            if contents is None:
                os.mkdir(name)
            else:
                with open(name, "w") as f:
                    f.write(contents)

    def make_config(self, text, fmt="toml"):
        """Parse text into an ExperimentConfig writing to the test dir."""
        config = parse_config(text, fmt)
        config.output_dir = os.path.join(self.test_dir, "out")
        return config


def test_suite():
    names = [
        'analysis',
        'blocking',
        'bridge',
        'cli',
        'config',
        'core',
        'diagnostics',
        'models',
        'rng',
        'tridiag',
        ]
    module_names = ['bridgeblock.tests.test_' + name for name in names]
    result = unittest.TestSuite()
    loader = unittest.TestLoader()
    suite = loader.loadTestsFromNames(module_names)
    result.addTests(suite)
    return result
