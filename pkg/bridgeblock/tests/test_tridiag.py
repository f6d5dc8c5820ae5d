# Copyright (C) 2024 The bridgeblock developers
#
# This program is free software; you can redistribute it and/or modify
# it under the terms of the GNU Lesser General Public License as published by
# the Free Software Foundation; either version 2.1 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU Lesser General Public License for more details.
#
# You should have received a copy of the GNU Lesser General Public License
# along with this program; if not, write to the Free Software
# Foundation, Inc., 51 Franklin St, Fifth Floor, Boston, MA 02110-1301, USA

"""Tests for bridgeblock.tridiag."""

import numpy as np
from scipy import linalg

from bridgeblock import InvalidArgs
from bridgeblock.tests import TestCase
from bridgeblock.tridiag import (
    eigvalsh_tridiagonal,
    power_iteration,
    sturm_count,
    )


class TestSturm(TestCase):

    def test_count(self):
        diag = np.array([1.0, 2.0, 3.0])
        off = np.zeros(2)
        self.assertEqual(0, sturm_count(diag, off, 0.5))
        self.assertEqual(2, sturm_count(diag, off, 2.5))
        self.assertEqual(3, sturm_count(diag, off, 10.0))

    def test_eigenvalues_match_dense(self):
        rng = np.random.default_rng(0)
        diag = rng.normal(size=12)
        off = rng.normal(size=11)
        dense = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
        self.assertArrayAlmostEqual(np.linalg.eigvalsh(dense),
                                    eigvalsh_tridiagonal(diag, off),
                                    atol=1e-10)

    def test_matches_lapack(self):
        rng = np.random.default_rng(1)
        diag = rng.uniform(-1, 1, size=30)
        off = rng.uniform(-1, 1, size=29)
        self.assertArrayAlmostEqual(
            linalg.eigh_tridiagonal(diag, off, eigvals_only=True),
            eigvalsh_tridiagonal(diag, off), atol=1e-10)

    def test_toeplitz_closed_form(self):
        m, c = 7, 0.4
        expected = np.sort(-2 * c * np.cos(np.pi * np.arange(1, m + 1) /
                                           (m + 1)))
        self.assertArrayAlmostEqual(expected,
            eigvalsh_tridiagonal(np.zeros(m), np.full(m - 1, c)), atol=1e-12)

    def test_shape_mismatch(self):
        self.assertRaises(InvalidArgs, eigvalsh_tridiagonal, [1.0, 2.0],
                          [1.0, 2.0])
        self.assertRaises(InvalidArgs, eigvalsh_tridiagonal, [], [])


class TestPowerIteration(TestCase):

    def test_symmetric(self):
        matrix = np.array([[2.0, 1.0], [1.0, 2.0]])
        estimate, x = power_iteration(matrix)
        self.assertAlmostEqual(3.0, estimate, places=10)
        self.assertArrayAlmostEqual(np.abs(x), [2 ** -0.5] * 2, atol=1e-6)

    def test_nonsymmetric(self):
        matrix = np.array([[0.5, 0.3], [0.0, 0.2]])
        self.assertAlmostEqual(0.5, power_iteration(matrix)[0], places=8)

    def test_nilpotent(self):
        matrix = np.array([[0.0, 1.0], [0.0, 0.0]])
        self.assertEqual(0.0, power_iteration(matrix)[0])
