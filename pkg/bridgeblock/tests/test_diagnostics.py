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

"""Tests for bridgeblock.diagnostics."""

from io import StringIO
import math

import numpy as np

from bridgeblock import (
    DegenerateSeries,
    InsufficientSignal,
    InvalidArgs,
    )
from bridgeblock.diagnostics import (
    DiagnosticsRow,
    Series,
    autocorrelation,
    diagnose,
    ess,
    ess_multichain,
    fit_geometric_rate,
    ks_critical_value,
    ks_statistic,
    read_series_csv,
    taess,
    write_diagnostics_csv,
    )
from bridgeblock.tests import TestCase


def ar1(phi, n, seed, chains=None):
    rng = np.random.default_rng(seed)
    shape = (n,) if chains is None else (chains, n)
    z = rng.standard_normal(shape)
    x = np.empty(shape)
    x[..., 0] = z[..., 0] / math.sqrt(1 - phi * phi)
    for t in range(1, n):
        x[..., t] = phi * x[..., t - 1] + z[..., t]
    return x


class TestAutocorrelation(TestCase):

    def test_lag_zero(self):
        acf = autocorrelation(np.random.default_rng(0).normal(size=100), 10)
        self.assertEqual(11, len(acf))
        self.assertAlmostEqual(1.0, acf[0])

    def test_biased_estimator(self):
        # Covariances are divided by N, not N - l.
        values = np.array([1.0, -1.0, 1.0, -1.0])
        self.assertArrayAlmostEqual([1.0, -0.75], autocorrelation(values, 1))

    def test_ar1(self):
        acf = autocorrelation(ar1(0.6, 20000, 1), 3)
        self.assertArrayAlmostEqual([1.0, 0.6, 0.36, 0.216], acf, atol=0.03)

    def test_max_lag_limit(self):
        self.assertRaises(InvalidArgs, autocorrelation, np.arange(10.0), 5)

    def test_constant(self):
        self.assertRaises(DegenerateSeries, autocorrelation, np.ones(10), 2)

    def test_non_finite(self):
        self.assertRaises(InvalidArgs, autocorrelation,
                          [1.0, float("nan"), 2.0, 3.0], 1)


class TestESS(TestCase):

    def test_white_noise(self):
        value = ess(np.random.default_rng(2).normal(size=5000))
        self.assertWithin(value, 4000, 5000)

    def test_ar1(self):
        # N (1 - phi) / (1 + phi)
        value = ess(Series(ar1(0.8, 40000, 3), "x"))
        self.assertWithin(value / (40000 / 9.0), 0.7, 1.3)

    def test_clamped(self):
        values = np.tile([1.0, -1.0], 50)
        self.assertEqual(100.0, ess(values))

    def test_too_short(self):
        self.assertRaises(InvalidArgs, ess, [1.0, 2.0, 3.0])

    def test_multichain(self):
        chains = ar1(0.8, 5000, 4, chains=4)
        value = ess_multichain(chains)
        self.assertWithin(value / (20000 / 9.0), 0.7, 1.3)

    def test_multichain_needs_chains(self):
        self.assertRaises(InvalidArgs, ess_multichain, np.zeros(10))
        self.assertRaises(DegenerateSeries, ess_multichain, np.ones((2, 10)))

    def test_taess(self):
        self.assertEqual(50.0, taess(100.0, 2.0))
        values = np.random.default_rng(5).normal(size=1000)
        self.assertAlmostEqual(ess(values) / 4.0, taess(values, 4.0))
        self.assertRaises(InvalidArgs, taess, 100.0, 0.0)


class TestKS(TestCase):

    def test_identical(self):
        self.assertEqual(0.0, ks_statistic([1, 2, 3], [3, 2, 1]))

    def test_disjoint(self):
        self.assertEqual(1.0, ks_statistic([1, 2], [3, 4, 5]))

    def test_partial(self):
        self.assertAlmostEqual(0.5, ks_statistic([1, 2, 3, 4], [3, 4, 5, 6]))

    def test_critical_value(self):
        self.assertAlmostEqual(1.6276 * math.sqrt(2 / 1000.0),
                               ks_critical_value(1000, 1000), places=4)
        self.assertTrue(ks_critical_value(100, 100, 0.001) >
                        ks_critical_value(100, 100, 0.05))

    def test_same_law_passes(self):
        rng = np.random.default_rng(6)
        a = rng.normal(size=2000)
        b = rng.normal(size=2000)
        self.assertTrue(ks_statistic(a, b) <
                        ks_critical_value(2000, 2000, alpha=0.001))

    def test_empty(self):
        self.assertRaises(InvalidArgs, ks_statistic, [], [1.0])

    def test_matches_empirical_cdfs(self):
        rng = np.random.default_rng(7)
        a = np.sort(rng.normal(size=300))
        b = np.sort(rng.normal(0.2, 1.1, size=170))
        pooled = np.concatenate([a, b])
        gap = np.abs(np.searchsorted(a, pooled, side="right") / len(a) -
                     np.searchsorted(b, pooled, side="right") / len(b))
        self.assertAlmostEqual(gap.max(), ks_statistic(a, b), places=12)


class TestRateFit(TestCase):

    def test_exact_geometric(self):
        acf = 0.7 ** np.arange(20)
        self.assertAlmostEqual(0.7, fit_geometric_rate(acf))

    def test_stops_at_floor(self):
        acf = np.concatenate([0.5 ** np.arange(6), [0.9, 0.9]])
        self.assertAlmostEqual(0.5, fit_geometric_rate(acf))

    def test_insufficient(self):
        self.assertRaises(InsufficientSignal, fit_geometric_rate,
                          [1.0, 0.3, 0.01, 0.0])

    def test_ar1_series(self):
        acf = autocorrelation(ar1(0.5, 50000, 7), 10)
        self.assertAlmostEqual(0.5, fit_geometric_rate(acf), delta=0.05)


class TestDiagnose(TestCase):

    def test_row(self):
        row = diagnose(Series(ar1(0.5, 4000, 8), "midpoint"), 2.0)
        self.assertIsInstance(row, DiagnosticsRow)
        self.assertEqual("midpoint", row.label)
        self.assertEqual(4000, row.n)
        self.assertAlmostEqual(row.ess / 2.0, row.taess)
        self.assertAlmostEqual(0.5, row.fitted_rate, delta=0.1)

    def test_no_signal(self):
        row = diagnose(np.random.default_rng(9).normal(size=5000), 1.0, "x")
        self.assertTrue(math.isnan(row.fitted_rate))


class TestCSV(TestCase):

    def test_read_series(self):
        f = StringIO("# seed=1\nsweep,k1,midpoint\n1,0.5,0.25\n2,0.6,0.35\n")
        series = read_series_csv(f)
        self.assertEqual("midpoint", series.label)
        self.assertArrayAlmostEqual([0.25, 0.35], series.values)
        f.seek(0)
        self.assertArrayAlmostEqual([0.5, 0.6],
                                    read_series_csv(f, "k1").values)

    def test_read_missing_column(self):
        self.assertRaises(InvalidArgs, read_series_csv,
                          StringIO("sweep,k1\n1,2\n"), "k2")
        self.assertRaises(InvalidArgs, read_series_csv, StringIO(""))

    def test_write(self):
        f = StringIO()
        write_diagnostics_csv(f, [DiagnosticsRow("x", 10, 5.0, 2.5, 0.5)],
                              header_lines=["seed=3"])
        self.assertEqual("# seed=3\nlabel,n,ess,taess,fitted_rate\n"
                         "x,10,5.0,2.5,0.5\n", f.getvalue())
