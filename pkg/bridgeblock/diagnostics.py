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

"""Chain diagnostics: autocorrelation, effective sample size, KS tests."""

from collections import namedtuple
import csv
import math

import numpy as np
from scipy import stats

from bridgeblock import (
    DegenerateSeries,
    InsufficientSignal,
    InvalidArgs,
    )

# Autocorrelations at or below this are treated as noise when fitting rates.
NOISE_FLOOR = 0.05

MIN_ESS_LENGTH = 4

DiagnosticsRow = namedtuple("DiagnosticsRow",
    ["label", "n", "ess", "taess", "fitted_rate"])


class Series(object):
    """One scalar functional of a chain, one value per sweep."""

    __slots__ = ('values', 'label')

    def __init__(self, values, label=""):
        self.values = np.asarray(values, dtype=float)
        self.label = label

    def __len__(self):
        return len(self.values)

    def __repr__(self):
        return "%s(%r, n=%d)" % (self.__class__.__name__, self.label,
            len(self))


def _values(series):
    if isinstance(series, Series):
        values, label = series.values, series.label
    else:
        values, label = np.asarray(series, dtype=float), None
    if values.ndim != 1:
        raise InvalidArgs("series must be one-dimensional")
    if not np.all(np.isfinite(values)):
        raise InvalidArgs("series %s has non-finite values" % (label or ""))
    return values, label


def _acf(values, label=None):
    """Biased autocorrelation at every lag, via FFT."""
    n = len(values)
    if n == 0 or np.all(values == values[0]):
        raise DegenerateSeries(label)
    x = values - values.mean()
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, size)
    acov = np.fft.irfft(f * np.conjugate(f), size)[:n] / n
    return acov / acov[0]


def autocorrelation(series, max_lag):
    """Autocorrelation estimates at lags 0..max_lag.

    Covariances are divided by N at every lag.

    :raise DegenerateSeries: for a constant series
    """
    values, label = _values(series)
    if not 0 <= max_lag < len(values) / 2:
        raise InvalidArgs("max_lag %r must be below half the length %d" % (
            max_lag, len(values)))
    return _acf(values, label)[:max_lag + 1]


def _integrated_time(rho):
    """1 + 2 sum of autocorrelations, summed over pairs (rho_2k,
    rho_2k+1) until the first negative pair."""
    total = 0.0
    for k in range(0, len(rho) - 1, 2):
        pair = rho[k] + rho[k + 1]
        if pair < 0:
            break
        total += pair
    return 2 * total - 1


def ess(series):
    """Effective sample size N / (1 + 2 sum rho_l), clamped to [1, N]."""
    values, label = _values(series)
    n = len(values)
    if n < MIN_ESS_LENGTH:
        raise InvalidArgs("need at least %d values for an ESS, got %d" % (
            MIN_ESS_LENGTH, n))
    tau = _integrated_time(_acf(values, label))
    if tau <= 0:
        return float(n)
    return float(min(max(n / tau, 1.0), n))


def ess_multichain(chains):
    """Pooled ESS of several chains of equal length, by variogram.

    Autocorrelations are 1 - V_t / (2 var+) with V_t the mean squared lag-t
    difference and var+ the pooled variance estimate.
    """
    x = np.asarray(chains, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise InvalidArgs("need a 2-d array of at least two chains")
    m_chains, n = x.shape
    if n < MIN_ESS_LENGTH:
        raise InvalidArgs("chains too short for an ESS")
    between = ((x.mean(axis=1) - x.mean()) ** 2).sum() / (m_chains - 1)
    within = x.var(axis=1, ddof=1).mean()
    var_plus = within * (n - 1) / n + between
    if var_plus == 0:
        raise DegenerateSeries("pooled")
    rho = np.ones(n)
    t = 1
    while t < n:
        diff = x[:, t:] - x[:, :n - t]
        rho[t] = 1 - (diff ** 2).sum() / (m_chains * (n - t)) / (2 * var_plus)
        if t % 2 == 1 and rho[t - 1] + rho[t] < 0:
            break
        t += 1
    tau = _integrated_time(rho[:t + 1])
    total = m_chains * n
    if tau <= 0:
        return float(total)
    return float(min(max(total / tau, 1.0), total))


def taess(series, elapsed_seconds):
    """Effective samples per second of wall-clock time.

    :param series: Series of values, or an ESS already computed
    """
    if not elapsed_seconds > 0:
        raise InvalidArgs("elapsed time must be positive, got %r" % (
            elapsed_seconds,))
    if np.ndim(series) == 0 and not isinstance(series, Series):
        value = float(series)
    else:
        value = ess(series)
    return value / elapsed_seconds


def ks_statistic(a, b):
    """Two-sample Kolmogorov-Smirnov distance between empirical CDFs."""
    a = _values(a)[0]
    b = _values(b)[0]
    if len(a) == 0 or len(b) == 0:
        raise InvalidArgs("KS statistic needs two nonempty samples")
    return float(stats.ks_2samp(a, b).statistic)


def ks_critical_value(n1, n2, alpha=0.01):
    """Asymptotic critical value of the two-sample KS statistic."""
    return float(stats.kstwobign.isf(alpha) *
                 math.sqrt((n1 + n2) / float(n1 * n2)))


def fit_geometric_rate(autocorr, floor=NOISE_FLOOR):
    """Geometric decay rate of an autocorrelation sequence.

    Fits log rho_l against l by least squares over lags 1, 2, ... up to the
    first one at or below floor.

    :param autocorr: Autocorrelations from lag 0
    :raise InsufficientSignal: with fewer than 3 usable lags
    """
    autocorr = np.asarray(autocorr, dtype=float)
    n = 1
    while n < len(autocorr) and autocorr[n] > floor:
        n += 1
    lags = np.arange(1, n)
    if len(lags) < 3:
        raise InsufficientSignal("only %d lags above %g" % (len(lags), floor))
    slope = np.polyfit(lags, np.log(autocorr[lags]), 1)[0]
    rate = math.exp(slope)
    if rate >= 1:
        raise InsufficientSignal("autocorrelation does not decay")
    return rate


def diagnose(series, elapsed_seconds, label=None):
    """ESS, taESS and fitted rate of a series, as a DiagnosticsRow."""
    values, series_label = _values(series)
    label = label or series_label or ""
    value = ess(values)
    acf = _acf(values, label)[:max(1, len(values) // 2)]
    try:
        rate = fit_geometric_rate(acf)
    except InsufficientSignal:
        rate = float("nan")
    speed = value / elapsed_seconds if elapsed_seconds > 0 else float("nan")
    return DiagnosticsRow(label, len(values), value, speed, rate)


def read_series_csv(f, column=None):
    """Read one column of a CSV file with a header row.

    Lines starting with ``#`` are skipped.

    :param f: File-like object
    :param column: Column name; defaults to the only or last column
    :return: Series
    """
    reader = csv.reader(line for line in f if not line.startswith("#"))
    try:
        header = next(reader)
    except StopIteration:
        raise InvalidArgs("empty series file")
    if column is None:
        index = len(header) - 1
    else:
        try:
            index = header.index(column)
        except ValueError:
            raise InvalidArgs("no column %r in %r" % (column, header))
    return Series([float(row[index]) for row in reader if row],
                  label=header[index])


def write_diagnostics_csv(f, rows, header_lines=()):
    for line in header_lines:
        f.write("# %s\n" % line)
    writer = csv.writer(f, lineterminator="\n")
    writer.writerow(DiagnosticsRow._fields)
    for row in rows:
        writer.writerow(row)
