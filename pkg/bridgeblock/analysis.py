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

"""Convergence rates and costs of blocked samplers for Gaussian bridges.

For Brownian motion and the Ornstein-Uhlenbeck process the knot vector is
Gaussian with a tridiagonal precision matrix, and a Gibbs sweep over the
knots is an affine AR(1) map. This module computes the conditional laws,
the partial correlations c(delta), the rates of the three updating
schemes and the cost models built on them.
"""

from collections import namedtuple
import logging
import math

import numba
import numpy as np
from scipy import linalg

from bridgeblock import (
    InvalidArgs,
    InvalidRate,
    NumericallySingular,
    RateNotLessThanOne,
    Unsupported,
    )
from bridgeblock.blocking import (
    CHECKERBOARD,
    LEXICOGRAPHIC,
    RANDOM,
    KnotChain,
    scheme_partition,
    )
from bridgeblock.bridge import expected_cost_rej
from bridgeblock.diagnostics import (
    autocorrelation,
    fit_geometric_rate,
    )
from bridgeblock.models import OU, ScaledBM
from bridgeblock.rng import as_generator
from bridgeblock.tridiag import power_iteration

logger = logging.getLogger(__name__)

# Below this theta*delta, and above the overflow-safe limit, the OU partial
# correlation is taken from its closed form 1 / (2 cosh(theta delta)).
OU_SMALL_ARG = 1e-3
OU_LARGE_ARG = 30.0

TRIDIAGONAL_TOLERANCE = 1e-8

# Sweeps simulated per batch of pre-drawn normals.
KNOT_CHAIN_CHUNK = 1 << 16


RateReport = namedtuple("RateReport", ["scheme", "m", "T", "delta",
    "c_delta", "lambda_max", "rho", "relaxation_time", "flag"])


def _ou_kernel(s, t, theta, sigma):
    """Cov(X_s, X_t) for an OU process started at a fixed point."""
    lo = np.minimum(s, t)
    hi = np.maximum(s, t)
    return (sigma * sigma / (2 * theta) * np.exp(-theta * (hi - lo)) *
            -np.expm1(-2 * theta * lo))


def conditional_cov_ou(s, t, T, theta, sigma):
    """Cov[(X_s, X_t) | X_0, X_T] for the OU process.

    Written with exp and expm1 rather than sinh ratios, so that it neither
    overflows for large theta T nor cancels for small theta.

    :return: 2x2 covariance matrix
    """
    if not 0 < s < t < T:
        raise InvalidArgs("need 0 < s < t < T, got (%r, %r, %r)" % (s, t, T))
    if not (theta > 0 and sigma > 0):
        raise InvalidArgs("theta and sigma must be positive")
    kst = np.array([[_ou_kernel(s, s, theta, sigma),
                     _ou_kernel(s, t, theta, sigma)],
                    [_ou_kernel(s, t, theta, sigma),
                     _ou_kernel(t, t, theta, sigma)]])
    k_end = np.array([_ou_kernel(s, T, theta, sigma),
                      _ou_kernel(t, T, theta, sigma)])
    return kst - np.outer(k_end, k_end) / _ou_kernel(T, T, theta, sigma)


def partial_corr(model, delta):
    """Partial correlation c(delta) of neighbouring knots.

    1/2 for Brownian motion at every spacing. For the OU process it is the
    conditional correlation of (X_d, X_2d) given X_0 and X_3d.
    """
    if not delta > 0:
        raise InvalidArgs("delta must be positive, got %r" % (delta,))
    if isinstance(model, ScaledBM):
        return 0.5
    elif isinstance(model, OU):
        x = model.theta * delta
        if x < OU_SMALL_ARG or x > OU_LARGE_ARG:
            return 0.5 / math.cosh(min(x, 700.0))
        cov = conditional_cov_ou(delta, 2 * delta, 3 * delta, model.theta, 1.0)
        return float(cov[0, 1] / math.sqrt(cov[0, 0] * cov[1, 1]))
    raise Unsupported("no partial correlation for %r" % model)


def build_matrix_A(m, c):
    """Symmetric tridiagonal Toeplitz matrix, zero diagonal, off-diagonal c."""
    if m < 1:
        raise InvalidArgs("m must be at least 1")
    column = np.zeros(m)
    if m > 1:
        column[1] = c
    return linalg.toeplitz(column)


def lambda_max_A(m, c):
    if m == 1:
        # cos(pi / 2) is not exactly zero in floating point.
        return 0.0
    return 2 * abs(c) * math.cos(math.pi / (m + 1))


def spectrum_A(m, c):
    """All eigenvalues of build_matrix_A(m, c), ascending."""
    ls = np.arange(1, m + 1)
    return np.sort(-2 * c * np.cos(np.pi * ls / (m + 1)))


def convergence_rate(scheme, m, c):
    """L2 convergence rate of a blocked Gibbs sampler.

    4 c^2 cos^2(pi / (m + 1)) for checkerboard and lexicographic updating,
    [(m - 1 + 2|c| cos(pi / (m + 1))) / m]^m for random updating.
    """
    if m < 1:
        raise InvalidArgs("m must be at least 1")
    lam = lambda_max_A(m, c)
    if scheme in (CHECKERBOARD, LEXICOGRAPHIC):
        rho = lam * lam
    elif scheme == RANDOM:
        rho = ((m - 1 + lam) / m) ** m
    else:
        raise InvalidArgs("unknown updating scheme %r" % (scheme,))
    if rho >= 1:
        raise RateNotLessThanOne(rho)
    return rho


def is_exact_refresh(rho):
    return rho <= 0


def relaxation_time(rho):
    """-1 / log(rho); 0 for rho <= 0, where one sweep gives an exact draw."""
    if rho >= 1:
        raise InvalidRate(rho)
    if is_exact_refresh(rho):
        return 0.0
    return -1.0 / math.log(rho)


def rate_report(model, scheme, m, T):
    delta = T / (m + 1)
    c = partial_corr(model, delta)
    rho = convergence_rate(scheme, m, c)
    return RateReport(scheme, m, T, delta, c, lambda_max_A(m, c), rho,
                      relaxation_time(rho),
                      "exact" if is_exact_refresh(rho) else "")


def asymptotic_rates(m, T, model):
    """Leading-order rates for many knots.

    With x = (pi / (m + 1))^2 + (theta delta)^2 (theta = 0 for Brownian
    motion) the deterministic scans converge at 1 - x and random updating
    at 1 - x / 2.
    """
    delta = T / (m + 1)
    theta = model.theta if isinstance(model, OU) else 0.0
    if not isinstance(model, (ScaledBM, OU)):
        raise Unsupported("no rate expansion for %r" % model)
    x = (math.pi / (m + 1)) ** 2 + (theta * delta) ** 2
    return {CHECKERBOARD: 1 - x, LEXICOGRAPHIC: 1 - x, RANDOM: 1 - x / 2}


def cost_sweep(T, m, model, c5=None, c6=1.0, x0=0.0, xT=0.0):
    """Expected cost of one sweep, m C_rej(2 delta).

    Blocks are costed with endpoints x0, xT. With c5 given the small-delta
    regime c5 T is returned instead.
    """
    if m < 1:
        raise InvalidArgs("m must be at least 1")
    if c5 is not None:
        return c5 * T
    delta = T / (m + 1)
    return m * expected_cost_rej(model, 2 * delta, x0, xT, c6=c6)


def cost_blocking(T, m, model, scheme, **kwargs):
    """Relaxation time times the cost of a sweep.

    At least one sweep is always paid for, so rates with relaxation time
    below 1 count as 1.
    """
    rho = convergence_rate(scheme, m, partial_corr(model, T / (m + 1)))
    return max(1.0, relaxation_time(rho)) * cost_sweep(T, m, model, **kwargs)


def optimal_m_by_scan(T, model, scheme, m_max=200, **kwargs):
    """m in 1..m_max minimising cost_blocking."""
    costs = [cost_blocking(T, m, model, scheme, **kwargs)
             for m in range(1, m_max + 1)]
    return int(np.argmin(costs)) + 1


def optimal_num_knots(T, c1=10.0, chi1=0.0):
    """ceil(c1 T^(1 + chi1))."""
    if not (c1 > 0 and chi1 >= 0 and T > 0):
        raise InvalidArgs("need c1 > 0, chi1 >= 0 and T > 0")
    # Round off representation noise such as 10 * 2.0000000000000004.
    return max(1, int(math.ceil(round(c1 * T ** (1 + chi1), 9))))


class GaussianKnotLaw(object):
    """Gaussian law of the knot vector.

    :ivar mean: Mean vector
    :ivar covariance: Covariance matrix
    :ivar precision: Inverse covariance
    """

    def __init__(self, mean, covariance):
        self.mean = np.asarray(mean, dtype=float)
        covariance = np.asarray(covariance, dtype=float)
        self.covariance = 0.5 * (covariance + covariance.T)
        try:
            factor = linalg.cho_factor(self.covariance)
        except linalg.LinAlgError as e:
            raise NumericallySingular("knot covariance is not positive "
                                      "definite", child=e)
        precision = linalg.cho_solve(factor, np.eye(len(self.mean)))
        self.precision = 0.5 * (precision + precision.T)

    @property
    def m(self):
        return len(self.mean)

    def partial_correlations(self):
        d = np.sqrt(np.diag(self.precision))
        return -self.precision / np.outer(d, d)

    def tridiagonality_defect(self):
        """Largest entry off the three central diagonals, relative to the
        largest entry overall."""
        m = self.m
        mask = np.abs(np.subtract.outer(np.arange(m), np.arange(m))) > 1
        if not mask.any():
            return 0.0
        return float(np.abs(self.precision[mask]).max() /
                     np.abs(self.precision).max())

    def sample(self, rng, size=None):
        rng = as_generator(rng)
        return rng.multivariate_normal(self.mean, self.covariance, size=size,
                                       method="cholesky")


def bridge_gram(model, x0, times):
    """Mean and covariance of the unconditioned process at given times.

    The process starts at x0 at time 0; original coordinates.
    """
    times = np.asarray(times, dtype=float)
    s, t = np.meshgrid(times, times, indexing="ij")
    if isinstance(model, ScaledBM):
        return (x0 + model.mu * times,
                model.sigma ** 2 * np.minimum(s, t))
    elif isinstance(model, OU):
        return (x0 * np.exp(-model.theta * times),
                _ou_kernel(s, t, model.theta, model.sigma))
    raise Unsupported("%r is not a Gaussian process" % model)


def knot_law_gaussian(model, x0, xT, T, anchors):
    """Law of the knots given X_0 = x0 and X_T = xT."""
    anchors = np.asarray(anchors, dtype=float)
    if (len(anchors) == 0 or anchors[0] <= 0 or anchors[-1] >= T or
            np.any(np.diff(anchors) <= 0)):
        raise InvalidArgs("anchors must increase strictly within (0, T)")
    mean, cov = bridge_gram(model, x0, np.append(anchors, T))
    cmean = mean[:-1] + cov[-1, :-1] * (xT - mean[-1]) / cov[-1, -1]
    ccov = cov[:-1, :-1] - np.outer(cov[-1, :-1], cov[-1, :-1]) / cov[-1, -1]
    law = GaussianKnotLaw(cmean, ccov)
    defect = law.tridiagonality_defect()
    if defect > TRIDIAGONAL_TOLERANCE:
        logger.warning("knot precision off-tridiagonal by %g", defect)
    return law


def _set_map(law, anchor_set):
    """Affine conditional-mean map x -> M x + v for updating a set."""
    m = law.m
    S = np.array(anchor_set, dtype=int)
    rest = np.setdiff1d(np.arange(m), S)
    lam = law.precision
    M = np.eye(m)
    v = np.zeros(m)
    M[S, :] = 0.0
    if len(rest):
        coupling = linalg.solve(lam[np.ix_(S, S)], lam[np.ix_(S, rest)],
                                assume_a="pos")
        M[np.ix_(S, rest)] = -coupling
        v[S] = law.mean[S] + coupling @ law.mean[rest]
    else:
        v[S] = law.mean[S]
    return M, v


def gibbs_kernel_B(knot_law, scheme):
    """One-sweep map G -> B G + b + noise of a deterministic scan.

    :return: Tuple (B, b)
    :raise Unsupported: for random updating, whose map varies per sweep
    """
    if scheme == RANDOM:
        raise Unsupported("the random scheme has no fixed sweep map")
    m = knot_law.m
    B = np.eye(m)
    b = np.zeros(m)
    for anchor_set in scheme_partition(scheme, m):
        M, v = _set_map(knot_law, anchor_set)
        B = M @ B
        b = M @ b + v
    return B, b


def mean_update_operator(knot_law):
    """Expected single-site map of random updating, (1/m) sum_i M_i."""
    m = knot_law.m
    return sum(_set_map(knot_law, (i,))[0] for i in range(m)) / m


def n_step_moments(B, b, Sigma, G, n):
    """Mean and covariance of the knots n sweeps after starting at G."""
    m = len(b)
    Bn = np.linalg.matrix_power(B, n)
    mean = Bn @ G + np.linalg.solve(np.eye(m) - B, (np.eye(m) - Bn) @ b)
    return mean, Sigma - Bn @ Sigma @ Bn.T


def spectral_radius(matrix):
    return power_iteration(matrix)[0]


def slowest_mode(knot_law, scheme):
    """Dominant eigenvalue and left eigenvector of the expected sweep map.

    Projecting the chain on the eigenvector gives a scalar series whose
    autocorrelation decays geometrically at the returned eigenvalue.
    """
    if scheme == RANDOM:
        op = np.linalg.matrix_power(mean_update_operator(knot_law),
                                    knot_law.m)
    else:
        op = gibbs_kernel_B(knot_law, scheme)[0]
    vals, vecs = np.linalg.eig(op.T)
    k = int(np.argmax(np.abs(vals)))
    w = np.real(vecs[:, k])
    return float(np.abs(vals[k])), w / np.linalg.norm(w)


@numba.jit(nopython=True, nogil=True, cache=True)
def _knot_chain_kernel(mu, prec_diag, prec_off, order, z, state, out):
    n, k = order.shape
    m = len(mu)
    for s in range(n):
        for u in range(k):
            i = order[s, u]
            acc = 0.0
            if i > 0:
                acc += prec_off[i - 1] * (state[i - 1] - mu[i - 1])
            if i < m - 1:
                acc += prec_off[i] * (state[i + 1] - mu[i + 1])
            state[i] = (mu[i] - acc / prec_diag[i] +
                        z[s, u] / math.sqrt(prec_diag[i]))
        for i in range(m):
            out[s, i] = state[i]


def simulate_knot_chain(knot_law, scheme, n_sweeps, rng, initial=None):
    """Run the knot-only Gibbs chain with single-site Gaussian updates.

    Uses the tridiagonal part of the precision; within a checkerboard half
    the sites are then conditionally independent and their order does not
    matter. Starts from a stationary draw unless initial is given.

    :return: KnotChain
    """
    rng = as_generator(rng)
    m = knot_law.m
    mu = knot_law.mean
    prec = knot_law.precision
    prec_diag = np.ascontiguousarray(np.diag(prec))
    prec_off = np.ascontiguousarray(np.diag(prec, -1))
    if scheme == RANDOM:
        sweep_order = None
    else:
        sweep_order = np.array([i for s in scheme_partition(scheme, m)
                                for i in s], dtype=np.int64)
    if initial is None:
        state = np.array(knot_law.sample(rng), dtype=float)
    else:
        state = np.array(initial, dtype=float)
    out = np.empty((n_sweeps, m))
    for start in range(0, n_sweeps, KNOT_CHAIN_CHUNK):
        n = min(KNOT_CHAIN_CHUNK, n_sweeps - start)
        if sweep_order is None:
            order = rng.integers(0, m, size=(n, m))
        else:
            order = np.tile(sweep_order, (n, 1))
        z = rng.standard_normal((n, m))
        _knot_chain_kernel(mu, prec_diag, prec_off, order, z, state,
                           out[start:start + n])
    return KnotChain.from_arrays(out)


def empirical_rate(knot_law, scheme, n_sweeps, rng, max_lag=None):
    """Fitted geometric decay of the slowest mode of a simulated chain."""
    chain = simulate_knot_chain(knot_law, scheme, n_sweeps, rng)
    _, w = slowest_mode(knot_law, scheme)
    series = chain.knots @ w
    if max_lag is None:
        max_lag = min(1000, len(series) // 2 - 1)
    return fit_geometric_rate(autocorrelation(series, max_lag))
