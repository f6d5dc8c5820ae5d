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

"""Eigenvalue oracles that do not rely on the analytic spectra.

Sturm-sequence bisection for symmetric tridiagonal matrices and power
iteration for spectral radii of general square matrices.
"""

import numba
import numpy as np

from bridgeblock import InvalidArgs


@numba.jit(nopython=True, cache=True)
def sturm_count(diag, off, x):
    """Number of eigenvalues strictly below x.

    :param diag: Diagonal, length n
    :param off: Off-diagonal, length n - 1
    """
    n = len(diag)
    count = 0
    q = diag[0] - x
    if q == 0.0:
        q = -1e-300
    if q < 0:
        count += 1
    for i in range(1, n):
        q = diag[i] - x - off[i - 1] * off[i - 1] / q
        if q == 0.0:
            q = -1e-300
        if q < 0:
            count += 1
    return count


@numba.jit(nopython=True, cache=True)
def _bisect_all(diag, off, tol):
    n = len(diag)
    radius = np.zeros(n)
    for i in range(n - 1):
        radius[i] += abs(off[i])
        radius[i + 1] += abs(off[i])
    lo0 = np.min(diag - radius)
    hi0 = np.max(diag + radius)
    out = np.empty(n)
    for k in range(n):
        lo = lo0
        hi = hi0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if hi - lo <= tol * max(1.0, abs(mid)):
                break
            if sturm_count(diag, off, mid) > k:
                hi = mid
            else:
                lo = mid
        out[k] = 0.5 * (lo + hi)
    return out


def eigvalsh_tridiagonal(diag, off, tol=1e-14):
    """All eigenvalues of a symmetric tridiagonal matrix, ascending.

    :param diag: Diagonal entries
    :param off: Sub-diagonal entries
    :param tol: Relative bisection tolerance
    """
    diag = np.ascontiguousarray(diag, dtype=float)
    off = np.ascontiguousarray(off, dtype=float)
    if len(diag) == 0 or len(off) != len(diag) - 1:
        raise InvalidArgs("need n diagonal and n - 1 off-diagonal entries")
    return _bisect_all(diag, off, tol)


def power_iteration(matrix, tol=1e-14, max_iter=200000, seed=0):
    """Spectral radius by power iteration.

    The estimate is the growth ||M x|| / ||x|| of a normalised iterate; the
    loop stops once successive estimates agree to a relative tol.

    :return: Tuple with the estimate and the final normalised iterate
    """
    matrix = np.asarray(matrix, dtype=float)
    n = matrix.shape[0]
    rng = np.random.default_rng(seed)
    x = rng.normal(size=n)
    x /= np.linalg.norm(x)
    estimate = 0.0
    for _ in range(max_iter):
        y = matrix @ x
        norm = np.linalg.norm(y)
        if norm == 0:
            # Nilpotent part swallowed the iterate.
            return 0.0, x
        new = float(norm)
        x = y / norm
        if abs(new - estimate) <= tol * new:
            return new, x
        estimate = new
    return estimate, x
