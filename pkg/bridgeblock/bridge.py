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

"""Brownian-bridge proposals and path-space rejection sampling."""

import logging
import math

import numba
import numpy as np
from scipy.integrate import trapezoid

from bridgeblock import (
    BudgetExceeded,
    DegenerateInterval,
    InvalidArgs,
    UnboundedPhi,
    )

logger = logging.getLogger(__name__)

APPROXIMATE = "approximate"
EXACT = "exact"
VARIANTS = (APPROXIMATE, EXACT)

CONSTANT_WIDTH = "constant_width"

DEFAULT_MESH_WIDTH = 1e-3
DEFAULT_MAX_PROPOSALS = 10 ** 7


class MeshSpec(object):
    """Constant-width time mesh.

    :ivar width: Target spacing h; each piece of duration d is cut into
        ceil(d / h) equal steps
    """

    policy = CONSTANT_WIDTH

    def __init__(self, width=DEFAULT_MESH_WIDTH):
        if not width > 0:
            raise InvalidArgs("mesh width must be positive, got %r" % (width,))
        self.width = float(width)

    def pieces(self, t_a, t_b, breakpoints=()):
        """Meshes of the pieces of [t_a, t_b] cut at breakpoints.

        Consecutive pieces share their boundary point.
        """
        if not t_b > t_a:
            raise DegenerateInterval(t_a, t_b)
        cuts = [t_a]
        cuts.extend(sorted(float(t) for t in breakpoints if t_a < t < t_b))
        cuts.append(t_b)
        ret = []
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            n = max(1, int(math.ceil((hi - lo) / self.width)))
            ret.append(np.linspace(lo, hi, n + 1))
        return ret

    def grid(self, t_a, t_b, breakpoints=()):
        """Mesh of [t_a, t_b] containing every breakpoint exactly."""
        pieces = self.pieces(t_a, t_b, breakpoints)
        return np.concatenate([pieces[0]] + [p[1:] for p in pieces[1:]])

    def __repr__(self):
        return "%s(width=%r)" % (self.__class__.__name__, self.width)

    def __eq__(self, other):
        return isinstance(other, MeshSpec) and self.width == other.width


class Path(object):
    """A bridge trajectory in original coordinates.

    :ivar times: Strictly increasing times
    :ivar values: Values at times; the first and last are the endpoints
    :ivar proposals_used: Proposals drawn before acceptance
    :ivar variant: APPROXIMATE or EXACT
    """

    __slots__ = ('times', 'values', 'proposals_used', 'variant')

    def __init__(self, times, values, proposals_used=1, variant=APPROXIMATE):
        self.times = np.asarray(times, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if len(self.times) != len(self.values) or len(self.times) < 2:
            raise InvalidArgs("path needs matching times and values, "
                              "at least two of each")
        self.proposals_used = proposals_used
        self.variant = variant

    @property
    def meta(self):
        return {"proposals_used": self.proposals_used,
                "variant": self.variant}

    @property
    def t_a(self):
        return self.times[0]

    @property
    def t_b(self):
        return self.times[-1]

    def value_at(self, t):
        """Value at t, linearly interpolated between mesh points."""
        return float(np.interp(t, self.times, self.values))

    def split(self, cuts):
        """Split at the given times, which must lie on the mesh.

        :return: List of len(cuts) + 1 paths sharing their boundary points
        """
        idx = [0]
        for t in cuts:
            i = int(np.searchsorted(self.times, t))
            if i >= len(self.times) or self.times[i] != t:
                raise InvalidArgs("time %r is not on the path mesh" % (t,))
            idx.append(i)
        idx.append(len(self.times) - 1)
        return [Path(self.times[lo:hi + 1], self.values[lo:hi + 1],
                     self.proposals_used, self.variant)
                for lo, hi in zip(idx[:-1], idx[1:])]

    def __len__(self):
        return len(self.times)

    def __repr__(self):
        return "<%s on [%r, %r] with %d points>" % (self.__class__.__name__,
            self.t_a, self.t_b, len(self))


@numba.jit(nopython=True, nogil=True, cache=True)
def _fill_bridge(times, z, y0, yT):
    """Sequential left-to-right Brownian-bridge fill.

    z holds one standard normal per interior time.
    """
    n = len(times)
    out = np.empty(n)
    out[0] = y0
    tb = times[n - 1]
    for i in range(1, n - 1):
        dt = times[i] - times[i - 1]
        remaining = tb - times[i - 1]
        mean = out[i - 1] + dt / remaining * (yT - out[i - 1])
        var = dt * (tb - times[i]) / remaining
        out[i] = mean + math.sqrt(var) * z[i - 1]
    out[n - 1] = yT
    return out


def bridge_values(times, y0, yT, rng):
    """Unit-volatility Brownian bridge at the given times."""
    times = np.asarray(times, dtype=float)
    return _fill_bridge(times, rng.standard_normal(max(len(times) - 2, 0)),
                        float(y0), float(yT))


def sample_brownian_bridge(x0, xT, t_a, t_b, mesh, rng, breakpoints=()):
    """Brownian bridge from (t_a, x0) to (t_b, xT) on a mesh.

    :param mesh: MeshSpec
    :param rng: numpy Generator
    :param breakpoints: Times that must appear on the mesh
    :return: Path
    """
    if not t_b > t_a:
        raise DegenerateInterval(t_a, t_b)
    times = mesh.grid(t_a, t_b, breakpoints)
    return Path(times, bridge_values(times, x0, xT, rng))


def _excess_integral(model, times, y, phi_min):
    return trapezoid(model.phi(y) - phi_min, times)


def log_accept_prob_approx(path, model):
    """Log of the acceptance probability of a proposal path.

    The integral of phi - Phi along the path is taken with the trapezoid
    rule on the path's own mesh.
    """
    y = model.to_reduced(path.values)
    return min(0.0, -_excess_integral(model, path.times, y,
                                      model.phi_lower_bound))


def _finish(model, times, y, x0, xT, proposals, variant):
    values = model.from_reduced(y)
    values[0] = x0
    values[-1] = xT
    return Path(times, values, proposals, variant)


def sample_bridge_rejection(model, x0, xT, t_a, t_b, mesh, rng,
                            max_proposals=DEFAULT_MAX_PROPOSALS,
                            breakpoints=()):
    """Draw from the bridge law by path-space rejection sampling.

    Brownian-bridge proposals on the mesh are accepted with probability
    exp(-int (phi - Phi) dt), the integral taken by trapezoid rule.

    :param model: DiffusionModel with finite phi_lower_bound
    :param x0: Value at t_a (original coordinates)
    :param xT: Value at t_b
    :param mesh: MeshSpec
    :param rng: numpy Generator
    :param max_proposals: Proposal cap
    :param breakpoints: Times that must appear on the mesh
    :return: Path with proposals_used set
    :raise BudgetExceeded: if no proposal is accepted within the cap
    """
    if not t_b > t_a:
        raise DegenerateInterval(t_a, t_b)
    times = mesh.grid(t_a, t_b, breakpoints)
    y0 = float(model.to_reduced(x0))
    yT = float(model.to_reduced(xT))
    phi_min = model.phi_lower_bound
    nz = len(times) - 2
    for k in range(1, max_proposals + 1):
        y = _fill_bridge(times, rng.standard_normal(nz), y0, yT)
        log_p = -_excess_integral(model, times, y, phi_min)
        if rng.random() < math.exp(min(log_p, 0.0)):
            return _finish(model, times, y, x0, xT, k, APPROXIMATE)
    raise BudgetExceeded(max_proposals, location=(t_a, t_b))


def sample_bridge_exact(model, x0, xT, t_a, t_b, rng, phi_upper_bound=None,
                        at_times=(), max_proposals=DEFAULT_MAX_PROPOSALS):
    """Draw an exact bridge skeleton by Poisson thinning.

    A Poisson process of rate M = sup phi - Phi on [t_a, t_b] x [0, M] is
    laid over a Brownian-bridge proposal; the proposal is accepted when
    every point lies above the graph of phi - Phi. Given the skeleton the
    rest of the path is a Brownian bridge, so the values at ``at_times``
    are drawn together with the skeleton and are exact as well.

    :param phi_upper_bound: Upper bound of phi; defaults to the model's
    :param at_times: Extra times at which the path is wanted
    :return: Path at endpoints, Poisson times and at_times
    :raise UnboundedPhi: if phi is not bounded above
    """
    if not t_b > t_a:
        raise DegenerateInterval(t_a, t_b)
    if phi_upper_bound is None:
        phi_upper_bound = model.phi_upper_bound
    phi_min = model.phi_lower_bound
    rate = phi_upper_bound - phi_min
    if not np.isfinite(rate):
        raise UnboundedPhi("phi is not bounded above for %r" % model)
    rate = max(rate, 0.0)
    duration = t_b - t_a
    y0 = float(model.to_reduced(x0))
    yT = float(model.to_reduced(xT))
    fixed = np.array(sorted(float(t) for t in at_times if t_a < t < t_b))
    for k in range(1, max_proposals + 1):
        kappa = rng.poisson(rate * duration) if rate > 0 else 0
        tp = t_a + duration * rng.random(kappa)
        marks = rate * rng.random(kappa)
        times = np.unique(np.concatenate(([t_a], tp, fixed, [t_b])))
        y = bridge_values(times, y0, yT, rng)
        if kappa == 0:
            return _finish(model, times, y, x0, xT, k, EXACT)
        yp = y[np.searchsorted(times, tp)]
        if np.all(marks > model.phi(yp) - phi_min):
            return _finish(model, times, y, x0, xT, k, EXACT)
    raise BudgetExceeded(max_proposals, location=(t_a, t_b))


def sample_bridge(model, x0, xT, t_a, t_b, mesh, rng, variant=APPROXIMATE,
                  max_proposals=DEFAULT_MAX_PROPOSALS, breakpoints=()):
    """Dispatch to the approximate or exact sampler.

    For the exact variant the breakpoints are instantiated as extra times.
    """
    if variant == APPROXIMATE:
        return sample_bridge_rejection(model, x0, xT, t_a, t_b, mesh, rng,
            max_proposals=max_proposals, breakpoints=breakpoints)
    elif variant == EXACT:
        return sample_bridge_exact(model, x0, xT, t_a, t_b, rng,
            at_times=breakpoints, max_proposals=max_proposals)
    raise InvalidArgs("unknown sampler variant %r" % (variant,))


def expected_acceptance(model, T, x0=0.0, xT=0.0):
    """Closed-form mean acceptance probability of the rejection sampler.

    E[p] = exp(A(y0) - A(yT) + Phi T) p_T(y0, yT) / q_T(y0, yT), with p_T
    the model's and q_T the Brownian transition density, all in reduced
    coordinates.

    :raise Unsupported: for models without a closed-form density
    """
    if not T > 0:
        raise InvalidArgs("T must be positive, got %r" % (T,))
    y0 = float(model.to_reduced(x0))
    yT = float(model.to_reduced(xT))
    p = model.reduced_transition_density(T, y0, yT)
    log_q = -0.5 * math.log(2 * math.pi * T) - (yT - y0) ** 2 / (2 * T)
    if p <= 0:
        return 0.0
    return math.exp(float(model.potential(y0)) - float(model.potential(yT))
                    + model.phi_lower_bound * T + math.log(p) - log_q)


def expected_cost_rej(model, T, x0=0.0, xT=0.0, c6=1.0):
    """Expected cost of one rejection-sampled bridge, c6 T / E[p]."""
    accept = expected_acceptance(model, T, x0, xT)
    if accept <= 0:
        return math.inf
    return c6 * T / accept


def estimate_acceptance(model, T, x0, xT, mesh, rng, n):
    """Monte Carlo estimate of E[p] over n Brownian-bridge proposals.

    :return: Tuple with mean acceptance probability and its standard error
    """
    times = mesh.grid(0.0, T)
    y0 = float(model.to_reduced(x0))
    yT = float(model.to_reduced(xT))
    phi_min = model.phi_lower_bound
    probs = np.empty(n)
    for i in range(n):
        y = bridge_values(times, y0, yT, rng)
        probs[i] = math.exp(min(0.0, -_excess_integral(model, times, y,
                                                       phi_min)))
    return float(probs.mean()), float(probs.std(ddof=1) / math.sqrt(n))


def empirical_cost_rej(model, T, x0, xT, mesh, rng, n, c6=1.0):
    """Cost c6 T / E[p] with E[p] estimated by Monte Carlo."""
    accept, _ = estimate_acceptance(model, T, x0, xT, mesh, rng, n)
    if accept <= 0:
        return math.inf
    return c6 * T / accept
