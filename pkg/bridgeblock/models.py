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

"""Diffusion laws dX = b(X) dt + sigma dW.

All samplers work on the unit-volatility process Y = X / sigma, whose drift
is alpha(y) = b(sigma y) / sigma. The quantities needed for path-space
rejection sampling are expressed in those reduced coordinates:

 * alpha, its derivative and a potential A with A' = alpha
 * phi = (alpha**2 + alpha') / 2 and its infimum Phi

Endpoints and paths handed to or returned by the samplers stay in original
coordinates.
"""

import logging
import math

import numpy as np
from scipy import stats

from bridgeblock import (
    InvalidArgs,
    Unbounded,
    UnboundedPhi,
    Unsupported,
    )

logger = logging.getLogger(__name__)

KIND_SCALED_BM = "scaled_bm"
KIND_OU = "ou"
KIND_SINE = "sine"
KIND_USER = "user"

# Grid resolution for the sine model's phi bounds, per period.
SINE_GRID_POINTS = 1 << 16


class DiffusionModel(object):
    """Base class for scalar diffusions with constant volatility.

    Subclasses implement drift, drift_derivative and potential in reduced
    coordinates and provide phi_lower_bound.
    """

    kind = None
    dim = 1
    verified = True

    def __init__(self, sigma):
        if not sigma > 0:
            raise InvalidArgs("sigma must be positive, got %r" % (sigma,))
        self.sigma = float(sigma)

    def to_reduced(self, x):
        return np.asarray(x, dtype=float) / self.sigma

    def from_reduced(self, y):
        return np.asarray(y, dtype=float) * self.sigma

    def drift(self, y):
        raise NotImplementedError(self.drift)

    def drift_derivative(self, y):
        raise NotImplementedError(self.drift_derivative)

    def potential(self, y):
        raise NotImplementedError(self.potential)

    def original_drift(self, x):
        """b(x) in original coordinates."""
        return self.sigma * self.drift(self.to_reduced(x))

    def phi(self, y):
        a = self.drift(y)
        return 0.5 * (a * a + self.drift_derivative(y))

    @property
    def phi_lower_bound(self):
        raise NotImplementedError(self.phi_lower_bound)

    @property
    def phi_upper_bound(self):
        raise UnboundedPhi("phi is not bounded above for %r" % self)

    def transition_density(self, t, x0, xt):
        raise Unsupported("no closed-form transition density for %r" % self)

    def reduced_transition_density(self, t, y0, yt):
        """Transition density of Y = X / sigma."""
        return self.sigma * self.transition_density(t,
            self.from_reduced(y0), self.from_reduced(yt))

    def params(self):
        """Constructor parameters, for config round trips and output."""
        raise NotImplementedError(self.params)

    def describe(self):
        ret = {"kind": self.kind}
        ret.update(self.params())
        return ret

    def __repr__(self):
        return "%s(%s)" % (self.__class__.__name__,
            ", ".join("%s=%r" % kv for kv in sorted(self.params().items())))

    def __eq__(self, other):
        return (type(self) is type(other) and
                self.params() == other.params())

    def __hash__(self):
        return hash((self.kind, tuple(sorted(self.params().items()))))


class ScaledBM(DiffusionModel):
    """Brownian motion with constant drift mu and volatility sigma."""

    kind = KIND_SCALED_BM

    def __init__(self, sigma=1.0, mu=0.0):
        super(ScaledBM, self).__init__(sigma)
        self.mu = float(mu)

    def drift(self, y):
        return np.full_like(np.asarray(y, dtype=float), self.mu / self.sigma)

    def drift_derivative(self, y):
        return np.zeros_like(np.asarray(y, dtype=float))

    def potential(self, y):
        return (self.mu / self.sigma) * np.asarray(y, dtype=float)

    @property
    def phi_lower_bound(self):
        return 0.5 * (self.mu / self.sigma) ** 2

    @property
    def phi_upper_bound(self):
        return self.phi_lower_bound

    def transition_density(self, t, x0, xt):
        return stats.norm.pdf(xt, loc=x0 + self.mu * t,
                              scale=self.sigma * math.sqrt(t))

    def params(self):
        return {"sigma": self.sigma, "mu": self.mu}


class OU(DiffusionModel):
    """Ornstein-Uhlenbeck process dX = -theta X dt + sigma dW."""

    kind = KIND_OU

    def __init__(self, theta=1.0, sigma=1.0):
        super(OU, self).__init__(sigma)
        if not theta > 0:
            raise InvalidArgs("theta must be positive, got %r" % (theta,))
        self.theta = float(theta)

    def drift(self, y):
        return -self.theta * np.asarray(y, dtype=float)

    def drift_derivative(self, y):
        return np.full_like(np.asarray(y, dtype=float), -self.theta)

    def potential(self, y):
        y = np.asarray(y, dtype=float)
        return -0.5 * self.theta * y * y

    @property
    def phi_lower_bound(self):
        return -0.5 * self.theta

    def transition_density(self, t, x0, xt):
        var = self.sigma ** 2 * -math.expm1(-2 * self.theta * t) / (
            2 * self.theta)
        return stats.norm.pdf(xt, loc=x0 * math.exp(-self.theta * t),
                              scale=math.sqrt(var))

    def params(self):
        return {"theta": self.theta, "sigma": self.sigma}


class Sine(DiffusionModel):
    """dX = (a - b sin(omega X)) dt + sigma dW.

    phi is periodic in y with period 2 pi / (omega sigma); both its bounds
    are found by a dense grid over one period, widened by a Lipschitz
    margin so that they remain valid bounds between grid points.
    """

    kind = KIND_SINE

    def __init__(self, a=2.0, b=2.0, omega=8.0, sigma=0.5):
        super(Sine, self).__init__(sigma)
        if omega == 0:
            raise InvalidArgs("omega must be nonzero")
        self.a = float(a)
        self.b = float(b)
        self.omega = float(omega)
        self._bounds = None

    def drift(self, y):
        y = np.asarray(y, dtype=float)
        return (self.a - self.b * np.sin(self.omega * self.sigma * y)) / (
            self.sigma)

    def drift_derivative(self, y):
        y = np.asarray(y, dtype=float)
        return -self.b * self.omega * np.cos(self.omega * self.sigma * y)

    def potential(self, y):
        y = np.asarray(y, dtype=float)
        ws = self.omega * self.sigma
        return (self.a * y + (self.b / ws) * np.cos(ws * y)) / self.sigma

    @property
    def period(self):
        return 2 * math.pi / abs(self.omega * self.sigma)

    def lipschitz_phi(self):
        """Upper bound on |phi'|."""
        alpha_max = (abs(self.a) + abs(self.b)) / self.sigma
        w = abs(self.omega)
        return (alpha_max * abs(self.b) * w +
                abs(self.b) * w * w * self.sigma / 2)

    def _phi_bounds(self):
        if self._bounds is None:
            grid = np.linspace(0.0, self.period, SINE_GRID_POINTS + 1)
            values = self.phi(grid)
            margin = self.lipschitz_phi() * (grid[1] - grid[0]) / 2
            self._bounds = (float(values.min() - margin),
                            float(values.max() + margin))
            logger.debug("phi bounds for %r: %r", self, self._bounds)
        return self._bounds

    @property
    def phi_lower_bound(self):
        return self._phi_bounds()[0]

    @property
    def phi_upper_bound(self):
        return self._phi_bounds()[1]

    def params(self):
        return {"a": self.a, "b": self.b, "omega": self.omega,
                "sigma": self.sigma}


class UserDiffusion(DiffusionModel):
    """Diffusion given by callables in reduced coordinates.

    The caller is trusted to supply a potential with A' = alpha and a
    valid lower bound of phi; nothing is checked.
    """

    kind = KIND_USER
    verified = False

    def __init__(self, drift, drift_derivative, potential,
                 phi_lower_bound=None, phi_upper_bound=None, sigma=1.0,
                 name="user"):
        super(UserDiffusion, self).__init__(sigma)
        self._drift = drift
        self._drift_derivative = drift_derivative
        self._potential = potential
        self._lower = phi_lower_bound
        self._upper = phi_upper_bound
        self.name = name

    def drift(self, y):
        return np.asarray(self._drift(np.asarray(y, dtype=float)), dtype=float)

    def drift_derivative(self, y):
        return np.asarray(self._drift_derivative(np.asarray(y, dtype=float)),
                          dtype=float)

    def potential(self, y):
        return np.asarray(self._potential(np.asarray(y, dtype=float)),
                          dtype=float)

    @property
    def phi_lower_bound(self):
        if self._lower is None or not np.isfinite(self._lower):
            raise Unbounded("no finite lower bound for phi of %s" % self.name)
        return float(self._lower)

    @property
    def phi_upper_bound(self):
        if self._upper is None or not np.isfinite(self._upper):
            return super(UserDiffusion, self).phi_upper_bound
        return float(self._upper)

    def params(self):
        return {"name": self.name, "sigma": self.sigma}


def drift(model, x):
    """Reduced drift alpha(x)."""
    return model.drift(x)


def phi(model, x):
    return model.phi(x)


def phi_lower_bound(model):
    return model.phi_lower_bound


def phi_upper_bound(model):
    return model.phi_upper_bound


def transition_density(model, t, x0, xt):
    if not t > 0:
        raise InvalidArgs("transition time must be positive, got %r" % (t,))
    return model.transition_density(t, x0, xt)


def is_gaussian(model):
    return isinstance(model, (ScaledBM, OU))


_KINDS = {
    KIND_SCALED_BM: ScaledBM,
    "bm": ScaledBM,
    KIND_OU: OU,
    KIND_SINE: Sine,
    }


def model_from_spec(spec):
    """Build a model from a mapping such as ``{"kind": "ou", "theta": 1}``.

    :param spec: Mapping with a ``kind`` key and constructor parameters
    :return: DiffusionModel
    :raise InvalidArgs: on unknown kinds or parameters
    """
    spec = dict(spec)
    try:
        kind = spec.pop("kind")
    except KeyError:
        raise InvalidArgs("model needs a kind")
    try:
        cls = _KINDS[str(kind).lower()]
    except KeyError:
        raise InvalidArgs("unknown model kind %r (expected one of %s)" % (
            kind, ", ".join(sorted(_KINDS))))
    try:
        return cls(**spec)
    except (TypeError, ValueError) as e:
        raise InvalidArgs("bad parameters for %s model: %s" % (kind, e),
                          child=e)
