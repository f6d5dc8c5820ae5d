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

"""Blocked Gibbs samplers for diffusion bridges."""

__author__ = "The bridgeblock developers"
__version__ = (0, 1, 0)

ERR_INVALID_ARGS = 100001
ERR_DEGENERATE_INTERVAL = 100002
ERR_UNSUPPORTED = 100003
ERR_UNBOUNDED = 100004
ERR_UNBOUNDED_PHI = 100005
ERR_BUDGET_EXCEEDED = 100006
ERR_RATE_NOT_LESS_THAN_ONE = 100007
ERR_INVALID_RATE = 100008
ERR_NUMERICALLY_SINGULAR = 100009
ERR_DEGENERATE_SERIES = 100010
ERR_INSUFFICIENT_SIGNAL = 100011
ERR_CONFIG = 100012


def version_string():
    return ".".join(map(str, __version__))


class BridgeBlockException(Exception):
    """A bridgeblock exception.

    :ivar child: Underlying exception, if any
    :ivar location: Where the error occurred (block interval, config
        line/column), or None
    """

    def __init__(self, msg, num, child=None, location=None):
        self.args = (msg, num)
        self.child = child
        self.location = location

    def __str__(self):
        if self.location is not None:
            return "%s (at %r)" % (self.args[0], self.location)
        return self.args[0]


class InvalidArgs(BridgeBlockException):

    def __init__(self, msg, child=None, location=None):
        super(InvalidArgs, self).__init__(msg, ERR_INVALID_ARGS, child,
            location)


class DegenerateInterval(BridgeBlockException):
    """Bridge interval with t_b <= t_a."""

    def __init__(self, t_a, t_b):
        super(DegenerateInterval, self).__init__(
            "degenerate interval [%r, %r]" % (t_a, t_b),
            ERR_DEGENERATE_INTERVAL, location=(t_a, t_b))


class Unsupported(BridgeBlockException):
    """Operation has no closed form for this model kind."""

    def __init__(self, msg, child=None, location=None):
        super(Unsupported, self).__init__(msg, ERR_UNSUPPORTED, child,
            location)


class Unbounded(BridgeBlockException):
    """phi has no finite infimum."""

    def __init__(self, msg, child=None, location=None):
        super(Unbounded, self).__init__(msg, ERR_UNBOUNDED, child, location)


class UnboundedPhi(BridgeBlockException):
    """phi is not bounded above; exact simulation is not available."""

    def __init__(self, msg, child=None, location=None):
        super(UnboundedPhi, self).__init__(msg, ERR_UNBOUNDED_PHI, child,
            location)


class BudgetExceeded(BridgeBlockException):
    """The proposal cap of a rejection sampler was hit.

    :ivar max_proposals: The cap that was hit
    :ivar block: Index of the anchor set being updated, if known
    """

    def __init__(self, max_proposals, location=None, block=None):
        super(BudgetExceeded, self).__init__(
            "no proposal accepted within %d trials" % max_proposals,
            ERR_BUDGET_EXCEEDED, location=location)
        self.max_proposals = max_proposals
        self.block = block


class RateNotLessThanOne(BridgeBlockException):

    def __init__(self, rho):
        super(RateNotLessThanOne, self).__init__(
            "convergence rate %r is not below 1" % rho,
            ERR_RATE_NOT_LESS_THAN_ONE)
        self.rho = rho


class InvalidRate(BridgeBlockException):

    def __init__(self, rho):
        super(InvalidRate, self).__init__(
            "no relaxation time for rate %r" % rho, ERR_INVALID_RATE)
        self.rho = rho


class NumericallySingular(BridgeBlockException):

    def __init__(self, msg, child=None, location=None):
        super(NumericallySingular, self).__init__(msg,
            ERR_NUMERICALLY_SINGULAR, child, location)


class DegenerateSeries(BridgeBlockException):
    """Series with zero variance."""

    def __init__(self, label=None):
        super(DegenerateSeries, self).__init__(
            "series %s has zero variance" % (label or ""),
            ERR_DEGENERATE_SERIES)
        self.label = label


class InsufficientSignal(BridgeBlockException):

    def __init__(self, msg):
        super(InsufficientSignal, self).__init__(msg, ERR_INSUFFICIENT_SIGNAL)


class ConfigError(BridgeBlockException):
    """Invalid experiment configuration.

    :ivar key: Dotted key that failed, or None for syntax errors
    :ivar location: (line, column) in the source file, when known
    """

    def __init__(self, msg, key=None, line=None, column=None, child=None):
        location = None
        if line is not None:
            location = (line, column)
        super(ConfigError, self).__init__(msg, ERR_CONFIG, child, location)
        self.key = key

    def __str__(self):
        text = self.args[0]
        if self.key is not None:
            text = "%s: %s" % (self.key, text)
        if self.location is not None:
            line, column = self.location
            if column is None:
                text = "line %d: %s" % (line, text)
            else:
                text = "line %d, column %d: %s" % (line, column, text)
        return text
