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

"""Tests for the bridgeblock exception hierarchy."""

import bridgeblock
from bridgeblock.tests import TestCase


class TestCore(TestCase):

    def test_exc(self):
        self.assertTrue(isinstance(
            bridgeblock.BridgeBlockException("foo", 1), Exception))

    def test_exc_args(self):
        e = bridgeblock.InvalidArgs("bad")
        self.assertEqual(("bad", bridgeblock.ERR_INVALID_ARGS), e.args)
        self.assertEqual("bad", str(e))

    def test_location_in_str(self):
        e = bridgeblock.DegenerateInterval(1.0, 0.5)
        self.assertEqual((1.0, 0.5), e.location)
        self.assertTrue(str(e).endswith("(at (1.0, 0.5))"))

    def test_budget_exceeded(self):
        e = bridgeblock.BudgetExceeded(10, location=(0.0, 1.0), block=2)
        self.assertEqual(10, e.max_proposals)
        self.assertEqual(2, e.block)
        self.assertEqual(bridgeblock.ERR_BUDGET_EXCEEDED, e.args[1])
        self.assertIn("10", str(e))

    def test_config_error_str(self):
        e = bridgeblock.ConfigError("expected int", key="sampler.n_sweeps",
                                    line=3, column=5)
        self.assertEqual("line 3, column 5: sampler.n_sweeps: expected int",
                         str(e))
        self.assertEqual((3, 5), e.location)

    def test_config_error_without_column(self):
        e = bridgeblock.ConfigError("unknown key", key="foo", line=2)
        self.assertEqual("line 2: foo: unknown key", str(e))

    def test_config_error_plain(self):
        self.assertEqual("oops", str(bridgeblock.ConfigError("oops")))

    def test_all_are_bridgeblock_exceptions(self):
        for e in [bridgeblock.Unsupported("x"), bridgeblock.Unbounded("x"),
                  bridgeblock.UnboundedPhi("x"),
                  bridgeblock.RateNotLessThanOne(1.0),
                  bridgeblock.InvalidRate(1.5),
                  bridgeblock.NumericallySingular("x"),
                  bridgeblock.DegenerateSeries("x"),
                  bridgeblock.InsufficientSignal("x")]:
            self.assertIsInstance(e, bridgeblock.BridgeBlockException)

    def test_version_string(self):
        self.assertEqual(".".join(map(str, bridgeblock.__version__)),
                         bridgeblock.version_string())
