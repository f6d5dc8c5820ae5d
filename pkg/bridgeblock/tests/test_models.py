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

"""Tests for bridgeblock.models."""

import math

import numpy as np
from scipy import integrate

from bridgeblock import (
    InvalidArgs,
    Unbounded,
    UnboundedPhi,
    Unsupported,
    )
from bridgeblock.models import (
    OU,
    ScaledBM,
    Sine,
    UserDiffusion,
    drift,
    is_gaussian,
    model_from_spec,
    phi,
    phi_lower_bound,
    phi_upper_bound,
    transition_density,
    )
from bridgeblock.tests import TestCase


class TestScaledBM(TestCase):

    def test_reduced_drift(self):
        model = ScaledBM(sigma=2.0, mu=1.0)
        self.assertArrayAlmostEqual([0.5, 0.5], drift(model, [0.0, 3.0]))
        self.assertArrayAlmostEqual([1.0, 1.0],
                                    model.original_drift([0.0, 3.0]))

    def test_phi_is_constant(self):
        model = ScaledBM(sigma=2.0, mu=1.0)
        self.assertAlmostEqual(0.125, phi_lower_bound(model))
        self.assertAlmostEqual(0.125, phi_upper_bound(model))
        self.assertArrayAlmostEqual([0.125] * 3, phi(model, [-1, 0, 5]))

    def test_reduction_round_trip(self):
        model = ScaledBM(sigma=0.5)
        self.assertArrayAlmostEqual([2.0, -4.0], model.to_reduced([1, -2]))
        self.assertArrayAlmostEqual([1.0, -2.0],
                                    model.from_reduced([2.0, -4.0]))

    def test_transition_density(self):
        model = ScaledBM(sigma=2.0, mu=1.0)
        expected = math.exp(-(3.0 - 0.5 - 1.0) ** 2 / (2 * 4.0)) / (
            math.sqrt(2 * math.pi * 4.0))
        self.assertAlmostEqual(expected,
                               transition_density(model, 1.0, 0.5, 3.0))

    def test_invalid_sigma(self):
        self.assertRaises(InvalidArgs, ScaledBM, sigma=0.0)


class TestOU(TestCase):

    def test_phi(self):
        model = OU(theta=2.0)
        self.assertArrayAlmostEqual([-1.0, 1.0], phi(model, [0.0, 1.0]))
        self.assertEqual(-1.0, phi_lower_bound(model))

    def test_phi_not_bounded_above(self):
        self.assertRaises(UnboundedPhi, phi_upper_bound, OU())

    def test_potential_derivative_is_drift(self):
        model = OU(theta=1.5, sigma=0.7)
        y = np.linspace(-2, 2, 9)
        eps = 1e-6
        numeric = (model.potential(y + eps) - model.potential(y - eps)) / (
            2 * eps)
        self.assertArrayAlmostEqual(model.drift(y), numeric, atol=1e-6)

    def test_transition_density_normalised(self):
        model = OU(theta=1.0, sigma=0.8)
        total, _ = integrate.quad(
            lambda x: model.transition_density(0.7, 0.3, x), -10, 10)
        self.assertAlmostEqual(1.0, total, places=8)

    def test_transition_density_moments(self):
        model = OU(theta=1.0, sigma=1.0)
        mean, _ = integrate.quad(
            lambda x: x * model.transition_density(1.0, 2.0, x), -10, 10)
        self.assertAlmostEqual(2.0 * math.exp(-1.0), mean, places=8)

    def test_reduced_density(self):
        model = OU(theta=1.0, sigma=2.0)
        self.assertAlmostEqual(
            2.0 * model.transition_density(0.5, 2.0, 1.0),
            model.reduced_transition_density(0.5, 1.0, 0.5))

    def test_nonpositive_time(self):
        self.assertRaises(InvalidArgs, transition_density, OU(), 0.0, 0, 0)

    def test_invalid_theta(self):
        self.assertRaises(InvalidArgs, OU, theta=-1.0)


class TestSine(TestCase):

    def test_potential_derivative_is_drift(self):
        model = Sine()
        y = np.linspace(-3, 3, 13)
        eps = 1e-6
        numeric = (model.potential(y + eps) - model.potential(y - eps)) / (
            2 * eps)
        self.assertArrayAlmostEqual(model.drift(y), numeric, atol=1e-5)

    def test_bounds_enclose_phi(self):
        model = Sine()
        y = np.random.default_rng(0).uniform(-20, 20, 100000)
        values = model.phi(y)
        self.assertTrue(model.phi_lower_bound <= values.min())
        self.assertTrue(model.phi_upper_bound >= values.max())

    def test_bounds_are_tight(self):
        # alpha = 4 - 4 sin(4 y), alpha' = -16 cos(4 y) for the defaults
        model = Sine()
        y = np.linspace(0, model.period, 200001)
        values = model.phi(y)
        self.assertAlmostEqual(values.min(), model.phi_lower_bound, places=2)
        self.assertAlmostEqual(values.max(), model.phi_upper_bound, places=2)

    def test_period(self):
        model = Sine(omega=8.0, sigma=0.5)
        self.assertAlmostEqual(math.pi / 2, model.period)
        y = np.linspace(0, 1, 7)
        self.assertArrayAlmostEqual(model.phi(y), model.phi(y + model.period),
                                    atol=1e-9)

    def test_no_transition_density(self):
        self.assertRaises(Unsupported, Sine().transition_density, 1.0, 0, 0)

    def test_invalid_omega(self):
        self.assertRaises(InvalidArgs, Sine, omega=0.0)


class TestUserDiffusion(TestCase):

    def _model(self, **kwargs):
        return UserDiffusion(np.tanh, lambda y: 1 - np.tanh(y) ** 2,
                             lambda y: np.log(np.cosh(y)), **kwargs)

    def test_unverified(self):
        self.assertFalse(self._model(phi_lower_bound=0.0).verified)
        self.assertTrue(OU().verified)

    def test_lower_bound_required(self):
        self.assertRaises(Unbounded, lambda: self._model().phi_lower_bound)

    def test_upper_bound_optional(self):
        model = self._model(phi_lower_bound=0.0)
        self.assertRaises(UnboundedPhi, lambda: model.phi_upper_bound)
        model = self._model(phi_lower_bound=0.0, phi_upper_bound=1.0)
        self.assertEqual(1.0, model.phi_upper_bound)

    def test_phi(self):
        model = self._model(phi_lower_bound=0.0)
        # tanh^2 + 1 - tanh^2 = 1
        self.assertArrayAlmostEqual([0.5, 0.5], model.phi([-1.0, 2.0]))


class TestModelFromSpec(TestCase):

    def test_kinds(self):
        self.assertEqual(ScaledBM(sigma=2.0),
                         model_from_spec({"kind": "scaled_bm", "sigma": 2}))
        self.assertEqual(ScaledBM(), model_from_spec({"kind": "bm"}))
        self.assertEqual(OU(theta=3.0),
                         model_from_spec({"kind": "OU", "theta": 3}))
        self.assertEqual(Sine(), model_from_spec({"kind": "sine"}))

    def test_describe_round_trip(self):
        model = Sine(a=1.0, b=0.5, omega=2.0, sigma=1.0)
        self.assertEqual(model, model_from_spec(model.describe()))
        self.assertEqual(hash(model), hash(model_from_spec(model.describe())))

    def test_missing_kind(self):
        self.assertRaises(InvalidArgs, model_from_spec, {"theta": 1})

    def test_unknown_kind(self):
        self.assertRaises(InvalidArgs, model_from_spec, {"kind": "cir"})

    def test_unknown_parameter(self):
        self.assertRaises(InvalidArgs, model_from_spec,
                          {"kind": "ou", "kappa": 1})

    def test_is_gaussian(self):
        self.assertTrue(is_gaussian(ScaledBM()))
        self.assertTrue(is_gaussian(OU()))
        self.assertFalse(is_gaussian(Sine()))
