# -*- coding: utf8 -*-
# Copyright (c) 2018 Niklas Rosenstein
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to
# deal in the Software without restriction, including without limitation the
# rights to use, copy, modify, merge, publish, distribute, sublicense, and/or
# sell copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in
# all copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING
# FROM, OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS
# IN THE SOFTWARE.

import math

import numpy as np
from nose.tools import *
from numpy.testing import assert_allclose
from pinsulate.core.errors import ConfigError
from pinsulate.core.radial import *


def test_planar_laplace_benchmark():
  R, profile, lam = radial_solution(2, 2.0)
  assert_almost_equal(R, math.sqrt(1.0 + 1.0 / math.pi), places=12)
  assert_almost_equal(R, 1.148177, places=6)
  assert_almost_equal(lam, 1.0 / (R * math.log(R)), places=10)
  assert_less(abs(lam - 6.3027), 5e-3)
  assert_almost_equal(profile.volume, 1.0, places=12)
  assert_almost_equal(profile.energy, 2 * math.pi / math.log(R), places=10)


def test_planar_p3_benchmark():
  R, profile, lam = radial_solution(2, 3.0)
  s = math.sqrt(R)
  assert_almost_equal(lam, 1.0 / (2 * s * (s - 1.0)), places=10)
  assert_less(abs(lam - 6.524), 1e-2)
  r = np.linspace(1.0, R, 9)
  assert_allclose(profile.u(r), (s - np.sqrt(r)) / (s - 1.0), atol=1e-12)


def test_boundary_values_and_flux():
  for n, p, R in [(2, 2.0, 1.5), (2, 3.0, 1.3), (3, 2.0, 1.2), (3, 4.5, 2.0), (2, 1.5, 1.1)]:
    profile = radial_p_harmonic(n, p, R)
    assert_almost_equal(float(profile.u(1.0)), 1.0, places=12)
    assert_almost_equal(float(profile.u(R)), 0.0, places=12)
    flux = profile.flux(np.linspace(1.0, R, 17))
    assert_allclose(flux, profile.flux_constant, rtol=1e-10)
    assert_almost_equal(profile.lam, float(abs(profile.du(R))))


def test_log_branch_is_continuous():
  exact = radial_p_harmonic(2, 2.0, 1.5)
  near = radial_p_harmonic(2, 2.0 + 1e-9, 1.5)
  r = np.linspace(1.0, 1.5, 11)
  assert_allclose(near.u(r), exact.u(r), atol=1e-6)
  assert_allclose(near.lam, exact.lam, rtol=1e-6)
  three = radial_p_harmonic(3, 3.0, 1.5)
  assert_equals(three.alpha, 0.0)
  assert_allclose(three.u(r), np.log(1.5 / r) / math.log(1.5), atol=1e-14)


def test_newtonian_three_dimensional():
  profile = radial_p_harmonic(3, 2.0, 2.0)
  r = np.linspace(1.0, 2.0, 11)
  assert_allclose(profile.u(r), (1.0 / r - 0.5) / 0.5, atol=1e-12)


def test_shooting_oracle():
  for n, p, R in [(2, 2.0, 1.3), (2, 3.0, 1.15), (3, 2.5, 1.4)]:
    profile = radial_p_harmonic(n, p, R)
    r = np.linspace(1.0, R, 7)
    values, c = shoot_profile(n, p, R, r)
    assert_allclose(values, profile.u(r), atol=1e-8)
    assert_allclose(c, profile.flux_constant, rtol=1e-8)


def test_field():
  profile = radial_p_harmonic(2, 2.0, 1.5)
  values = profile.field([[0.5, 0.0], [0.0, 1.25], [2.0, 0.0]])
  assert_allclose(values, [1.0, float(profile.u(1.25)), 0.0])
  r, u = profile.sample(5)
  assert_allclose(r, [1.0, 1.125, 1.25, 1.375, 1.5])


def test_invalid_parameters():
  with assert_raises(ConfigError):
    radial_p_harmonic(2, 1.0, 1.5)
  with assert_raises(ConfigError):
    radial_p_harmonic(2, 2.0, 1.0)
  with assert_raises(ConfigError):
    radial_p_harmonic(1, 2.0, 1.5)
  with assert_raises(ConfigError):
    radius_for_volume(2, -1.0)
  assert_almost_equal(radius_for_volume(3, 0.0), 1.0)
