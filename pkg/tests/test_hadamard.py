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

import functools
import math

import numpy as np
from nose.tools import *
from numpy.testing import assert_allclose
from pinsulate.core.errors import ConfigError, GeometryError
from pinsulate.core.fboundary import OptimizerConfig, optimize
from pinsulate.core.geometry import Ball, DomainSpec, build_grid
from pinsulate.core.hadamard import *
from pinsulate.core.hadamard import perturbation_det

RADII = (0.2, 0.1, 0.05)


@functools.lru_cache()
def two_slab(slopes=(2.0, 1.0)):
  return synthetic_two_slab(0.02, slopes)


def simple_spec(r=0.2, lam=0.1, bump=None):
  return PerturbationSpec([0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [0.6, 0.8], r, lam, bump,
    separation=0.0)


def ball_points(center, r, count, seed=0):
  rng = np.random.default_rng(seed)
  radius = r * rng.uniform(0.1, 0.95, count)
  angle = rng.uniform(0, 2 * math.pi, count)
  return np.asarray(center) + np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=-1)


def test_bump_spec():
  bump = BumpSpec.polynomial(2)
  assert_allclose(bump.sup_rho_prime, 1.0 / math.sqrt(0.03), rtol=1e-5)
  assert_allclose(bump([0.5, -0.1, 1.5]), [30 * 0.0625, 0.0, 0.0])
  assert_allclose(bump.prime([0.25]), [30 * 2 * 0.25 * 0.75 * 0.5])
  for b in (BumpSpec.polynomial(1), bump, BumpSpec.polynomial(3), BumpSpec.smooth()):
    assert_allclose(b.flat_integral(2), 2.0, rtol=1e-10)
  assert_allclose(bump.flat_integral(3), math.pi, rtol=1e-10)
  with assert_raises(ConfigError):
    BumpSpec(lambda t: t * (1 - t), lambda t: 1 - 2 * t)
  with assert_raises(ConfigError):
    BumpSpec(lambda t: np.ones_like(t), lambda t: np.zeros_like(t))
  with assert_raises(ConfigError):
    BumpSpec.polynomial(0)


def test_bump_constants_agree():
  for bump in (BumpSpec.polynomial(2), BumpSpec.polynomial(3), BumpSpec.smooth()):
    for n in (2, 3):
      c, C = bump_constants(bump, n, directions=3)
      assert_allclose(C, c, rtol=1e-6)
  with assert_raises(ConfigError):
    bump_constants(BumpSpec.polynomial(2), 4)


def test_perturbation_spec_validation():
  assert_equals(simple_spec().dim, 2)
  with assert_raises(ConfigError):
    simple_spec(lam=0.2)
  with assert_raises(ConfigError):
    simple_spec(r=0.0)
  with assert_raises(ConfigError):
    simple_spec(r=0.6)
  with assert_raises(ConfigError):
    PerturbationSpec([0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [1.0, 0.0], 0.1, 0.1)
  swapped = simple_spec().swapped()
  assert_allclose(swapped.x1, [1.0, 0.0])
  assert_allclose(swapped.nu1, [0.6, 0.8])


def test_perturbation_map_is_local():
  spec = simple_spec()
  outside = np.array([[0.5, 0.0], [0.0, 0.3], [1.0, -0.25], [-0.3, 0.1]])
  y, jac = perturbation_map(spec, outside)
  assert_allclose(y, outside)
  assert_allclose(jac, np.broadcast_to(np.eye(2), jac.shape))
  angle = np.linspace(0, 2 * math.pi, 13)
  rim = 0.2 * np.stack([np.cos(angle), np.sin(angle)], axis=-1)
  assert_allclose(perturbation_map(spec, rim)[0], rim, atol=1e-15)
  y, _ = perturbation_map(spec, np.array([0.0, 0.1]))
  assert_allclose(y, [-0.1 * 0.2 * 30 * 0.0625, 0.1])


def test_inverse_and_jacobian():
  spec = simple_spec()
  for center in (spec.x1, spec.x2):
    x = ball_points(center, spec.r, 40)
    y, jac = perturbation_map(spec, x)
    assert_allclose(inverse_map(spec, y), x, atol=1e-8)
    assert_allclose(perturbation_det(spec, x), np.linalg.det(jac), atol=1e-12)
    assert_true(np.all(perturbation_det(spec, x) > 0))
    step = 1e-6
    for k in range(2):
      e = np.zeros(2)
      e[k] = step
      fd = (perturbation_map(spec, x + e)[0] - perturbation_map(spec, x - e)[0]) / (2 * step)
      assert_allclose(fd, jac[:, :, k], atol=1e-6)


def test_volume_change_per_half_ball():
  spec = simple_spec()
  m = 801
  axis = np.linspace(-spec.r, spec.r, m)
  cell = (axis[1] - axis[0]) ** 2
  offsets = np.stack(np.meshgrid(axis, axis, indexing='ij'), axis=-1).reshape(-1, 2)
  expected = spec.lam * spec.r ** 2 * spec.bump.flat_integral(2)
  for center, nu, sign in spec.balls():
    x = center + offsets
    change = perturbation_det(spec, x) - 1.0
    behind = offsets @ nu < 0
    assert_allclose(np.sum(change[behind]) * cell, sign * expected, rtol=1e-3)
    assert_less(abs(np.sum(change) * cell), 1e-3 * expected)


def test_transport_field():
  state = two_slab()
  spec = state.perturbation(0.1, 0.05)
  x = ball_points(spec.x1, spec.r, 20)
  y, _ = perturbation_map(spec, x)
  expected = 2.0 * (0.5 - x[:, 0])
  assert_allclose(transport_field(state.u, spec, y, state.mask), expected, atol=1e-8)
  far = np.array([[0.2, 0.0], [0.3, 0.9]])
  assert_allclose(transport_field(state.u, spec, far, state.mask), state.u.interpolator()(far),
    atol=1e-12)


def test_two_slab_prediction():
  state = two_slab()
  result = measure_first_variation(state, state.perturbation(0.1, 0.05), 2.0)
  assert_allclose(result.q1, 2.0, atol=1e-9)
  assert_allclose(result.q2, 1.0, atol=1e-9)
  assert_allclose(result.dJ_predicted, 0.003, rtol=1e-9)


def test_two_slab_small_amplitude():
  state = two_slab()
  result = measure_first_variation(state, state.perturbation(0.1, 0.0025), 2.0)
  assert_allclose(result.ratio, 1.0, atol=0.15)


def test_two_slab_volume_balance():
  state = two_slab()
  # lam = r / 2, so the bound halves with r
  for r in RADII:
    spec = state.perturbation(r, 0.5 * r)
    result = measure_first_variation(state, spec, 2.0)
    assert_less(abs(result.dVol) / r ** 2, 0.1 * spec.lam)


def test_two_slab_richardson():
  state = two_slab()
  amplitudes, ratios = [], []
  for r in RADII:
    spec = state.perturbation(r, 0.5 * r)
    ratios.append(measure_first_variation(state, spec, 2.0, antisymmetric=True).ratio)
    amplitudes.append(spec.lam)
  assert_less(abs(ratios[-1] - 1.0), abs(ratios[0] - 1.0))
  assert_allclose(richardson_limit(amplitudes, ratios), 1.0, atol=0.1)


def test_slab_has_no_first_order_change():
  state = two_slab((1.0, 1.0))
  scaled = []
  for r in RADII:
    spec = state.perturbation(r, 0.5 * r)
    result = measure_first_variation(state, spec, 2.0)
    assert_less(abs(result.dJ_predicted), 1e-12)
    scaled.append(abs(result.dJ_measured) / (r ** 2 * spec.lam))
  assert_less(scaled[1], 0.75 * scaled[0])
  assert_less(scaled[2], 0.75 * scaled[1])


def test_perturbation_points_must_lie_on_the_boundary():
  state = two_slab()
  shifted = PerturbationSpec([0.56, -0.5], [0.5, 0.5], [1.0, 0.0], [1.0, 0.0], 0.1, 0.05,
    separation=0.0)
  with assert_raises(GeometryError):
    measure_first_variation(state, shifted, 2.0)
  with assert_raises(GeometryError):
    measure_first_variation(state, state.perturbation(0.49, 0.05), 2.0)


def test_first_variation_ratio():
  assert_almost_equal(FirstVariation(0.3, 0.0, 0.2, 2.0, 1.0).ratio, 1.5)
  assert_true(math.isnan(FirstVariation(0.3, 0.0, 0.0, 1.0, 1.0).ratio))


def test_richardson_limit():
  amplitudes = np.array([0.1, 0.05, 0.025])
  assert_almost_equal(richardson_limit(amplitudes, 1.0 + 3.0 * amplitudes ** 2), 1.0, places=12)
  assert_almost_equal(richardson_limit(amplitudes, 2.0 - amplitudes, order=1), 2.0, places=12)


@functools.lru_cache()
def radial_state():
  domain = DomainSpec(Ball([0.0, 0.0], 1.0))
  grid, mask = build_grid(domain, 96, box=(-1.5, 1.5))
  return optimize(domain, grid, mask, OptimizerConfig(0.01, p=2.0))


def test_optimum_satisfies_the_free_boundary_condition():
  state = radial_state()
  samples = state.levelset.contour()
  angle = np.arctan2(samples.points[:, 1], samples.points[:, 0])
  i = int(np.argmin(np.abs(angle)))
  j = int(np.argmin(np.abs(angle - 0.5 * math.pi)))
  r, lam = 0.06, 0.03
  spec = PerturbationSpec(samples.points[i], samples.points[j], samples.normals[i],
    samples.normals[j], r, lam, separation=0.0)
  result = measure_first_variation(state, spec, 2.0, antisymmetric=True)
  scale = r ** 2 * lam * 2.0 * (state.lam ** 2 - (0.5 * state.lam) ** 2)
  assert_less(abs(result.dJ_measured), 0.1 * scale)
  assert_allclose(result.q1, result.q2, rtol=0.05)
