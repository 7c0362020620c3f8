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
from pinsulate.core.errors import ConfigError, EmptyBoundaryError, ShapeError, \
  TopologyError
from pinsulate.core.geometry import Ball, DomainSpec, Ellipsoid, GridSpec, RegionMask, \
  build_grid
from pinsulate.core.levelset import LevelSet


def ball_grid(resolution=128, box=(-2.0, 2.0), body=None):
  domain = DomainSpec(body or Ball([0.0, 0.0], 1.0))
  return build_grid(domain, resolution, box=box)


def radius(grid, center=(0.0, 0.0)):
  return np.linalg.norm(grid.coords() - np.asarray(center), axis=-1)


def test_contour_of_sphere():
  grid, _ = ball_grid()
  samples = LevelSet.sphere(grid, 1.5).contour()
  assert_allclose(samples.weights.sum(), 2 * math.pi * 1.5, rtol=2e-3)
  assert_allclose(np.linalg.norm(samples.points, axis=-1), 1.5, atol=1e-3)
  radial = samples.points / np.linalg.norm(samples.points, axis=-1, keepdims=True)
  assert_greater(np.sum(samples.normals * radial, axis=-1).min(), 0.999)


def test_empty_contour():
  grid, _ = ball_grid(resolution=32)
  levelset = LevelSet(grid, np.ones(grid.shape))
  assert_true(levelset.is_empty())
  with assert_raises(EmptyBoundaryError):
    levelset.contour()
  with assert_raises(ShapeError):
    LevelSet(grid, np.ones((4, 4)))


def test_reinitialize_restores_distance():
  grid, _ = ball_grid()
  x = grid.coords()[..., 0]
  r = radius(grid)
  distorted = LevelSet(grid, (r - 1.2) * (1.0 + 0.5 * x * x), reinit_age=3)
  fixed = distorted.reinitialize()
  assert_equals(fixed.reinit_age, 0)
  band = np.abs(r - 1.2) < 3 * grid.h
  assert_less(np.abs(fixed.psi - (r - 1.2))[band].max(), 0.1 * grid.h)
  assert_true(np.array_equal(np.sign(fixed.psi), np.sign(distorted.psi)))
  lo, hi = fixed.band_gradient_range()
  assert_greater(lo, 0.9)
  assert_less(hi, 1.1)


def test_band_gradient_range_of_sphere():
  grid, _ = ball_grid()
  lo, hi = LevelSet.sphere(grid, 1.3).band_gradient_range()
  assert_greater(lo, 0.98)
  assert_less(hi, 1.02)


def test_for_volume():
  grid, mask = ball_grid(resolution=64)
  levelset = LevelSet.for_volume(grid, mask, Ball([0.0, 0.0], 1.0), 2.0)
  assert_allclose(levelset.volume(mask), 2.0, rtol=1e-2)

  body = Ellipsoid([0.0, 0.0], [1.0, 0.6])
  grid, mask = ball_grid(resolution=64, body=body)
  levelset = LevelSet.for_volume(grid, mask, body, 2.0)
  assert_allclose(levelset.volume(mask), 2.0, rtol=1e-3)
  with assert_raises(ConfigError):
    LevelSet.for_volume(grid, mask, body, 1000.0)
  with assert_raises(ConfigError):
    LevelSet.for_volume(grid, mask, body, 0.0)


def test_advect_moves_the_contour():
  grid, _ = ball_grid()
  mask = RegionMask.exterior(grid)
  levelset = LevelSet.sphere(grid, 1.0)
  dt = 0.5 * grid.h
  before = levelset.volume(mask)
  grown = levelset.advect(np.ones(grid.shape), dt)
  assert_equals(grown.reinit_age, 1)
  expected = math.pi * ((1.0 + dt) ** 2 - 1.0)
  assert_allclose(grown.volume(mask) - before, expected, rtol=0.05)
  shrunk = levelset.advect(-np.ones(grid.shape), dt)
  assert_allclose(before - shrunk.volume(mask), math.pi * (1.0 - (1.0 - dt) ** 2), rtol=0.05)


def test_extend_velocity():
  grid, _ = ball_grid()
  levelset = LevelSet.sphere(grid, 1.0)
  samples = levelset.contour()
  speed = levelset.extend_velocity(samples, samples.points[:, 0])
  assert_equals(speed.shape, grid.shape)
  index = tuple(np.round(grid.to_index([1.5, 0.0])).astype(int))
  assert_less(abs(speed[index] - 1.0), grid.h)


def test_prune_islands():
  grid, mask = ball_grid(resolution=64, box=(-3.0, 3.0))
  main = radius(grid) - 1.5
  island = radius(grid, (2.3, 0.0)) - 0.4
  levelset = LevelSet(grid, np.minimum(main, island))
  pruned = levelset.prune(mask)
  assert_true(np.all(pruned.psi[island < 0] > 0))
  keep = main < 0
  assert_true(np.array_equal(pruned.psi[keep], levelset.psi[keep]))
  assert_is(levelset.prune(RegionMask.exterior(grid)), levelset)
  with assert_raises(TopologyError):
    LevelSet(grid, island).prune(mask)


def test_from_field():
  grid, _ = ball_grid()
  r = radius(grid)
  levelset = LevelSet.from_field(grid, np.maximum(1.5 - r, 0.0))
  band = np.abs(r - 1.5) < 3 * grid.h
  assert_less(np.abs(levelset.psi - (r - 1.5))[band].max(), 0.1 * grid.h)
  assert_true(np.all(levelset.psi[r > 1.6] > 0))
  assert_true(np.all(levelset.psi[r < 1.4] < 0))


def test_from_field_with_nodes_on_the_interface():
  grid = GridSpec((41, 21), 0.025, (0.0, 0.0))
  x = grid.coords()[..., 0]
  values = np.maximum(0.5 - x, 0.0)
  assert_true(np.any(values[20] == 0.0))
  levelset = LevelSet.from_field(grid, values)
  assert_allclose(levelset.psi, x - 0.5, atol=1e-9)
