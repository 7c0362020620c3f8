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
from pinsulate.core.errors import ConfigError, ConvergenceError, TopologyError
from pinsulate.core.events import EV_PICARD_STEP, EventHandler
from pinsulate.core.geometry import Ball, CellClass, DomainSpec, GridSpec, ScalarField, \
  build_grid
from pinsulate.core.levelset import LevelSet
from pinsulate.core.plap import *
from pinsulate.core.radial import radial_p_harmonic
from scipy.sparse import linalg as splinalg

OUTER = 1.5


def annulus_mask(resolution, phi=1.0):
  domain = DomainSpec(Ball([0.0, 0.0], 1.0), phi)
  grid, mask = build_grid(domain, resolution, box=(-2.0, 2.0))
  r = np.linalg.norm(grid.coords(), axis=-1)
  return domain, grid, mask.with_levelset(r - OUTER), r


@functools.lru_cache()
def annulus(resolution, p, phi=1.0):
  domain, grid, mask, r = annulus_mask(resolution, phi)
  u = solve_p_harmonic(grid, mask, domain, cfg=SolverConfig(p=p))
  return domain, grid, mask, r, u


def max_error(resolution, p):
  _, grid, mask, r, u = annulus(resolution, p)
  exact = radial_p_harmonic(2, p, OUTER).u(r)
  return np.abs(u.values - exact)[mask.active].max()


def test_solver_config():
  assert_equals(SolverConfig(p=3.0).effective_damping(), 0.5)
  assert_equals(SolverConfig(p=2.0).effective_damping(), 0.7)
  assert_equals(SolverConfig(p=1.5, damping=0.9).effective_damping(), 0.9)
  with assert_raises(ConfigError):
    SolverConfig(p=1.0)
  with assert_raises(ConfigError):
    SolverConfig(p=2.0, damping=0.0)
  with assert_raises(ConfigError):
    SolverConfig(p=2.0, delta=-1.0)
  with assert_raises(ConfigError):
    SolverConfig(p=2.0, picard_max_iter=0)


def test_laplace_annulus():
  assert_less(max_error(64, 2.0), 1e-2)
  assert_less(max_error(128, 2.0), 0.75 * max_error(64, 2.0))


def test_p3_annulus():
  assert_less(max_error(64, 3.0), 2e-2)
  _, grid, mask, r, u = annulus(64, 3.0)
  values = u.values[mask.active]
  assert_greater_equal(values.min(), -1e-8)
  assert_less_equal(values.max(), 1.0 + 1e-8)
  assert_true(np.all(u.values[mask.inside] == 1.0))
  assert_true(np.all(u.values[mask.dead] == 0.0))


def test_linear_in_boundary_data():
  u1 = annulus(64, 2.0)[-1]
  u2 = annulus(64, 2.0, 2.0)[-1]
  assert_allclose(u2.values, 2.0 * u1.values, atol=1e-7)


def test_energy_and_heat_flux():
  domain, grid, mask, r, u = annulus(128, 2.0)
  exact = 2 * math.pi / math.log(OUTER)
  assert_allclose(p_energy(u, mask, 2.0), exact, rtol=0.03)
  assert_allclose(boundary_flux_inner(u, domain, 2.0, mask), exact, rtol=0.03)
  with assert_raises(ConfigError):
    p_energy(u, mask, 1.0)


def identity_gap(resolution, p):
  domain, grid, mask, r, u = annulus(resolution, p)
  energy = p_energy(u, mask, p)
  return abs(energy - boundary_flux_inner(u, domain, p, mask)) / energy


def test_energy_identity_under_refinement():
  gaps = [identity_gap(res, 2.0) for res in (64, 128, 256)]
  assert_less(gaps[0], 0.03)
  assert_less(gaps[1], gaps[0])
  assert_less(gaps[2], gaps[1])
  assert_greater(math.log2(gaps[0] / gaps[2]) / 2.0, 0.8)


def test_energy_and_heat_flux_p3():
  domain, grid, mask, r, u = annulus(128, 3.0)
  exact = radial_p_harmonic(2, 3.0, OUTER).energy
  energy = p_energy(u, mask, 3.0)
  assert_allclose(energy, exact, rtol=0.03)
  assert_allclose(boundary_flux_inner(u, domain, 3.0, mask), energy, rtol=0.03)


def test_homogeneous_in_boundary_data():
  domain, grid, mask, r, u1 = annulus(64, 3.0)
  u2 = annulus(64, 3.0, 2.0)[-1]
  assert_allclose(u2.values, 2.0 * u1.values, atol=1e-6)
  assert_allclose(p_energy(u2, mask, 3.0), 8.0 * p_energy(u1, mask, 3.0), rtol=1e-5)


def test_laplace_matches_direct_solve():
  domain, grid, mask, r, u = annulus(64, 2.0)
  zero = lambda points: np.zeros(len(points))
  problem = DirichletProblem(grid, mask.active, [(mask.inside, mask.body_distance, domain.phi_at),
    (mask.dead, -mask.psi, zero), (mask.classes == CellClass.DIRICHLET_OUTER, None, zero)])
  matrix, rhs = problem.assemble(np.ones(problem.size))
  direct = splinalg.spsolve(matrix.tocsc(), rhs)
  assert_allclose(u.values[mask.active], direct, atol=1e-6)


def test_free_boundary_flux():
  domain, grid, mask, r, u = annulus(128, 2.0)
  flux = free_boundary_flux(u, LevelSet.sphere(grid, OUTER), 2.0, mask)
  lam = radial_p_harmonic(2, 2.0, OUTER).lam
  assert_equals(flux.flagged, 0)
  assert_allclose(flux.mean(), lam, rtol=0.02)
  assert_less(flux.cv(), 0.02)
  assert_less(flux.sup_dev(lam), 0.05)


def test_picard_events():
  domain, grid, mask, r = annulus_mask(64)
  residuals = []
  events = EventHandler()
  events.bind(EV_PICARD_STEP, lambda ev: residuals.append(ev.data[1]))
  solve_p_harmonic(grid, mask, domain, cfg=SolverConfig(p=3.0), events=events)
  assert_greater(len(residuals), 1)
  assert_less(residuals[-1], 1e-7)


def test_picard_budget():
  domain, grid, mask, r = annulus_mask(32)
  cfg = SolverConfig(p=3.0, picard_tol=1e-14, picard_max_iter=1)
  with assert_raises(ConvergenceError) as cm:
    solve_p_harmonic(grid, mask, domain, cfg=cfg)
  assert_equals(len(cm.exception.history), 2)


def test_topology_errors():
  domain, grid, mask, r = annulus_mask(32)
  x, y = np.moveaxis(grid.coords(), -1, 0)
  island = np.hypot(x - 1.6, y - 1.2) < 0.25
  with assert_raises(TopologyError):
    solve_p_harmonic(grid, mask.with_region((r < OUTER) | island), domain)
  with assert_raises(TopologyError):
    DirichletProblem(grid, mask.active, [])


def test_slope_along():
  grid = GridSpec((11, 11), 0.1, (0.0, 0.0))
  x, y = np.moveaxis(grid.coords(), -1, 0)
  u = ScalarField(grid, 3.0 - 2.0 * x + 0.5 * y)
  points = [[0.2, 0.5], [0.75, 0.5], [1.0, 0.5]]
  directions = [[1.0, 0.0], [1.0, 0.0], [1.0, 0.0]]
  slopes = slope_along(u, points, directions, intercept=u.interpolator()(points))
  assert_allclose(slopes[:2], [-2.0, -2.0], atol=1e-9)
  assert_true(np.isnan(slopes[2]))


def test_energy_variation():
  domain, grid, mask, r, u = annulus(64, 2.0)
  x, y = np.moveaxis(grid.coords(), -1, 0)
  v = ScalarField(grid, np.sin(x + 0.3) * np.cos(2 * y + 0.1))
  t = 1e-5
  for p, delta in ((2.0, 0.0), (3.0, 0.1), (1.5, 0.1)):
    plus = regularized_energy(ScalarField(grid, u.values + t * v.values), mask, p, delta)
    minus = regularized_energy(ScalarField(grid, u.values - t * v.values), mask, p, delta)
    analytic = energy_variation(u, v, mask, p, delta)
    assert_greater(abs(analytic), 1.0)
    assert_allclose(analytic, (plus - minus) / (2 * t), rtol=1e-5)
