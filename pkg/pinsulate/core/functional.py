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

"""
Volume penalties, the penalized functional `J(u) = E(u) + f(|{u > 0}|)`
and report-only diagnostics of minimizers.
"""

__all__ = ['f_eps', 'EpsilonPenalty', 'TablePenalty', 'as_penalty', 'J_eps',
           'heat_loss', 'lipschitz_estimate', 'harmonic_replacement_gap',
           'nondegeneracy_report', 'minimality_check', 'diagnostics_report']

import logging
import math

import nr.interface
import numpy as np

from pinsulate.core.errors import ConfigError
from pinsulate.core.geometry import ScalarField, cell_fractions, \
  cell_gradients, gradient, measure_volume, positive_level
from pinsulate.core.interfaces import PenaltySpec
from pinsulate.core.plap import DirichletProblem, SolverConfig, \
  boundary_flux_inner, p_energy

logger = logging.getLogger(__name__)

#: Density ratios outside this band are flagged.
DENSITY_BAND = (0.05, 0.95)


def f_eps(t, eps):
  """
  The penalty `1 + (t - 1)/eps` for `t >= 1` and `1 + eps (t - 1)` below.
  """

  if not eps > 0:
    raise ConfigError('epsilon: must be > 0, got {!r}'.format(eps))
  if t >= 1:
    return 1.0 + (t - 1.0) / eps
  return 1.0 + eps * (t - 1.0)


class EpsilonPenalty(nr.interface.Implementation):
  nr.interface.implements(PenaltySpec)

  def __init__(self, eps):
    if not eps > 0:
      raise ConfigError('epsilon: must be > 0, got {!r}'.format(eps))
    self.eps = float(eps)

  def __repr__(self):
    return 'EpsilonPenalty({!r})'.format(self.eps)

  def value(self, t):
    return f_eps(t, self.eps)

  def slope_below(self, t):
    return self.eps if t <= 1 else 1.0 / self.eps

  def slope_above(self, t):
    return self.eps if t < 1 else 1.0 / self.eps

  def target(self):
    # Convex only when the slope jumps upwards at 1.
    return 1.0 if self.eps < 1 else None

  def gamma(self):
    return max(self.eps, 1.0 / self.eps)


class TablePenalty(nr.interface.Implementation):
  """
  A piecewise linear penalty through the points `(breakpoints[k],
  values[k])`, extended linearly beyond the first and the last breakpoint.

  # Raises
  ConfigError: If the table has fewer than two rows or is not strictly
    increasing in both columns.
  """

  nr.interface.implements(PenaltySpec)

  def __init__(self, breakpoints, values):
    bp = np.asarray(breakpoints, dtype=float)
    fv = np.asarray(values, dtype=float)
    if bp.ndim != 1 or bp.shape != fv.shape or len(bp) < 2:
      raise ConfigError('penalty.table: expected at least two (t, f) rows')
    if np.any(np.diff(bp) <= 0):
      raise ConfigError('penalty.table: breakpoints must be strictly increasing')
    if np.any(np.diff(fv) <= 0):
      raise ConfigError('penalty.table: values must be strictly increasing')
    self.breakpoints = bp
    self.values = fv
    self.slopes = np.diff(fv) / np.diff(bp)

  def __repr__(self):
    return 'TablePenalty({!r}, {!r})'.format(self.breakpoints.tolist(), self.values.tolist())

  def value(self, t):
    bp, fv, s = self.breakpoints, self.values, self.slopes
    if t < bp[0]:
      return float(fv[0] + s[0] * (t - bp[0]))
    if t > bp[-1]:
      return float(fv[-1] + s[-1] * (t - bp[-1]))
    return float(np.interp(t, bp, fv))

  def _segment(self, t, side):
    k = int(np.searchsorted(self.breakpoints, t, side=side)) - 1
    return self.slopes[min(max(k, 0), len(self.slopes) - 1)]

  def slope_below(self, t):
    return float(self._segment(t, 'left'))

  def slope_above(self, t):
    return float(self._segment(t, 'right'))

  def target(self):
    jumps = np.diff(self.slopes)
    if not len(jumps) or jumps.max() <= 0:
      return None
    return float(self.breakpoints[1 + int(np.argmax(jumps))])

  def gamma(self):
    return float(max(self.slopes.max(), 1.0 / self.slopes.min()))


def as_penalty(pen):
  """
  Accept a #PenaltySpec or a number (taken as epsilon).
  """

  if isinstance(pen, (int, float)):
    return EpsilonPenalty(pen)
  if not PenaltySpec.implemented_by(pen):
    raise ConfigError('penalty: expected a PenaltySpec or a number, got {!r}'.format(pen))
  return pen


def J_eps(u, mask, pen, p):
  """
  Return `(J, breakdown)` with `J = E(u) + f(|{u > 0}|)` and the breakdown
  dictionary `{energy, volume, penalty}`.
  """

  pen = as_penalty(pen)
  energy = p_energy(u, mask, p)
  volume = measure_volume(u, mask)
  penalty = pen.value(volume)
  return energy + penalty, {'energy': energy, 'volume': volume, 'penalty': penalty}


def heat_loss(u, domain, p, mask=None):
  """
  The heat flux `int_{dD} |grad u|^(p-2) (-d_n u) dS` through the boundary of
  the body, without the temperature weight.
  """

  return boundary_flux_inner(u, domain, p, mask, weighted=False)


def lipschitz_estimate(u, mask):
  """
  The largest nodal gradient norm on the active nodes. Reported only.
  """

  norms = gradient(u).norm()
  active = mask.active
  return float(norms[active].max()) if active.any() else 0.0


def _window(grid, center, radius):
  """
  Index slices of the nodes within *radius* (plus two cells) of *center*
  and their coordinates.
  """

  lo = np.floor(grid.to_index(np.asarray(center) - radius) - 2).astype(int)
  hi = np.ceil(grid.to_index(np.asarray(center) + radius) + 2).astype(int) + 1
  lo = np.maximum(lo, 0)
  hi = np.minimum(hi, grid.dims)
  index = tuple(slice(a, b) for a, b in zip(lo, hi))
  return index, grid.coords()[index]


def harmonic_replacement_gap(u, mask, center, radius, p, cfg=None):
  """
  Replace *u* in the ball by the p-harmonic function *v* with the same
  trace and return `(gap, ratio)`: `gap = int_B |grad(u - v)|^p` and its
  ratio to `|{u > 0} & B|` (for `p >= 2`) or to
  `|{u > 0} & B|^(p/2) (int_B |grad u|^p)^(1 - p/2)` (for `p < 2`).

  # Raises
  ConfigError: If the ball meets the body or leaves the box.
  """

  grid = u.grid
  center = np.asarray(center, dtype=float)
  if not radius > 2 * grid.h:
    raise ConfigError('radius: must exceed two cells, got {!r}'.format(radius))
  if not grid.inside_box(center[None], radius + grid.h)[0]:
    raise ConfigError('radius: ball leaves the box')
  coords = grid.coords()
  level = radius - np.linalg.norm(coords - center, axis=-1)
  if np.any((level >= -grid.h) & mask.inside):
    raise ConfigError('center: ball meets the body')
  unknown = level > 0
  trace = u.interpolator()
  cfg = cfg or SolverConfig(p=p)
  if cfg.p != p:
    cfg = SolverConfig(p, cfg.delta, cfg.picard_tol, cfg.picard_max_iter, cfg.damping,
      cfg.linear_tol, cfg.linear_max_iter)
  top = float(np.max(u.values[unknown]))
  values = u.values.copy()
  if top > 0 or np.any(trace(coords[level > -grid.h]) != 0):
    problem = DirichletProblem(grid, unknown, [(~unknown, level, trace)])
    delta = cfg.delta if cfg.delta is not None else 1e-6 * max(top, 1e-12) / grid.h
    initial = u.values[unknown]
    values[unknown] = problem.solve(cfg, delta, initial)
  else:
    values[unknown] = 0.0
  weights = cell_fractions(level)
  diff = cell_gradients(u.values - values, grid.h)
  gap = float(np.sum(weights * np.linalg.norm(diff, axis=-1) ** p) * grid.cell_volume)
  energy = float(np.sum(weights * np.linalg.norm(cell_gradients(u.values, grid.h), axis=-1) ** p)
    * grid.cell_volume)
  positive = np.minimum(positive_level(u.values, mask), level)
  volume = float(np.sum(cell_fractions(positive)) * grid.cell_volume)
  if p >= 2:
    rhs = volume
  else:
    rhs = volume ** (p / 2.0) * energy ** (1.0 - p / 2.0)
  if rhs == 0:
    ratio = 0.0 if gap <= 1e-14 else math.inf
  else:
    ratio = gap / rhs
  logger.debug('harmonic replacement at %r, r = %g: gap %.3e, ratio %.3e', center, radius, gap, ratio)
  return gap, ratio


def _density(grid, psi, mask, center, radius):
  index, coords = _window(grid, center, radius)
  ball = radius - np.linalg.norm(coords - center, axis=-1)
  region = np.minimum(-psi[index], mask.body_level()[index])
  inner = cell_fractions(np.minimum(region, ball)).sum()
  whole = cell_fractions(ball).sum()
  return float(inner / whole)


def nondegeneracy_report(u, levelset, radii, mask, max_samples=64):
  """
  Report the density of the positive set at free boundary points and the
  growth `u(x) / dist(x, free boundary)` on the active nodes.

  # Returns
  dict: `density_min`, `density_max`, `slope_min`, `slope_max`, `flagged`
    (the number of density ratios outside #DENSITY_BAND) and `lipschitz`.
  """

  grid = u.grid
  samples = levelset.contour()
  step = max(1, len(samples) // max_samples)
  points = samples.points[::step]
  densities = []
  for radius in radii:
    for x0 in points:
      densities.append(_density(grid, levelset.psi, mask, x0, radius))
  densities = np.asarray(densities)
  far = (levelset.psi <= -grid.h) & mask.active
  if far.any():
    slopes = u.values[far] / -levelset.psi[far]
    slope_min, slope_max = float(slopes.min()), float(slopes.max())
  else:
    slope_min = slope_max = float('nan')
  flagged = int(np.count_nonzero((densities <= DENSITY_BAND[0]) | (densities >= DENSITY_BAND[1])))
  if flagged:
    logger.warning('%d density ratio(s) outside %r', flagged, DENSITY_BAND)
  return {
    'density_min': float(densities.min()),
    'density_max': float(densities.max()),
    'slope_min': slope_min,
    'slope_max': slope_max,
    'flagged': flagged,
    'lipschitz': lipschitz_estimate(u, mask),
  }


def minimality_check(u, mask, pen, p, count=20, t=1e-3, seed=0, tol=None):
  """
  Compare `J(u)` against `J(u + t v)` for *count* random smooth bumps *v*
  supported in the interior of the active region. Returns
  `(passed, worst)` where *worst* is the largest decrease `J(u) - J(u + tv)`.
  """

  grid = u.grid
  J0, _ = J_eps(u, mask, pen, p)
  tol = 1e-5 * abs(J0) if tol is None else tol
  rng = np.random.default_rng(seed)
  width = 4 * grid.h
  level = positive_level(u.values, mask)
  candidates = np.argwhere((level > width + 2 * grid.h) & mask.active)
  if not len(candidates):
    return True, 0.0
  coords = grid.coords()
  worst = -math.inf
  for _ in range(count):
    center = coords[tuple(candidates[rng.integers(len(candidates))])]
    r2 = np.sum((coords - center) ** 2, axis=-1) / width ** 2
    bump = np.where(r2 < 1, (1 - r2) ** 2, 0.0) * rng.choice([-1.0, 1.0])
    J1, _ = J_eps(ScalarField(grid, u.values + t * bump), mask, pen, p)
    worst = max(worst, J0 - J1)
  return worst <= tol, float(worst)


def diagnostics_report(state, domain, pen, p, radii=None, cfg=None):
  """
  Collect the diagnostics of a converged state into the report dictionary
  with the keys `energy, volume, penalty, J, density_min, density_max,
  slope_min, slope_max, replacement_ratio` (plus `lipschitz`).
  """

  u, levelset, mask = state.u, state.levelset, state.mask
  grid = u.grid
  J, breakdown = J_eps(u, mask, pen, p)
  samples = levelset.contour()
  if radii is None:
    mean_r = float(np.mean(np.linalg.norm(samples.points - domain.body.center(), axis=-1)))
    radii = [0.1 * mean_r, 0.2 * mean_r]
  report = dict(breakdown, J=J)
  report.update(nondegeneracy_report(u, levelset, radii, mask))
  report['replacement_ratio'] = float('nan')
  x0 = samples.points[0]
  clearance = float(domain.body.signed_distance(x0[None])[0])
  radius = min(0.5 * clearance, 0.2)
  if radius > 3 * grid.h:
    try:
      _, report['replacement_ratio'] = harmonic_replacement_gap(u, mask, x0, radius, p, cfg)
    except ConfigError as exc:
      logger.warning('harmonic replacement skipped: %s', exc)
  return report
