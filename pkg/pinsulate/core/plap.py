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
Finite-difference solver for the p-Laplace equation
`div(|grad u|^(p-2) grad u) = 0` on the active region, with the p-Dirichlet
energy and the boundary fluxes evaluated on its solutions.

The coefficient `|grad u|^(p-2)` is regularized as
`(|grad u|^2 + delta^2)^((p-2)/2)` and lagged (Picard iteration); every
lagged problem is a symmetric positive definite system solved with
preconditioned conjugate gradients. Dirichlet interfaces that cut a grid
edge (the boundary of the body and the free boundary) are treated with a
symmetric cut-cell stencil: the edge from node *i* to the interface at
distance `theta h` contributes `kappa_i / theta` to the diagonal.
"""

__all__ = ['SolverConfig', 'DirichletProblem', 'BoundaryFlux',
           'solve_p_harmonic', 'p_energy', 'boundary_flux_inner',
           'free_boundary_flux', 'ghost_extend', 'slope_along',
           'regularized_energy', 'energy_variation']

import dataclasses
import logging
import typing as t

import numpy as np
from scipy import ndimage, sparse
from scipy.interpolate import RegularGridInterpolator
from scipy.sparse import linalg as splinalg

from pinsulate.core.errors import ConfigError, ConvergenceError, TopologyError
from pinsulate.core.events import EV_PICARD_STEP
from pinsulate.core.geometry import CellClass, RegionMask, ScalarField, \
  any_neighbour, cell_fractions, cell_gradients, shifted, signed_extension

logger = logging.getLogger(__name__)

#: Smallest admitted distance fraction of a cut edge.
THETA_MIN = 1e-2


@dataclasses.dataclass
class SolverConfig:
  """
  Controls of the Picard iteration. *delta* defaults to
  `1e-6 * max(phi) / h`. For `p > 2` the damping is capped at `1/(p-1)`,
  the contraction rate of the undamped lagged iteration.
  """

  p: float
  delta: t.Optional[float] = None
  picard_tol: float = 1e-7
  picard_max_iter: int = 200
  damping: float = 0.7
  linear_tol: float = 1e-10
  linear_max_iter: int = 5000

  def __post_init__(self):
    if not self.p > 1:
      raise ConfigError('solver.p: must be > 1, got {!r}'.format(self.p))
    if self.delta is not None and not self.delta > 0:
      raise ConfigError('solver.delta: must be > 0, got {!r}'.format(self.delta))
    for name in ('picard_tol', 'linear_tol'):
      if not getattr(self, name) > 0:
        raise ConfigError('solver.{}: must be > 0, got {!r}'.format(name, getattr(self, name)))
    for name in ('picard_max_iter', 'linear_max_iter'):
      if int(getattr(self, name)) < 1:
        raise ConfigError('solver.{}: must be >= 1, got {!r}'.format(name, getattr(self, name)))
    if not 0 < self.damping <= 1:
      raise ConfigError('solver.damping: must be in (0, 1], got {!r}'.format(self.damping))

  def effective_damping(self):
    if self.p > 2:
      return min(self.damping, 1.0 / (self.p - 1.0))
    return self.damping


class _Direction:

  def __init__(self, axis, step, exists, neighbour, dist, value):
    self.axis = axis
    self.step = step
    self.exists = exists
    self.neighbour = neighbour
    self.dist = dist
    self.value = value
    self.cut = exists & (neighbour < 0)


class DirichletProblem:
  """
  The p-Laplace equation on the nodes *unknown* with Dirichlet data on
  everything else.

  # Parameters
  grid (GridSpec): The grid.
  unknown (numpy.ndarray): Boolean mask of the unknown nodes.
  boundary (list): `(blocked, level, value)` triples, checked in order. An
    edge from an unknown node to a *blocked* node crosses the interface at
    the zero of the linear interpolant of *level* (positive on the unknown
    side), or at the blocked node if *level* is #None. *value* maps the
    crossing points to the Dirichlet data. Edges leaving the box carry no
    flux.
  """

  def __init__(self, grid, unknown, boundary):
    self.grid = grid
    self.unknown = np.asarray(unknown, dtype=bool)
    self.size = int(np.count_nonzero(self.unknown))
    self.index = np.full(grid.shape, -1, dtype=np.intp)
    self.index[self.unknown] = np.arange(self.size)
    h = grid.h
    coords = grid.coords()[self.unknown]
    everywhere = np.ones(grid.shape, dtype=bool)
    self.directions = []
    for axis in range(grid.n):
      for step in (-1, 1):
        exists = shifted(everywhere, axis, step, False)[self.unknown]
        neighbour = shifted(self.index, axis, step, -1)[self.unknown]
        dist = np.full(self.size, h)
        value = np.zeros(self.size)
        pending = exists & (neighbour < 0)
        for blocked, level, func in boundary:
          sel = pending & shifted(blocked, axis, step, False)[self.unknown]
          if not sel.any():
            continue
          theta = np.ones(np.count_nonzero(sel))
          if level is not None:
            li = level[self.unknown][sel]
            lj = shifted(level, axis, step)[self.unknown][sel]
            with np.errstate(divide='ignore', invalid='ignore'):
              theta = li / (li - lj)
            theta = np.where(np.isfinite(theta) & (li > 0) & (lj <= 0), theta, 1.0)
            theta = np.clip(theta, THETA_MIN, 1.0)
          points = coords[sel].copy()
          points[:, axis] += step * theta * h
          dist[sel] = theta * h
          value[sel] = func(points)
          pending &= ~sel
        if pending.any():
          raise TopologyError('{} unknown node(s) border a node without Dirichlet data'
            .format(np.count_nonzero(pending)))
        self.directions.append(_Direction(axis, step, exists, neighbour, dist, value))

  def __repr__(self):
    return '<DirichletProblem unknowns={}>'.format(self.size)

  def node_gradient(self, x):
    """
    Return the gradient at every unknown node from the nonuniform three
    point stencil, one-sided at the box faces.
    """

    grad = np.zeros((self.size, self.grid.n))
    for axis in range(self.grid.n):
      lo, hi = self.directions[2 * axis], self.directions[2 * axis + 1]
      vl = np.where(lo.neighbour >= 0, x[np.maximum(lo.neighbour, 0)], lo.value)
      vr = np.where(hi.neighbour >= 0, x[np.maximum(hi.neighbour, 0)], hi.value)
      dminus = (x - vl) / lo.dist
      dplus = (vr - x) / hi.dist
      central = (lo.dist * dplus + hi.dist * dminus) / (lo.dist + hi.dist)
      grad[:, axis] = np.where(lo.exists & hi.exists, central,
        np.where(hi.exists, dplus, np.where(lo.exists, dminus, 0.0)))
    return grad

  def coefficient(self, x, p, delta):
    if p == 2:
      return np.ones(self.size)
    g2 = np.sum(self.node_gradient(x) ** 2, axis=-1)
    return (g2 + delta * delta) ** ((p - 2) / 2.0)

  def assemble(self, kappa):
    """
    Return the matrix (scaled by `h^2`) and the right hand side of the
    lagged problem with node coefficients *kappa*.
    """

    h = self.grid.h
    diag = np.zeros(self.size)
    rhs = np.zeros(self.size)
    rows, cols, vals = [], [], []
    for d in self.directions:
      i = np.nonzero(d.neighbour >= 0)[0]
      j = d.neighbour[i]
      k = 0.5 * (kappa[i] + kappa[j])
      diag[i] += k
      rows.append(i)
      cols.append(j)
      vals.append(-k)
      cut = np.nonzero(d.cut)[0]
      kc = kappa[cut] * h / d.dist[cut]
      diag[cut] += kc
      rhs[cut] += kc * d.value[cut]
    index = np.arange(self.size)
    rows.append(index)
    cols.append(index)
    vals.append(diag)
    matrix = sparse.coo_matrix(
      (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
      shape=(self.size, self.size)).tocsr()
    return matrix, rhs

  def _linear_solve(self, matrix, rhs, x0, cfg):
    precond = sparse.diags(1.0 / matrix.diagonal())
    x, info = splinalg.cg(matrix, rhs, x0=x0, rtol=cfg.linear_tol,
      maxiter=cfg.linear_max_iter, M=precond)
    if info < 0:
      raise ConvergenceError('conjugate gradients broke down')
    if info > 0:
      logger.debug('conjugate gradients stopped after %d iterations', info)
    return x

  def residual(self, x, p, delta):
    matrix, rhs = self.assemble(self.coefficient(x, p, delta))
    norm = np.linalg.norm(rhs)
    return np.linalg.norm(matrix @ x - rhs) / (norm if norm > 0 else 1.0)

  def solve(self, cfg, delta, initial=None, events=None):
    """
    Run the damped Picard iteration and return the values at the unknown
    nodes. Without *initial*, the iteration starts from the solution of the
    Laplace problem.

    # Raises
    ConvergenceError: If the residual is not finite, grows by more than
      three orders of magnitude or does not drop below `picard_tol`.
    """

    p = cfg.p
    if self.size == 0:
      return np.zeros(0)
    if initial is None:
      matrix, rhs = self.assemble(np.ones(self.size))
      x = self._linear_solve(matrix, rhs, None, cfg)
    else:
      x = np.asarray(initial, dtype=float).copy()
    omega = cfg.effective_damping()
    history = []
    for it in range(cfg.picard_max_iter + 1):
      matrix, rhs = self.assemble(self.coefficient(x, p, delta))
      norm = np.linalg.norm(rhs)
      residual = float(np.linalg.norm(matrix @ x - rhs) / (norm if norm > 0 else 1.0))
      history.append(residual)
      logger.debug('picard iteration %d: residual %.3e', it, residual)
      if events is not None:
        events.emit(EV_PICARD_STEP, (it, residual))
      if not np.isfinite(residual) or residual > 1e3 * max(history[0], cfg.picard_tol):
        raise ConvergenceError('Picard iteration diverged (residual {:.3e})'.format(residual), history)
      if residual < cfg.picard_tol:
        return x
      if it == cfg.picard_max_iter:
        break
      y = self._linear_solve(matrix, rhs, x, cfg)
      x = x + omega * (y - x)
    raise ConvergenceError('Picard iteration did not converge within {} iterations '
      '(residual {:.3e})'.format(cfg.picard_max_iter, history[-1]), history)


def _default_delta(grid, domain):
  return 1e-6 * domain.max_phi(grid) / grid.h


def solve_p_harmonic(grid, mask, domain, outer_zero=False, cfg=None, initial=None, events=None):
  """
  Solve the p-Laplace equation on the #CellClass.ACTIVE nodes of *mask*
  with `u = phi` on the body and `u = 0` on the free boundary (the zero
  contour of the mask's level set, or the dead nodes themselves without
  one). Box faces are natural boundaries unless *outer_zero* is set.

  # Parameters
  cfg (SolverConfig): Solver controls, default `SolverConfig(p=2)`.
  initial (ScalarField): Optional start of the Picard iteration.
  events (EventHandler): Receives #EV_PICARD_STEP events.
  return (ScalarField): `phi` inside the body, 0 on dead nodes.
  raise (TopologyError): If a component of the active region does not touch
    the body.
  raise (ConvergenceError): See #DirichletProblem.solve().
  """

  cfg = cfg or SolverConfig(p=2.0)
  if outer_zero:
    mask = mask.with_outer_dirichlet()
  inside = mask.inside
  if mask.body_distance is None or not inside.any():
    raise TopologyError('the active region does not touch a body')
  unknown = mask.active
  labels, count = ndimage.label(unknown)
  touching = np.unique(labels[unknown & any_neighbour(inside)])
  if count and len(np.setdiff1d(np.arange(1, count + 1), touching)):
    raise TopologyError('{} component(s) of the active region are disconnected from the body'
      .format(count - len(touching)))
  zero = lambda points: np.zeros(len(points))
  boundary = [(inside, mask.body_distance, domain.phi_at)]
  if mask.psi is not None:
    boundary.append((mask.dead, -mask.psi, zero))
  else:
    boundary.append((mask.dead, None, zero))
  boundary.append((mask.classes == CellClass.DIRICHLET_OUTER, None, zero))
  problem = DirichletProblem(grid, unknown, boundary)
  delta = cfg.delta if cfg.delta is not None else _default_delta(grid, domain)
  x0 = None if initial is None else initial.values[unknown]
  x = problem.solve(cfg, delta, x0, events)
  values = np.zeros(grid.shape)
  values[inside] = domain.phi_at(grid.coords()[inside])
  values[unknown] = x
  logger.debug('solved p = %g on %d nodes', cfg.p, problem.size)
  return ScalarField(grid, values)


def _body_ghost(values, mask, layers):
  sd = mask.body_distance
  inside = mask.inside
  ghost = values.copy()
  trusted = ~inside
  total = np.zeros_like(values)
  count = np.zeros(values.shape, dtype=int)
  for axis in range(values.ndim):
    for step in (-1, 1):
      i_out = shifted(~inside, axis, step, False)
      k_out = shifted(~inside, axis, 2 * step, False)
      sel = inside & i_out
      if not sel.any():
        continue
      sd_i = shifted(sd, axis, step, 1.0)
      u_i = shifted(values, axis, step)
      u_k = shifted(values, axis, 2 * step)
      with np.errstate(divide='ignore', invalid='ignore'):
        theta = np.clip(sd_i / (sd_i - sd), THETA_MIN, 1.0)
      g = values
      far = g + (g - u_k) * (1.0 - theta) / (1.0 + theta)
      near = u_i + (g - u_i) / np.maximum(theta, 0.1)
      candidate = np.where(k_out, far, near)
      total[sel] += candidate[sel]
      count[sel] += 1
  new = count > 0
  ghost[new] = total[new] / count[new]
  trusted |= new
  for _ in range(layers - 1):
    total[...] = 0
    count[...] = 0
    for axis in range(values.ndim):
      for step in (-1, 1):
        ok = ~trusted & shifted(trusted, axis, step, False) & shifted(trusted, axis, 2 * step, False)
        candidate = 2.0 * shifted(ghost, axis, step) - shifted(ghost, axis, 2 * step)
        total[ok] += candidate[ok]
        count[ok] += 1
    new = count > 0
    if not new.any():
      break
    ghost[new] = total[new] / count[new]
    trusted |= new
  return ghost


def ghost_extend(u, mask, body_layers=2, layers=None):
  """
  Return *u* with ghost values inside the body (linear extrapolation
  through the boundary crossing, *body_layers* deep) and the signed linear
  extension across the zero set of its positive part (*layers* deep).
  """

  values = np.array(u.values, dtype=float)
  if mask.body_distance is not None and mask.inside.any() and body_layers > 0:
    values = _body_ghost(values, mask, body_layers)
  return ScalarField(u.grid, signed_extension(values, layers))


def _positive_energy(u, mask, p):
  ext = ghost_extend(u, mask)
  if mask.psi is not None:
    level = -np.asarray(mask.psi, dtype=float)
  else:
    level = ext.values
  frac = cell_fractions(np.minimum(level, mask.body_level()))
  density = np.linalg.norm(cell_gradients(ext.values, u.grid.h), axis=-1) ** p
  return float(np.sum(frac * density) * u.grid.cell_volume)


def p_energy(u, mask, p):
  """
  The p-Dirichlet energy `int |grad u|^p` outside of the body. Cells are
  weighted with the fraction where the field is positive (or negative, for
  the negative part), gradients are taken at cell centers of the ghost
  extended field.
  """

  if not p > 1:
    raise ConfigError('p: must be > 1, got {!r}'.format(p))
  energy = _positive_energy(u, mask, p)
  if mask.psi is None and np.any(u.values[mask.exterior_nodes] < 0):
    energy += _positive_energy(-u, mask, p)
  return energy


def slope_along(u, points, directions, mask=None, intercept=0.0, offsets=(1, 2, 3)):
  """
  Fit `u(x + s d) = intercept + a s + b s^2` at `s = k h` for the *offsets*
  and return the slopes *a*. Offsets outside the box or inside the body are
  dropped from the end; fits with fewer than two leading valid offsets
  yield NaN.

  # Parameters
  u (ScalarField): The field, ideally ghost extended.
  points (numpy.ndarray): `(m, n)` base points.
  directions (numpy.ndarray): `(m, n)` unit directions.
  mask (RegionMask): Supplies the body, optional.
  intercept (float or numpy.ndarray): The value at the base points.
  """

  grid = u.grid
  h = grid.h
  points = np.asarray(points, dtype=float)
  directions = np.asarray(directions, dtype=float)
  interp = u.interpolator()
  body = None
  if mask is not None and mask.body_distance is not None:
    body = RegularGridInterpolator(grid.axes(), mask.body_distance,
      bounds_error=False, fill_value=None)
  s = h * np.asarray(offsets, dtype=float)
  samples = np.empty((len(points), len(s)))
  lead = np.zeros(len(points), dtype=int)
  still = np.ones(len(points), dtype=bool)
  for k, sk in enumerate(s):
    x = points + sk * directions
    valid = grid.inside_box(x)
    if body is not None:
      valid &= body(x) > 0
    still &= valid
    lead += still
    samples[:, k] = interp(x)
  samples -= np.broadcast_to(intercept, (len(points),))[:, None]
  slopes = np.full(len(points), np.nan)
  for count in range(2, len(s) + 1):
    sel = (lead == count) if count < len(s) else (lead >= count)
    if not sel.any():
      continue
    design = np.stack([s[:count], s[:count] ** 2], axis=-1)
    slopes[sel] = (np.linalg.pinv(design) @ samples[sel, :count].T)[0]
  return slopes


class BoundaryFlux:
  """
  Slopes of the solution at contour samples of the free boundary.

  # Members
  points (numpy.ndarray): `(m, n)` sample locations.
  q (numpy.ndarray): The slope `|grad u|` from the positive side, >= 0.
  normals (numpy.ndarray): Unit normals pointing out of `{u > 0}`.
  weights (numpy.ndarray): Contour measure per sample.
  flagged (int): Number of samples excluded for lack of a stencil.
  """

  def __init__(self, points, q, normals, weights, flagged=0):
    self.points = points
    self.q = q
    self.normals = normals
    self.weights = weights
    self.flagged = flagged

  def __len__(self):
    return len(self.q)

  def __repr__(self):
    return '<BoundaryFlux samples={} flagged={} mean={:.6g}>'.format(
      len(self), self.flagged, self.mean() if len(self) else float('nan'))

  def mean(self):
    return float(np.average(self.q, weights=self.weights))

  def cv(self):
    mean = self.mean()
    var = np.average((self.q - mean) ** 2, weights=self.weights)
    return float(np.sqrt(var) / mean) if mean > 0 else float('inf')

  def sup_dev(self, lam):
    return float(np.max(np.abs(self.q - lam)) / lam)


def free_boundary_flux(u, levelset, p, mask=None):
  """
  Sample `q = |grad u|` on the zero contour of *levelset* by a quadratic fit
  along the inward normal over the offsets `h, 2h, 3h`.
  """

  samples = levelset.contour()
  mask = mask if mask is not None else RegionMask.exterior(u.grid)
  ext = ghost_extend(u, mask)
  slopes = slope_along(ext, samples.points, -samples.normals, mask)
  valid = np.isfinite(slopes)
  flagged = int(np.count_nonzero(~valid))
  if flagged:
    logger.warning('%d free boundary sample(s) without a positive side stencil', flagged)
  return BoundaryFlux(samples.points[valid], np.maximum(slopes[valid], 0.0),
    samples.normals[valid], samples.weights[valid], flagged)


def boundary_flux_inner(u, domain, p, mask=None, weighted=True):
  """
  Return `int_{dD} phi |grad u|^(p-2) (-d_n u) dS` with the outward normal
  *n* of the body, positive for a field that decays away from the body.
  With *weighted* unset the factor `phi` is dropped.
  """

  grid = u.grid
  mask = mask if mask is not None else RegionMask.from_body(grid, domain)
  points, normals, weights = domain.body.boundary_quadrature(grid)
  phi = domain.phi_at(points)
  ext = ghost_extend(u, mask)
  slopes = slope_along(ext, points, normals, None, intercept=phi)
  slopes = np.where(np.isfinite(slopes), slopes, 0.0)
  density = -np.sign(slopes) * np.abs(slopes) ** (p - 1)
  if weighted:
    density = phi * density
  return float(np.sum(weights * density))


def _energy_weights(mask):
  if mask.psi is not None:
    level = -np.asarray(mask.psi, dtype=float)
  else:
    level = np.where(mask.dead, -1.0, 1.0)
  return cell_fractions(np.minimum(level, mask.body_level()))


def regularized_energy(u, mask, p, delta):
  """
  `sum_cells w (|grad u|^2 + delta^2)^(p/2) h^n` with cell weights from the
  mask only, so that it is smooth in the nodal values.
  """

  grads = cell_gradients(u.values, u.grid.h)
  density = (np.sum(grads ** 2, axis=-1) + delta * delta) ** (p / 2.0)
  return float(np.sum(_energy_weights(mask) * density) * u.grid.cell_volume)


def energy_variation(u, v, mask, p, delta):
  """
  The directional derivative of #regularized_energy() at *u* along *v*.
  """

  gu = cell_gradients(u.values, u.grid.h)
  gv = cell_gradients(v.values, v.grid.h)
  coeff = (np.sum(gu ** 2, axis=-1) + delta * delta) ** ((p - 2) / 2.0)
  dot = np.sum(gu * gv, axis=-1)
  return float(p * np.sum(_energy_weights(mask) * coeff * dot) * u.grid.cell_volume)
