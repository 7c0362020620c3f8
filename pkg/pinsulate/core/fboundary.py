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
The free-boundary optimizer: a trial free boundary method that alternates
a p-Laplace solve on `{psi < 0}` with a level set step whose normal speed
`(q^p - lambda^p) / (p lambda^(p-1))` is the first variation of the energy
per unit transported volume. The multiplier *lambda* follows the volume
through multiplicative feedback and is kept inside the band in which the
penalty's kink binds.
"""

__all__ = ['OptimizerConfig', 'FreeBoundaryState', 'SweepResult', 'optimize',
           'evaluate_state', 'estimate_lambda_divthm', 'bernoulli_residual',
           'penalty_lambda_band', 'epsilon_sweep', 'barrier_violation',
           'summary', 'LOG_COLUMNS']

import concurrent.futures
import dataclasses
import logging
import typing as t

import numpy as np

from pinsulate.core.errors import ConfigError, ConvergenceError, \
  DomainTooSmallError
from pinsulate.core.events import EV_OUTER_STEP
from pinsulate.core.functional import EpsilonPenalty, as_penalty, heat_loss
from pinsulate.core.geometry import Ball, ScalarField, levelset_volume, \
  surface_measure, unit_ball_volume
from pinsulate.core.levelset import LevelSet
from pinsulate.core.plap import BoundaryFlux, SolverConfig, \
  free_boundary_flux, p_energy, solve_p_harmonic
from pinsulate.core.radial import radial_p_harmonic, radius_for_volume

logger = logging.getLogger(__name__)

#: Columns of the iteration log.
LOG_COLUMNS = ['iter', 'J', 'energy', 'volume', 'lambda', 'cv', 'step']


@dataclasses.dataclass
class OptimizerConfig:
  """
  # Members
  pen (PenaltySpec): The volume penalty, a number is taken as epsilon.
  lambda_init (float): Start value of the multiplier. #None selects the
    radial oracle for a ball with constant temperature and the
    divergence-theorem estimate otherwise.
  speed_floor (float): The time step is `step_cfl h / max(max |V|,
    speed_floor lambda)`.
  initial_volume (float): Volume of the initial layer around the body.
  """

  pen: t.Any
  p: float = 2.0
  step_cfl: float = 0.5
  max_outer: int = 300
  j_tol: float = 1e-3
  vol_tol: float = 0.02
  cv_tol: float = 0.05
  lambda_init: t.Optional[float] = None
  reinit_every: int = 1
  solver: t.Optional[SolverConfig] = None
  speed_floor: float = 0.25
  initial_volume: float = 2.0
  outer_zero: bool = False

  def __post_init__(self):
    self.pen = as_penalty(self.pen)
    if not self.p > 1:
      raise ConfigError('p: must be > 1, got {!r}'.format(self.p))
    if not 0 < self.step_cfl <= 0.9:
      raise ConfigError('optimizer.step_cfl: must be in (0, 0.9], got {!r}'.format(self.step_cfl))
    for name in ('j_tol', 'vol_tol', 'cv_tol', 'speed_floor', 'initial_volume'):
      if not getattr(self, name) > 0:
        raise ConfigError('optimizer.{}: must be > 0, got {!r}'.format(name, getattr(self, name)))
    for name in ('max_outer', 'reinit_every'):
      if int(getattr(self, name)) < 1:
        raise ConfigError('optimizer.{}: must be >= 1, got {!r}'.format(name, getattr(self, name)))
    if self.lambda_init is not None and not self.lambda_init > 0:
      raise ConfigError('optimizer.lambda_init: must be > 0, got {!r}'.format(self.lambda_init))
    if self.solver is None:
      self.solver = SolverConfig(p=self.p)
    elif self.solver.p != self.p:
      raise ConfigError('solver.p: {!r} differs from p = {!r}'.format(self.solver.p, self.p))


@dataclasses.dataclass
class FreeBoundaryState:
  u: ScalarField
  levelset: LevelSet
  mask: t.Any
  lam: float
  volume: float
  energy: float
  J: float
  bernoulli_cv: float
  sup_dev: float
  flux: BoundaryFlux
  iterations: int = 0
  converged: bool = False
  history: list = dataclasses.field(default_factory=list)
  p: float = 2.0
  speed: t.Any = None
  dt: float = 0.0


def penalty_lambda_band(pen, p, target):
  """
  Return the multipliers `(lo, hi)` for which `(p - 1) lambda^p` lies
  between the left and the right slope of the penalty at *target*.
  """

  lo = (pen.slope_below(target) / (p - 1.0)) ** (1.0 / p)
  hi = (pen.slope_above(target) / (p - 1.0)) ** (1.0 / p)
  return lo, hi


def _oracle_lambda(domain, p, target):
  body = domain.body
  if not isinstance(body, Ball) or not domain.constant_phi:
    return None
  n = body.dim
  scaled = radius_for_volume(n, target / body.radius ** n)
  return domain.phi / body.radius * radial_p_harmonic(n, p, scaled).lam


def estimate_lambda_divthm(u, domain, levelset, p, mask=None):
  """
  `(heat loss / free boundary measure)^(1/(p-1))`, the multiplier implied
  by the divergence theorem.

  # Raises
  EmptyBoundaryError: If the level set has no zero contour.
  """

  area = surface_measure(levelset)
  loss = heat_loss(u, domain, p, mask)
  return max(loss / area, 0.0) ** (1.0 / (p - 1.0))


def evaluate_state(u, levelset, mask, pen, p):
  """
  Return `(flux, volume, energy, J)` of a solution on the region of a
  level set. *mask* must carry the level set.
  """

  flux = free_boundary_flux(u, levelset, p, mask)
  volume = levelset_volume(levelset, mask)
  energy = p_energy(u, mask, p)
  return flux, volume, energy, energy + pen.value(volume)


def bernoulli_residual(state):
  """
  Return `(cv, sup_dev)`: the coefficient of variation of the free boundary
  slopes and their largest relative deviation from the multiplier.
  """

  flux = state.flux
  if not len(flux):
    return float('inf'), float('inf')
  return flux.cv(), flux.sup_dev(state.lam)


def _check_margin(levelset, mask):
  near = (levelset.psi < 0) & levelset.grid.face_mask(2) & ~mask.inside
  if near.any():
    raise DomainTooSmallError('free boundary within 2h of the box at {} node(s); '
      'enlarge the box'.format(np.count_nonzero(near)))


def optimize(domain, grid, mask, cfg, levelset=None, events=None):
  """
  Minimize `J(u) = E(u) + f(|{u > 0}|)` over free boundaries around the
  body.

  # Parameters
  domain (DomainSpec): Body and temperature.
  grid (GridSpec): The grid.
  mask (RegionMask): The mask from #build_grid().
  cfg (OptimizerConfig): Controls.
  levelset (LevelSet): Initial free boundary, default a layer of volume
    `cfg.initial_volume` around the body.
  events (EventHandler): Receives #EV_OUTER_STEP rows and the solver's
    #EV_PICARD_STEP events.
  return (FreeBoundaryState): The converged state.
  raise (ConvergenceError): After `max_outer` iterations or five
    consecutive step halvings, with the last accepted state attached.
  raise (DomainTooSmallError): If `{psi < 0}` comes within 2h of the box.
  raise (TopologyError): If `{psi < 0}` loses contact with the body.
  """

  pen, p, n, h = cfg.pen, cfg.p, grid.n, grid.h
  target = pen.target()
  if levelset is None:
    levelset = LevelSet.for_volume(grid, mask, domain.body, cfg.initial_volume)
  lam = cfg.lambda_init
  if lam is None:
    lam = _oracle_lambda(domain, p, 1.0 if target is None else target)
  band = penalty_lambda_band(pen, p, target) if target is not None else None
  history = []
  accepted = None
  halvings = 0
  dt_scale = 1.0
  for it in range(1, cfg.max_outer + 1):
    levelset = levelset.prune(mask)
    _check_margin(levelset, mask)
    work = mask.with_levelset(levelset.psi)
    initial = accepted.u if accepted is not None and p != 2 else None
    u = solve_p_harmonic(grid, work, domain, cfg.outer_zero, cfg.solver, initial, events)
    flux, volume, energy, J = evaluate_state(u, levelset, work, pen, p)
    if lam is None:
      lam = estimate_lambda_divthm(u, domain, levelset, p, work)
      logger.info('initial multiplier from the divergence theorem: %.6g', lam)

    if accepted is not None and J - accepted.J > 10 * cfg.j_tol * abs(accepted.J):
      halvings += 1
      if halvings >= 5:
        raise ConvergenceError('five consecutive step halvings at iteration {}'.format(it),
          history, accepted)
      dt_scale *= 0.5
      logger.debug('iteration %d: J increased to %.6g, halving the step', it, J)
      levelset = _step(accepted, dt_scale, cfg)
      continue
    halvings = 0

    # Feedback on the mean slope instead of the previous lambda; q = lambda
    # is the fixed point of both.
    q_mean = flux.mean() if len(flux) else lam
    binding = True
    if target is not None:
      lam_new = q_mean * np.clip((volume / target) ** (1.0 / (n * (p - 1.0))), 0.5, 2.0)
      clipped = float(np.clip(lam_new, band[0], band[1]))
      binding = clipped == lam_new
      lam_new = clipped
    else:
      binding = False
      lam_new = (pen.slope(volume) / (p - 1.0)) ** (1.0 / p)
    cv = flux.cv() if len(flux) else float('inf')
    sup_dev = flux.sup_dev(lam_new) if len(flux) else float('inf')
    speed = (flux.q ** p - lam_new ** p) / (p * lam_new ** (p - 1.0))
    dt = _time_step(speed, lam_new, dt_scale, h, cfg)
    state = FreeBoundaryState(u, levelset, work, lam_new, volume, energy, J, cv, sup_dev,
      flux, iterations=it, history=history, p=p, speed=speed, dt=dt)
    row = {'iter': it, 'J': J, 'energy': energy, 'volume': volume, 'lambda': lam_new,
      'cv': cv, 'step': dt}
    history.append(row)
    logger.debug('iteration %d: J %.6g, volume %.4f, lambda %.4f, cv %.4f', it, J, volume, lam_new, cv)
    if events is not None:
      events.emit(EV_OUTER_STEP, row)

    if accepted is not None:
      dJ = abs(J - accepted.J) / max(abs(J), 1e-300)
      if binding:
        volume_ok = abs(volume - target) < cfg.vol_tol
      else:
        volume_ok = abs(volume - accepted.volume) < cfg.vol_tol / 10.0
      if dJ < cfg.j_tol and volume_ok and cv < cfg.cv_tol:
        state.converged = True
        logger.info('converged after %d iterations: J %.6g, volume %.4f, lambda %.4f',
          it, J, volume, lam_new)
        return state

    accepted = state
    lam = lam_new
    dt_scale = min(1.0, 2.0 * dt_scale)
    levelset = _step(accepted, dt_scale, cfg)

  raise ConvergenceError('free boundary did not converge within {} iterations'
    .format(cfg.max_outer), history, accepted)


def _time_step(speed, lam, dt_scale, h, cfg):
  vmax = float(np.max(np.abs(speed))) if len(speed) else 0.0
  return dt_scale * cfg.step_cfl * h / max(vmax, cfg.speed_floor * lam)


def _step(state, dt_scale, cfg):
  levelset = state.levelset
  dt = _time_step(state.speed, state.lam, dt_scale, levelset.grid.h, cfg)
  speed = levelset.extend_velocity(state.flux, state.speed)
  moved = levelset.advect(speed, dt)
  if moved.reinit_age >= cfg.reinit_every:
    moved = moved.reinitialize()
  return moved


@dataclasses.dataclass
class SweepResult:
  """
  # Members
  rows (list): One dictionary per penalty parameter, see #epsilon_sweep().
  states (list): The converged states in the same order.
  c_fit (float): `max (V - 1)+ / eps`.
  c_lsq (float): Least squares slope of `(V - 1)+` against eps.
  lambda_spread (float): `(max - min) / mean` of the multipliers.
  """

  rows: list
  states: list
  c_fit: float
  c_lsq: float
  lambda_spread: float

  def violations(self, vol_tol=0.02, lambda_tol=0.1):
    """
    Return a message for every entry whose volume exceeds the linear bound
    `1 + c_lsq eps` by more than *vol_tol*, and one if the multipliers
    spread by more than *lambda_tol*.
    """

    messages = []
    for row in self.rows:
      bound = 1.0 + self.c_lsq * row['eps']
      if row['volume'] > bound + vol_tol:
        messages.append('eps {:g}: volume {:.4f} above 1 + C eps = {:.4f}'.format(
          row['eps'], row['volume'], bound))
    if self.lambda_spread > lambda_tol:
      messages.append('lambda spreads by {:.2%} across the sweep'.format(self.lambda_spread))
    return messages


def epsilon_sweep(domain, grid, mask, cfg, eps_list, workers=1):
  """
  Run #optimize() for every penalty parameter in *eps_list* (positive,
  strictly decreasing). Entries run on a thread pool with *workers*
  threads and each starts from the configured initial layer, so the results
  keep the order of *eps_list* and do not depend on the execution order.

  The result carries `c_fit = max (V - 1)+ / eps`, the least squares slope
  `c_lsq` of `(V - 1)+` against eps and the relative spread of the
  multipliers.
  """

  eps_list = [float(e) for e in eps_list]
  if not eps_list or any(e <= 0 for e in eps_list):
    raise ConfigError('sweep.eps: values must be positive, got {!r}'.format(eps_list))
  if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
    raise ConfigError('sweep.eps: values must be strictly decreasing, got {!r}'.format(eps_list))

  def run(eps):
    entry = dataclasses.replace(cfg, pen=EpsilonPenalty(eps), solver=cfg.solver)
    return optimize(domain, grid, mask, entry)

  with concurrent.futures.ThreadPoolExecutor(max_workers=max(1, int(workers))) as pool:
    states = list(pool.map(run, eps_list))
  rows = []
  for eps, state in zip(eps_list, states):
    rows.append({'eps': eps, 'volume': state.volume, 'lambda': state.lam, 'J': state.J,
      'converged': state.converged, 'iterations': state.iterations})
  eps = np.asarray(eps_list)
  excess = np.maximum(np.asarray([r['volume'] for r in rows]) - 1.0, 0.0)
  lams = np.asarray([r['lambda'] for r in rows])
  result = SweepResult(rows, states, float(np.max(excess / eps)),
    float(np.sum(eps * excess) / np.sum(eps * eps)),
    float((lams.max() - lams.min()) / lams.mean()))
  for message in result.violations(cfg.vol_tol):
    logger.warning(message)
  return result


def barrier_violation(state, domain, band=2.0):
  """
  Compare the solution around a ball body with the radial solutions of the
  largest annulus inside and the smallest annulus around the free boundary.
  Returns the largest amounts `(below, above)` by which
  `h1(r + band h) <= u <= h2(r - band h)` is violated.

  # Raises
  ConfigError: If the body is not a ball with constant temperature.
  """

  body = domain.body
  if not isinstance(body, Ball) or not domain.constant_phi:
    raise ConfigError('body: barriers need a ball with constant phi')
  grid = state.u.grid
  center, rb = body.center(), body.radius
  radii = np.linalg.norm(state.levelset.contour().points - center, axis=-1)
  r1, r2 = radii.min() / rb, radii.max() / rb
  if r1 <= 1.0:
    raise ConfigError('free boundary touches the body')
  coords = grid.coords()
  r = np.linalg.norm(coords - center, axis=-1)
  outside = state.mask.exterior_nodes
  direction = np.where(r[..., None] > 0, (coords - center) / np.maximum(r, 1e-300)[..., None], 0.0)
  shift = band * grid.h * direction
  h1 = domain.phi * radial_p_harmonic(grid.n, state.p, r1).field((coords + shift - center) / rb)
  h2 = domain.phi * radial_p_harmonic(grid.n, state.p, r2).field((coords - shift - center) / rb)
  u = state.u.values
  below = float(np.max(np.where(outside, h1 - u, 0.0)))
  above = float(np.max(np.where(outside, u - h2, 0.0)))
  return max(below, 0.0), max(above, 0.0)


def summary(state, domain, config=None):
  """
  Return the JSON summary of a state. `R_equivalent` is the radius of the
  ball with the volume of the body plus the positive set.
  """

  n = state.u.grid.n
  body_volume = domain.body.volume() if hasattr(domain.body, 'volume') else 0.0
  R = ((body_volume + state.volume) / unit_ball_volume(n)) ** (1.0 / n)
  result = {
    'R_equivalent': R,
    'lambda': state.lam,
    'volume': state.volume,
    'energy': state.energy,
    'J': state.J,
    'cv': state.bernoulli_cv,
    'sup_dev': state.sup_dev,
    'converged': state.converged,
    'iterations': state.iterations,
    'flagged': state.flux.flagged,
  }
  if config is not None:
    result['config'] = config
  return result
