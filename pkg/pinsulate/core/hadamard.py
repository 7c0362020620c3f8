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
Numerical check of the first variation of the energy under a pair of
local boundary perturbations. In the ball `B_r(x1)` the free boundary is
pushed into `{u > 0}` by `x - lam r rho(|x - x1|/r) nu1`, in `B_r(x2)` it is
pushed out by `x + lam r rho(|x - x2|/r) nu2`; the transported field is
`v(P(x)) = u(x)`. To first order the energy changes by
`r^n lam (p - 1) c(rho) (q(x1)^p - q(x2)^p)`.
"""

__all__ = ['BumpSpec', 'bump_constants', 'PerturbationSpec',
           'perturbation_map', 'inverse_map', 'transport_field',
           'FirstVariation', 'measure_first_variation', 'SyntheticState',
           'synthetic_two_slab', 'richardson_limit']

import logging
import math
import typing as t
import warnings

import numpy as np
from scipy import integrate, ndimage, special

from pinsulate.core.errors import ConfigError, GeometryError, QuadratureError
from pinsulate.core.geometry import DomainSpec, GridSpec, HalfSpace, \
  RegionMask, ScalarField, cell_fractions, cell_gradients
from pinsulate.core.levelset import LevelSet
from pinsulate.core.plap import ghost_extend, slope_along

logger = logging.getLogger(__name__)


class BumpSpec:
  """
  A nonnegative profile *rho* on `[0, 1]` that vanishes at both ends and
  integrates to one, together with its derivative.

  # Members
  name (str): A label.
  sup_rho_prime (float): `max |rho'|`, sampled.
  """

  def __init__(self, rho, rho_prime, name='custom'):
    self._rho = rho
    self._rho_prime = rho_prime
    self.name = name
    t = np.linspace(0.0, 1.0, 2001)
    if abs(float(rho(np.array(0.0)))) > 1e-12 or abs(float(rho(np.array(1.0)))) > 1e-12:
      raise ConfigError('bump: rho must vanish at 0 and 1')
    if np.any(rho(t) < -1e-14):
      raise ConfigError('bump: rho must be nonnegative')
    integral, _ = integrate.quad(lambda s: float(rho(np.array(s))), 0.0, 1.0,
      epsabs=1e-13, epsrel=1e-13, limit=200)
    if abs(integral - 1.0) > 1e-10:
      raise ConfigError('bump: rho must integrate to 1, got {!r}'.format(integral))
    self.sup_rho_prime = float(np.max(np.abs(rho_prime(t))))

  def __repr__(self):
    return '<BumpSpec {} sup|rho\'|={:.4g}>'.format(self.name, self.sup_rho_prime)

  @classmethod
  def polynomial(cls, k=2):
    """
    `t^k (1 - t)^k / B(k + 1, k + 1)`. The default `k = 2` is
    `30 t^2 (1 - t)^2`.
    """

    if int(k) != k or k < 1:
      raise ConfigError('bump: polynomial order must be a positive integer, got {!r}'.format(k))
    norm = 1.0 / special.beta(k + 1, k + 1)

    def rho(t):
      return norm * t ** k * (1.0 - t) ** k

    def rho_prime(t):
      return norm * k * t ** (k - 1) * (1.0 - t) ** (k - 1) * (1.0 - 2.0 * t)

    return cls(rho, rho_prime, 'polynomial({})'.format(k))

  @classmethod
  def smooth(cls):
    """
    The infinitely differentiable bump `exp(-1 / (t (1 - t)))`, normalized
    by quadrature.
    """

    def g(t):
      t = np.asarray(t, dtype=float)
      inner = (t > 0) & (t < 1)
      with np.errstate(all='ignore'):
        value = np.exp(-1.0 / (t * (1.0 - t)))
      return np.where(inner, value, 0.0)

    def g_prime(t):
      t = np.asarray(t, dtype=float)
      inner = (t > 0) & (t < 1)
      with np.errstate(all='ignore'):
        value = g(t) * (1.0 - 2.0 * t) / (t * (1.0 - t)) ** 2
      return np.where(inner, value, 0.0)

    norm, _ = integrate.quad(lambda s: float(g(s)), 0.0, 1.0, epsabs=1e-15, epsrel=1e-13, limit=200)
    return cls(lambda t: g(t) / norm, lambda t: g_prime(t) / norm, 'smooth')

  def __call__(self, t):
    t = np.asarray(t, dtype=float)
    return np.where((t >= 0) & (t <= 1), self._rho(np.clip(t, 0.0, 1.0)), 0.0)

  def prime(self, t):
    t = np.asarray(t, dtype=float)
    return np.where((t >= 0) & (t <= 1), self._rho_prime(np.clip(t, 0.0, 1.0)), 0.0)

  def flat_integral(self, n):
    """
    `c(rho)`: the integral of `rho(|z|)` over the unit disc of dimension
    `n - 1`.
    """

    sphere = 2.0 * math.pi ** ((n - 1) / 2.0) / special.gamma((n - 1) / 2.0)
    value, _ = integrate.quad(lambda s: float(self(s)) * s ** (n - 2), 0.0, 1.0,
      epsabs=1e-13, epsrel=1e-13, limit=200)
    return sphere * value


def bump_constants(bump, n, directions=8, seed=0, tol=1e-7):
  """
  Return `(c_rho, C_rho)`. *C_rho* is the integral of
  `rho'(|y|) <y/|y|, nu>` over the half ball `{<y, nu> < 0}`, evaluated in
  an orthonormal frame of *directions* random normals; it agrees with
  *c_rho* by the divergence theorem.

  # Raises
  QuadratureError: If a quadrature reports an error above *tol* or the
    values for different normals spread by more than *tol*.
  """

  if n not in (2, 3):
    raise ConfigError('dim: must be 2 or 3, got {!r}'.format(n))
  c_rho = bump.flat_integral(n)
  rng = np.random.default_rng(seed)
  values = []
  opts = {'limit': 200, 'epsabs': 1e-11, 'epsrel': 1e-11}
  for _ in range(directions):
    nu = rng.normal(size=n)
    nu /= np.linalg.norm(nu)
    frame, _ = np.linalg.qr(np.column_stack([nu, rng.normal(size=(n, n - 1))]))
    if frame[:, 0] @ nu < 0:
      frame = -frame

    def density(w1, a):
      y = frame[:, 0] * w1 + frame[:, 1] * a
      r = math.sqrt(float(y @ y))
      if r == 0:
        return 0.0
      return float(bump.prime(r)) * float(y @ nu) / r

    if n == 2:
      func = lambda a, w1: density(w1, a)
      ranges = [lambda w1: (-math.sqrt(1 - w1 * w1), math.sqrt(1 - w1 * w1)), (-1.0, 0.0)]
    else:
      # Rotational symmetry about nu reduces the half ball to a half disc.
      func = lambda a, w1: 2.0 * math.pi * a * density(w1, a)
      ranges = [lambda w1: (0.0, math.sqrt(1 - w1 * w1)), (-1.0, 0.0)]
    with warnings.catch_warnings(record=True) as caught:
      warnings.simplefilter('always', integrate.IntegrationWarning)
      value, error = integrate.nquad(func, ranges, opts=opts)
    if caught:
      logger.warning('quadrature warning for %r: %s', bump, caught[0].message)
    if error > tol:
      raise QuadratureError('half ball quadrature error {:.3e} exceeds {:.1e}'.format(error, tol))
    values.append(value)
  spread = max(values) - min(values)
  if spread > tol:
    raise QuadratureError('half ball integral depends on the normal (spread {:.3e})'.format(spread))
  return c_rho, float(np.mean(values))


class PerturbationSpec:
  """
  The two-ball perturbation.

  # Parameters
  x1, x2 (array): Free boundary points, pushed inwards at *x1* and outwards
    at *x2*.
  nu1, nu2 (array): Unit normals pointing out of `{u > 0}`.
  r (float): Ball radius.
  lam (float): Amplitude.
  bump (BumpSpec): Profile, default `BumpSpec.polynomial(2)`.

  # Raises
  ConfigError: If a normal is not unit, the map is not a diffeomorphism of
    the balls (`lam sup|rho'| >= 1` or `lam rho(t) > 1 - t`) or the balls
    intersect.
  """

  def __init__(self, x1, x2, nu1, nu2, r, lam, bump=None, separation=100.0):
    self.x1 = np.asarray(x1, dtype=float)
    self.x2 = np.asarray(x2, dtype=float)
    self.nu1 = np.asarray(nu1, dtype=float)
    self.nu2 = np.asarray(nu2, dtype=float)
    self.r = float(r)
    self.lam = float(lam)
    self.bump = bump or BumpSpec.polynomial(2)
    for name, nu in (('nu1', self.nu1), ('nu2', self.nu2)):
      if abs(np.linalg.norm(nu) - 1.0) > 1e-9:
        raise ConfigError('{}: must be a unit vector, got {!r}'.format(name, nu.tolist()))
    if not self.r > 0 or not self.lam > 0:
      raise ConfigError('r, lam: must be positive, got {!r}, {!r}'.format(r, lam))
    if self.lam * self.bump.sup_rho_prime >= 1:
      raise ConfigError('lam: lam * sup|rho\'| = {:.4g} must be < 1'.format(
        self.lam * self.bump.sup_rho_prime))
    t = np.linspace(0.0, 1.0, 2001)
    if np.any(self.lam * self.bump(t) > 1.0 - t + 1e-12):
      raise ConfigError('lam: lam * rho(t) must not exceed 1 - t')
    distance = float(np.linalg.norm(self.x1 - self.x2))
    if distance <= 2 * self.r:
      raise ConfigError('r: the balls around x1 and x2 intersect')
    if distance < separation * self.r:
      logger.warning('balls separated by %.3g r only', distance / self.r)
    self.dim = len(self.x1)

  def __repr__(self):
    return '<PerturbationSpec r={!r} lam={!r} {!r}>'.format(self.r, self.lam, self.bump)

  def swapped(self):
    """
    The perturbation with the roles of the two points exchanged.
    """

    return PerturbationSpec(self.x2, self.x1, self.nu2, self.nu1, self.r, self.lam, self.bump,
      separation=0.0)

  def balls(self):
    return ((self.x1, self.nu1, -1.0), (self.x2, self.nu2, 1.0))


def perturbation_map(spec, x):
  """
  Return `(P(x), DP(x))` for points of shape `(n,)` or `(m, n)`.
  """

  x = np.asarray(x, dtype=float)
  single = x.ndim == 1
  x = np.atleast_2d(x)
  n = x.shape[-1]
  y = x.copy()
  jac = np.broadcast_to(np.eye(n), x.shape[:-1] + (n, n)).copy()
  for center, nu, sign in spec.balls():
    d = x - center
    dist = np.linalg.norm(d, axis=-1)
    t = dist / spec.r
    inside = t < 1
    unit = d / np.where(dist > 0, dist, 1.0)[..., None]
    y[inside] += (sign * spec.lam * spec.r * spec.bump(t[inside]))[:, None] * nu
    slope = sign * spec.lam * spec.bump.prime(t[inside])
    jac[inside] += slope[:, None, None] * nu[None, :, None] * unit[inside][:, None, :]
  if single:
    return y[0], jac[0]
  return y, jac


def perturbation_det(spec, x):
  """
  `det DP(x) = 1 + s lam rho'(|x - xi|/r) <(x - xi)/|x - xi|, nu_i>`.
  """

  x = np.atleast_2d(np.asarray(x, dtype=float))
  det = np.ones(x.shape[:-1])
  for center, nu, sign in spec.balls():
    d = x - center
    dist = np.linalg.norm(d, axis=-1)
    t = dist / spec.r
    inside = t < 1
    cosine = (d @ nu) / np.where(dist > 0, dist, 1.0)
    det = np.where(inside, 1.0 + sign * spec.lam * spec.bump.prime(t) * cosine, det)
  return det


def inverse_map(spec, y, tol=1e-13, max_iter=200):
  """
  Invert #perturbation_map() by the fixed point iteration
  `x = y - s lam r rho(|x - xi| / r) nu_i`, a contraction with rate
  `lam sup|rho'|`.
  """

  y = np.asarray(y, dtype=float)
  single = y.ndim == 1
  y = np.atleast_2d(y)
  x = y.copy()
  for center, nu, sign in spec.balls():
    inside = np.linalg.norm(y - center, axis=-1) < spec.r
    if not inside.any():
      continue
    target = y[inside]
    guess = target.copy()
    for _ in range(max_iter):
      t = np.linalg.norm(guess - center, axis=-1) / spec.r
      update = target - (sign * spec.lam * spec.r * spec.bump(t))[:, None] * nu
      change = np.max(np.abs(update - guess))
      guess = update
      if change < tol * spec.r:
        break
    x[inside] = guess
  return x[0] if single else x


def transport_field(u, spec, points, mask=None, layers=None):
  """
  Evaluate `v(y) = u(P^-1(y))` at *points* by multilinear interpolation of
  the ghost extended field.
  """

  mask = mask if mask is not None else RegionMask.exterior(u.grid)
  if layers is None:
    layers = int(math.ceil(spec.r / u.grid.h)) + 6
  ext = ghost_extend(u, mask, layers=layers)
  pre = inverse_map(spec, points)
  return _sample(ext.values, u.grid, pre, order=1)


def _sample(values, grid, points, order):
  index = grid.to_index(points)
  coords = np.moveaxis(index, -1, 0)
  return ndimage.map_coordinates(values, coords, order=order, mode='nearest')


class FirstVariation(t.NamedTuple):
  dJ_measured: float
  dVol: float
  dJ_predicted: float
  q1: float
  q2: float

  @property
  def ratio(self):
    return self.dJ_measured / self.dJ_predicted if self.dJ_predicted else float('nan')


def _sub_spacing(grid, r):
  return min(grid.h / 4.0, r / (64.0 if grid.n == 2 else 24.0))


def _ball_change(ext, psi, grid, spec, center, p, hs):
  n = grid.n
  m = int(math.ceil(spec.r / hs)) + 2
  axis = hs * np.arange(-m, m + 1)
  sub = np.stack(np.meshgrid(*([axis] * n), indexing='ij'), axis=-1) + center
  flat = sub.reshape(-1, n)
  pre = inverse_map(spec, flat)
  shape = sub.shape[:-1]
  u0 = _sample(ext, grid, flat, 1).reshape(shape)
  v = _sample(ext, grid, pre, 1).reshape(shape)
  w0 = -_sample(psi, grid, flat, 1).reshape(shape)
  w1 = -_sample(psi, grid, pre, 1).reshape(shape)

  def energy(field, level):
    frac = cell_fractions(level)
    density = np.linalg.norm(cell_gradients(field, hs), axis=-1) ** p
    return float(np.sum(frac * density) * hs ** n), float(frac.sum() * hs ** n)

  e0, vol0 = energy(u0, w0)
  e1, vol1 = energy(v, w1)
  return e1 - e0, vol1 - vol0


def measure_first_variation(state, spec, p, antisymmetric=False):
  """
  Transport the field of *state* with the perturbation and compare the
  energy change with the first order prediction.

  With *antisymmetric* set, the measurement is the half difference of the
  perturbation and its #PerturbationSpec.swapped() counterpart, which
  cancels the terms of even order in *lam*.

  # Returns
  FirstVariation: `(dJ_measured, dVol, dJ_predicted, q1, q2)`.

  # Raises
  GeometryError: If *x1* or *x2* is not within one cell of the zero contour
    or a ball meets the body.
  """

  u, levelset, mask = state.u, state.levelset, state.mask
  grid = u.grid
  h = grid.h
  for name, x in (('x1', spec.x1), ('x2', spec.x2)):
    if abs(float(levelset.interpolate(x[None])[0])) > h:
      raise GeometryError('{} is not on the free boundary'.format(name))
    if mask.body_distance is not None:
      clearance = float(_sample(mask.body_distance, grid, x[None], 1)[0])
      if clearance <= spec.r + h:
        raise GeometryError('the ball around {} meets the body'.format(name))
  layers = int(math.ceil(spec.r / h)) + 6
  ext = ghost_extend(u, mask, layers=layers)
  points = np.stack([spec.x1, spec.x2])
  q = slope_along(ext, points, -np.stack([spec.nu1, spec.nu2]), mask)
  if not np.all(np.isfinite(q)):
    raise GeometryError('no positive side stencil at the perturbation points')
  q1, q2 = (float(max(v, 0.0)) for v in q)
  hs = _sub_spacing(grid, spec.r)

  def measure(s):
    dJ = dV = 0.0
    for center, _, _ in s.balls():
      a, b = _ball_change(ext.values, levelset.psi, grid, s, center, p, hs)
      dJ += a
      dV += b
    return dJ, dV

  dJ, dV = measure(spec)
  if antisymmetric:
    dJ2, dV2 = measure(spec.swapped())
    dJ = 0.5 * (dJ - dJ2)
    dV = 0.5 * (dV - dV2)
  c_rho = spec.bump.flat_integral(grid.n)
  predicted = spec.r ** grid.n * spec.lam * (p - 1.0) * c_rho * (q1 ** p - q2 ** p)
  logger.debug('first variation r=%g lam=%g: measured %.4e, predicted %.4e', spec.r,
    spec.lam, dJ, predicted)
  return FirstVariation(dJ, dV, predicted, q1, q2)


class SyntheticState:
  """
  A field with its level set and mask, without an optimizer run.
  """

  def __init__(self, u, levelset, mask, x1, x2, normal):
    self.u = u
    self.levelset = levelset
    self.mask = mask
    self.x1 = x1
    self.x2 = x2
    self.normal = normal

  def perturbation(self, r, lam, bump=None):
    return PerturbationSpec(self.x1, self.x2, self.normal, self.normal, r, lam, bump,
      separation=0.0)


def synthetic_two_slab(h=0.02, slopes=(2.0, 1.0), a=0.5):
  """
  The field `q (a - x1)+` on `[0, 1] x [-1, 1]` with `q = slopes[0]` for
  `x2 < 0` and `slopes[1]` above, the body being `x1 <= 0`. The
  perturbation points are `(a, -0.5)` and `(a, 0.5)` with the normal
  `(1, 0)`.
  """

  dims = (int(round(1.0 / h)) + 1, int(round(2.0 / h)) + 1)
  grid = GridSpec(dims, 1.0 / (dims[0] - 1), (0.0, -1.0))
  coords = grid.coords()
  q = np.where(coords[..., 1] < 0, slopes[0], np.where(coords[..., 1] > 0, slopes[1],
    0.5 * (slopes[0] + slopes[1])))
  values = q * np.maximum(a - coords[..., 0], 0.0)
  psi = coords[..., 0] - a
  domain = DomainSpec(HalfSpace(2, 0, 0.0), float(max(slopes)) * a)
  mask = RegionMask.from_body(grid, domain).with_levelset(psi)
  return SyntheticState(ScalarField(grid, values), LevelSet(grid, psi), mask,
    np.array([a, -0.5]), np.array([a, 0.5]), np.array([1.0, 0.0]))


def richardson_limit(amplitudes, ratios, order=2):
  """
  Extrapolate *ratios* measured at *amplitudes* to zero amplitude with a
  linear fit in `amplitude^order`.
  """

  x = np.asarray(amplitudes, dtype=float) ** order
  slope, intercept = np.polyfit(x, np.asarray(ratios, dtype=float), 1)
  return float(intercept)
