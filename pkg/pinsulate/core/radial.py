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
Closed-form p-harmonic profiles on the annulus `1 < |x| < R` with value 1
on the unit sphere and 0 on the outer sphere. For the unit ball body with
constant boundary temperature these are the exact minimizers, and they
serve as the oracle of the numerical solver.
"""

__all__ = ['RadialProfile', 'radial_p_harmonic', 'radius_for_volume',
           'radial_lambda', 'radial_solution', 'shoot_profile',
           'unit_ball_volume']

import math

import numpy as np
from scipy import integrate, optimize

from pinsulate.core.errors import ConfigError, ConvergenceError
from pinsulate.core.geometry import unit_ball_volume


class RadialProfile:
  """
  The profile `u(r) = (R^a - r^a) / (R^a - 1)` with `a = (p - n) / (p - 1)`,
  or `ln(R/r) / ln(R)` for `p = n`. Differences of powers are evaluated
  through #math.expm1 so that the two branches join continuously.

  # Members
  n (int): Dimension.
  p (float): Exponent.
  R (float): Outer radius.
  alpha (float): The exponent *a*.
  """

  r_inner = 1.0

  def __init__(self, n, p, R):
    self.n = n
    self.p = p
    self.R = R
    self.alpha = (p - n) / (p - 1.0)
    self._log_R = math.log(R)

  def __repr__(self):
    return 'RadialProfile(n={}, p={!r}, R={!r})'.format(self.n, self.p, self.R)

  def u(self, r):
    r = np.asarray(r, dtype=float)
    a = self.alpha
    if a == 0:
      return np.log(self.R / r) / self._log_R
    return (math.expm1(a * self._log_R) - np.expm1(a * np.log(r))) / math.expm1(a * self._log_R)

  def du(self, r):
    r = np.asarray(r, dtype=float)
    a = self.alpha
    if a == 0:
      return -1.0 / (r * self._log_R)
    return -(a / math.expm1(a * self._log_R)) * r ** (a - 1.0)

  def flux(self, r):
    """
    The radial flux `r^(n-1) |u'|^(p-1)`, constant in *r*.
    """

    r = np.asarray(r, dtype=float)
    return r ** (self.n - 1) * np.abs(self.du(r)) ** (self.p - 1)

  @property
  def lam(self):
    return float(abs(self.du(self.R)))

  @property
  def flux_constant(self):
    return float(self.flux(1.0))

  @property
  def energy(self):
    """
    The p-Dirichlet energy of the annulus, `n w_n c` with the flux
    constant *c*.
    """

    return self.n * unit_ball_volume(self.n) * self.flux_constant

  @property
  def volume(self):
    return unit_ball_volume(self.n) * (self.R ** self.n - 1.0)

  def sample(self, count=101):
    r = np.linspace(1.0, self.R, count)
    return r, self.u(r)

  def field(self, points, center=None):
    """
    Evaluate the profile at Cartesian *points*: 1 inside the unit ball and 0
    beyond *R*.
    """

    points = np.asarray(points, dtype=float)
    if center is not None:
      points = points - np.asarray(center, dtype=float)
    r = np.linalg.norm(points, axis=-1)
    inner = np.clip(r, 1.0, self.R)
    return np.where(r <= 1.0, 1.0, np.where(r >= self.R, 0.0, self.u(inner)))


def _check(n, p, R=None):
  if int(n) != n or n < 2:
    raise ConfigError('dim: must be an integer >= 2, got {!r}'.format(n))
  if not p > 1:
    raise ConfigError('p: must be > 1, got {!r}'.format(p))
  if R is not None and not R > 1:
    raise ConfigError('R: outer radius must be > 1, got {!r}'.format(R))


def radial_p_harmonic(n, p, R):
  _check(n, p, R)
  return RadialProfile(int(n), float(p), float(R))


def radius_for_volume(n, target_volume=1.0):
  """
  Return *R* with `|B_R \\ B_1| = target_volume`.
  """

  if target_volume < 0:
    raise ConfigError('target_volume: must be >= 0, got {!r}'.format(target_volume))
  return (1.0 + target_volume / unit_ball_volume(n)) ** (1.0 / n)


def radial_lambda(n, p, R):
  return radial_p_harmonic(n, p, R).lam


def radial_solution(n, p, target_volume=1.0):
  """
  Return `(R, profile, lambda)` of the annulus enclosing *target_volume*.
  """

  _check(n, p)
  R = radius_for_volume(n, target_volume)
  profile = radial_p_harmonic(n, p, R)
  return R, profile, profile.lam


def shoot_profile(n, p, R, r):
  """
  Independent oracle: integrate `(r^(n-1) |u'|^(p-2) u')' = 0` from `u(1) = 1`
  and solve for the flux constant that hits `u(R) = 0`. Returns the values
  at the radii *r* and the flux constant.
  """

  _check(n, p, R)
  r = np.atleast_1d(np.asarray(r, dtype=float))

  def rhs(t, y):
    w = y[1]
    return [np.sign(w) * abs(w) ** (1.0 / (p - 1)) / t ** ((n - 1) / (p - 1)), 0.0]

  def solve(c, t_eval=None):
    return integrate.solve_ivp(rhs, (1.0, R), [1.0, -c], method='DOP853',
      rtol=1e-12, atol=1e-14, t_eval=t_eval)

  def miss(c):
    return solve(c).y[0, -1]

  upper = 1.0
  while miss(upper) > 0:
    upper *= 2.0
    if upper > 1e12:
      raise ConvergenceError('shooting did not bracket the flux constant')
  c = optimize.brentq(miss, 0.0, upper, xtol=1e-15, rtol=1e-14)
  order = np.argsort(r)
  result = solve(c, t_eval=np.clip(r[order], 1.0, R))
  values = np.empty_like(r)
  values[order] = result.y[0]
  return values, c
