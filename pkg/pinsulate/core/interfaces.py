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
This module covers the interfaces that the solver is programmed against:
the shape of the inner body *D* and the volume penalty *f*.
"""

__all__ = ['BodyShape', 'PenaltySpec']

import nr.interface
import numpy as np


class BodyShape(nr.interface.Interface):
  """
  A closed body *D*. Points are given as arrays of shape `(m, n)`.
  """

  def signed_distance(self, points):
    """
    Return the signed distance of *points* to the boundary of *D*, negative
    inside. Implementations may return a first-order approximation away
    from the boundary.
    """

  def normal(self, points):
    """
    Return the outward unit normal of *D* at the boundary points closest to
    *points*. This is the direction pointing into the exterior domain.
    """

  def bounds(self):
    """
    Return `(lo, hi)` arrays of the bounding box, or #None if the body is
    unbounded.
    """

  def boundary_quadrature(self, grid):
    """
    Return `(points, normals, weights)` of a quadrature rule for the
    boundary of *D* inside the box of *grid*, with a sample spacing not
    coarser than half the grid spacing.
    """

  @nr.interface.default
  def contains(self, points):
    return self.signed_distance(points) <= 0.0

  @nr.interface.default
  def center(self):
    lo, hi = self.bounds()
    return 0.5 * (np.asarray(lo) + np.asarray(hi))


class PenaltySpec(nr.interface.Interface):
  """
  A strictly increasing volume penalty *f*. The penalized functional is
  `J(u) = E(u) + f(|{u > 0}|)`.
  """

  def value(self, t):
    pass

  def slope_below(self, t):
    """
    Left derivative of *f* at *t*.
    """

  def slope_above(self, t):
    """
    Right derivative of *f* at *t*.
    """

  def target(self):
    """
    Return the volume at which the penalty has its (largest) convex kink,
    or #None if it has none. The optimizer drives the volume towards it.
    """

  def gamma(self):
    """
    Return the bilipschitz constant: all slopes lie in `[1/gamma, gamma]`.
    """

  @nr.interface.default
  def slope(self, t):
    return 0.5 * (self.slope_below(t) + self.slope_above(t))
