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
Signed-distance representation of the trial free boundary. The level set
*psi* is negative on the heated region `{u > 0}` and positive on the dead
zone, its zero contour is the free boundary.
"""

__all__ = ['LevelSet', 'ContourSamples']

import logging

import numpy as np
from scipy import ndimage, optimize
from scipy.interpolate import RegularGridInterpolator
from scipy.spatial import cKDTree
from skimage import measure

from pinsulate.core.errors import ConfigError, EmptyBoundaryError, ShapeError, \
  TopologyError
from pinsulate.core.geometry import Ball, any_neighbour, levelset_volume, shifted, \
  signed_extension, unit_ball_volume

logger = logging.getLogger(__name__)


class ContourSamples:
  """
  Quadrature samples of the zero contour.

  # Members
  points (numpy.ndarray): `(m, n)` sample locations on the contour.
  normals (numpy.ndarray): `(m, n)` unit normals pointing out of `{psi < 0}`.
  weights (numpy.ndarray): Length (2 axes) or area (3 axes) per sample.
  """

  def __init__(self, points, normals, weights):
    self.points = points
    self.normals = normals
    self.weights = weights

  def __len__(self):
    return len(self.points)

  def __repr__(self):
    return '<ContourSamples count={} measure={:.6g}>'.format(len(self), self.weights.sum())


class LevelSet:
  """
  # Members
  grid (GridSpec): The grid.
  psi (numpy.ndarray): Node values.
  reinit_age (int): Advection steps since the last reinitialization.
  """

  def __init__(self, grid, psi, reinit_age=0):
    psi = np.asarray(psi, dtype=float)
    if psi.shape != grid.shape:
      raise ShapeError('level set of shape {!r} does not match grid {!r}'.format(
        psi.shape, grid.shape))
    if not np.all(np.isfinite(psi)):
      raise ConfigError('levelset: values must be finite')
    self.grid = grid
    self.psi = psi
    self.reinit_age = reinit_age

  def __repr__(self):
    return '<LevelSet grid={!r} reinit_age={}>'.format(self.grid, self.reinit_age)

  @classmethod
  def sphere(cls, grid, radius, center=None):
    center = np.zeros(grid.n) if center is None else np.asarray(center, dtype=float)
    return cls(grid, np.linalg.norm(grid.coords() - center, axis=-1) - radius)

  @classmethod
  def for_volume(cls, grid, mask, body, volume=2.0):
    """
    Return the level set of a layer around *body* that encloses *volume*
    outside of the body. Balls get a concentric sphere, other bodies an
    offset of their signed distance found by root bracketing.
    """

    if not volume > 0:
      raise ConfigError('optimizer.initial_volume: must be positive, got {!r}'.format(volume))
    if isinstance(body, Ball):
      n = grid.n
      radius = (body.radius ** n + volume / unit_ball_volume(n)) ** (1.0 / n)
      return cls.sphere(grid, radius, body.center())
    sd = body.signed_distance(grid.coords())
    lo, hi = grid.box
    span = float(np.max(hi - lo))

    def excess(offset):
      return levelset_volume(sd - offset, mask) - volume

    if excess(span) < 0:
      raise ConfigError('optimizer.initial_volume: {!r} does not fit into the box'.format(volume))
    offset = optimize.brentq(excess, 0.0, span, xtol=1e-3 * grid.h)
    return cls(grid, sd - offset)

  @classmethod
  def from_field(cls, grid, values):
    """
    Build the signed distance to the zero set of the positive part of a
    nodal field.
    """

    values = np.asarray(values, dtype=float)
    psi = -signed_extension(values)
    # zeros next to the positive set lie on the interface
    psi[(psi == 0) & ~any_neighbour(values > 0)] = grid.h
    return cls(grid, psi).reinitialize()

  def region(self):
    return self.psi < 0

  def is_empty(self):
    return self.psi.min() >= 0 or self.psi.max() <= 0

  def contour(self):
    """
    Extract the zero contour by marching squares (2 axes) or marching cubes
    (3 axes) and return #ContourSamples at segment midpoints or triangle
    centroids.

    # Raises
    EmptyBoundaryError: If the contour is empty.
    """

    grid = self.grid
    if self.is_empty():
      raise EmptyBoundaryError('level set has no zero contour')
    if grid.n == 2:
      segments = self._segments()
      points = 0.5 * (segments[:, 0] + segments[:, 1])
      weights = np.linalg.norm(segments[:, 1] - segments[:, 0], axis=-1)
    else:
      verts, faces = self._triangles()
      tri = verts[faces]
      points = tri.mean(axis=1)
      weights = 0.5 * np.linalg.norm(
        np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=-1)
    keep = weights > 0
    points, weights = points[keep], weights[keep]
    return ContourSamples(points, self.normals_at(points), weights)

  def _segments(self):
    contours = measure.find_contours(self.psi, 0.0)
    if not contours:
      raise EmptyBoundaryError('level set has no zero contour')
    parts = []
    for c in contours:
      c = self.grid.origin + c * self.grid.h
      parts.append(np.stack([c[:-1], c[1:]], axis=1))
    return np.concatenate(parts)

  def _triangles(self):
    try:
      verts, faces, _, _ = measure.marching_cubes(self.psi, 0.0, spacing=(self.grid.h,) * 3)
    except (ValueError, RuntimeError) as exc:
      raise EmptyBoundaryError('level set has no zero contour: {}'.format(exc))
    return verts + self.grid.origin, faces

  def normals_at(self, points):
    grad = np.stack(np.gradient(self.psi, self.grid.h), axis=-1)
    interp = RegularGridInterpolator(self.grid.axes(), grad, bounds_error=False, fill_value=None)
    normals = interp(points)
    norm = np.linalg.norm(normals, axis=-1, keepdims=True)
    return normals / np.where(norm > 0, norm, 1.0)

  def interpolate(self, points):
    interp = RegularGridInterpolator(self.grid.axes(), self.psi, bounds_error=False, fill_value=None)
    return interp(points)

  def reinitialize(self):
    """
    Return a new level set with the same sign pattern whose values are the
    exact distance to the extracted zero contour.
    """

    grid = self.grid
    nodes = grid.points()
    if grid.n == 2:
      segments = self._segments()
      tree = cKDTree(0.5 * (segments[:, 0] + segments[:, 1]))
      k = min(8, len(segments))
      _, index = tree.query(nodes, k=k)
      index = index.reshape(len(nodes), k)
      a = segments[index, 0]
      b = segments[index, 1]
      dist = _segment_distance(nodes[:, None, :], a, b).min(axis=1)
    else:
      verts, faces = self._triangles()
      tri = verts[faces]
      tree = cKDTree(tri.mean(axis=1))
      k = min(8, len(tri))
      _, index = tree.query(nodes, k=k)
      index = index.reshape(len(nodes), k)
      cand = tri[index]
      dist = _triangle_distance(nodes[:, None, :], cand[..., 0, :], cand[..., 1, :],
        cand[..., 2, :]).min(axis=1)
    psi = np.sign(self.psi) * dist.reshape(grid.shape)
    return LevelSet(grid, psi, 0)

  def advect(self, speed, dt):
    """
    One explicit Godunov upwind step of `psi_t + V |grad psi| = 0`. A
    positive normal speed grows the region `{psi < 0}`.
    """

    psi = self.psi
    h = self.grid.h
    grow = np.zeros_like(psi)
    shrink = np.zeros_like(psi)
    for axis in range(psi.ndim):
      back = (psi - _replicate_shift(psi, axis, -1)) / h
      fwd = (_replicate_shift(psi, axis, 1) - psi) / h
      grow += np.maximum(np.maximum(back, 0) ** 2, np.minimum(fwd, 0) ** 2)
      shrink += np.maximum(np.minimum(back, 0) ** 2, np.maximum(fwd, 0) ** 2)
    update = np.maximum(speed, 0) * np.sqrt(grow) + np.minimum(speed, 0) * np.sqrt(shrink)
    return LevelSet(self.grid, psi - dt * update, self.reinit_age + 1)

  def extend_velocity(self, samples, values):
    """
    Extend per-sample *values* to every node by nearest-point extension.
    """

    tree = cKDTree(samples.points)
    _, index = tree.query(self.grid.points())
    return np.asarray(values)[index].reshape(self.grid.shape)

  def prune(self, mask):
    """
    Return a level set without the components of `{psi < 0}` that are not
    connected to *D*. Masks without a body are returned unchanged.

    # Raises
    TopologyError: If no part of `{psi < 0}` outside of *D* touches *D*.
    """

    inside = mask.inside
    if not inside.any():
      return self
    region = (self.psi < 0) | inside
    labels, count = ndimage.label(region)
    body_labels = np.unique(labels[inside])
    keep = np.isin(labels, body_labels)
    outside = (self.psi < 0) & ~inside
    if not (outside & keep).any():
      raise TopologyError('positivity set is disconnected from the body')
    drop = outside & ~keep
    if not drop.any():
      return self
    islands = len(np.unique(labels[drop]))
    logger.warning('pruned %d island(s) of %d node(s) not connected to the body',
      islands, np.count_nonzero(drop))
    psi = np.where(drop, np.maximum(np.abs(self.psi), self.grid.h), self.psi)
    return LevelSet(self.grid, psi, self.reinit_age)

  def band_gradient_range(self, width=2.0):
    """
    Return the minimum and maximum of `|grad psi|` on the nodes within
    *width* cells of the zero contour.
    """

    grad = np.linalg.norm(np.stack(np.gradient(self.psi, self.grid.h), axis=-1), axis=-1)
    band = np.abs(self.psi) < width * self.grid.h
    band &= ~self.grid.face_mask()
    if not band.any():
      raise EmptyBoundaryError('level set has no zero contour')
    return float(grad[band].min()), float(grad[band].max())

  def volume(self, mask):
    return levelset_volume(self, mask)


def _replicate_shift(a, axis, step):
  out = shifted(a, axis, step)
  edge = [slice(None)] * a.ndim
  edge[axis] = -1 if step > 0 else 0
  out[tuple(edge)] = a[tuple(edge)]
  return out


def _segment_distance(p, a, b):
  ab = b - a
  denom = np.sum(ab * ab, axis=-1)
  t = np.sum((p - a) * ab, axis=-1) / np.where(denom > 0, denom, 1.0)
  t = np.clip(t, 0.0, 1.0)
  return np.linalg.norm(p - a - t[..., None] * ab, axis=-1)


def _triangle_distance(p, a, b, c):
  normal = np.cross(b - a, c - a)
  area = np.linalg.norm(normal, axis=-1, keepdims=True)
  unit = normal / np.where(area > 0, area, 1.0)
  height = np.sum((p - a) * unit, axis=-1)
  q = p - height[..., None] * unit
  inside = (area[..., 0] > 0)
  for u, v in ((a, b), (b, c), (c, a)):
    inside &= np.sum(np.cross(v - u, q - u) * normal, axis=-1) >= 0
  edges = np.minimum(np.minimum(_segment_distance(p, a, b), _segment_distance(p, b, c)),
    _segment_distance(p, c, a))
  return np.where(inside, np.abs(height), edges)
