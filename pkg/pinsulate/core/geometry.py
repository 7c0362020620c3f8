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
Discrete representation of the exterior domain: the uniform grid that
truncates the complement of the body *D*, nodal fields, the node
classification and the sub-cell volume and surface measures.

Nodes are addressed with `ij` indexing, axis *k* of a field array is the
coordinate *x_{k+1}*.
"""

__all__ = ['GridSpec', 'DomainSpec', 'Ball', 'Ellipsoid', 'Polygon',
           'HalfSpace', 'ScalarField', 'VectorField', 'CellClass',
           'RegionMask', 'build_grid', 'gradient', 'measure_volume',
           'surface_measure', 'shifted', 'signed_extension', 'cell_fractions',
           'cell_gradients', 'levelset_volume', 'unit_ball_volume',
           'any_neighbour', 'positive_level']

import enum
import logging
import math

import nr.interface
import numpy as np
from scipy import special
from scipy.interpolate import RegularGridInterpolator
from skimage import measure

from pinsulate.core.errors import ConfigError, EmptyBoundaryError, ShapeError
from pinsulate.core.interfaces import BodyShape

logger = logging.getLogger(__name__)

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


class GridSpec:
  """
  A uniform Cartesian grid with equal spacing on all axes.

  # Members
  dims (tuple of int): Node count per axis.
  h (float): The grid spacing.
  origin (numpy.ndarray): Coordinates of node `(0, ..., 0)`.
  """

  def __init__(self, dims, h, origin):
    dims = tuple(int(d) for d in dims)
    if len(dims) not in (2, 3):
      raise ConfigError('dim: expected 2 or 3 axes, got {}'.format(len(dims)))
    if min(dims) < 8:
      raise ConfigError('resolution: at least 8 nodes per axis required, '
        'got {!r}'.format(dims))
    if not h > 0:
      raise ConfigError('h: spacing must be positive, got {!r}'.format(h))
    self.dims = dims
    self.h = float(h)
    self.origin = np.asarray(origin, dtype=float).reshape(len(dims))

  def __repr__(self):
    return '<GridSpec dims={!r} h={!r} origin={!r}>'.format(
      self.dims, self.h, tuple(self.origin))

  def __eq__(self, other):
    if not isinstance(other, GridSpec):
      return NotImplemented
    return self.dims == other.dims and self.h == other.h and \
      np.array_equal(self.origin, other.origin)

  @property
  def n(self):
    return len(self.dims)

  @property
  def shape(self):
    return self.dims

  @property
  def box(self):
    lo = self.origin
    hi = self.origin + (np.asarray(self.dims) - 1) * self.h
    return lo, hi

  @property
  def cell_volume(self):
    return self.h ** self.n

  @property
  def node_count(self):
    return int(np.prod(self.dims))

  def axes(self):
    return [self.origin[k] + self.h * np.arange(d) for k, d in enumerate(self.dims)]

  def coords(self):
    """
    Return an array of shape `dims + (n,)` with the node coordinates.
    """

    return np.stack(np.meshgrid(*self.axes(), indexing='ij'), axis=-1)

  def points(self):
    return self.coords().reshape(-1, self.n)

  def face_mask(self, width=1):
    """
    Return a boolean array marking the nodes within *width* nodes of a box
    face.
    """

    mask = np.zeros(self.dims, dtype=bool)
    for axis in range(self.n):
      index = [slice(None)] * self.n
      index[axis] = slice(0, width)
      mask[tuple(index)] = True
      index[axis] = slice(self.dims[axis] - width, None)
      mask[tuple(index)] = True
    return mask

  def to_index(self, points):
    """
    Convert physical coordinates to fractional node indices.
    """

    return (np.asarray(points, dtype=float) - self.origin) / self.h

  def inside_box(self, points, margin=0.0):
    lo, hi = self.box
    points = np.asarray(points, dtype=float)
    return np.all((points >= lo + margin) & (points <= hi - margin), axis=-1)


class DomainSpec:
  """
  The inner body *D* and the boundary temperature *phi* on its boundary.

  # Parameters
  body (BodyShape): The shape of *D*.
  phi (float or callable): A positive constant or a function mapping an
    `(m, n)` array of points to *m* positive values.
  """

  def __init__(self, body, phi=1.0):
    if not callable(phi):
      phi = float(phi)
      if not phi > 0:
        raise ConfigError('phi: boundary temperature must be positive, '
          'got {!r}'.format(phi))
    self.body = body
    self.phi = phi

  def __repr__(self):
    return '<DomainSpec body={!r} phi={!r}>'.format(self.body, self.phi)

  @property
  def n(self):
    return self.body.dim

  @property
  def constant_phi(self):
    return not callable(self.phi)

  def phi_at(self, points):
    points = np.asarray(points, dtype=float)
    if not callable(self.phi):
      return np.full(points.shape[:-1], self.phi)
    values = np.asarray(self.phi(points.reshape(-1, points.shape[-1])), dtype=float)
    values = values.reshape(points.shape[:-1])
    if not np.all(values > 0):
      raise ConfigError('phi: boundary temperature must be positive on the '
        'boundary, got minimum {!r}'.format(values.min()))
    return values

  def max_phi(self, grid):
    if not callable(self.phi):
      return self.phi
    points, _, _ = self.body.boundary_quadrature(grid)
    return float(self.phi_at(points).max())


class Ball(nr.interface.Implementation):
  nr.interface.implements(BodyShape)

  def __init__(self, center, radius):
    self.center_ = np.asarray(center, dtype=float)
    self.radius = float(radius)
    if self.center_.ndim != 1 or len(self.center_) not in (2, 3):
      raise ConfigError('body.center: expected 2 or 3 coordinates, got {!r}'
        .format(center))
    if not self.radius > 0:
      raise ConfigError('body.radius: must be positive, got {!r}'.format(radius))
    self.dim = len(self.center_)

  def __repr__(self):
    return 'Ball(center={!r}, radius={!r})'.format(list(self.center_), self.radius)

  def signed_distance(self, points):
    points = np.asarray(points, dtype=float)
    return np.linalg.norm(points - self.center_, axis=-1) - self.radius

  def normal(self, points):
    d = np.asarray(points, dtype=float) - self.center_
    norm = np.linalg.norm(d, axis=-1, keepdims=True)
    fallback = np.zeros_like(d)
    fallback[..., 0] = 1.0
    return np.where(norm > 0, d / np.where(norm > 0, norm, 1.0), fallback)

  def bounds(self):
    return self.center_ - self.radius, self.center_ + self.radius

  def center(self):
    return self.center_.copy()

  def boundary_quadrature(self, grid):
    r = self.radius
    if self.dim == 2:
      m = max(64, int(math.ceil(2 * math.pi * r / (0.5 * grid.h))))
      theta = (np.arange(m) + 0.5) * (2 * math.pi / m)
      normals = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
      weights = np.full(m, 2 * math.pi * r / m)
    else:
      m = max(256, int(math.ceil(4 * math.pi * r * r / (0.5 * grid.h) ** 2)))
      normals = fibonacci_sphere(m)
      weights = np.full(m, 4 * math.pi * r * r / m)
    return self.center_ + r * normals, normals, weights

  def volume(self):
    return unit_ball_volume(self.dim) * self.radius ** self.dim


class Ellipsoid(nr.interface.Implementation):
  """
  An axis aligned ellipse (2 axes) or ellipsoid (3 axes). The signed
  distance is the first-order approximation `k0 (k0 - 1) / k1`, exact on
  the boundary.
  """

  nr.interface.implements(BodyShape)

  def __init__(self, center, semi_axes):
    self.center_ = np.asarray(center, dtype=float)
    self.semi_axes = np.asarray(semi_axes, dtype=float)
    if self.center_.shape != self.semi_axes.shape or len(self.center_) not in (2, 3):
      raise ConfigError('body.semi_axes: expected one semi axis per coordinate')
    if not np.all(self.semi_axes > 0):
      raise ConfigError('body.semi_axes: must be positive, got {!r}'
        .format(list(self.semi_axes)))
    self.dim = len(self.center_)

  def __repr__(self):
    return 'Ellipsoid(center={!r}, semi_axes={!r})'.format(
      list(self.center_), list(self.semi_axes))

  def signed_distance(self, points):
    d = np.asarray(points, dtype=float) - self.center_
    k0 = np.linalg.norm(d / self.semi_axes, axis=-1)
    k1 = np.linalg.norm(d / self.semi_axes ** 2, axis=-1)
    with np.errstate(divide='ignore', invalid='ignore'):
      sd = k0 * (k0 - 1.0) / k1
    return np.where(k1 > 0, sd, -self.semi_axes.min())

  def normal(self, points):
    g = (np.asarray(points, dtype=float) - self.center_) / self.semi_axes ** 2
    norm = np.linalg.norm(g, axis=-1, keepdims=True)
    fallback = np.zeros_like(g)
    fallback[..., 0] = 1.0
    return np.where(norm > 0, g / np.where(norm > 0, norm, 1.0), fallback)

  def bounds(self):
    return self.center_ - self.semi_axes, self.center_ + self.semi_axes

  def center(self):
    return self.center_.copy()

  def boundary_quadrature(self, grid):
    a = self.semi_axes
    if self.dim == 2:
      # Ramanujan's perimeter sets the sample count.
      perimeter = math.pi * (3 * (a[0] + a[1]) - math.sqrt((3 * a[0] + a[1]) * (a[0] + 3 * a[1])))
      m = max(64, int(math.ceil(perimeter / (0.5 * grid.h))))
      theta = (np.arange(m) + 0.5) * (2 * math.pi / m)
      s = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
      tangent = np.stack([-a[0] * np.sin(theta), a[1] * np.cos(theta)], axis=-1)
      weights = np.linalg.norm(tangent, axis=-1) * (2 * math.pi / m)
    else:
      area = 4 * math.pi * (((a[0] * a[1]) ** 1.6 + (a[0] * a[2]) ** 1.6 +
        (a[1] * a[2]) ** 1.6) / 3.0) ** (1 / 1.6)
      m = max(256, int(math.ceil(area / (0.5 * grid.h) ** 2)))
      s = fibonacci_sphere(m)
      weights = (4 * math.pi / m) * np.prod(a) * np.linalg.norm(s / a, axis=-1)
    normals = s / a
    normals /= np.linalg.norm(normals, axis=-1, keepdims=True)
    return self.center_ + s * a, normals, weights

  def volume(self):
    return unit_ball_volume(self.dim) * float(np.prod(self.semi_axes))


class Polygon(nr.interface.Implementation):
  """
  A simple polygon in two axes. The vertices are reordered counterclockwise.
  """

  nr.interface.implements(BodyShape)

  def __init__(self, vertices):
    vertices = np.asarray(vertices, dtype=float)
    if vertices.ndim != 2 or vertices.shape[1] != 2 or len(vertices) < 3:
      raise ConfigError('body.vertices: expected at least 3 points in 2 axes')
    x, y = vertices[:, 0], vertices[:, 1]
    area = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
    if area == 0:
      raise ConfigError('body.vertices: polygon is degenerate')
    if area < 0:
      vertices = vertices[::-1]
    self.vertices = vertices
    self.dim = 2
    self._area = abs(area)
    start = vertices
    end = np.roll(vertices, -1, axis=0)
    edge = end - start
    length = np.linalg.norm(edge, axis=-1)
    self._start = start
    self._edge = edge
    self._length = length
    self._normal = np.stack([edge[:, 1], -edge[:, 0]], axis=-1) / length[:, None]

  def __repr__(self):
    return 'Polygon({!r})'.format(self.vertices.tolist())

  def _closest(self, points):
    points = np.asarray(points, dtype=float)
    flat = points.reshape(-1, 2)
    rel = flat[:, None, :] - self._start[None, :, :]
    t = np.clip(np.sum(rel * self._edge, axis=-1) / self._length ** 2, 0.0, 1.0)
    diff = rel - t[..., None] * self._edge
    dist = np.linalg.norm(diff, axis=-1)
    index = np.argmin(dist, axis=1)
    return flat, dist[np.arange(len(flat)), index], index

  def signed_distance(self, points):
    points = np.asarray(points, dtype=float)
    flat, dist, _ = self._closest(points)
    inside = measure.points_in_poly(flat, self.vertices)
    return np.where(inside, -dist, dist).reshape(points.shape[:-1])

  def normal(self, points):
    points = np.asarray(points, dtype=float)
    _, _, index = self._closest(points)
    return self._normal[index].reshape(points.shape)

  def bounds(self):
    return self.vertices.min(axis=0), self.vertices.max(axis=0)

  def boundary_quadrature(self, grid):
    points, normals, weights = [], [], []
    for start, edge, length, normal in zip(self._start, self._edge, self._length, self._normal):
      m = max(4, int(math.ceil(length / (0.5 * grid.h))))
      t = (np.arange(m) + 0.5) / m
      points.append(start + t[:, None] * edge)
      normals.append(np.tile(normal, (m, 1)))
      weights.append(np.full(m, length / m))
    return np.concatenate(points), np.concatenate(normals), np.concatenate(weights)

  def volume(self):
    return self._area


class HalfSpace(nr.interface.Implementation):
  """
  The half space `{x : x[axis] <= offset}`. Used for slab geometries; the
  grid box must be given explicitly since the body is unbounded.
  """

  nr.interface.implements(BodyShape)

  def __init__(self, dim, axis=0, offset=0.0):
    if dim not in (2, 3) or not 0 <= axis < dim:
      raise ConfigError('body.axis: invalid axis {!r} for {} axes'.format(axis, dim))
    self.dim = dim
    self.axis = axis
    self.offset = float(offset)

  def __repr__(self):
    return 'HalfSpace(dim={}, axis={}, offset={!r})'.format(self.dim, self.axis, self.offset)

  def signed_distance(self, points):
    return np.asarray(points, dtype=float)[..., self.axis] - self.offset

  def normal(self, points):
    points = np.asarray(points, dtype=float)
    result = np.zeros_like(points)
    result[..., self.axis] = 1.0
    return result

  def bounds(self):
    return None

  def center(self):
    raise ConfigError('body: a half space has no center')

  def boundary_quadrature(self, grid):
    lo, hi = grid.box
    others = [k for k in range(self.dim) if k != self.axis]
    samples = []
    for k in others:
      length = hi[k] - lo[k]
      m = max(4, int(math.ceil(length / (0.5 * grid.h))))
      samples.append((lo[k] + (np.arange(m) + 0.5) * length / m, length / m))
    mesh = np.meshgrid(*[s[0] for s in samples], indexing='ij')
    count = mesh[0].size
    points = np.zeros((count, self.dim))
    points[:, self.axis] = self.offset
    for k, coords in zip(others, mesh):
      points[:, k] = coords.ravel()
    weights = np.full(count, float(np.prod([s[1] for s in samples])))
    return points, self.normal(points), weights


def unit_ball_volume(n):
  return math.pi ** (n / 2.0) / special.gamma(n / 2.0 + 1.0)


def fibonacci_sphere(m):
  i = np.arange(m)
  z = 1.0 - (2.0 * i + 1.0) / m
  rho = np.sqrt(1.0 - z * z)
  phi = i * GOLDEN_ANGLE
  return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=-1)


class ScalarField:
  """
  Real values per grid node.
  """

  def __init__(self, grid, values):
    values = np.asarray(values, dtype=float)
    if values.shape != grid.shape:
      raise ShapeError('field of shape {!r} does not match grid {!r}'.format(
        values.shape, grid.shape))
    if not np.all(np.isfinite(values)):
      raise ConfigError('field: values must be finite')
    self.grid = grid
    self.values = values

  def __repr__(self):
    return '<ScalarField grid={!r}>'.format(self.grid)

  def __neg__(self):
    return ScalarField(self.grid, -self.values)

  def with_values(self, values):
    return ScalarField(self.grid, values)

  def interpolator(self, values=None):
    """
    Return a multilinear interpolator of the field (or of *values* on the
    same grid) that extrapolates outside the box.
    """

    values = self.values if values is None else values
    return RegularGridInterpolator(self.grid.axes(), values,
      bounds_error=False, fill_value=None)

  def to_csv(self, path):
    """
    Write the field as CSV with the header `x1,...,xn,u`, one node per row
    in row-major node order.
    """

    n = self.grid.n
    header = ','.join(['x{}'.format(k + 1) for k in range(n)] + ['u'])
    table = np.column_stack([self.grid.points(), self.values.reshape(-1)])
    np.savetxt(path, table, delimiter=',', header=header, comments='', fmt='%.17g')


class VectorField:

  def __init__(self, grid, values):
    values = np.asarray(values, dtype=float)
    if values.shape != grid.shape + (grid.n,):
      raise ShapeError('vector field of shape {!r} does not match grid {!r}'.format(
        values.shape, grid.shape))
    if not np.all(np.isfinite(values)):
      raise ConfigError('field: values must be finite')
    self.grid = grid
    self.values = values

  def __repr__(self):
    return '<VectorField grid={!r}>'.format(self.grid)

  def norm(self):
    return np.linalg.norm(self.values, axis=-1)


class CellClass(enum.IntEnum):
  BODY = 0
  ACTIVE = 1
  DEAD = 2
  DIRICHLET_INNER = 3
  DIRICHLET_OUTER = 4


class RegionMask:
  """
  Classification of every node. #CellClass.BODY together with
  #CellClass.DIRICHLET_INNER is exactly the set of nodes inside *D*; the
  inner Dirichlet nodes are those with an axis neighbour outside of *D*.
  #CellClass.ACTIVE and #CellClass.DEAD partition the remaining nodes,
  except for box faces that a solve pins to zero
  (#CellClass.DIRICHLET_OUTER).

  # Members
  grid (GridSpec): The grid.
  classes (numpy.ndarray): #CellClass values per node.
  body_distance (numpy.ndarray): Signed distance to the boundary of *D* per
    node (negative inside), or #None if *D* does not meet the box.
  psi (numpy.ndarray): The level set that defined the active set, or #None.
  """

  def __init__(self, grid, classes, body_distance=None, psi=None):
    classes = np.asarray(classes, dtype=np.int8)
    if classes.shape != grid.shape:
      raise ShapeError('mask of shape {!r} does not match grid {!r}'.format(
        classes.shape, grid.shape))
    self.grid = grid
    self.classes = classes
    self.body_distance = body_distance
    self.psi = psi

  def __repr__(self):
    counts = {c.name: self.count(c) for c in CellClass}
    return '<RegionMask {!r}>'.format(counts)

  @classmethod
  def from_body(cls, grid, domain):
    sd = domain.body.signed_distance(grid.coords())
    inside = sd <= 0.0
    rim = inside & any_neighbour(~inside)
    classes = np.full(grid.shape, CellClass.ACTIVE, dtype=np.int8)
    classes[inside] = CellClass.BODY
    classes[rim] = CellClass.DIRICHLET_INNER
    return cls(grid, classes, sd)

  @classmethod
  def exterior(cls, grid):
    """
    A mask without a body: every node is active.
    """

    return cls(grid, np.full(grid.shape, CellClass.ACTIVE, dtype=np.int8))

  @property
  def inside(self):
    return (self.classes == CellClass.BODY) | (self.classes == CellClass.DIRICHLET_INNER)

  @property
  def exterior_nodes(self):
    return ~self.inside

  @property
  def active(self):
    return self.classes == CellClass.ACTIVE

  @property
  def dead(self):
    return self.classes == CellClass.DEAD

  def count(self, cls):
    return int(np.count_nonzero(self.classes == cls))

  def body_level(self):
    """
    Return a level function that is positive outside *D* (`+inf` without a
    body).
    """

    if self.body_distance is None:
      return np.full(self.grid.shape, np.inf)
    return np.asarray(self.body_distance, dtype=float)

  def with_levelset(self, psi):
    """
    Return a new mask whose exterior nodes are #CellClass.ACTIVE where
    *psi* is negative and #CellClass.DEAD elsewhere.
    """

    psi = np.asarray(psi, dtype=float)
    if psi.shape != self.grid.shape:
      raise ShapeError('level set of shape {!r} does not match grid {!r}'.format(
        psi.shape, self.grid.shape))
    classes = self.classes.copy()
    free = ~self.inside & (classes != CellClass.DIRICHLET_OUTER)
    classes[free & (psi < 0)] = CellClass.ACTIVE
    classes[free & (psi >= 0)] = CellClass.DEAD
    return RegionMask(self.grid, classes, self.body_distance, psi)

  def with_region(self, region):
    """
    Like #with_levelset() with a boolean positivity region and no level set.
    """

    classes = self.classes.copy()
    free = ~self.inside & (classes != CellClass.DIRICHLET_OUTER)
    classes[free & region] = CellClass.ACTIVE
    classes[free & ~region] = CellClass.DEAD
    return RegionMask(self.grid, classes, self.body_distance, None)

  def with_outer_dirichlet(self):
    classes = self.classes.copy()
    classes[self.grid.face_mask() & ~self.inside] = CellClass.DIRICHLET_OUTER
    return RegionMask(self.grid, classes, self.body_distance, self.psi)


def build_grid(domain, resolution, box_margin=None, box=None):
  """
  Build the grid and the initial mask for *domain*.

  # Parameters
  domain (DomainSpec): The body and boundary data.
  resolution (int): Number of nodes along the longest box axis.
  box_margin (float): Distance between the body's bounding box and the
    (cubic) computational box. Ignored if *box* is given.
  box (tuple): Explicit `(lo, hi)` bounds, scalars or per-axis sequences.
    Required for unbounded bodies.
  raise (ConfigError): If the resolution is below 8 or the body is not
    contained in the box with a margin of at least four cells.
  return (tuple of (GridSpec, RegionMask))
  """

  if int(resolution) != resolution or resolution < 8:
    raise ConfigError('resolution: must be an integer >= 8, got {!r}'.format(resolution))
  n = domain.body.dim
  bounds = domain.body.bounds()
  if box is None:
    if bounds is None:
      raise ConfigError('box: required for an unbounded body')
    blo, bhi = bounds
    half = 0.5 * float(np.max(bhi - blo))
    margin = max(1.0, half) if box_margin is None else float(box_margin)
    center = 0.5 * (blo + bhi)
    lo = center - half - margin
    hi = center + half + margin
  else:
    lo = np.broadcast_to(np.asarray(box[0], dtype=float), (n,)).copy()
    hi = np.broadcast_to(np.asarray(box[1], dtype=float), (n,)).copy()
  if not np.all(hi > lo):
    raise ConfigError('box: upper bounds must exceed lower bounds')
  length = hi - lo
  h = float(np.max(length)) / (int(resolution) - 1)
  dims = [int(round(l / h)) + 1 for l in length]
  grid = GridSpec(dims, h, lo)
  if bounds is not None:
    glo, ghi = grid.box
    margin = min(np.min(bounds[0] - glo), np.min(ghi - bounds[1]))
    if margin < 4 * h:
      raise ConfigError('box_margin: body must lie inside the box with a margin '
        'of at least 4h = {:.6g}, got {:.6g}'.format(4 * h, margin))
  mask = RegionMask.from_body(grid, domain)
  logger.debug('built %r with %d body nodes', grid, np.count_nonzero(mask.inside))
  return grid, mask


def gradient(u):
  """
  Centered differences at interior nodes and one-sided differences at the
  box faces.

  # Raises
  ShapeError: If the values do not match the grid.
  """

  values = np.asarray(u.values, dtype=float)
  if values.shape != u.grid.shape:
    raise ShapeError('field of shape {!r} does not match grid {!r}'.format(
      values.shape, u.grid.shape))
  parts = np.gradient(values, u.grid.h, edge_order=1)
  return VectorField(u.grid, np.stack(parts, axis=-1))


def shifted(a, axis, step, fill=0):
  """
  Return `b` with `b[i] = a[i + step]` along *axis*, *fill* where the index
  leaves the array.
  """

  a = np.asarray(a)
  out = np.full_like(a, fill)
  src = [slice(None)] * a.ndim
  dst = [slice(None)] * a.ndim
  if step > 0:
    src[axis] = slice(step, None)
    dst[axis] = slice(0, -step)
  else:
    src[axis] = slice(0, step)
    dst[axis] = slice(-step, None)
  out[tuple(dst)] = a[tuple(src)]
  return out


def any_neighbour(mask):
  result = np.zeros(mask.shape, dtype=bool)
  for axis in range(mask.ndim):
    for step in (-1, 1):
      result |= shifted(mask, axis, step, False)
  return result


def signed_extension(values, layers=None):
  """
  Extend the positive part of *values* linearly across its zero set. Nodes
  within *layers* axis steps of the positive set (default: the number of
  axes) are replaced by the mean of the linear extrapolations from their
  positive neighbours. The result depends only on the positive values.
  """

  ext = np.array(values, dtype=float)
  layers = ext.ndim if layers is None else layers
  trusted = ext > 0
  # Nodes on the zero set extrapolate to a rounding residue of either sign.
  tol = 1e-12 * max(float(np.max(np.abs(ext), initial=0.0)), np.finfo(float).tiny)
  for _ in range(layers):
    total = np.zeros_like(ext)
    count = np.zeros(ext.shape, dtype=int)
    for axis in range(ext.ndim):
      for step in (-1, 1):
        j = shifted(ext, axis, step)
        k = shifted(ext, axis, 2 * step)
        ok = shifted(trusted, axis, step, False) & shifted(trusted, axis, 2 * step, False)
        candidate = np.minimum(2.0 * j - k, 0.0)
        ok &= ~trusted & (2.0 * j - k <= tol)
        total[ok] += candidate[ok]
        count[ok] += 1
    new = count > 0
    if not new.any():
      break
    ext[new] = total[new] / count[new]
    trusted |= new
  return ext


def _corners(w):
  """
  Yield the corner arrays of all cells, indexed by their bit pattern.
  """

  n = w.ndim
  corners = {}
  for bits in range(2 ** n):
    index = []
    for axis in range(n):
      if bits >> axis & 1:
        index.append(slice(1, None))
      else:
        index.append(slice(0, -1))
    corners[bits] = w[tuple(index)]
  return corners


def _triangle_fraction(a, b, c):
  v = np.sort(np.stack([a, b, c]), axis=0)[::-1]
  v0, v1, v2 = v
  npos = np.sum(v > 0, axis=0)
  with np.errstate(divide='ignore', invalid='ignore'):
    one = v0 * v0 / ((v0 - v1) * (v0 - v2))
    two = 1.0 - v2 * v2 / ((v2 - v0) * (v2 - v1))
  result = np.where(npos == 3, 1.0, 0.0)
  result = np.where(npos == 1, one, result)
  result = np.where(npos == 2, two, result)
  return result


def _tetrahedron_fraction(a, b, c, d):
  v = np.sort(np.stack([a, b, c, d]), axis=0)[::-1]
  v0, v1, v2, v3 = v
  npos = np.sum(v > 0, axis=0)
  with np.errstate(divide='ignore', invalid='ignore'):
    one = v0 ** 3 / ((v0 - v1) * (v0 - v2) * (v0 - v3))
    three = 1.0 - v3 ** 3 / ((v3 - v0) * (v3 - v1) * (v3 - v2))
    s02 = v0 / (v0 - v2)
    s03 = v0 / (v0 - v3)
    s12 = v1 / (v1 - v2)
    s13 = v1 / (v1 - v3)
    # The positive part is a prism cut into three tetrahedra.
    two = s02 * s03 + (1.0 - s02) * s03 * s12 + (1.0 - s03) * s12 * s13
  result = np.where(npos == 4, 1.0, 0.0)
  result = np.where(npos == 1, one, result)
  result = np.where(npos == 2, two, result)
  result = np.where(npos == 3, three, result)
  return result


def cell_fractions(w):
  """
  Return the fraction of every cell where the piecewise linear interpolant
  of the nodal values *w* is positive. Cells are split into 2 triangles or
  6 Kuhn tetrahedra. The result has one entry less per axis than *w*.
  """

  w = np.asarray(w, dtype=float)
  c = _corners(w)
  if w.ndim == 2:
    return 0.5 * (_triangle_fraction(c[0], c[1], c[3]) +
                  _triangle_fraction(c[0], c[2], c[3]))
  if w.ndim != 3:
    raise ShapeError('cell fractions need 2 or 3 axes, got {}'.format(w.ndim))
  total = np.zeros_like(c[0])
  for order in ((0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)):
    b1 = 1 << order[0]
    b2 = b1 | (1 << order[1])
    total += _tetrahedron_fraction(c[0], c[b1], c[b2], c[7])
  return total / 6.0


def cell_gradients(values, h):
  """
  Return the gradient at every cell center, the average of the edge
  differences of the cell. Shape: one entry less per axis than *values*,
  plus a trailing axis for the components.
  """

  values = np.asarray(values, dtype=float)
  n = values.ndim
  parts = []
  for axis in range(n):
    d = np.diff(values, axis=axis) / h
    for other in range(n):
      if other == axis:
        continue
      lower = [slice(None)] * n
      upper = [slice(None)] * n
      lower[other] = slice(0, -1)
      upper[other] = slice(1, None)
      d = 0.5 * (d[tuple(lower)] + d[tuple(upper)])
    parts.append(d)
  return np.stack(parts, axis=-1)


def positive_level(u_values, mask, threshold=0.0):
  """
  The nodal level function whose positive set is `{u > threshold}` outside
  of *D*. With a level set attached to the mask, `{u > 0}` is `{psi < 0}`.
  """

  if mask.psi is not None and threshold == 0:
    level = -np.asarray(mask.psi, dtype=float)
  else:
    level = signed_extension(np.asarray(u_values, dtype=float) - threshold)
  return np.minimum(level, mask.body_level())


def measure_volume(u, mask, threshold=0.0):
  """
  Return the measure of `{u > threshold}` outside of *D* from sub-cell
  linear interpolation across cell edges.
  """

  if threshold < 0:
    raise ConfigError('threshold: must be >= 0, got {!r}'.format(threshold))
  w = positive_level(u.values, mask, threshold)
  return float(cell_fractions(w).sum() * mask.grid.cell_volume)


def surface_measure(levelset):
  """
  Return the length (2 axes) or area (3 axes) of the zero contour of
  *levelset*, from marching squares or marching cubes.

  # Raises
  EmptyBoundaryError: If the level set has no zero contour.
  """

  psi = np.asarray(levelset.psi, dtype=float)
  h = levelset.grid.h
  if psi.ndim == 2:
    contours = measure.find_contours(psi, 0.0)
    if not contours:
      raise EmptyBoundaryError('level set has no zero contour')
    return float(sum(np.linalg.norm(np.diff(c, axis=0), axis=-1).sum() for c in contours) * h)
  if psi.min() >= 0 or psi.max() <= 0:
    raise EmptyBoundaryError('level set has no zero contour')
  try:
    verts, faces, _, _ = measure.marching_cubes(psi, 0.0, spacing=(h,) * 3)
  except (ValueError, RuntimeError) as exc:
    raise EmptyBoundaryError('level set has no zero contour: {}'.format(exc))
  return float(measure.mesh_surface_area(verts, faces))


def levelset_volume(levelset, mask):
  """
  Return the measure of `{psi < 0}` outside of *D*.
  """

  psi = np.asarray(getattr(levelset, 'psi', levelset), dtype=float)
  w = np.minimum(-psi, mask.body_level())
  return float(cell_fractions(w).sum() * mask.grid.cell_volume)
