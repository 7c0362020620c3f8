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
The run configuration of the command-line driver: every key with its
default, readable from `key = value` files, JSON summaries and `--set`
overrides.
"""

__all__ = ['RunConfig', 'REQUIRED_KEYS', 'OUTPUT_DIR_ENV']

import json
import logging
import os

import numpy as np

from pinsulate.core.errors import ConfigError
from pinsulate.core.fboundary import OptimizerConfig
from pinsulate.core.functional import EpsilonPenalty, TablePenalty
from pinsulate.core.geometry import Ball, DomainSpec, Ellipsoid, HalfSpace, \
  Polygon, build_grid
from pinsulate.core.hadamard import BumpSpec
from pinsulate.core.parameters import Choice, Flag, Number, NumberList, \
  Parameters, Text
from pinsulate.core.plap import SolverConfig

logger = logging.getLogger(__name__)

REQUIRED_KEYS = ('dim', 'p', 'epsilon')
OUTPUT_DIR_ENV = 'PINSULATE_OUTPUT_DIR'


class RunConfig(Parameters):
  """
  All keys of a run. Only `dim`, `p` and `epsilon` lack a default.
  """

  def __init__(self):
    super().__init__()
    add = self.add
    add(Number('dim', 'Space dimension', min=2, max=3, integer=True))
    add(Number('p', 'Exponent of the p-Laplacian', min=1, exclusive_min=True))
    add(Number('epsilon', 'Penalty parameter', min=0, exclusive_min=True))
    add(Number('resolution', 'Nodes along the longest box axis', 128, min=8, integer=True))
    add(NumberList('box', 'Box bounds "lo,hi" or per axis "lo1,..,hi1,.."', [-2.0, 2.0]))
    add(Choice('body.kind', 'Shape of the body', ['ball', 'ellipsoid', 'polygon', 'halfspace'], 'ball'))
    add(Number('body.radius', 'Ball radius', 1.0, min=0, exclusive_min=True))
    add(NumberList('body.center', 'Body center, origin if empty', []))
    add(NumberList('body.semi_axes', 'Ellipsoid semi axes', [], positive=True))
    add(NumberList('body.vertices', 'Polygon vertices "x1,y1,x2,y2,.."', []))
    add(Number('body.axis', 'Normal axis of a half space', 0, min=0, integer=True))
    add(Number('body.offset', 'Offset of a half space', 0.0))
    add(Number('phi', 'Temperature on the body', 1.0, min=0, exclusive_min=True))
    add(Choice('penalty.kind', 'Volume penalty', ['epsilon', 'table'], 'epsilon'))
    add(NumberList('penalty.table', 'Penalty rows "t1,f1,t2,f2,.."', []))
    add(Number('solver.delta', 'Regularization of the coefficient, 0 for the default', 0.0, min=0))
    add(Number('solver.picard_tol', 'Relative Picard residual', 1e-7, min=0, exclusive_min=True))
    add(Number('solver.picard_max_iter', 'Picard iteration budget', 200, min=1, integer=True))
    add(Number('solver.damping', 'Picard damping', 0.7, min=0, max=1, exclusive_min=True))
    add(Number('solver.linear_tol', 'Relative tolerance of the linear solve', 1e-10, min=0, exclusive_min=True))
    add(Number('solver.linear_max_iter', 'Linear iteration budget', 5000, min=1, integer=True))
    add(Number('optimizer.step_cfl', 'Level set step in cells', 0.5, min=0, max=0.9, exclusive_min=True))
    add(Number('optimizer.max_outer', 'Outer iteration budget', 300, min=1, integer=True))
    add(Number('optimizer.j_tol', 'Relative change of J', 1e-3, min=0, exclusive_min=True))
    add(Number('optimizer.vol_tol', 'Volume tolerance', 0.02, min=0, exclusive_min=True))
    add(Number('optimizer.cv_tol', 'Bernoulli coefficient of variation', 0.05, min=0, exclusive_min=True))
    add(Text('optimizer.lambda_init', 'Initial multiplier or "auto"', 'auto'))
    add(Number('optimizer.reinit_every', 'Steps between reinitializations', 1, min=1, integer=True))
    add(Number('optimizer.speed_floor', 'Lower bound of the step speed / lambda', 0.25, min=0, exclusive_min=True))
    add(Number('optimizer.initial_volume', 'Volume of the initial layer', 2.0, min=0, exclusive_min=True))
    add(Flag('optimizer.outer_zero', 'Pin the box faces to zero', False))
    add(Text('output.dir', 'Output directory', '.'))
    add(Number('seed', 'Seed of the random diagnostics', 0, min=0, integer=True))
    add(Number('threads', 'Worker threads of the sweep', 1, min=1, integer=True))
    add(NumberList('sweep.eps', 'Penalty parameters of the sweep', [0.2, 0.1, 0.05, 0.01], positive=True))
    add(NumberList('hadamard.r', 'Perturbation radii', [0.2, 0.1, 0.05], positive=True))
    add(Number('hadamard.lam_ratio', 'Amplitude per radius', 0.5, min=0, exclusive_min=True))
    add(Number('hadamard.h', 'Grid spacing of the synthetic states', 0.02, min=0, exclusive_min=True))
    add(Choice('hadamard.bump', 'Bump profile', ['polynomial1', 'polynomial2', 'polynomial3', 'smooth'], 'polynomial2'))

  @classmethod
  def load(cls, path):
    """
    Read a `key = value` file, or the `config` object of a JSON summary.
    """

    config = cls()
    try:
      with open(path) as fp:
        text = fp.read()
    except OSError as exc:
      raise ConfigError('config: cannot read {!r}: {}'.format(path, exc))
    if path.endswith('.json'):
      try:
        data = json.loads(text)
      except ValueError as exc:
        raise ConfigError('config: {!r} is not valid JSON: {}'.format(path, exc))
      config.update_from_dict(data.get('config', data))
    else:
      config.update_from_text(text, path)
    return config

  def apply_overrides(self, items):
    """
    Apply `key=value` strings.
    """

    for item in items or ():
      if '=' not in item:
        raise ConfigError('--set: expected key=value, got {!r}'.format(item))
      key, value = item.split('=', 1)
      self.set_text(key.strip(), value.strip())

  def apply_env(self, environ=None):
    environ = os.environ if environ is None else environ
    value = environ.get(OUTPUT_DIR_ENV)
    if value:
      self['output.dir'] = value

  def validate(self):
    self.require(*REQUIRED_KEYS)
    return self

  @property
  def dim(self):
    return self['dim']

  def box(self):
    values = self['box']
    n = self.dim
    if len(values) == 2:
      return values[0], values[1]
    if len(values) == 2 * n:
      return np.asarray(values[:n]), np.asarray(values[n:])
    raise ConfigError('box: expected 2 or {} values, got {}'.format(2 * n, len(values)))

  def center(self):
    values = self['body.center']
    if not values:
      return np.zeros(self.dim)
    if len(values) != self.dim:
      raise ConfigError('body.center: expected {} values, got {}'.format(self.dim, len(values)))
    return np.asarray(values)

  def body(self):
    kind, n = self['body.kind'], self.dim
    if kind == 'ball':
      return Ball(self.center(), self['body.radius'])
    if kind == 'ellipsoid':
      axes = self['body.semi_axes']
      if len(axes) != n:
        raise ConfigError('body.semi_axes: expected {} values, got {}'.format(n, len(axes)))
      return Ellipsoid(self.center(), axes)
    if kind == 'polygon':
      if n != 2:
        raise ConfigError('body.kind: polygons need dim = 2')
      vertices = self['body.vertices']
      if len(vertices) < 6 or len(vertices) % 2:
        raise ConfigError('body.vertices: expected at least three x,y pairs')
      return Polygon(np.reshape(vertices, (-1, 2)))
    return HalfSpace(n, self['body.axis'], self['body.offset'])

  def domain(self):
    return DomainSpec(self.body(), self['phi'])

  def grid(self, domain=None):
    """
    Return `(grid, mask)` for the configured box and resolution.
    """

    domain = domain or self.domain()
    return build_grid(domain, self['resolution'], box=self.box())

  def penalty(self, eps=None):
    if self['penalty.kind'] == 'table' and eps is None:
      table = self['penalty.table']
      if len(table) < 4 or len(table) % 2:
        raise ConfigError('penalty.table: expected at least two t,f pairs')
      rows = np.reshape(table, (-1, 2))
      return TablePenalty(rows[:, 0], rows[:, 1])
    return EpsilonPenalty(self['epsilon'] if eps is None else eps)

  def solver_config(self):
    return SolverConfig(
      p=self['p'],
      delta=self['solver.delta'] or None,
      picard_tol=self['solver.picard_tol'],
      picard_max_iter=self['solver.picard_max_iter'],
      damping=self['solver.damping'],
      linear_tol=self['solver.linear_tol'],
      linear_max_iter=self['solver.linear_max_iter'])

  def lambda_init(self):
    text = self['optimizer.lambda_init'].strip().lower()
    if text in ('', 'auto'):
      return None
    try:
      return float(text)
    except ValueError:
      raise ConfigError('optimizer.lambda_init: expected a number or "auto", got {!r}'.format(text))

  def optimizer_config(self, eps=None):
    return OptimizerConfig(
      pen=self.penalty(eps),
      p=self['p'],
      step_cfl=self['optimizer.step_cfl'],
      max_outer=self['optimizer.max_outer'],
      j_tol=self['optimizer.j_tol'],
      vol_tol=self['optimizer.vol_tol'],
      cv_tol=self['optimizer.cv_tol'],
      lambda_init=self.lambda_init(),
      reinit_every=self['optimizer.reinit_every'],
      solver=self.solver_config(),
      speed_floor=self['optimizer.speed_floor'],
      initial_volume=self['optimizer.initial_volume'],
      outer_zero=self['optimizer.outer_zero'])

  def bump(self):
    name = self['hadamard.bump']
    if name == 'smooth':
      return BumpSpec.smooth()
    return BumpSpec.polynomial(int(name[-1]))

  def output_dir(self):
    path = self['output.dir']
    os.makedirs(path, exist_ok=True)
    return path

  def resolved(self):
    """
    The fully resolved configuration as a JSON compatible dictionary.
    """

    return {k: v for k, v in self.to_dict().items() if v is not None}
