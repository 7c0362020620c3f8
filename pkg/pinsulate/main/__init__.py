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

import argparse
import json
import logging
import math
import os
import sys

import numpy as np

import pinsulate
from pinsulate.core.config import RunConfig
from pinsulate.core.errors import ConfigError, ConvergenceError, PinsulateError
from pinsulate.core.events import EV_OUTER_STEP, EV_PICARD_STEP, CsvRecorder, \
  EventHandler, IterationEvent
from pinsulate.core.fboundary import LOG_COLUMNS, epsilon_sweep, optimize, summary
from pinsulate.core.functional import diagnostics_report, minimality_check
from pinsulate.core.hadamard import PerturbationSpec, measure_first_variation, \
  richardson_limit, synthetic_two_slab
from pinsulate.core.radial import radial_solution

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 2
EXIT_CONFIG = 3

HADAMARD_COLUMNS = ['r', 'lam', 'dJ_measured', 'dJ_predicted', 'dVol', 'ratio']


def get_argument_parser(prog):
  common = argparse.ArgumentParser(add_help=False)
  common.add_argument('--config', help='A key = value file or a JSON summary '
    'of an earlier run.')
  common.add_argument('--set', action='append', default=[], metavar='KEY=VALUE',
    help='Override a configuration key. Can be repeated.')
  common.add_argument('--output', help='Output directory (key output.dir).')
  common.add_argument('--verbose', action='store_true', help='Log progress and '
    'record the Picard residuals.')

  problem = argparse.ArgumentParser(add_help=False)
  problem.add_argument('--dim', type=int)
  problem.add_argument('--p', type=float)

  parser = argparse.ArgumentParser(prog=prog, description=pinsulate.__doc__)
  subparsers = parser.add_subparsers(dest='command', metavar='command')
  subparsers.required = True

  solve = subparsers.add_parser('solve', parents=[common, problem],
    help='Compute the optimal layer around the configured body.')
  solve.add_argument('--epsilon', type=float)
  solve.add_argument('--resolution', type=int)
  solve.add_argument('--diagnostics', action='store_true',
    help='Add the regularity diagnostics to the summary.')

  radial = subparsers.add_parser('radial', parents=[common, problem],
    help='Print the radial solution around the unit ball.')
  radial.add_argument('--volume', type=float, default=1.0)

  hadamard = subparsers.add_parser('verify-hadamard', parents=[common, problem],
    help='Compare measured and predicted first variations.')
  hadamard.add_argument('--synthetic', choices=['two-slab', 'slab', 'radial'],
    default='two-slab')

  sweep = subparsers.add_parser('sweep', parents=[common, problem],
    help='Run the optimizer for decreasing penalty parameters.')
  sweep.add_argument('--eps', help='Comma separated penalty parameters.')
  sweep.add_argument('--resolution', type=int)
  return parser


def load_config(args):
  """
  Resolve the configuration: defaults, the config file, `--set` overrides,
  dedicated flags, then the environment.
  """

  config = RunConfig.load(args.config) if args.config else RunConfig()
  config.apply_overrides(args.set)
  for key in ('dim', 'p', 'epsilon', 'resolution'):
    value = getattr(args, key, None)
    if value is not None:
      config[key] = value
  if getattr(args, 'eps', None):
    config.set_text('sweep.eps', args.eps)
  if args.output:
    config['output.dir'] = args.output
  config.apply_env()
  return config


def _json_default(value):
  if isinstance(value, np.generic):
    return value.item()
  if isinstance(value, np.ndarray):
    return value.tolist()
  raise TypeError('not JSON serializable: {!r}'.format(value))


def write_json(path, data):
  with open(path, 'w') as fp:
    json.dump(data, fp, indent=2, sort_keys=True, default=_json_default)
    fp.write('\n')


def write_rows(path, columns, rows):
  recorder = CsvRecorder(path, columns)
  try:
    for row in rows:
      recorder(IterationEvent(None, row))
  finally:
    recorder.close()


def run_solve(config, args):
  config.validate()
  outdir = config.output_dir()
  domain = config.domain()
  grid, mask = config.grid(domain)
  cfg = config.optimizer_config()
  events = EventHandler()
  recorders = [CsvRecorder(os.path.join(outdir, 'iterations.csv'), LOG_COLUMNS)]
  events.bind(EV_OUTER_STEP, recorders[0])
  if args.verbose:
    recorders.append(CsvRecorder(os.path.join(outdir, 'residuals.csv'), ['iter', 'residual']))
    events.bind(EV_PICARD_STEP, recorders[1])
  try:
    state = optimize(domain, grid, mask, cfg, events=events)
  finally:
    for recorder in recorders:
      recorder.close()
  state.u.to_csv(os.path.join(outdir, 'field.csv'))
  result = summary(state, domain, config.resolved())
  if args.diagnostics:
    report = diagnostics_report(state, domain, cfg.pen, cfg.p, cfg=cfg.solver)
    report['minimal'], report['minimality_worst'] = minimality_check(state.u, state.mask,
      cfg.pen, cfg.p, seed=config['seed'])
    result['diagnostics'] = report
  write_json(os.path.join(outdir, 'summary.json'), result)
  print('R_equivalent {:.6f}  lambda {:.6f}  volume {:.6f}  J {:.6f}  cv {:.4f}'.format(
    result['R_equivalent'], result['lambda'], result['volume'], result['J'], result['cv']))
  return EXIT_OK


def run_radial(config, args):
  config.require('dim', 'p')
  n, p = config['dim'], config['p']
  R, profile, lam = radial_solution(n, p, args.volume)
  outdir = config.output_dir()
  r, u = profile.sample()
  write_rows(os.path.join(outdir, 'radial.csv'), ['r', 'u'], zip(r.tolist(), u.tolist()))
  write_json(os.path.join(outdir, 'radial.json'), {'dim': n, 'p': p, 'volume': args.volume,
    'R': R, 'lambda': lam, 'energy': profile.energy, 'flux_constant': profile.flux_constant})
  print('R {:.6f}  lambda {:.6f}  energy {:.6f}'.format(R, lam, profile.energy))
  return EXIT_OK


def _radial_points(state, domain):
  """
  Two contour samples a quarter turn apart, with their normals.
  """

  samples = state.levelset.contour()
  rel = samples.points - domain.body.center()
  angles = np.arctan2(rel[:, 1], rel[:, 0])
  picked = []
  for angle in (0.0, 0.5 * math.pi):
    k = int(np.argmin(np.abs(np.angle(np.exp(1j * (angles - angle))))))
    picked.append(k)
  return samples.points[picked], samples.normals[picked], rel[picked]


def run_hadamard(config, args):
  if config['p'] is None:
    config['p'] = 2.0
  p = config['p']
  bump = config.bump()
  radii = config['hadamard.r']
  if args.synthetic == 'radial':
    config['dim'] = 2
    if config['epsilon'] is None:
      config['epsilon'] = 0.01
    domain = config.domain()
    grid, mask = config.grid(domain)
    state = optimize(domain, grid, mask, config.optimizer_config())
    points, normals, rel = _radial_points(state, domain)
    clearance = float(np.min(np.linalg.norm(rel, axis=-1))) - domain.body.radius
    usable = [r for r in radii if r < clearance - grid.h]
    if not usable:
      raise ConfigError('hadamard.r: no radius below the layer width {:.4g}'.format(clearance))
    make = lambda r, lam: PerturbationSpec(points[0], points[1], normals[0], normals[1],
      r, lam, bump, separation=0.0)
    radii = usable
  else:
    slopes = (2.0, 1.0) if args.synthetic == 'two-slab' else (1.0, 1.0)
    state = synthetic_two_slab(config['hadamard.h'], slopes)
    make = lambda r, lam: state.perturbation(r, lam, bump)
  rows = []
  for r in radii:
    lam = r * config['hadamard.lam_ratio']
    fv = measure_first_variation(state, make(r, lam), p, antisymmetric=True)
    rows.append({'r': r, 'lam': lam, 'dJ_measured': fv.dJ_measured,
      'dJ_predicted': fv.dJ_predicted, 'dVol': fv.dVol, 'ratio': fv.ratio})
  outdir = config.output_dir()
  write_rows(os.path.join(outdir, 'hadamard.csv'), HADAMARD_COLUMNS, rows)
  result = {'synthetic': args.synthetic, 'rows': rows, 'config': config.resolved()}
  ratios = [row['ratio'] for row in rows]
  if len(rows) >= 2 and all(np.isfinite(ratios)):
    result['limit'] = richardson_limit([row['lam'] for row in rows], ratios)
  write_json(os.path.join(outdir, 'hadamard.json'), result)
  print(','.join(HADAMARD_COLUMNS))
  for row in rows:
    print(','.join('{:.6g}'.format(row[c]) for c in HADAMARD_COLUMNS))
  if 'limit' in result:
    print('extrapolated ratio {:.4f}'.format(result['limit']))
  return EXIT_OK


def run_sweep(config, args):
  config.require('dim', 'p')
  eps_list = config['sweep.eps']
  domain = config.domain()
  grid, mask = config.grid(domain)
  cfg = config.optimizer_config(eps_list[0])
  result = epsilon_sweep(domain, grid, mask, cfg, eps_list, workers=config['threads'])
  outdir = config.output_dir()
  columns = ['eps', 'volume', 'lambda', 'J', 'converged', 'iterations']
  write_rows(os.path.join(outdir, 'sweep.csv'), columns, result.rows)
  violations = result.violations(config['optimizer.vol_tol'])
  write_json(os.path.join(outdir, 'sweep.json'), {'rows': result.rows, 'c_fit': result.c_fit,
    'c_lsq': result.c_lsq, 'lambda_spread': result.lambda_spread,
    'violations': violations, 'config': config.resolved()})
  for row in result.rows:
    print('eps {:<8g} volume {:.6f}  lambda {:.6f}'.format(row['eps'], row['volume'], row['lambda']))
  print('C_fit {:.4g}  C_lsq {:.4g}  lambda spread {:.2%}'.format(result.c_fit, result.c_lsq,
    result.lambda_spread))
  for message in violations:
    print('error: ' + message, file=sys.stderr)
  return EXIT_FAILED if violations else EXIT_OK


COMMANDS = {
  'solve': run_solve,
  'radial': run_radial,
  'verify-hadamard': run_hadamard,
  'sweep': run_sweep,
}


def _report(exc):
  chain = []
  while exc is not None:
    chain.append('{}: {}'.format(type(exc).__name__, exc))
    exc = exc.__cause__ or exc.__context__
  print('error: ' + '\n  caused by '.join(chain), file=sys.stderr)


def main(argv=None, prog=None):
  parser = get_argument_parser(prog)
  args = parser.parse_args(argv)
  logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
    format='%(levelname)s %(name)s: %(message)s')
  try:
    config = load_config(args)
    return COMMANDS[args.command](config, args)
  except ConfigError as exc:
    _report(exc)
    return EXIT_CONFIG
  except ConvergenceError as exc:
    _report(exc)
    if exc.history:
      print('last iteration: {}'.format(exc.history[-1]), file=sys.stderr)
    return EXIT_FAILED
  except PinsulateError as exc:
    _report(exc)
    return EXIT_FAILED


_entry_point = lambda: sys.exit(main())


if __name__ == '__main__':
  sys.exit(main())
