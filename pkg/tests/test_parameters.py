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

from nose.tools import *
from pinsulate.core.errors import ConfigError
from pinsulate.core.parameters import Choice, Flag, Number, NumberList, \
  Parameter, Parameters, Text


def make():
  params = Parameters()
  params.add(Number('p', 'Exponent', min=1, exclusive_min=True))
  params.add(Number('resolution', 'Nodes', 128, min=8, integer=True))
  params.add(Choice('body.kind', 'Shape', ['ball', 'polygon'], 'ball'))
  params.add(Flag('optimizer.outer_zero', 'Pin faces', False))
  params.add(NumberList('box', 'Bounds', [-2.0, 2.0]))
  params.add(Text('output.dir', 'Directory', '.'))
  return params


def test_defaults():
  params = make()
  assert_equals(params['resolution'], 128)
  assert_equals(params['body.kind'], 'ball')
  assert_is_none(params['p'])
  assert_equals(params.missing(['p', 'resolution']), ['p'])
  assert_in('box', params)
  assert_not_in('nope', params)


def test_unknown_key_is_named():
  params = make()
  with assert_raises(ConfigError) as cm:
    params['nope'] = 1
  assert_in('nope', str(cm.exception))


def test_number_bounds():
  params = make()
  with assert_raises(ConfigError) as cm:
    params['p'] = 1.0
  assert_in("'p'", str(cm.exception))
  with assert_raises(ConfigError):
    params['resolution'] = 4
  with assert_raises(ConfigError):
    params['resolution'] = 12.5
  params['resolution'] = 64.0
  assert_equals(params['resolution'], 64)
  assert_is_instance(params['resolution'], int)


def test_update_from_text():
  params = make()
  params.update_from_text('''
    # a comment
    p = 3
    box = -1.5, 1.5
    optimizer.outer_zero = yes
    body.kind = polygon
  ''')
  assert_equals(params['p'], 3.0)
  assert_equals(params['box'], [-1.5, 1.5])
  assert_true(params['optimizer.outer_zero'])
  assert_equals(params['body.kind'], 'polygon')
  with assert_raises(ConfigError):
    params.update_from_text('p 3')
  with assert_raises(ConfigError):
    params.update_from_text('body.kind = square')


def test_text_round_trip():
  params = make()
  params['p'] = 2.5
  again = make()
  again.update_from_text(params.to_text())
  assert_equals(again.to_dict(), params.to_dict())


def test_value_changed_event():
  params = make()
  seen = []
  params('p').bind(Parameter.EV_VALUE_CHANGED, lambda ev: seen.append((ev.data, ev.source.get_value())))
  params['p'] = 2.0
  params['p'] = 2.0
  params['p'] = 3.0
  assert_equals(seen, [(None, 2.0), (2.0, 3.0)])


def test_require():
  params = make()
  with assert_raises(ConfigError) as cm:
    params.require('resolution', 'p')
  assert_in('p', str(cm.exception))
  params['p'] = 2
  params.require('resolution', 'p')


def test_number_list():
  param = NumberList('sweep.eps', 'Eps', positive=True, length=2)
  param.set_text('0.2, 0.1')
  assert_equals(param.get_value(), [0.2, 0.1])
  with assert_raises(ConfigError):
    param.set_text('0.2, -0.1')
  with assert_raises(ConfigError):
    param.set_text('0.2, 0.1, 0.05')
  with assert_raises(ConfigError):
    param.set_text('a,b')


def test_add_duplicate():
  params = make()
  with assert_raises(ValueError):
    params.add(Text('output.dir', 'Again'))
