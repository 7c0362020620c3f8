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

import csv
import os
import tempfile

from nose.tools import *
from pinsulate.core.events import EV_OUTER_STEP, EV_PICARD_STEP, CsvRecorder, \
  EventHandler, IterationEvent


def test_EventHandler():
  class Box:
    def __init__(self, value):
      self.value = value
    def set(self, value):
      self.value = value
  class Invoked(Exception):
    pass
  def raise_invoked(event):
    raise Invoked

  def handle_exception(*a):
    raise

  box = Box(False)

  handler = EventHandler()
  handler.handle_exception = handle_exception
  handler.bind('event1', raise_invoked)
  handler.bind('event2', lambda ev: box.set(True))

  assert_false(box.value)
  handler.emit('event2')
  assert_true(box.value)

  with assert_raises(Invoked):
    handler.emit('event1')


def test_EventHandler_swallows_listener_errors():
  seen = []
  handler = EventHandler()
  handler.bind(EV_PICARD_STEP, lambda ev: 1 / 0)
  handler.bind(EV_PICARD_STEP, lambda ev: seen.append(ev.data))
  handler.emit(EV_PICARD_STEP, (0, 1.0))
  assert_equals(seen, [(0, 1.0)])


def test_EventHandler_filter_and_unbind():
  seen = []
  handler = EventHandler()
  listener = handler.bind(None, lambda ev: seen.append(ev.kind),
    filter=lambda ev: ev.kind == EV_OUTER_STEP)
  handler.emit(EV_PICARD_STEP, (0, 1.0))
  handler.emit(EV_OUTER_STEP, {})
  assert_equals(seen, [EV_OUTER_STEP])
  handler.unbind(None, listener)
  handler.emit(EV_OUTER_STEP, {})
  assert_equals(seen, [EV_OUTER_STEP])
  with assert_raises(ValueError):
    handler.unbind(None, listener)


def test_CsvRecorder():
  with tempfile.TemporaryDirectory() as tmp:
    path = os.path.join(tmp, 'log.csv')
    recorder = CsvRecorder(path, ['iter', 'residual'])
    handler = EventHandler()
    handler.bind(EV_PICARD_STEP, recorder)
    handler.emit(EV_PICARD_STEP, (0, 0.5))
    handler.emit(EV_PICARD_STEP, (1, 0.25))
    recorder(IterationEvent(EV_OUTER_STEP, {'iter': 2, 'residual': 0.125}))
    recorder.close()
    with open(path) as fp:
      rows = list(csv.reader(fp))
  assert_equals(rows, [['iter', 'residual'], ['0', '0.5'], ['1', '0.25'], ['2', '0.125']])
