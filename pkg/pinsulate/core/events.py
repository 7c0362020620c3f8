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
Progress events of the iterative solvers. The p-Laplace solver and the
free-boundary optimizer report every iteration through an #EventHandler so
that callers (the command-line driver, tests) can record residual and
iteration logs without the numerics knowing about files.
"""

__all__ = ['EV_PICARD_STEP', 'EV_OUTER_STEP', 'IterationEvent',
           'EventHandler', 'CsvRecorder']

import csv
import itertools
import logging
import sys

logger = logging.getLogger(__name__)

#: Emitted by the p-Laplace solver, data is a `(iter, residual)` tuple.
EV_PICARD_STEP = 'Solver.EV_PICARD_STEP'

#: Emitted by the optimizer, data is a dictionary with the iteration row.
EV_OUTER_STEP = 'Optimizer.EV_OUTER_STEP'


class IterationEvent:

  def __init__(self, kind, data=None, source=None):
    self.kind = kind
    self.data = data
    self.source = source

  def __repr__(self):
    return '<IterationEvent kind={!r} data={!r}>'.format(self.kind, self.data)


class _Listener:

  def __init__(self, func, filter=None):
    self.func = func
    self.filter = filter

  def invoke(self, event):
    if not self.filter or self.filter(event):
      self.func(event)


class EventHandler:
  """
  Registry of listeners keyed by event kind. A listener bound to #None
  receives every event.
  """

  def __init__(self):
    self.listeners = {}

  def bind(self, kind, func, filter=None):
    """
    Register *func* for events of the specified *kind* and return the
    listener object (required to #unbind() it again).

    # Parameters
    kind (str): The event kind, or #None for all events.
    func (callable): Called with the #IterationEvent.
    filter (callable): Optional predicate on the event.
    """

    listener = _Listener(func, filter)
    self.listeners.setdefault(kind, []).append(listener)
    return listener

  def unbind(self, kind, listener):
    """
    # Raises
    ValueError: If *listener* is not bound to *kind*.
    """

    self.listeners.get(kind, []).remove(listener)

  def emit(self, kind, data=None, source=None):
    """
    Invoke all listeners for *kind*. Exceptions raised by listeners are
    passed to #handle_exception() and never reach the emitting solver.
    """

    event = IterationEvent(kind, data, source)
    listeners = itertools.chain(
      self.listeners.get(None, []), self.listeners.get(kind, []))
    for listener in listeners:
      try:
        listener.invoke(event)
      except Exception:
        self.handle_exception(event, listener, sys.exc_info())

  def handle_exception(self, event, listener, exc_info):
    logger.error('listener for %s failed', event.kind, exc_info=exc_info)


class CsvRecorder:
  """
  A listener that appends one CSV row per event to a file. The header is
  written on the first event.

  # Parameters
  path (str): The output file.
  columns (list of str): Column names. For tuple data the values are taken
    positionally, for dictionaries by name.
  """

  def __init__(self, path, columns):
    self.path = path
    self.columns = list(columns)
    self._fp = None
    self._writer = None

  def __call__(self, event):
    if self._fp is None:
      self._fp = open(self.path, 'w', newline='')
      self._writer = csv.writer(self._fp)
      self._writer.writerow(self.columns)
    data = event.data
    if isinstance(data, dict):
      row = [data[c] for c in self.columns]
    else:
      row = list(data)
    self._writer.writerow([_format(x) for x in row])

  def close(self):
    if self._fp is not None:
      self._fp.close()
      self._fp = None


def _format(value):
  if isinstance(value, float):
    return repr(value)
  return str(value)
