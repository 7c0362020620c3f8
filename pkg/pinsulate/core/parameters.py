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
This module provides typed run parameters and a collection that reads them
from flat `key = value` text.
"""

__all__ = ['Parameters', 'Parameter', 'Number', 'Text', 'Choice', 'Flag',
           'NumberList']

from pinsulate.core.errors import ConfigError
from pinsulate.core.events import EventHandler


class Parameters:
  """
  Manages a collection of parameters. Unknown names are rejected with a
  #ConfigError that names the key.
  """

  def __init__(self):
    self._params = []

  def __getitem__(self, name):
    return self(name).get_value()

  def __setitem__(self, name, value):
    self(name).set_value(value)

  def __contains__(self, name):
    return self.param(name) is not None

  def __call__(self, name):
    param = self.param(name)
    if param is None:
      raise ConfigError('unknown configuration key: {!r}'.format(name))
    return param

  def __iter__(self):
    return iter(self._params)

  def param(self, name):
    """
    Return the #Parameter with the specified *name*, or #None.
    """

    for param in self._params:
      if param.name == name:
        return param
    return None

  def add(self, param):
    """
    Add a #Parameter to the collection. Raises #ValueError if the name of
    the parameter is already occupied.
    """

    if self.param(param.name) is not None:
      raise ValueError('parameter name already occupied: {!r}'.format(param.name))
    self._params.append(param)
    return param

  def set_text(self, name, text):
    """
    Parse *text* with the parameter's syntax and assign it.
    """

    self(name).set_text(text)

  def update_from_text(self, text, source='<string>'):
    """
    Read `key = value` lines. Blank lines and lines starting with `#` are
    skipped.
    """

    for lineno, line in enumerate(text.splitlines(), 1):
      line = line.strip()
      if not line or line.startswith('#'):
        continue
      if '=' not in line:
        raise ConfigError('{}:{}: expected "key = value", got {!r}'.format(
          source, lineno, line))
      key, value = line.split('=', 1)
      self.set_text(key.strip(), value.strip())

  def update_from_dict(self, values):
    for key, value in values.items():
      param = self(key)
      if value is None:
        param.reset()
      elif isinstance(value, str):
        param.set_text(value)
      else:
        param.set_value(value)

  def missing(self, names):
    """
    Return the names among *names* that have no value.
    """

    return [n for n in names if self(n).get_value() is None]

  def require(self, *names):
    missing = self.missing(names)
    if missing:
      raise ConfigError('missing required key: {!r}'.format(missing[0]))

  def to_dict(self):
    return {p.name: p.get_value() for p in self._params}

  def to_text(self):
    lines = []
    for param in self._params:
      if param.get_value() is not None:
        lines.append('{} = {}'.format(param.name, param.to_text()))
    return '\n'.join(lines) + '\n'


class Parameter:
  """
  Base class for parameters.

  # Parameters
  name (str): The configuration key.
  label (str): A human readable description.
  default (any): The initial value. #None marks a required key.
  """

  EV_VALUE_CHANGED = 'Parameter.EV_VALUE_CHANGED'

  def __init__(self, name, label, default=None):
    self.name = name
    self.label = label
    self.default = default
    self.__listeners = EventHandler()
    self._value = None
    if default is not None:
      self._value = self.validate(default)

  def __repr__(self):
    return '<{} name={!r} value={!r}>'.format(
      type(self).__name__, self.name, self._value)

  def bind(self, kind, func):
    """
    Bind a listener to events that can be emitted by this parameter.
    """

    return self.__listeners.bind(kind, func)

  def emit(self, kind, data):
    self.__listeners.emit(kind, data, self)

  def error(self, message, *args):
    return ConfigError('{!r}: {}'.format(self.name, message.format(*args)))

  def parse(self, text):
    """
    Convert the text form of a value. Implemented by subclasses.
    """

    raise NotImplementedError

  def validate(self, value):
    return value

  def to_text(self):
    return str(self._value)

  def get_value(self):
    return self._value

  def set_value(self, value):
    value = self.validate(value)
    if value != self._value:
      old, self._value = self._value, value
      self.emit(self.EV_VALUE_CHANGED, old)

  def set_text(self, text):
    self.set_value(self.parse(text))

  def reset(self):
    self._value = None if self.default is None else self.validate(self.default)


class Number(Parameter):
  """
  Represents a numeric parameter (integral or decimal) with optional bounds.
  *min* is inclusive unless *exclusive_min* is set.
  """

  def __init__(self, name, label, default=None, min=None, max=None,
               integer=False, exclusive_min=False):
    self.min = min
    self.max = max
    self.integer = integer
    self.exclusive_min = exclusive_min
    super().__init__(name, label, default)

  def parse(self, text):
    try:
      value = float(text)
    except ValueError:
      raise self.error('expected a number, got {!r}', text)
    return value

  def validate(self, value):
    try:
      value = float(value)
    except (TypeError, ValueError):
      raise self.error('expected a number, got {!r}', value)
    if value != value:
      raise self.error('value is NaN')
    if self.integer:
      if value != int(value):
        raise self.error('expected an integer, got {!r}', value)
      value = int(value)
    if self.min is not None:
      if value < self.min or (self.exclusive_min and value == self.min):
        raise self.error('must be {} {}, got {!r}',
          '>' if self.exclusive_min else '>=', self.min, value)
    if self.max is not None and value > self.max:
      raise self.error('must be <= {}, got {!r}', self.max, value)
    return value

  def to_text(self):
    return repr(self._value)


class Text(Parameter):

  def parse(self, text):
    return str(text)

  def validate(self, value):
    return str(value)


class Choice(Parameter):

  def __init__(self, name, label, choices, default=None):
    self.choices = list(choices)
    super().__init__(name, label, default)

  def parse(self, text):
    return text.strip()

  def validate(self, value):
    if value not in self.choices:
      raise self.error('expected one of {}, got {!r}', self.choices, value)
    return value


class Flag(Parameter):

  def parse(self, text):
    text = text.strip().lower()
    if text in ('1', 'true', 'yes', 'on'):
      return True
    if text in ('0', 'false', 'no', 'off'):
      return False
    raise self.error('expected a boolean, got {!r}', text)

  def validate(self, value):
    if isinstance(value, str):
      return self.parse(value)
    return bool(value)

  def to_text(self):
    return 'true' if self._value else 'false'


class NumberList(Parameter):
  """
  A comma separated list of decimals, optionally of fixed *length* and with
  an exclusive lower bound *positive*.
  """

  def __init__(self, name, label, default=None, length=None, positive=False):
    self.length = length
    self.positive = positive
    super().__init__(name, label, default)

  def parse(self, text):
    text = text.strip()
    if not text:
      return []
    try:
      return [float(x) for x in text.split(',')]
    except ValueError:
      raise self.error('expected a comma separated list of numbers, got {!r}', text)

  def validate(self, value):
    if isinstance(value, str):
      value = self.parse(value)
    value = [float(x) for x in value]
    if self.length is not None and value and len(value) != self.length:
      raise self.error('expected {} values, got {}', self.length, len(value))
    if self.positive and any(x <= 0 for x in value):
      raise self.error('all values must be > 0, got {!r}', value)
    return value

  def to_text(self):
    return ','.join(repr(x) for x in self._value)
