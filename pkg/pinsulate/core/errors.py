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
Exceptions raised by the solver and the verification routines.
"""

__all__ = ['PinsulateError', 'ConfigError', 'ShapeError', 'GeometryError',
           'EmptyBoundaryError', 'DomainTooSmallError', 'TopologyError',
           'ConvergenceError', 'QuadratureError']


class PinsulateError(Exception):
  pass


class ConfigError(PinsulateError, ValueError):
  """
  Raised for invalid parameters. The message always names the offending
  key or argument.
  """


class ShapeError(PinsulateError, ValueError):
  pass


class GeometryError(PinsulateError):
  pass


class EmptyBoundaryError(GeometryError):
  pass


class DomainTooSmallError(GeometryError):
  pass


class TopologyError(PinsulateError):
  pass


class ConvergenceError(PinsulateError, RuntimeError):
  """
  Raised when an iteration exceeds its budget or diverges.

  # Members
  history (list): The residuals (for the p-Laplace solve) or the iteration
    rows (for the free-boundary optimizer) recorded until the failure.
  state (any): The last state of the iteration, if available.
  """

  def __init__(self, message, history=None, state=None):
    super().__init__(message)
    self.history = list(history or [])
    self.state = state


class QuadratureError(PinsulateError, ArithmeticError):
  pass
