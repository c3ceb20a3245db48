"""
Copyright (c) 2026, CodeLV.

Distributed under the terms of the MIT License.

The full license is in the file LICENSE.txt, distributed with this software.

Created on Sep 2, 2026
"""

from __future__ import annotations

from typing import Optional

__all__ = [
    "Brep2ShapeError",
    "ArgumentError",
    "DomainError",
    "MultiplicityError",
    "ConfigError",
    "ParseError",
    "IntegrityError",
    "TopologyError",
    "NumericError",
    "DegeneracyError",
    "TrainingError",
]


class Brep2ShapeError(Exception):
    """Base class of every error raised by the package.

    Each subclass carries the process exit code the command line maps it to.

    """

    exit_code = 1


class ArgumentError(Brep2ShapeError, ValueError):
    """An argument is outside of its documented range."""

    exit_code = 2


class DomainError(ArgumentError):
    """A parameter lies outside of an evaluation domain."""


class MultiplicityError(ArgumentError):
    """A knot insertion would raise a multiplicity above the degree."""


class ConfigError(ArgumentError):
    """A model configuration is inconsistent."""


class ParseError(Brep2ShapeError):
    """A file could not be parsed.

    The `path` points at the offending field of the document when known.

    """

    exit_code = 3

    def __init__(self, message: str, path: Optional[str] = None):
        if path:
            message = f"{message} (at {path})"
        super().__init__(message)
        self.path = path


class IntegrityError(Brep2ShapeError):
    """Data violates a structural invariant (dangling ids, shapes, ...)."""

    exit_code = 4


class TopologyError(IntegrityError):
    """A trim loop or an incidence table is not closed."""


class NumericError(Brep2ShapeError):
    """A computation produced a degenerate or non-finite value."""

    exit_code = 5

    def __init__(self, message: str, tensor: Optional[str] = None):
        if tensor:
            message = f"{message} (tensor '{tensor}')"
        super().__init__(message)
        self.tensor = tensor


class DegeneracyError(NumericError):
    """A rational evaluation hit a non-positive accumulated weight."""


class TrainingError(NumericError):
    """Training diverged."""

    def __init__(self, message: str, step: int):
        super().__init__(f"{message} at step {step}")
        self.step = step
