"""Exception taxonomy shared across the package.

Every error raised on a contract violation subclasses :class:`CalculusError`,
so callers (and the CLI) can distinguish bad input (exit code 1) from genuine
bugs (exit code 2). File-level errors carry a line locus where known.
"""

from __future__ import annotations


class CalculusError(Exception):
    """Base class for all contract violations raised by this package."""


# ---------------------------------------------------------------- frames

class DuplicateLabel(CalculusError):
    pass


class TooManyClasses(CalculusError):
    pass


class UnknownLabel(CalculusError):
    pass


class EmptySet(CalculusError):
    pass


class PowersetTooLarge(CalculusError):
    pass


class OutOfRange(CalculusError):
    pass


# ---------------------------------------------------------------- masses

class InvalidMass(CalculusError):
    pass


class AllZero(CalculusError):
    pass


class FrameMismatch(CalculusError):
    pass


class LengthMismatch(CalculusError):
    pass


class ShapeMismatch(CalculusError):
    pass


# ---------------------------------------------------------------- credal

class NonOrderedScores(CalculusError):
    pass


class EmptyCredalSet(CalculusError):
    pass


class NoVertices(CalculusError):
    pass


class EmptyCloud(CalculusError):
    pass


class InvalidProbability(CalculusError):
    pass


# ---------------------------------------------------------------- evaluation

class GridMismatch(CalculusError):
    pass


class EmptyInput(CalculusError):
    pass


class EmptySide(CalculusError):
    pass


class DivergedLoss(CalculusError):
    pass


# ---------------------------------------------------------------- budgeting

class InsufficientPoints(CalculusError):
    pass


class SingletonSet(CalculusError):
    pass


class TooFewPoints(CalculusError):
    pass


# ---------------------------------------------------------------- files

class FileFormatError(CalculusError):
    """Base for file-format problems; carries a 1-based line locus."""

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        locus = []
        if line is not None:
            locus.append(f"line {line}")
        if field is not None:
            locus.append(f"field {field!r}")
        if locus:
            message = f"{message} ({', '.join(locus)})"
        super().__init__(message)
        self.line = line
        self.field = field


class ParseError(FileFormatError):
    pass


class SchemaError(FileFormatError):
    pass


class DuplicateId(FileFormatError):
    pass


class IoError(CalculusError):
    """Operating-system level read or write failure."""
