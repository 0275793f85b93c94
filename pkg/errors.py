"""Exception hierarchy shared by every module.

Each error carries the CLI exit status it maps to, so `accelsel.py` can catch
`AccelSelError` once and exit accordingly.
"""
from __future__ import annotations

from typing import Optional


class AccelSelError(Exception):
    exit_code = 1


class ConfigError(AccelSelError):
    exit_code = 1


class ValidationError(AccelSelError, ValueError):
    exit_code = 1


class InsufficientData(AccelSelError):
    exit_code = 1


class ParseError(AccelSelError):
    exit_code = 2

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class VersionError(AccelSelError):
    exit_code = 2


class DuplicateRecord(AccelSelError):
    exit_code = 2


class MissingDescriptor(AccelSelError):
    exit_code = 2


class EmptyHistory(AccelSelError):
    exit_code = 2


class SchemaError(AccelSelError):
    exit_code = 2


class NoFeasibleMethod(AccelSelError):
    """No candidate fits the budget. `min_cost` is the cheapest estimate seen."""

    exit_code = 3

    def __init__(self, min_cost: float, budget: float, candidates: int):
        self.min_cost = min_cost
        self.budget = budget
        self.candidates = candidates
        super().__init__(
            f"no feasible candidate among {candidates}: minimum estimated cost "
            f"{min_cost:.6g} exceeds budget {budget:.6g}"
        )


class InternalError(AccelSelError):
    exit_code = 4
