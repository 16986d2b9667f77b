"""Exception hierarchy shared by every module."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    column: int

    def __post_init__(self):
        if self.line < 1 or self.column < 1:
            raise ValueError("span line and column are 1-based")

    def __str__(self):
        return f"{self.file}:{self.line}:{self.column}"


class DistcheckError(Exception):
    """Base class. Carries an optional source span for diagnostics."""

    def __init__(self, message: str, span: SourceSpan | None = None):
        super().__init__(message)
        self.message = message
        self.span = span

    def __str__(self):
        if self.span is None:
            return self.message
        return f"{self.span}: {self.message}"


class DistcheckSyntaxError(DistcheckError):
    pass


class SafetyError(DistcheckError):
    pass


class MixedEqualityError(DistcheckError):
    pass


class UnknownSymbol(DistcheckError):
    pass


class ArityMismatch(DistcheckError):
    pass


class SubsetViolation(DistcheckError):
    pass


class DomainMismatch(DistcheckError):
    pass


class NotDataFull(DistcheckError):
    pass


class FragmentError(DistcheckError):
    pass


class ConsistencyError(DistcheckError):
    pass


class NotApplicable(DistcheckError):
    pass


class StepBudgetExceeded(DistcheckError):
    """The chase ran past its precomputed bound. Always a bug."""


class BudgetExceeded(DistcheckError):
    """An oracle enumeration went past its instance-count cap."""


class UnsupportedDimension(DistcheckError):
    pass


class WordAlphabetMismatch(DistcheckError):
    pass


class StateSpaceCap(DistcheckError):
    pass
