"""Exception types shared across the package.

Every error raised on a user-facing path derives from MopsError so callers
can catch one base class at the CLI boundary.
"""

from __future__ import annotations


class MopsError(Exception):
    """Base class for all package errors."""


# ---------------------------------------------------------------------------
# Plan template language


class PlanSyntaxError(MopsError):
    """Malformed template text. Carries 1-based line and column."""

    def __init__(self, line: int, column: int, message: str):
        self.line = line
        self.column = column
        self.message = message
        super().__init__(f"line {line}, column {column}: {message}")


class UnknownAction(MopsError):
    """Action name outside the plan vocabulary."""

    def __init__(self, name: str, message: str | None = None):
        self.name = name
        super().__init__(message or f"unknown action {name!r}")


class UndeclaredIdentifier(MopsError):
    """Expression references a name that is not a declared parameter."""

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"undeclared identifier {name!r}")


class DivisionByZero(MopsError):
    """Expression evaluation divided by exactly 0.0."""


class UnknownFrame(MopsError):
    """Scene lookup for a frame name that does not exist."""

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown frame {name!r}")


class UnknownAttribute(MopsError):
    """Frame accessor used an attribute outside the numeric field set."""

    def __init__(self, attr: str):
        self.attr = attr
        super().__init__(f"unknown or non-numeric frame attribute {attr!r}")


class ArityMismatch(MopsError):
    """Flat parameter vector length differs from the template's total."""


class UnboundParameter(MopsError):
    """Template evaluation referenced a parameter missing from the map."""

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unbound parameter {name!r}")


# ---------------------------------------------------------------------------
# Trajectory problems and rollouts


class BadNLP(MopsError):
    """NLP specification violates a structural precondition."""


class NonFiniteObjective(MopsError):
    """Objective or constraint values became NaN or infinite."""


class PhaseMismatch(MopsError):
    """Trajectory phase count or action kinds disagree with the plan."""


class MissingFrame(MopsError):
    """A cost or simulation required a frame the scene does not contain."""

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"scene is missing required frame {name!r}")


class WrongStrokeCount(MopsError):
    """Internal marker; stroke-count repair is handled inside the costs."""


class BehindCamera(MopsError):
    """Point at or behind the camera plane cannot be projected."""


# ---------------------------------------------------------------------------
# Black-box optimization


class BudgetExhausted(MopsError):
    """ask() called after the evaluation budget was fully consumed."""


# ---------------------------------------------------------------------------
# Proposer


class ServiceUnavailable(MopsError):
    """Chat-completion endpoint unreachable or persistently failing."""


class UnparseableResponse(MopsError):
    """Model output never yielded a parseable template within retries."""

    def __init__(self, message: str, last_error: str | None = None):
        self.last_error = last_error
        super().__init__(message)


class FixturesExhausted(MopsError):
    """Scripted backend ran out of fixture turns."""


class EmptyRecord(MopsError):
    """Feedback requested from an iteration with no evaluations."""


# ---------------------------------------------------------------------------
# Metric and configuration


class NonPositiveNormalizer(MopsError):
    """Normalized-performance metric needs a positive max-error."""


class ConfigError(MopsError):
    """Run or suite configuration is invalid."""
