"""Exception types shared across the package."""

from __future__ import annotations


class FuzzInvexError(Exception):
    """Base class for every error raised by this package."""


class ModelError(FuzzInvexError):
    """The mathematical model is inconsistent (endpoint inversion, undeclared kink, ...)."""


class DomainError(FuzzInvexError, ValueError):
    """A point lies outside the declared domain of a function."""


class ExprSyntaxError(FuzzInvexError):
    """Syntax error in an expression, with 1-based line and column."""

    def __init__(self, message: str, line: int = 1, column: int = 1, text: str = ""):
        self.message = message
        self.line = line
        self.column = column
        self.text = text
        super().__init__(f"line {line}, column {column}: {message}")


class UnknownIdentifierError(ExprSyntaxError):
    pass


class ProblemError(FuzzInvexError):
    """Problem-file errors; carries every diagnostic found, not just the first."""

    def __init__(self, diagnostics: list[str]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


class KKTInputError(FuzzInvexError, ValueError):
    """Sign or complementary-slackness violation in supplied multipliers."""


class InfeasiblePointError(FuzzInvexError, ValueError):
    """The point under test violates a constraint."""

    def __init__(self, message: str, violating: list[int] | None = None):
        self.violating = violating or []
        super().__init__(message)
