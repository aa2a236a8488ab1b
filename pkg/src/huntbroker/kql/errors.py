"""Error types raised by the query language core."""

from __future__ import annotations


class KqlError(Exception):
    """Base class for all query language errors."""


class QuerySyntaxError(KqlError):
    """Malformed input. Carries a 1-based position and an expected-token hint."""

    def __init__(self, message: str, line: int, column: int, expected: str | None = None):
        self.line = line
        self.column = column
        self.expected = expected
        hint = f" (expected {expected})" if expected else ""
        super().__init__(f"{message} at line {line}, column {column}{hint}")


class UnsupportedFeature(KqlError):
    """Recognizably KQL, but outside the supported subset (e.g. join, =~)."""

    def __init__(self, feature: str, line: int, column: int):
        self.feature = feature
        self.line = line
        self.column = column
        super().__init__(
            f"unsupported KQL feature {feature!r} at line {line}, column {column}"
        )


class TypeMismatch(KqlError):
    """A scalar function or operator was applied to an incompatible value type."""


class UnknownTable(KqlError):
    """Referenced table is absent from the statistics or dataset."""
