"""Exception classes for the SPARQL subset."""

from __future__ import annotations


class QueryError(Exception):
    """Base class for every query failure; ``error_class`` is machine-readable."""

    error_class = "query-error"


class SparqlSyntaxError(QueryError):
    error_class = "syntax-error"

    def __init__(self, message: str, position: int = -1, expected: tuple[str, ...] = (),
                 text: str = ""):
        self.position = position
        self.expected = tuple(expected)
        self.line, self.column = _line_col(text, position)
        detail = message
        if position >= 0:
            detail = f"{message} at line {self.line}, column {self.column}"
        if self.expected:
            detail += f" (expected {', '.join(self.expected)})"
        super().__init__(detail)
        self.message = message


class UnsupportedFeatureError(SparqlSyntaxError):
    """Valid SPARQL outside the supported subset (OPTIONAL, UNION, paths, ...)."""

    error_class = "unsupported-feature"

    def __init__(self, feature: str, position: int = -1, text: str = ""):
        self.feature = feature
        super().__init__(f"unsupported SPARQL feature {feature}", position, (), text)


class SemanticError(SparqlSyntaxError):
    """Parses, but violates a structural rule such as an unbound projection."""

    error_class = "semantic-error"


class ExecutionTimeout(QueryError):
    error_class = "execution-timeout"


def _line_col(text: str, position: int) -> tuple[int, int]:
    if position < 0:
        return 0, 0
    before = text[:position]
    line = before.count("\n") + 1
    col = position - (before.rfind("\n") + 1) + 1
    return line, col
