"""Parser, evaluator and serializer for the supported SPARQL subset."""

from .ast import ASK, SELECT, Cast, Compare, Count, OrderKey, QueryAst, TriplePattern, ValuesClause, Var
from .errors import (
    ExecutionTimeout,
    QueryError,
    SemanticError,
    SparqlSyntaxError,
    UnsupportedFeatureError,
)
from .evaluator import ExecMetrics, ResultSet, evaluate
from .metrics import Complexity, complexity_metrics
from .parser import parse_query
from .serializer import serialize

__all__ = [
    "ASK",
    "SELECT",
    "Cast",
    "Compare",
    "Complexity",
    "Count",
    "ExecMetrics",
    "ExecutionTimeout",
    "OrderKey",
    "QueryAst",
    "QueryError",
    "ResultSet",
    "SemanticError",
    "SparqlSyntaxError",
    "TriplePattern",
    "UnsupportedFeatureError",
    "ValuesClause",
    "Var",
    "complexity_metrics",
    "evaluate",
    "parse_query",
    "serialize",
]
