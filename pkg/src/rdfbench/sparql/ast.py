"""Query AST for the supported SPARQL subset.

All nodes are frozen dataclasses over tuples, so two ASTs compare equal
exactly when they describe the same query.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Iterator, Optional, Union

from ..graph import Term
from .errors import SemanticError

SELECT = "select"
ASK = "ask"

COMPARE_OPS = ("=", "!=", "<", "<=", ">", ">=")


@dataclass(frozen=True, slots=True)
class Var:
    name: str

    def __str__(self) -> str:
        return f"?{self.name}"


Node = Union[Term, Var]


@dataclass(frozen=True, slots=True)
class TriplePattern:
    subject: Node
    predicate: Node
    object: Node

    def variables(self) -> Iterator[Var]:
        for n in (self.subject, self.predicate, self.object):
            if isinstance(n, Var):
                yield n


@dataclass(frozen=True, slots=True)
class Cast:
    """``xsd:integer(?v)`` style cast of a variable."""

    var: Var
    datatype: str


Operand = Union[Var, Term, Cast]


def operand_var(op: Operand) -> Optional[Var]:
    if isinstance(op, Var):
        return op
    if isinstance(op, Cast):
        return op.var
    return None


@dataclass(frozen=True, slots=True)
class Compare:
    op: str
    lhs: Operand
    rhs: Operand

    def variables(self) -> Iterator[Var]:
        for side in (self.lhs, self.rhs):
            v = operand_var(side)
            if v is not None:
                yield v


@dataclass(frozen=True, slots=True)
class Count:
    """``(COUNT([DISTINCT] ?var) AS ?alias)``."""

    var: Var
    alias: Var
    distinct: bool = False


Projection = Union[Var, Count]


@dataclass(frozen=True, slots=True)
class ValuesClause:
    var: Var
    terms: tuple[Term, ...]


@dataclass(frozen=True, slots=True)
class OrderKey:
    expr: Union[Var, Cast]
    descending: bool = False

    @property
    def var(self) -> Var:
        return self.expr if isinstance(self.expr, Var) else self.expr.var


@dataclass(frozen=True)
class QueryAst:
    form: str
    distinct: bool = False
    projection: tuple[Projection, ...] = ()
    patterns: tuple[TriplePattern, ...] = ()
    filters: tuple[Compare, ...] = ()
    not_exists_blocks: tuple[tuple[TriplePattern, ...], ...] = ()
    values_clauses: tuple[ValuesClause, ...] = ()
    order_keys: tuple[OrderKey, ...] = ()
    limit: Optional[int] = None
    prefixes: tuple[tuple[str, str], ...] = ()

    def replace(self, **changes) -> "QueryAst":
        return dataclasses.replace(self, **changes)

    @property
    def aggregates(self) -> tuple[Count, ...]:
        return tuple(p for p in self.projection if isinstance(p, Count))

    @property
    def columns(self) -> tuple[str, ...]:
        return tuple(p.alias.name if isinstance(p, Count) else p.name for p in self.projection)

    def outer_variables(self) -> list[Var]:
        """Variables bound by the outer patterns or VALUES, in first-seen order."""
        seen: dict[Var, None] = {}
        for vc in self.values_clauses:
            seen[vc.var] = None
        for tp in self.patterns:
            for v in tp.variables():
                seen[v] = None
        return list(seen)

    def all_patterns(self) -> list[TriplePattern]:
        out = list(self.patterns)
        for block in self.not_exists_blocks:
            out.extend(block)
        return out


def check_ast(ast: QueryAst) -> QueryAst:
    """Raise SemanticError unless ``ast`` satisfies the structural invariants."""
    if ast.form not in (SELECT, ASK):
        raise SemanticError(f"unknown query form {ast.form!r}")
    if ast.form == ASK:
        if ast.projection or ast.order_keys or ast.limit is not None or ast.distinct:
            raise SemanticError("ASK takes no projection, DISTINCT, ORDER BY or LIMIT")
    elif not ast.projection:
        raise SemanticError("SELECT needs at least one projected variable")
    bound = set(ast.outer_variables())
    names = [c for c in ast.columns]
    if len(set(names)) != len(names):
        raise SemanticError("duplicate projected variable")
    has_agg = bool(ast.aggregates)
    for item in ast.projection:
        if isinstance(item, Count):
            if item.var not in bound:
                raise SemanticError(f"aggregated variable {item.var} is not bound in the pattern")
            if item.alias in bound:
                raise SemanticError(f"aggregate alias {item.alias} clashes with a pattern variable")
        else:
            if has_agg:
                raise SemanticError(f"{item} projected next to an aggregate without GROUP BY")
            if item not in bound:
                raise SemanticError(f"projected variable {item} is not bound in the pattern")
    for key in ast.order_keys:
        if key.var not in bound and not (has_agg and key.var in {c.alias for c in ast.aggregates}):
            raise SemanticError(f"ORDER BY variable {key.var} is not bound in the pattern")
    for f in ast.filters:
        if f.op not in COMPARE_OPS:
            raise SemanticError(f"unknown comparison {f.op!r}")
        for v in f.variables():
            if v not in bound:
                raise SemanticError(f"FILTER variable {v} is not bound in the pattern")
    if ast.limit is not None and ast.limit < 0:
        raise SemanticError("LIMIT must be non-negative")
    return ast
