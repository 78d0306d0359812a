"""Index-backed evaluation of a QueryAst against a Graph.

Solutions are built left to right: VALUES clauses first, then each triple
pattern in textual order, looking candidates up through whichever index the
bound positions allow. Comparison filters and NOT EXISTS run once every
pattern has been joined. Results keep bag semantics until DISTINCT.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, field
from typing import Iterator, Optional

from ..graph import BLANK_KIND, IRI_KIND, LITERAL_KIND, Graph, Term
from ..namespaces import XSD_INTEGER
from .ast import ASK, Cast, Compare, Count, QueryAst, TriplePattern, Var
from .errors import ExecutionTimeout

Binding = dict[Var, Term]

_INT_LEXICAL = re.compile(r"[+-]?[0-9]+")


@dataclass
class ExecMetrics:
    exec_ms: float = 0.0
    row_count: int = 0
    diagnostics: list[str] = field(default_factory=list)


@dataclass
class ResultSet:
    kind: str  # "rows" | "boolean"
    columns: tuple[str, ...] = ()
    rows: list[tuple[Optional[Term], ...]] = field(default_factory=list)
    boolean: Optional[bool] = None

    @property
    def empty(self) -> bool:
        if self.kind == "boolean":
            return not self.boolean
        return not self.rows

    def as_dicts(self) -> list[dict[str, Optional[Term]]]:
        return [dict(zip(self.columns, row)) for row in self.rows]

    def to_tsv(self) -> str:
        if self.kind == "boolean":
            return "true\n" if self.boolean else "false\n"
        lines = ["\t".join(f"?{c}" for c in self.columns)]
        for row in self.rows:
            lines.append("\t".join("" if t is None else t.n3() for t in row))
        return "\n".join(lines) + "\n"


class _TypeError(Exception):
    """Expression evaluation error; the solution is dropped."""


class _Deadline:
    def __init__(self, timeout: Optional[float]):
        self.limit = None if timeout is None else time.perf_counter() + timeout
        self.ticks = 0

    def tick(self) -> None:
        self.ticks += 1
        if self.limit is not None and self.ticks % 512 == 0 and time.perf_counter() > self.limit:
            raise ExecutionTimeout("query exceeded its execution timeout")


# --------------------------------------------------------------------------
# Expression semantics


def numeric_value(term: Term, cast: bool = False) -> Optional[int]:
    """Integer value of ``term``; with ``cast`` any integer-lexical literal counts."""
    value = term.integer_value()
    if value is not None:
        return value
    if cast and term.kind == LITERAL_KIND and term.lang is None:
        text = term.value.strip()
        if _INT_LEXICAL.fullmatch(text):
            return int(text)
    return None


def _eval_operand(op, binding: Binding):
    """Return ('num', int) or ('term', Term)."""
    if isinstance(op, Cast):
        term = binding.get(op.var)
        if term is None:
            raise _TypeError(f"unbound {op.var}")
        value = numeric_value(term, cast=True)
        if value is None:
            raise _TypeError(f"cannot cast {term.n3()} to xsd:integer")
        return "num", value
    if isinstance(op, Var):
        term = binding.get(op)
        if term is None:
            raise _TypeError(f"unbound {op}")
    else:
        term = op
    value = term.integer_value()
    if value is not None:
        return "num", value
    return "term", term


def compare(f: Compare, binding: Binding) -> bool:
    lk, lv = _eval_operand(f.lhs, binding)
    rk, rv = _eval_operand(f.rhs, binding)
    if lk == "num" and rk == "num":
        return {
            "=": lv == rv,
            "!=": lv != rv,
            "<": lv < rv,
            "<=": lv <= rv,
            ">": lv > rv,
            ">=": lv >= rv,
        }[f.op]
    if f.op in ("=", "!="):
        lt = lv if lk == "term" else Term(LITERAL_KIND, str(lv), XSD_INTEGER)
        rt = rv if rk == "term" else Term(LITERAL_KIND, str(rv), XSD_INTEGER)
        if lk != rk:
            # numeric vs non-numeric: never equal
            return f.op == "!="
        same = lt == rt
        return same if f.op == "=" else not same
    raise _TypeError(f"{f.op} requires integer operands")


_KIND_RANK = {LITERAL_KIND: 2, BLANK_KIND: 3, IRI_KIND: 4}


def order_key_value(term: Optional[Term], cast: bool = False):
    """Total order over terms: unbound < numbers < other literals < blanks < IRIs."""
    if term is None:
        return (0, 0, "")
    number = numeric_value(term, cast=cast)
    if number is not None:
        return (1, number, "")
    if term.kind == LITERAL_KIND:
        return (2, 0, term.value, term.datatype or "", term.lang or "")
    return (_KIND_RANK[term.kind], 0, term.value)


# --------------------------------------------------------------------------
# Pattern matching


def _resolve(node, binding: Binding) -> Optional[Term]:
    if isinstance(node, Var):
        return binding.get(node)
    return node


def _match_pattern(graph: Graph, tp: TriplePattern, binding: Binding,
                   deadline: _Deadline) -> Iterator[Binding]:
    s = _resolve(tp.subject, binding)
    p = _resolve(tp.predicate, binding)
    o = _resolve(tp.object, binding)
    if p is not None and p.kind != IRI_KIND:
        return
    if s is not None and s.kind == LITERAL_KIND:
        return
    for ts, tpred, to in graph.match(s, p, o):
        deadline.tick()
        new = binding
        ok = True
        for node, value in ((tp.subject, ts), (tp.predicate, tpred), (tp.object, to)):
            if isinstance(node, Var):
                bound = new.get(node)
                if bound is None:
                    if new is binding:
                        new = dict(binding)
                    new[node] = value
                elif bound != value:
                    ok = False
                    break
        if ok:
            yield new if new is not binding else dict(binding)


def _join(graph: Graph, patterns, binding: Binding, deadline: _Deadline) -> Iterator[Binding]:
    if not patterns:
        yield binding
        return
    first, rest = patterns[0], patterns[1:]
    for b in _match_pattern(graph, first, binding, deadline):
        yield from _join(graph, rest, b, deadline)


def _values_solutions(ast: QueryAst) -> Iterator[Binding]:
    def step(i: int, binding: Binding) -> Iterator[Binding]:
        if i == len(ast.values_clauses):
            yield binding
            return
        vc = ast.values_clauses[i]
        for term in vc.terms:
            bound = binding.get(vc.var)
            if bound is None:
                yield from step(i + 1, {**binding, vc.var: term})
            elif bound == term:
                yield from step(i + 1, binding)

    yield from step(0, {})


def solutions(ast: QueryAst, graph: Graph, deadline: _Deadline,
              diagnostics: list[str]) -> Iterator[Binding]:
    """Filtered solution sequence for the WHERE clause (bag semantics)."""
    for seed in _values_solutions(ast):
        for b in _join(graph, ast.patterns, seed, deadline):
            keep = True
            for f in ast.filters:
                try:
                    if not compare(f, b):
                        keep = False
                        break
                except _TypeError as exc:
                    diagnostics.append(f"filter-error: {exc}")
                    keep = False
                    break
            if not keep:
                continue
            for block in ast.not_exists_blocks:
                if next(_join(graph, block, b, deadline), None) is not None:
                    keep = False
                    break
            if keep:
                yield b


# --------------------------------------------------------------------------
# Solution modifiers


def _sort(sols: list[Binding], ast: QueryAst) -> list[Binding]:
    out = list(sols)
    for key in reversed(ast.order_keys):
        cast = isinstance(key.expr, Cast)
        out.sort(key=lambda b, v=key.var, c=cast: order_key_value(b.get(v), c),
                 reverse=key.descending)
    return out


def evaluate(
    ast: QueryAst,
    graph: Graph,
    timeout: Optional[float] = None,
    max_rows: Optional[int] = None,
) -> tuple[ResultSet, ExecMetrics]:
    """Run ``ast`` on ``graph``.

    ``timeout`` is in seconds and raises ExecutionTimeout when exceeded.
    ``max_rows`` truncates SELECT output after LIMIT is applied.
    """
    start = time.perf_counter()
    metrics = ExecMetrics()
    deadline = _Deadline(timeout)
    sols = solutions(ast, graph, deadline, metrics.diagnostics)

    if ast.form == ASK:
        found = next(sols, None) is not None
        result = ResultSet("boolean", boolean=found)
        metrics.row_count = 1 if found else 0
    else:
        columns = ast.columns
        cap = ast.limit
        if max_rows is not None:
            cap = max_rows if cap is None else min(cap, max_rows)
        if ast.aggregates:
            materialized = list(sols)
            row = []
            for agg in ast.aggregates:
                row.append(_count(agg, materialized))
            rows = [tuple(row)]
        else:
            if ast.order_keys:
                ordered: Iterator[Binding] = iter(_sort(list(sols), ast))
            else:
                ordered = sols
            rows = []
            seen: set = set()
            for b in ordered:
                if cap is not None and len(rows) >= cap:
                    break
                row = tuple(b.get(Var(c)) for c in columns)
                if ast.distinct:
                    if row in seen:
                        continue
                    seen.add(row)
                rows.append(row)
        if cap is not None:
            rows = rows[:cap]
        result = ResultSet("rows", columns=columns, rows=rows)
        metrics.row_count = len(rows)
    metrics.exec_ms = (time.perf_counter() - start) * 1000.0
    return result, metrics


def _count(agg: Count, sols: list[Binding]) -> Term:
    values = [b[agg.var] for b in sols if agg.var in b]
    n = len(set(values)) if agg.distinct else len(values)
    return Term(LITERAL_KIND, str(n), XSD_INTEGER)
