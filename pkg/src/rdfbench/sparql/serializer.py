"""Canonical text rendering of a QueryAst.

Layout is fixed: PREFIX lines, head, then VALUES, triple patterns, comparison
FILTERs and NOT EXISTS blocks in that order, then ORDER BY and LIMIT. The
output re-parses to an equal AST.
"""

from __future__ import annotations

from ..graph import IRI_KIND, Term, escape_literal
from ..namespaces import COMPACT_PREFIXES, XSD_INTEGER, compact
from .ast import ASK, Cast, Compare, Count, OrderKey, QueryAst, TriplePattern, Var


def term_text(term: Term, prefixes: dict[str, str] | None = None) -> str:
    if term.kind == IRI_KIND:
        return compact(term.value, prefixes)
    if term.is_blank:
        raise ValueError("blank nodes cannot appear in queries")
    if term.datatype == XSD_INTEGER and term.value.lstrip("+-").isdigit() and term.value.isascii():
        return term.value
    text = f'"{escape_literal(term.value)}"'
    if term.lang:
        return f"{text}@{term.lang}"
    if term.datatype:
        return f"{text}^^{compact(term.datatype, prefixes)}"
    return text


def _node(node, prefixes) -> str:
    if isinstance(node, Var):
        return str(node)
    return term_text(node, prefixes)


def _operand(op, prefixes) -> str:
    if isinstance(op, Cast):
        return f"{compact(op.datatype, prefixes)}({op.var})"
    return _node(op, prefixes)


def _pattern(tp: TriplePattern, prefixes) -> str:
    return f"{_node(tp.subject, prefixes)} {_node(tp.predicate, prefixes)} {_node(tp.object, prefixes)} ."


def _compare(f: Compare, prefixes) -> str:
    return f"FILTER ({_operand(f.lhs, prefixes)} {f.op} {_operand(f.rhs, prefixes)})"


def _order_key(key: OrderKey, prefixes) -> str:
    expr = _operand(key.expr, prefixes)
    if key.descending:
        return f"DESC({expr})"
    if isinstance(key.expr, Cast):
        return f"ASC({expr})"
    return expr


def _projection(item) -> str:
    if isinstance(item, Count):
        inner = f"DISTINCT {item.var}" if item.distinct else str(item.var)
        return f"(COUNT({inner}) AS {item.alias})"
    return str(item)


def serialize(ast: QueryAst) -> str:
    declared = dict(ast.prefixes)
    # Declared prefixes override the built-in compaction table.
    table = {k: v for k, v in COMPACT_PREFIXES.items() if k not in declared}
    table.update({k: v for k, v in declared.items() if k})
    lines = [f"PREFIX {p}: <{iri}>" for p, iri in ast.prefixes]
    if ast.form == ASK:
        lines.append("ASK {")
    else:
        head = "SELECT "
        if ast.distinct:
            head += "DISTINCT "
        head += " ".join(_projection(p) for p in ast.projection)
        lines.append(head)
        lines.append("WHERE {")
    for vc in ast.values_clauses:
        terms = " ".join(term_text(t, table) for t in vc.terms)
        lines.append(f"  VALUES {vc.var} {{ {terms} }}" if terms else f"  VALUES {vc.var} {{ }}")
    for tp in ast.patterns:
        lines.append("  " + _pattern(tp, table))
    for f in ast.filters:
        lines.append("  " + _compare(f, table))
    for block in ast.not_exists_blocks:
        lines.append("  FILTER NOT EXISTS {")
        for tp in block:
            lines.append("    " + _pattern(tp, table))
        lines.append("  }")
    lines.append("}")
    if ast.order_keys:
        lines.append("ORDER BY " + " ".join(_order_key(k, table) for k in ast.order_keys))
    if ast.limit is not None:
        lines.append(f"LIMIT {ast.limit}")
    return "\n".join(lines)
