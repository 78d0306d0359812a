"""Structural complexity of a query."""

from __future__ import annotations

from dataclasses import dataclass

from .ast import QueryAst


@dataclass(frozen=True)
class Complexity:
    triple_count: int
    filter_count: int
    uses_count: bool
    uses_order: bool


def complexity_metrics(ast: QueryAst) -> Complexity:
    """Triple patterns include NOT EXISTS bodies; each FILTER clause counts once."""
    return Complexity(
        triple_count=len(ast.patterns) + sum(len(b) for b in ast.not_exists_blocks),
        filter_count=len(ast.filters) + len(ast.not_exists_blocks),
        uses_count=bool(ast.aggregates),
        uses_order=bool(ast.order_keys),
    )
