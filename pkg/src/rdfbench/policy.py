"""Schema whitelists, per-category canonical query forms, strategy tags and guards."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .graph import SchemaProfile, Term
from .namespaces import RDF_TYPE
from .sparql import ASK, SELECT, Count, OrderKey, QueryAst, TriplePattern, Var
from .sparql.ast import check_ast


class Category(str, enum.Enum):
    GENERIC = "generic"
    COUNTING = "counting"
    COMPARATIVE = "comparative"
    SUPERLATIVE = "superlative"
    ORDINAL = "ordinal"
    MULTIHOP = "multihop"
    INTERSECTION = "intersection"
    DIFFERENCE = "difference"
    YESNO = "yesno"

    def __str__(self) -> str:
        return self.value


CATEGORIES: tuple[Category, ...] = tuple(Category)


@dataclass(frozen=True)
class CategoryInfo:
    display: str
    construct: str
    example_pattern: str
    profile_type: str  # S=simple lookup, C=compositional, N=negative/boolean


REGISTRY: dict[Category, CategoryInfo] = {
    Category.GENERIC: CategoryInfo("Generic", "single triple", "Who is a key person at {company}?", "S"),
    Category.COUNTING: CategoryInfo("Counting", "COUNT", "How many companies are in {location}?", "S"),
    Category.COMPARATIVE: CategoryInfo("Comparative", "filters", "Do {company1} and {company2} differ in size?", "S"),
    Category.SUPERLATIVE: CategoryInfo("Superlative", "ordering", "Which company has most employees?", "S"),
    Category.ORDINAL: CategoryInfo("Ordinal", "time order", "What year was {company} founded?", "S"),
    Category.MULTIHOP: CategoryInfo("Multi-hop", "join chains", "Which location has companies with key persons?", "C"),
    Category.INTERSECTION: CategoryInfo("Intersection", "conjunction", "Which companies are in {location} and {industry}?", "C"),
    Category.DIFFERENCE: CategoryInfo("Difference", "negation", "Which companies are in {A} but not {B}?", "C"),
    Category.YESNO: CategoryInfo("Yes/No", "boolean check", "Is {company} located in {location}?", "N"),
}


@dataclass(frozen=True)
class CategoryPolicy:
    category: Category
    required_form: str
    require_count_distinct: bool = False
    require_order_and_limit1: bool = False
    require_distinct: bool = False
    default_limit: Optional[int] = None


def category_policy(category: Category, result_cap: int = 5) -> CategoryPolicy:
    c = Category(category)
    if c is Category.YESNO:
        return CategoryPolicy(c, ASK)
    if c is Category.COUNTING:
        return CategoryPolicy(c, SELECT, require_count_distinct=True)
    if c in (Category.SUPERLATIVE, Category.ORDINAL):
        return CategoryPolicy(c, SELECT, require_order_and_limit1=True)
    if c is Category.COMPARATIVE:
        return CategoryPolicy(c, SELECT, default_limit=result_cap)
    return CategoryPolicy(c, SELECT, require_distinct=True, default_limit=result_cap)


class StrategyTag(str, enum.Enum):
    JOIN = "JOIN"
    FILTER = "FILTER"
    COUNT = "COUNT"
    ORDER = "ORDER"
    NEGATION = "NEGATION"
    ASK = "ASK"
    RAG = "RAG"

    def __str__(self) -> str:
        return self.value


STRATEGY_TAGS: tuple[StrategyTag, ...] = tuple(StrategyTag)


# --------------------------------------------------------------------------
# Schema validation


@dataclass(frozen=True)
class Violation:
    kind: str  # "predicate" | "class"
    iri: str
    message: str

    def to_dict(self) -> dict:
        return {"kind": self.kind, "iri": self.iri, "message": self.message}


def validate_schema(ast: QueryAst, profile: SchemaProfile) -> list[Violation]:
    """Off-whitelist predicates and classes used anywhere in the query."""
    allowed = profile.allowed_predicates
    out: list[Violation] = []
    seen: set[tuple[str, str]] = set()
    for tp in ast.all_patterns():
        pred = tp.predicate
        if isinstance(pred, Var):
            continue
        if pred.value not in allowed:
            key = ("predicate", pred.value)
            if key not in seen:
                seen.add(key)
                out.append(Violation("predicate", pred.value, f"predicate {pred.value} is not in the schema whitelist"))
            continue
        if pred.value == RDF_TYPE and isinstance(tp.object, Term) and tp.object.is_iri:
            if tp.object.value not in profile.classes:
                key = ("class", tp.object.value)
                if key not in seen:
                    seen.add(key)
                    out.append(Violation("class", tp.object.value, f"class {tp.object.value} is not in the schema"))
    return out


# --------------------------------------------------------------------------
# Canonical pattern enforcement


class UnenforceableError(ValueError):
    error_class = "unenforceable"


@dataclass(frozen=True)
class Rewrite:
    kind: str
    detail: str

    def to_dict(self) -> dict:
        return {"kind": self.kind, "detail": self.detail}


def entity_variables(ast: QueryAst, profile: Optional[SchemaProfile] = None) -> set[Var]:
    """Variables that statically denote entities (IRIs) rather than values."""
    numeric = set(profile.numeric_predicates) if profile else set()
    labels = set(profile.label_predicates) if profile else set()
    out: set[Var] = set()
    for vc in ast.values_clauses:
        if vc.terms and all(t.is_iri for t in vc.terms):
            out.add(vc.var)
    for tp in ast.all_patterns():
        if isinstance(tp.subject, Var):
            out.add(tp.subject)
        if isinstance(tp.object, Var) and isinstance(tp.predicate, Term):
            p = tp.predicate.value
            if p == RDF_TYPE or p in numeric or p in labels:
                continue
            out.add(tp.object)
    return out


def tie_break_variable(ast: QueryAst, profile: Optional[SchemaProfile] = None) -> Optional[Var]:
    """First projected entity variable, else the lexicographically-first subject variable."""
    entities = entity_variables(ast, profile)
    for item in ast.projection:
        if isinstance(item, Var) and item in entities:
            return item
    subjects = sorted({tp.subject for tp in ast.patterns if isinstance(tp.subject, Var)},
                      key=lambda v: v.name)
    return subjects[0] if subjects else None


def enforce_category_pattern(
    ast: QueryAst,
    category: Category,
    profile: Optional[SchemaProfile] = None,
    result_cap: int = 5,
) -> tuple[QueryAst, list[Rewrite]]:
    """Rewrite ``ast`` into the canonical form for ``category``.

    Returns the new AST and the rewrites applied (empty when already
    canonical). Raises UnenforceableError when no rewrite can satisfy the
    policy.
    """
    policy = category_policy(category, result_cap)
    rewrites: list[Rewrite] = []
    out = ast

    if policy.required_form == ASK:
        if out.form != ASK:
            out = out.replace(form=ASK, projection=(), distinct=False, order_keys=(), limit=None)
            rewrites.append(Rewrite("select-to-ask", "converted SELECT to ASK over the same patterns"))
        return check_ast(out), rewrites

    if out.form == ASK:
        raise UnenforceableError(f"{policy.category.value} needs a SELECT; ASK has no projection to recover")

    if policy.require_count_distinct:
        if not out.aggregates:
            target = next((p for p in out.projection if isinstance(p, Var)), None)
            if target is None:
                raise UnenforceableError("no candidate variable to count")
            alias = Var("count")
            taken = {v.name for v in out.outer_variables()}
            n = 1
            while alias.name in taken:
                n += 1
                alias = Var(f"count{n}")
            out = out.replace(projection=(Count(target, alias, True),), distinct=False, order_keys=())
            rewrites.append(Rewrite("wrap-count", f"projection wrapped as COUNT(DISTINCT {target})"))
        elif any(not a.distinct for a in out.aggregates):
            out = out.replace(projection=tuple(
                Count(p.var, p.alias, True) if isinstance(p, Count) else p for p in out.projection
            ))
            rewrites.append(Rewrite("count-distinct", "COUNT made DISTINCT"))
        return check_ast(out), rewrites

    if out.aggregates:
        raise UnenforceableError(f"{policy.category.value} does not take an aggregate projection")

    if policy.require_distinct and not out.distinct:
        out = out.replace(distinct=True)
        rewrites.append(Rewrite("inject-distinct", "added DISTINCT"))

    if policy.require_order_and_limit1:
        entity = tie_break_variable(out, profile)
        if entity is None:
            raise UnenforceableError("no entity variable available for tie-breaking")
        last = out.order_keys[-1] if out.order_keys else None
        if last is None or last.descending or last.expr != entity:
            out = out.replace(order_keys=out.order_keys + (OrderKey(entity, False),))
            rewrites.append(Rewrite("tie-break", f"appended ascending {entity} order key"))
        if out.limit != 1:
            out = out.replace(limit=1)
            rewrites.append(Rewrite("limit-1", "LIMIT set to 1"))
    elif policy.default_limit is not None and out.limit is None:
        out = out.replace(limit=policy.default_limit)
        rewrites.append(Rewrite("default-limit", f"added LIMIT {policy.default_limit}"))

    return check_ast(out), rewrites


def satisfies_policy(ast: QueryAst, category: Category, profile: Optional[SchemaProfile] = None) -> bool:
    """Post-enforcement check used in tests and reports."""
    c = Category(category)
    if c is Category.YESNO:
        return ast.form == ASK
    if c is Category.COUNTING:
        return bool(ast.aggregates) and all(a.distinct for a in ast.aggregates)
    if c in (Category.SUPERLATIVE, Category.ORDINAL):
        if ast.limit != 1 or not ast.order_keys:
            return False
        last = ast.order_keys[-1]
        return (not last.descending) and isinstance(last.expr, Var) \
            and last.expr in entity_variables(ast, profile)
    return ast.form == SELECT


# --------------------------------------------------------------------------
# Strategy tags


def _shares_variable(patterns: Sequence[TriplePattern]) -> bool:
    seen: dict[Var, int] = {}
    for i, tp in enumerate(patterns):
        for v in set(tp.variables()):
            if v in seen and seen[v] != i:
                return True
            seen.setdefault(v, i)
    return False


def tag_strategies(ast: QueryAst, used_retrieval_context: bool) -> set[StrategyTag]:
    tags: set[StrategyTag] = set()
    if _shares_variable(ast.patterns):
        tags.add(StrategyTag.JOIN)
    if ast.filters or ast.not_exists_blocks:
        tags.add(StrategyTag.FILTER)
    if ast.aggregates:
        tags.add(StrategyTag.COUNT)
    if ast.order_keys:
        tags.add(StrategyTag.ORDER)
    if ast.not_exists_blocks:
        tags.add(StrategyTag.NEGATION)
    if ast.form == ASK:
        tags.add(StrategyTag.ASK)
    if used_retrieval_context:
        tags.add(StrategyTag.RAG)
    return tags


def sorted_tags(tags: Iterable[StrategyTag | str]) -> list[str]:
    order = {t.value: i for i, t in enumerate(STRATEGY_TAGS)}
    return sorted({str(t) for t in tags}, key=lambda t: order.get(t, len(order)))


# --------------------------------------------------------------------------
# Record guards


@dataclass(frozen=True)
class GuardViolation:
    guard: str  # self-comparison | retrieval-self-reference | answer-type-mismatch
    message: str
    repairable: bool = True

    def to_dict(self) -> dict:
        return {"guard": self.guard, "message": self.message}


def expected_answer_types(category: Category, enforce_patterns: bool = True) -> set[str]:
    c = Category(category)
    if c is Category.YESNO:
        return {"boolean"} if enforce_patterns else {"boolean", "rows"}
    if c is Category.COUNTING:
        return {"count"}
    return {"rows"}


def answer_type(result, ast: QueryAst) -> str:
    """Shape of an executed ResultSet: boolean, count (one aggregate cell) or rows."""
    if result.kind == "boolean":
        return "boolean"
    if ast.aggregates and len(result.rows) == 1 and len(result.columns) == 1:
        cell = result.rows[0][0]
        if cell is not None and cell.integer_value() is not None:
            return "count"
    return "rows"


def guard_checks(
    record,
    retrieved_questions: Sequence[str] = (),
    threshold: float = 0.99,
    enforce_patterns: bool = True,
    ast: Optional[QueryAst] = None,
) -> list[GuardViolation]:
    """Automated data-quality guards for one candidate record.

    ``record`` needs ``category``, ``question`` and ``answer_type``;
    ``ast`` is the parsed query (needed for the self-comparison guard).
    """
    from .retrieval import jaccard

    out: list[GuardViolation] = []
    category = Category(record.category)
    if category is Category.COMPARATIVE and ast is not None:
        pinned = [vc.terms[0] for vc in ast.values_clauses if len(vc.terms) == 1]
        if len(pinned) >= 2 and len(set(pinned)) < len(pinned):
            out.append(GuardViolation("self-comparison", "comparative query compares an entity with itself"))
    for q in retrieved_questions:
        if jaccard(record.question, q) >= threshold:
            out.append(GuardViolation(
                "retrieval-self-reference", "question duplicates a retrieved exemplar", repairable=False
            ))
            break
    expected = expected_answer_types(category, enforce_patterns)
    if record.answer_type not in expected:
        out.append(GuardViolation(
            "answer-type-mismatch",
            f"{category.value} expects {'/'.join(sorted(expected))} but query returns {record.answer_type}",
        ))
    return out
