"""Question templates: typed NL slots over a SPARQL skeleton.

A template's slots appear as ``{slot}`` in the NL pattern and as ``?slot``
variables in the skeleton. Reverse querying frees the slot variables to find
bindings; instantiation pins them with VALUES clauses.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .graph import IRI, Graph, SchemaProfile, Term, label_of
from .namespaces import RDF_TYPE
from .policy import Category, validate_schema
from .sparql import (
    SELECT,
    Compare,
    QueryAst,
    QueryError,
    TriplePattern,
    ValuesClause,
    Var,
    parse_query,
    serialize,
)
from .sparql.ast import check_ast

_SLOT_RE = re.compile(r"\{([A-Za-z][A-Za-z0-9_]*)\}")

SLOT_DISPLAY = {"company": "Company", "location": "Location", "person": "Person", "industry": "Industry"}


def slot_kind_of(name: str) -> str:
    """Default kind for a slot name: trailing digits are dropped (company2 -> company)."""
    return name.rstrip("0123456789")


@dataclass(frozen=True)
class TemplateSpec:
    template_id: str
    category: Category
    nl_pattern: str
    sparql_skeleton: str
    slot_types: dict[str, str] = field(default_factory=dict)

    @property
    def slots(self) -> list[str]:
        return list(self.slot_types)

    def nl_slots(self) -> list[str]:
        return _SLOT_RE.findall(self.nl_pattern)

    def to_dict(self) -> dict:
        return {
            "template_id": self.template_id,
            "category": self.category.value,
            "nl": self.nl_pattern,
            "sparql": self.sparql_skeleton,
            "slots": dict(self.slot_types),
        }

    @classmethod
    def from_dict(cls, data: dict, template_id: Optional[str] = None, category=None) -> "TemplateSpec":
        nl = data["nl"]
        slots = data.get("slots")
        if slots is None:
            slots = {s: slot_kind_of(s) for s in dict.fromkeys(_SLOT_RE.findall(nl))}
        return cls(
            template_id=template_id or data.get("template_id", ""),
            category=Category(category or data["category"]),
            nl_pattern=nl,
            sparql_skeleton=data["sparql"],
            slot_types=dict(slots),
        )


class TemplateError(ValueError):
    error_class = "invalid-template"


def check_template(tpl: TemplateSpec, profile: SchemaProfile) -> QueryAst:
    """Parse and validate ``tpl``; returns the skeleton AST or raises TemplateError."""
    for name in dict.fromkeys(tpl.nl_slots()):
        if name not in tpl.slot_types:
            raise TemplateError(f"NL slot {{{name}}} has no slot type")
    for name, kind in tpl.slot_types.items():
        if kind not in profile.slot_types:
            raise TemplateError(f"slot {name} has unknown kind {kind!r}")
    try:
        ast = parse_query(tpl.sparql_skeleton)
    except QueryError as exc:
        raise TemplateError(f"skeleton does not parse: {exc}") from exc
    used = {v.name for tp in ast.all_patterns() for v in tp.variables()}
    used |= {vc.var.name for vc in ast.values_clauses}
    for name in tpl.slot_types:
        if name not in used:
            raise TemplateError(f"slot {name} does not occur in the skeleton")
    violations = validate_schema(ast, profile)
    if violations:
        raise TemplateError("; ".join(v.message for v in violations))
    return ast


# --------------------------------------------------------------------------
# Reverse querying


def reverse_query_ast(tpl: TemplateSpec, profile: SchemaProfile, row_cap: int) -> Optional[QueryAst]:
    """SELECT DISTINCT over the slot variables with slot VALUES removed.

    Slots that only occur inside NOT EXISTS get a domain pattern so they are
    bound before the negation runs; slots of the same kind must differ.
    Returns None for slot-less templates.
    """
    ast = check_template(tpl, profile)
    slot_vars = [Var(s) for s in tpl.slots]
    if not slot_vars:
        return None
    values = tuple(vc for vc in ast.values_clauses if vc.var not in slot_vars)
    patterns = list(ast.patterns)
    outer = {v for tp in patterns for v in tp.variables()} | {vc.var for vc in values}
    for var in slot_vars:
        if var in outer:
            continue
        kind = tpl.slot_types[var.name]
        cls = profile.slot_types[kind]
        if cls in profile.classes:
            patterns.append(TriplePattern(var, IRI(RDF_TYPE), IRI(cls)))
        elif kind in profile.slot_predicates:
            patterns.append(TriplePattern(Var(f"_d_{var.name}"), IRI(profile.slot_predicates[kind]), var))
        else:
            raise TemplateError(f"slot {var.name} cannot be bound outside NOT EXISTS")
    filters = list(ast.filters)
    for i, a in enumerate(slot_vars):
        for b in slot_vars[i + 1:]:
            if tpl.slot_types[a.name] == tpl.slot_types[b.name]:
                filters.append(Compare("!=", a, b))
    rq = QueryAst(
        form=SELECT,
        distinct=True,
        projection=tuple(slot_vars),
        patterns=tuple(patterns),
        filters=tuple(filters),
        not_exists_blocks=ast.not_exists_blocks,
        values_clauses=values,
        limit=row_cap,
        prefixes=ast.prefixes,
    )
    return check_ast(rq)


def skeleton_ask(tpl: TemplateSpec, profile: SchemaProfile) -> QueryAst:
    """ASK form of the skeleton, used to ground slot-less templates."""
    ast = check_template(tpl, profile)
    return check_ast(ast.replace(form="ask", projection=(), distinct=False, order_keys=(), limit=None))


# --------------------------------------------------------------------------
# Instantiation


class UnlabeledEntity(ValueError):
    error_class = "unlabeled-entity"


def render_question(tpl: TemplateSpec, labels: dict[str, str]) -> str:
    def sub(m: re.Match) -> str:
        name = m.group(1)
        kind = tpl.slot_types[name]
        return f"({SLOT_DISPLAY.get(kind, kind.title())}: {labels[name]})"

    return _SLOT_RE.sub(sub, tpl.nl_pattern)


def pin_slots(ast: QueryAst, binding: dict[str, Term]) -> QueryAst:
    """Replace slot VALUES with one single-term VALUES clause per bound slot."""
    names = list(binding)
    kept = tuple(vc for vc in ast.values_clauses if vc.var.name not in binding)
    pinned = tuple(ValuesClause(Var(n), (binding[n],)) for n in names)
    return check_ast(ast.replace(values_clauses=pinned + kept))


def instantiate(
    tpl: TemplateSpec,
    binding: dict[str, Term],
    graph: Graph,
    profile: SchemaProfile,
    diagnostics: Optional[list[str]] = None,
) -> tuple[str, str]:
    """Question text and canonical SPARQL for one slot binding."""
    missing = [s for s in tpl.slots if s not in binding]
    if missing:
        raise ValueError(f"binding lacks slots {missing}")
    labels: dict[str, str] = {}
    for name in tpl.slots:
        label = label_of(binding[name], graph, profile, diagnostics)
        if label is None:
            raise UnlabeledEntity(f"no label for {binding[name].value} (slot {name})")
        labels[name] = label
    ast = parse_query(tpl.sparql_skeleton)
    ordered = {name: binding[name] for name in tpl.slots}
    return render_question(tpl, labels), serialize(pin_slots(ast, ordered))


# --------------------------------------------------------------------------
# Built-in library (used by the mock chat provider)


def _t(category: Category, nl: str, sparql: str, **slots: str) -> dict:
    if not slots:
        slots = {s: slot_kind_of(s) for s in dict.fromkeys(_SLOT_RE.findall(nl))}
    return {"category": category.value, "nl": nl, "sparql": sparql.strip(), "slots": slots}


C = Category

_LIBRARY: list[dict] = [
    # generic
    _t(C.GENERIC, "Who is a key person at {company}?", """
SELECT ?name WHERE {
  ?company rdf:type dbo:Company .
  ?company dbo:keyPerson ?person .
  ?person rdf:type foaf:Person .
  ?person foaf:name ?name .
} LIMIT 5"""),
    _t(C.GENERIC, "Where is {company} located?", """
SELECT DISTINCT ?place WHERE {
  ?company a dbo:Company .
  ?company dbo:location ?place .
  ?place a gn:Feature .
} LIMIT 5"""),
    _t(C.GENERIC, "Which industry is {company} in?", """
SELECT DISTINCT ?sector WHERE {
  ?company a dbo:Company .
  ?company dbo:industry ?sector .
} LIMIT 5"""),
    _t(C.GENERIC, "Which companies are located in {location}?", """
SELECT DISTINCT ?company WHERE {
  ?company a dbo:Company .
  ?company dbo:location ?location .
} LIMIT 5"""),
    _t(C.GENERIC, "Which companies operate in the {industry}?", """
SELECT DISTINCT ?company WHERE {
  ?company a dbo:Company .
  ?company dbo:industry ?industry .
} LIMIT 5"""),
    _t(C.GENERIC, "How many employees does {company} have?", """
SELECT DISTINCT ?employees WHERE {
  ?company a dbo:Company .
  ?company dbo:numberOfEmployees ?employees .
} LIMIT 5"""),
    # counting
    _t(C.COUNTING, "How many companies are located in {location}?", """
SELECT (COUNT(DISTINCT ?company) AS ?count) WHERE {
  ?company a dbo:Company .
  ?company dbo:location ?location .
  ?location a gn:Feature .
}"""),
    _t(C.COUNTING, "How many companies are in the {industry}?", """
SELECT (COUNT(DISTINCT ?company) AS ?count) WHERE {
  ?company a dbo:Company .
  ?company dbo:industry ?industry .
}"""),
    _t(C.COUNTING, "How many key persons does {company} have?", """
SELECT (COUNT(DISTINCT ?person) AS ?count) WHERE {
  ?company a dbo:Company .
  ?company dbo:keyPerson ?person .
  ?person a foaf:Person .
}"""),
    _t(C.COUNTING, "How many locations is {company} associated with?", """
SELECT (COUNT(DISTINCT ?place) AS ?count) WHERE {
  ?company a dbo:Company .
  ?company dbo:location ?place .
  ?place a gn:Feature .
}"""),
    _t(C.COUNTING, "How many companies in {location} are in the {industry}?", """
SELECT (COUNT(DISTINCT ?company) AS ?count) WHERE {
  ?company a dbo:Company .
  ?company dbo:location ?location .
  ?company dbo:industry ?industry .
}"""),
    _t(C.COUNTING, "How many companies in {location} have more than 1000 employees?", """
SELECT (COUNT(DISTINCT ?company) AS ?count) WHERE {
  ?company a dbo:Company .
  ?company dbo:location ?location .
  ?company dbo:numberOfEmployees ?employees .
  FILTER (xsd:integer(?employees) > 1000)
}"""),
    # comparative
    _t(C.COMPARATIVE, "Do {company1} and {company2} have different numbers of employees?", """
SELECT ?company1 ?n1 ?company2 ?n2 WHERE {
  ?company1 a dbo:Company .
  ?company2 a dbo:Company .
  ?company1 dbo:numberOfEmployees ?n1 .
  ?company2 dbo:numberOfEmployees ?n2 .
  FILTER (?n1 != ?n2)
} LIMIT 5"""),
    _t(C.COMPARATIVE, "Does {company1} have more employees than {company2}?", """
SELECT ?company1 ?n1 ?company2 ?n2 WHERE {
  ?company1 a dbo:Company .
  ?company2 a dbo:Company .
  ?company1 dbo:numberOfEmployees ?n1 .
  ?company2 dbo:numberOfEmployees ?n2 .
  FILTER (xsd:integer(?n1) > xsd:integer(?n2))
} LIMIT 5"""),
    _t(C.COMPARATIVE, "Was {company1} founded before {company2}?", """
SELECT ?company1 ?y1 ?company2 ?y2 WHERE {
  ?company1 a dbo:Company .
  ?company2 a dbo:Company .
  ?company1 dbo:foundingYear ?y1 .
  ?company2 dbo:foundingYear ?y2 .
  FILTER (xsd:integer(?y1) < xsd:integer(?y2))
} LIMIT 5"""),
    _t(C.COMPARATIVE, "Which companies in {location} have more employees than {company}?", """
SELECT DISTINCT ?other ?n WHERE {
  ?company a dbo:Company .
  ?company dbo:numberOfEmployees ?n0 .
  ?other a dbo:Company .
  ?other dbo:location ?location .
  ?other dbo:numberOfEmployees ?n .
  FILTER (xsd:integer(?n) > xsd:integer(?n0))
} LIMIT 5"""),
    _t(C.COMPARATIVE, "Which companies in the {industry} were founded after {company}?", """
SELECT DISTINCT ?other ?year WHERE {
  ?company a dbo:Company .
  ?company dbo:foundingYear ?y0 .
  ?other a dbo:Company .
  ?other dbo:industry ?industry .
  ?other dbo:foundingYear ?year .
  FILTER (xsd:integer(?year) > xsd:integer(?y0))
} LIMIT 5"""),
    _t(C.COMPARATIVE, "Which companies in the {industry} have fewer employees than {company}?", """
SELECT DISTINCT ?other ?n WHERE {
  ?company a dbo:Company .
  ?company dbo:numberOfEmployees ?n0 .
  ?other a dbo:Company .
  ?other dbo:industry ?industry .
  ?other dbo:numberOfEmployees ?n .
  FILTER (xsd:integer(?n) < xsd:integer(?n0))
} LIMIT 5"""),
    # superlative
    _t(C.SUPERLATIVE, "Which company has the most employees?", """
SELECT ?company ?employees WHERE {
  ?company a dbo:Company .
  ?company dbo:numberOfEmployees ?employees .
}
ORDER BY DESC(?employees) ?company
LIMIT 1"""),
    _t(C.SUPERLATIVE, "Which company in {location} has the most employees?", """
SELECT ?company ?employees WHERE {
  ?company a dbo:Company .
  ?company dbo:location ?location .
  ?company dbo:numberOfEmployees ?employees .
}
ORDER BY DESC(?employees) ?company
LIMIT 1"""),
    _t(C.SUPERLATIVE, "Which company in the {industry} has the fewest employees?", """
SELECT ?company ?employees WHERE {
  ?company a dbo:Company .
  ?company dbo:industry ?industry .
  ?company dbo:numberOfEmployees ?employees .
}
ORDER BY ?employees ?company
LIMIT 1"""),
    _t(C.SUPERLATIVE, "Which company in the {industry} has the most employees?", """
SELECT ?company ?employees WHERE {
  ?company a dbo:Company .
  ?company dbo:industry ?industry .
  ?company dbo:numberOfEmployees ?employees .
}
ORDER BY DESC(?employees) ?company
LIMIT 1"""),
    _t(C.SUPERLATIVE, "Which company in {location} is the oldest?", """
SELECT ?company ?year WHERE {
  ?company a dbo:Company .
  ?company dbo:location ?location .
  ?company dbo:foundingYear ?year .
}
ORDER BY ?year ?company
LIMIT 1"""),
    _t(C.SUPERLATIVE, "Which company in {location} has the fewest employees?", """
SELECT ?company ?employees WHERE {
  ?company a dbo:Company .
  ?company dbo:location ?location .
  ?company dbo:numberOfEmployees ?employees .
}
ORDER BY ASC(xsd:integer(?employees)) ?company
LIMIT 1"""),
    # ordinal
    _t(C.ORDINAL, "What is the founding year of {company}?", """
SELECT ?year WHERE {
  ?company a dbo:Company .
  ?company dbo:foundingYear ?year .
} LIMIT 1"""),
    _t(C.ORDINAL, "In what year was the first company in {location} founded?", """
SELECT ?year ?company WHERE {
  ?company a dbo:Company .
  ?company dbo:location ?location .
  ?company dbo:foundingYear ?year .
}
ORDER BY ?year ?company
LIMIT 1"""),
    _t(C.ORDINAL, "Which company in the {industry} was founded first?", """
SELECT ?company ?year WHERE {
  ?company a dbo:Company .
  ?company dbo:industry ?industry .
  ?company dbo:foundingYear ?year .
}
ORDER BY ?year ?company
LIMIT 1"""),
    _t(C.ORDINAL, "Which company in {location} was founded most recently?", """
SELECT ?company ?year WHERE {
  ?company a dbo:Company .
  ?company dbo:location ?location .
  ?company dbo:foundingYear ?year .
}
ORDER BY DESC(?year) ?company
LIMIT 1"""),
    _t(C.ORDINAL, "When was the earliest company with key person {person} founded?", """
SELECT ?year WHERE {
  ?company a dbo:Company .
  ?company dbo:keyPerson ?person .
  ?company dbo:foundingYear ?year .
}
ORDER BY ?year ?company
LIMIT 1"""),
    _t(C.ORDINAL, "What year was the newest company in the {industry} founded?", """
SELECT ?year WHERE {
  ?company a dbo:Company .
  ?company dbo:industry ?industry .
  ?company dbo:foundingYear ?year .
}
ORDER BY DESC(?year) ?company
LIMIT 1"""),
    # multi-hop
    _t(C.MULTIHOP, "Which location contains companies that have a key person?", """
SELECT DISTINCT ?location WHERE {
  ?company a dbo:Company .
  ?company dbo:keyPerson ?person .
  ?person rdf:type foaf:Person .
  ?company dbo:location ?location .
  ?location a gn:Feature .
} LIMIT 5""", ),
    _t(C.MULTIHOP, "Where are the companies with key person {person} located?", """
SELECT DISTINCT ?place WHERE {
  ?company a dbo:Company .
  ?company dbo:keyPerson ?person .
  ?company dbo:location ?place .
  ?place a gn:Feature .
} LIMIT 5"""),
    _t(C.MULTIHOP, "Who are the key persons of companies located in {location}?", """
SELECT DISTINCT ?name WHERE {
  ?company a dbo:Company .
  ?company dbo:location ?location .
  ?company dbo:keyPerson ?person .
  ?person a foaf:Person .
  ?person foaf:name ?name .
} LIMIT 5"""),
    _t(C.MULTIHOP, "Which industries have companies located in {location}?", """
SELECT DISTINCT ?sector WHERE {
  ?company a dbo:Company .
  ?company dbo:location ?location .
  ?company dbo:industry ?sector .
} LIMIT 5"""),
    _t(C.MULTIHOP, "Which locations host companies in the {industry}?", """
SELECT DISTINCT ?place WHERE {
  ?company a dbo:Company .
  ?company dbo:industry ?industry .
  ?company dbo:location ?place .
  ?place a gn:Feature .
} LIMIT 5"""),
    _t(C.MULTIHOP, "Which other companies share a location with {company}?", """
SELECT DISTINCT ?other WHERE {
  ?company a dbo:Company .
  ?company dbo:location ?place .
  ?other a dbo:Company .
  ?other dbo:location ?place .
  FILTER (?other != ?company)
} LIMIT 5"""),
    # intersection
    _t(C.INTERSECTION, "Which companies are located in {location} and are in the {industry}?", """
SELECT DISTINCT ?company WHERE {
  ?company a dbo:Company .
  ?company dbo:location ?location .
  ?company dbo:industry ?industry .
} LIMIT 5"""),
    _t(C.INTERSECTION, "Which companies in {location} have a key person?", """
SELECT DISTINCT ?company WHERE {
  ?company a dbo:Company .
  ?company dbo:location ?location .
  ?company dbo:keyPerson ?person .
  ?person a foaf:Person .
} LIMIT 5"""),
    _t(C.INTERSECTION, "Which companies are located in both {location1} and {location2}?", """
SELECT DISTINCT ?company WHERE {
  ?company a dbo:Company .
  ?company dbo:location ?location1 .
  ?company dbo:location ?location2 .
} LIMIT 5"""),
    _t(C.INTERSECTION, "Which companies in the {industry} have both a key person and a founding year?", """
SELECT DISTINCT ?company WHERE {
  ?company a dbo:Company .
  ?company dbo:industry ?industry .
  ?company dbo:keyPerson ?person .
  ?company dbo:foundingYear ?year .
} LIMIT 5"""),
    _t(C.INTERSECTION, "Which companies in {location} have more than 1000 employees?", """
SELECT DISTINCT ?company WHERE {
  ?company a dbo:Company .
  ?company dbo:location ?location .
  ?company dbo:numberOfEmployees ?employees .
  FILTER (xsd:integer(?employees) > 1000)
} LIMIT 5"""),
    _t(C.INTERSECTION, "Who are key persons at companies in both {location} and the {industry}?", """
SELECT DISTINCT ?person WHERE {
  ?company a dbo:Company .
  ?company dbo:location ?location .
  ?company dbo:industry ?industry .
  ?company dbo:keyPerson ?person .
} LIMIT 5"""),
    # difference
    _t(C.DIFFERENCE, "Which companies are located in {location1} but not in {location2}?", """
SELECT DISTINCT ?company WHERE {
  ?company a dbo:Company .
  ?company dbo:location ?location1 .
  FILTER NOT EXISTS {
    ?company dbo:location ?location2 .
  }
} LIMIT 5"""),
    _t(C.DIFFERENCE, "Which companies in {location} are not in the {industry}?", """
SELECT DISTINCT ?company WHERE {
  ?company a dbo:Company .
  ?company dbo:location ?location .
  FILTER NOT EXISTS {
    ?company dbo:industry ?industry .
  }
} LIMIT 5"""),
    _t(C.DIFFERENCE, "Which companies in {location} have no key person?", """
SELECT DISTINCT ?company WHERE {
  ?company a dbo:Company .
  ?company dbo:location ?location .
  FILTER NOT EXISTS {
    ?company dbo:keyPerson ?person .
  }
} LIMIT 5"""),
    _t(C.DIFFERENCE, "Which companies in the {industry} are not located in {location}?", """
SELECT DISTINCT ?company WHERE {
  ?company a dbo:Company .
  ?company dbo:industry ?industry .
  FILTER NOT EXISTS {
    ?company dbo:location ?location .
  }
} LIMIT 5"""),
    _t(C.DIFFERENCE, "Which companies in {location} have no recorded founding year?", """
SELECT DISTINCT ?company WHERE {
  ?company a dbo:Company .
  ?company dbo:location ?location .
  FILTER NOT EXISTS {
    ?company dbo:foundingYear ?year .
  }
} LIMIT 5"""),
    _t(C.DIFFERENCE, "Which companies in the {industry} have no recorded employee count?", """
SELECT DISTINCT ?company WHERE {
  ?company a dbo:Company .
  ?company dbo:industry ?industry .
  FILTER NOT EXISTS {
    ?company dbo:numberOfEmployees ?employees .
  }
} LIMIT 5"""),
    # yes/no
    _t(C.YESNO, "Is {company} located in {location}?", """
ASK {
  ?company a dbo:Company ;
    dbo:location ?location .
}"""),
    _t(C.YESNO, "Is {company} in the {industry}?", """
ASK {
  ?company a dbo:Company .
  ?company dbo:industry ?industry .
}"""),
    _t(C.YESNO, "Is {person} a key person at {company}?", """
ASK {
  ?company a dbo:Company .
  ?company dbo:keyPerson ?person .
}"""),
    _t(C.YESNO, "Does {company} have more than 1000 employees?", """
ASK {
  ?company a dbo:Company .
  ?company dbo:numberOfEmployees ?employees .
  FILTER (xsd:integer(?employees) > 1000)
}"""),
    _t(C.YESNO, "Was {company} founded before 2000?", """
ASK {
  ?company a dbo:Company .
  ?company dbo:foundingYear ?year .
  FILTER (xsd:integer(?year) < 2000)
}"""),
    _t(C.YESNO, "Are {company1} and {company2} located in the same place?", """
ASK {
  ?company1 a dbo:Company .
  ?company2 a dbo:Company .
  ?company1 dbo:location ?place .
  ?company2 dbo:location ?place .
}"""),
]


def builtin_library() -> dict[Category, list[TemplateSpec]]:
    """The built-in template library grouped by category, ids like ``counting-03``."""
    out: dict[Category, list[TemplateSpec]] = {c: [] for c in Category}
    for entry in _LIBRARY:
        cat = Category(entry["category"])
        tid = f"{cat.value}-{len(out[cat]) + 1:02d}"
        out[cat].append(TemplateSpec.from_dict(entry, template_id=tid))
    return out
