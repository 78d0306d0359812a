"""Nested-loop reference evaluator used as an oracle for the engine.

Queries are generated as plain Python structures, rendered to SPARQL text
for the engine, and evaluated here directly from the structure by
enumerating every assignment of variables over the graph's term domain. No
code from the package's parser or evaluator is involved.
"""

from __future__ import annotations

import itertools
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

from rdfbench.graph import BNode, Graph, IRI, Literal, Term, Triple

EX = "http://ex.org/"
XSD_INT = "http://www.w3.org/2001/XMLSchema#integer"
RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"

ENTITIES = [IRI(EX + f"e{i}") for i in range(4)]
CLASSES = [IRI(EX + "C1"), IRI(EX + "C2")]
PREDICATES = [IRI(EX + "p1"), IRI(EX + "p2"), IRI(RDF_TYPE)]
INTS = [Literal(i) for i in range(1, 6)]
STRINGS = [Literal("3"), Literal("x"), Literal("y", lang="en")]
BLANKS = [BNode("b1")]
VARS = ["a", "b", "c"]


def random_graph(rng: random.Random, max_triples: int = 50) -> list[Triple]:
    n = rng.randint(0, max_triples) if rng.random() < 0.1 else rng.randint(15, max_triples)
    triples: dict[Triple, None] = {}
    for _ in range(n):
        s = rng.choice(ENTITIES + BLANKS)
        p = rng.choice(PREDICATES)
        if p.value == RDF_TYPE:
            o = rng.choice(CLASSES)
        else:
            o = rng.choice(ENTITIES + ENTITIES + INTS + STRINGS + BLANKS)
        triples[Triple(s, p, o)] = None
    return list(triples)


@dataclass
class Filter:
    op: str
    lhs: object  # var name (str) or Term
    rhs: object
    cast: bool = False  # lhs wrapped in xsd:integer(...)


@dataclass
class QuerySpec:
    form: str = "select"
    patterns: list[tuple] = field(default_factory=list)
    values: list[tuple[str, list[Term]]] = field(default_factory=list)
    filters: list[Filter] = field(default_factory=list)
    not_exists: list[list[tuple]] = field(default_factory=list)
    projection: list[str] = field(default_factory=list)
    count: Optional[tuple[str, bool]] = None
    distinct: bool = False
    order: list[tuple[str, bool]] = field(default_factory=list)  # (var, descending)
    limit: Optional[int] = None


def _node(rng: random.Random, position: str, pool: list[str]):
    if rng.random() < 0.75:
        return rng.choice(pool)
    if position == "s":
        return rng.choice(ENTITIES)
    if position == "p":
        return rng.choice(PREDICATES[:2])
    return rng.choice(ENTITIES + INTS[:3])


def random_query(rng: random.Random) -> QuerySpec:
    spec = QuerySpec()
    n_vars = rng.randint(1, 3)
    pool = VARS[:n_vars]
    for _ in range(rng.choice([1, 2, 2, 3, 4, 5])):
        s = _node(rng, "s", pool)
        p = rng.choice(pool) if rng.random() < 0.1 else rng.choice(PREDICATES)
        o = rng.choice(CLASSES) if isinstance(p, Term) and p.value == RDF_TYPE else _node(rng, "o", pool)
        spec.patterns.append((s, p, o))
    bound = sorted({x for tp in spec.patterns for x in tp if isinstance(x, str)})
    if not bound:
        spec.patterns.append(("a", PREDICATES[0], "b"))
        bound = ["a", "b"]
    if rng.random() < 0.25:
        var = rng.choice(bound)
        spec.values.append((var, rng.sample(ENTITIES + INTS[:2], rng.randint(1, 3))))
    for _ in range(rng.choice([0, 0, 1, 1, 2])):
        var = rng.choice(bound)
        op = rng.choice(["=", "!=", "<", ">", "<=", ">="])
        rhs = rng.choice(bound) if op in ("=", "!=") and rng.random() < 0.5 else rng.choice(INTS + ENTITIES[:1])
        spec.filters.append(Filter(op, var, rhs, cast=rng.random() < 0.3))
    if rng.random() < 0.3:
        anchor = rng.choice(bound)
        inner = ("d", rng.choice(PREDICATES[:2]), anchor) if rng.random() < 0.3 else (
            anchor, rng.choice(PREDICATES[:2]), rng.choice(["d"] + ENTITIES[:3] + INTS[:2]))
        spec.not_exists.append([inner])
    roll = rng.random()
    if roll < 0.15:
        spec.form = "ask"
        return spec
    if roll < 0.3:
        spec.count = (rng.choice(bound), rng.random() < 0.5)
        return spec
    spec.projection = rng.sample(bound, rng.randint(1, len(bound)))
    spec.distinct = rng.random() < 0.4
    if rng.random() < 0.5:
        keys = rng.sample(spec.projection, rng.randint(1, len(spec.projection)))
        spec.order = [(v, rng.random() < 0.5) for v in keys]
    if rng.random() < 0.5:
        spec.limit = rng.randint(1, 6)
    return spec


# --------------------------------------------------------------------------
# Rendering


def _term_text(t) -> str:
    if isinstance(t, str):
        return "?" + t
    if t.kind == "iri":
        return f"<{t.value}>"
    if t.datatype == XSD_INT:
        return t.value
    raise ValueError(f"no query rendering for {t!r}")


def to_sparql(spec: QuerySpec) -> str:
    body = []
    for var, terms in spec.values:
        body.append(f"  VALUES ?{var} {{ {' '.join(_term_text(t) for t in terms)} }}")
    for tp in spec.patterns:
        body.append("  " + " ".join(_term_text(x) for x in tp) + " .")
    for f in spec.filters:
        lhs = f"xsd:integer(?{f.lhs})" if f.cast else _term_text(f.lhs)
        body.append(f"  FILTER ({lhs} {f.op} {_term_text(f.rhs)})")
    for block in spec.not_exists:
        inner = " ".join(" ".join(_term_text(x) for x in tp) + " ." for tp in block)
        body.append(f"  FILTER NOT EXISTS {{ {inner} }}")
    where = "{\n" + "\n".join(body) + "\n}"
    head = "PREFIX xsd: <http://www.w3.org/2001/XMLSchema#>\n"
    if spec.form == "ask":
        return head + "ASK " + where
    if spec.count is not None:
        var, distinct = spec.count
        sel = f"SELECT (COUNT({'DISTINCT ' if distinct else ''}?{var}) AS ?n)"
    else:
        sel = "SELECT " + ("DISTINCT " if spec.distinct else "") + " ".join("?" + v for v in spec.projection)
    text = head + sel + "\nWHERE " + where
    if spec.order:
        text += "\nORDER BY " + " ".join(f"DESC(?{v})" if d else f"?{v}" for v, d in spec.order)
    if spec.limit is not None:
        text += f"\nLIMIT {spec.limit}"
    return text


# --------------------------------------------------------------------------
# Brute-force semantics


def _int_of(t: Term, cast: bool) -> Optional[int]:
    if t.kind != "literal":
        return None
    if t.datatype == XSD_INT:
        return int(t.value)
    if cast and t.lang is None and t.value.strip().lstrip("+-").isdigit() and t.value.strip().isascii():
        return int(t.value.strip())
    return None


def _filter_ok(f: Filter, env: dict[str, Term]) -> bool:
    lt = env[f.lhs]
    rt = env[f.rhs] if isinstance(f.rhs, str) else f.rhs
    ln, rn = _int_of(lt, f.cast), _int_of(rt, False)
    if f.cast and ln is None:
        return False  # failed cast is an error
    if ln is not None and rn is not None:
        return {"=": ln == rn, "!=": ln != rn, "<": ln < rn, ">": ln > rn,
                "<=": ln <= rn, ">=": ln >= rn}[f.op]
    if f.op in ("=", "!="):
        if (ln is None) != (rn is None):
            return f.op == "!="
        return (lt == rt) == (f.op == "=")
    return False  # type error drops the solution


def _sub(x, env):
    return env[x] if isinstance(x, str) else x


def _holds(tp, env, facts: set) -> bool:
    return (_sub(tp[0], env), _sub(tp[1], env), _sub(tp[2], env)) in facts


def brute_force(spec: QuerySpec, triples: list[Triple]):
    facts = {(t.subject, t.predicate, t.object) for t in triples}
    domain = sorted({x for t in triples for x in (t.subject, t.predicate, t.object)}
                    | {t for _, ts in spec.values for t in ts}, key=lambda t: (t.kind, t.value))
    outer = sorted({x for tp in spec.patterns for x in tp if isinstance(x, str)} | {v for v, _ in spec.values})
    sols = []
    for combo in itertools.product(domain, repeat=len(outer)):
        env = dict(zip(outer, combo))
        if not all(_holds(tp, env, facts) for tp in spec.patterns):
            continue
        if not all(env[v] in ts for v, ts in spec.values):
            continue
        if not all(_filter_ok(f, env) for f in spec.filters):
            continue
        blocked = False
        for block in spec.not_exists:
            inner = sorted({x for tp in block for x in tp if isinstance(x, str)} - set(outer))
            for extra in itertools.product(domain, repeat=len(inner)):
                e2 = {**env, **dict(zip(inner, extra))}
                if all(_holds(tp, e2, facts) for tp in block):
                    blocked = True
                    break
            if blocked:
                break
        if not blocked:
            sols.append(env)
    if spec.form == "ask":
        return ("boolean", bool(sols))
    if spec.count is not None:
        var, distinct = spec.count
        values = [s[var] for s in sols]
        return ("count", len(set(values)) if distinct else len(values))
    rows = [tuple(s[v] for v in spec.projection) for s in sols]
    return ("rows", rows)


def sort_key(t: Optional[Term]):
    """Documented total order: unbound < numbers < literals < blanks < IRIs."""
    if t is None:
        return (0, 0, "")
    n = _int_of(t, False)
    if n is not None:
        return (1, n, "")
    if t.kind == "literal":
        return (2, 0, t.value, t.datatype or "", t.lang or "")
    return ({"blank": 3, "iri": 4}[t.kind], 0, t.value)


def row_keys(spec: QuerySpec, row: tuple) -> tuple:
    idx = {v: i for i, v in enumerate(spec.projection)}
    out = []
    for v, desc in spec.order:
        k = sort_key(row[idx[v]])
        out.append(_Desc(k) if desc else k)
    return tuple(out)


class _Desc:
    __slots__ = ("k",)

    def __init__(self, k):
        self.k = k

    def __lt__(self, other):
        return self.k > other.k

    def __eq__(self, other):
        return self.k == other.k


def check_engine(spec: QuerySpec, result, expected) -> Optional[str]:
    """Return None if the engine result is consistent with the oracle, else a reason."""
    kind = expected[0]
    if kind == "boolean":
        if result.kind != "boolean" or result.boolean != expected[1]:
            return f"ASK mismatch: engine={result.boolean} oracle={expected[1]}"
        return None
    if kind == "count":
        got = int(result.rows[0][0].value) if result.rows else None
        return None if got == expected[1] else f"COUNT mismatch: engine={got} oracle={expected[1]}"
    rows = expected[1]
    if spec.distinct:
        rows = list(dict.fromkeys(rows))
    got = list(result.rows)
    if not spec.order:
        if spec.limit is None:
            return None if Counter(got) == Counter(rows) else "row multiset mismatch"
        if len(got) != min(spec.limit, len(rows)):
            return f"LIMIT size mismatch: {len(got)} vs {min(spec.limit, len(rows))}"
        return None if not (Counter(got) - Counter(rows)) else "limited rows not a sub-multiset"
    want_keys = sorted(row_keys(spec, r) for r in rows)
    if spec.limit is not None:
        want_keys = want_keys[: spec.limit]
    got_keys = [row_keys(spec, r) for r in got]
    if got_keys != want_keys:
        return "ORDER BY key sequence mismatch"
    if Counter(got) - Counter(rows):
        return "ordered rows not a sub-multiset"
    if spec.limit is None and Counter(got) != Counter(rows):
        return "ordered row multiset mismatch"
    return None


def as_graph(triples: list[Triple]) -> Graph:
    return Graph(triples)
