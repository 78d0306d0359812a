from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracle import as_graph, brute_force, check_engine, random_graph, random_query, to_sparql
from rdfbench.graph import Graph, IRI, Literal, Triple
from rdfbench.namespaces import DBO, DBR
from rdfbench.sparql import (
    ASK,
    Count,
    ExecutionTimeout,
    QueryError,
    SemanticError,
    SparqlSyntaxError,
    UnsupportedFeatureError,
    complexity_metrics,
    evaluate,
    parse_query,
    serialize,
)


def _by_cat(queries, cat):
    return next(q for q in queries if q["category"] == cat)["sparql"]


# -- parser


def test_yesno_semicolon_flattens(reference_queries):
    ast = parse_query(_by_cat(reference_queries, "yesno"))
    assert ast.form == ASK
    assert len(ast.patterns) == 2
    assert ast.patterns[0].subject == ast.patterns[1].subject
    assert ast.projection == () and ast.limit is None


def test_counting_shape(reference_queries):
    ast = parse_query(_by_cat(reference_queries, "counting"))
    (agg,) = ast.aggregates
    assert isinstance(agg, Count) and agg.distinct and agg.var.name == "company"
    assert len(ast.patterns) == 3
    assert len(ast.values_clauses) == 1


def test_unbound_projection_is_rejected():
    with pytest.raises(SemanticError) as info:
        parse_query("SELECT ?x WHERE { }")
    assert info.value.error_class == "semantic-error"


@pytest.mark.parametrize("text,feature", [
    ("SELECT ?x WHERE { ?x ?p ?o OPTIONAL { ?x ?q ?z } }", "OPTIONAL"),
    ("SELECT ?x WHERE { { ?x ?p ?o } UNION { ?x ?q ?o } }", "nested"),
    ("SELECT ?x WHERE { SELECT ?x WHERE { ?x ?p ?o } }", "subquery"),
    ("SELECT ?x WHERE { ?x dbo:a/dbo:b ?o }", "property path"),
    ("SELECT ?x WHERE { ?x ?p ?o } GROUP BY ?x", "GROUP BY"),
])
def test_unsupported_features(text, feature):
    with pytest.raises(UnsupportedFeatureError) as info:
        parse_query(text)
    assert info.value.error_class == "unsupported-feature"
    assert feature in str(info.value)


def test_syntax_error_carries_position_and_expectation():
    with pytest.raises(SparqlSyntaxError) as info:
        parse_query("SELECT ?x WHERE { ?x ?p ?o ")
    err = info.value
    assert err.error_class == "syntax-error"
    assert err.position > 0
    assert "'}'" in err.expected


def test_undeclared_prefix():
    with pytest.raises(QueryError):
        parse_query("SELECT ?x WHERE { ?x foo:bar ?o }")


# -- serializer


def test_reference_round_trip_fixpoint(reference_queries):
    for q in reference_queries:
        ast = parse_query(q["sparql"])
        text = serialize(ast)
        again = parse_query(text)
        assert serialize(again) == text
        assert again == parse_query(text)


def test_whitespace_does_not_change_serialization(reference_queries):
    src = _by_cat(reference_queries, "difference")
    squashed = " ".join(src.split())
    assert serialize(parse_query(src)) == serialize(parse_query(squashed))


def test_values_order_preserved():
    text = ("SELECT ?c WHERE { VALUES ?c { <http://dbpedia.org/resource/B> <http://dbpedia.org/resource/A> } "
            "?c a dbo:Company . }")
    out = serialize(parse_query(text))
    assert out.index("resource/B") < out.index("resource/A")
    (vc,) = parse_query(out).values_clauses
    assert [t.value for t in vc.terms] == [DBR + "B", DBR + "A"]


def test_serializer_writes_rdf_type_and_compacts_prefixes(reference_queries):
    out = serialize(parse_query(_by_cat(reference_queries, "superlative")))
    assert "rdf:type dbo:Company" in out
    assert "dbo:numberOfEmployees" in out


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10_000))
def test_random_query_round_trip(seed):
    spec = random_query(random.Random(seed))
    ast = parse_query(to_sparql(spec))
    text = serialize(ast)
    assert parse_query(text) == parse_query(serialize(parse_query(text)))
    assert serialize(parse_query(text)) == text


# -- evaluator


def test_empty_graph_select():
    res, metrics = evaluate(parse_query("SELECT ?s WHERE { ?s ?p ?o }"), Graph())
    assert res.rows == [] and res.empty and metrics.row_count == 0


def test_superlative_tie_breaks_by_company_iri():
    g = Graph()
    emp = IRI(DBO + "numberOfEmployees")
    for name in ("Zeta", "Alpha", "Mid"):
        c = IRI(DBR + name)
        g.add(Triple(c, IRI("http://www.w3.org/1999/02/22-rdf-syntax-ns#type"), IRI(DBO + "Company")))
        g.add(Triple(c, emp, Literal(100 if name != "Mid" else 50)))
    q = ("SELECT ?company ?employees WHERE { ?company a dbo:Company . ?company dbo:numberOfEmployees ?employees . }"
         " ORDER BY DESC(?employees) ?company LIMIT 1")
    res, _ = evaluate(parse_query(q), g)
    assert [r[0].value for r in res.rows] == [DBR + "Alpha"]


def test_cast_failure_drops_solution_with_diagnostic():
    g = Graph([Triple(IRI("http://a"), IRI("http://p"), Literal("abc")),
               Triple(IRI("http://b"), IRI("http://p"), Literal("7"))])
    q = ("PREFIX xsd: <http://www.w3.org/2001/XMLSchema#>\n"
         "SELECT ?s WHERE { ?s <http://p> ?v . FILTER (xsd:integer(?v) > 3) }")
    res, metrics = evaluate(parse_query(q), g)
    assert [r[0].value for r in res.rows] == ["http://b"]
    assert any("filter-error" in d for d in metrics.diagnostics)


def test_timeout_raises():
    g = Graph(Triple(IRI(f"http://s{i}"), IRI("http://p"), IRI(f"http://o{i}")) for i in range(60))
    q = parse_query("SELECT ?a WHERE { ?a ?p ?b . ?c ?q ?d . ?e ?r ?f . }")
    with pytest.raises(ExecutionTimeout) as info:
        evaluate(q, g, timeout=0.0)
    assert info.value.error_class == "execution-timeout"


def test_max_rows_caps_output():
    g = Graph(Triple(IRI(f"http://s{i}"), IRI("http://p"), Literal(i)) for i in range(20))
    q = parse_query("SELECT ?s WHERE { ?s <http://p> ?o }")
    assert len(evaluate(q, g, max_rows=5)[0].rows) == 5
    q3 = parse_query("SELECT ?s WHERE { ?s <http://p> ?o } LIMIT 3")
    assert len(evaluate(q3, g, max_rows=5)[0].rows) == 3


def test_ask_false_is_empty(reference_graph):
    q = parse_query("ASK { <http://dbpedia.org/resource/Airbus> dbo:location <http://dbpedia.org/resource/Texas> . }")
    res, _ = evaluate(q, reference_graph)
    assert res.kind == "boolean" and res.boolean is False and res.empty


def test_count_always_one_row():
    res, _ = evaluate(parse_query("SELECT (COUNT(?s) AS ?n) WHERE { ?s ?p ?o }"), Graph())
    assert len(res.rows) == 1 and res.rows[0][0].value == "0"


def test_tsv_output(reference_graph, reference_queries):
    res, _ = evaluate(parse_query(_by_cat(reference_queries, "generic")), reference_graph)
    assert res.to_tsv() == '?name\n"Herbert Diess"\n'


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 100_000))
def test_oracle_property(seed):
    rng = random.Random(seed)
    triples = random_graph(rng)
    spec = random_query(rng)
    ast = parse_query(to_sparql(spec))
    g = as_graph(triples)
    res, _ = evaluate(ast, g)
    assert check_engine(spec, res, brute_force(spec, triples)) is None
    # repeated evaluation is byte-identical
    assert evaluate(ast, g)[0].to_tsv() == res.to_tsv()
    if spec.limit is not None and res.kind == "rows":
        assert len(res.rows) <= spec.limit


# -- complexity metrics


def test_difference_metrics(reference_queries):
    m = complexity_metrics(parse_query(_by_cat(reference_queries, "difference")))
    assert (m.triple_count, m.filter_count) == (3, 1)


def test_superlative_metrics(reference_queries):
    m = complexity_metrics(parse_query(_by_cat(reference_queries, "superlative")))
    assert m.uses_order and not m.uses_count and m.filter_count == 0


def test_empty_ask_metrics():
    m = complexity_metrics(parse_query("ASK { }"))
    assert (m.triple_count, m.filter_count, m.uses_count, m.uses_order) == (0, 0, False, False)
