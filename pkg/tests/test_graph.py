from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURES
from rdfbench.graph import (
    BNode,
    Graph,
    IRI,
    Literal,
    Term,
    Triple,
    default_profile,
    extract_slice,
    label_of,
    load_ntriples,
    serialize_ntriples,
)
from rdfbench.namespaces import DBO, DBR, FOAF, GN, RDF_TYPE, RDFS_LABEL, SPB_PREFLABEL, XSD

TYPE = IRI(RDF_TYPE)
COMPANY = IRI(DBO + "Company")


def test_single_integer_line():
    g = load_ntriples(b'<http://a> <http://p> "5"^^<http://www.w3.org/2001/XMLSchema#integer> .\n')
    assert len(g) == 1
    (t,) = list(g)
    assert t.object.integer_value() == 5


def test_empty_input_is_empty_graph():
    assert len(load_ntriples(b"")) == 0


def test_malformed_lines_are_reported_and_skipped():
    errors: list = []
    text = "\n".join([
        "<http://a> <http://p> <http://b> .",
        "this is not a triple",
        '"lit" <http://p> <http://b> .',
        "# a comment",
        "<http://a> <http://p> \"x\"@en .",
    ])
    g = load_ntriples(text, errors)
    assert len(g) == 2
    assert [e.line for e in errors] == [2, 3]


def test_reference_fixture_size():
    text = (FIXTURES / "reference.nt").read_text(encoding="utf-8")
    expected = sum(1 for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#"))
    assert expected == 39
    assert len(load_ntriples(text)) == expected


def test_literal_escapes_round_trip():
    lit = Literal('say "hi"\n\tnow \\ ok', lang="en")
    g = Graph([Triple(IRI("http://a"), IRI("http://p"), lit)])
    again = load_ntriples(serialize_ntriples(g))
    assert again == g


def test_term_invariants():
    with pytest.raises(ValueError):
        IRI("has space")
    with pytest.raises(ValueError):
        IRI("")
    with pytest.raises(ValueError):
        Term("literal", "abc", XSD + "integer")
    with pytest.raises(ValueError):
        Triple(IRI("http://a"), Literal("p"), IRI("http://b"))


# -- index invariants


_terms = st.sampled_from([IRI(f"http://ex.org/n{i}") for i in range(5)] + [BNode("x")])
_objects = st.one_of(_terms, st.integers(-3, 3).map(Literal), st.sampled_from([Literal("a"), Literal("b", lang="en")]))
_preds = st.sampled_from([IRI(f"http://ex.org/p{i}") for i in range(3)])
_triples = st.builds(Triple, _terms, _preds, _objects)


def _index_size(index) -> int:
    return sum(len(inner) for mid in index.values() for inner in mid.values())


@settings(max_examples=200, deadline=None)
@given(st.lists(_triples, max_size=40))
def test_indexes_agree_with_triple_set(triples):
    g = Graph()
    for t in triples:
        g.add(t)
    unique = set(triples)
    assert len(g) == len(unique)
    for index in (g.spo, g.pos, g.osp):
        assert _index_size(index) == len(unique)
    assert {(t.subject, t.predicate, t.object) for t in g} == {(t.subject, t.predicate, t.object) for t in unique}
    for t in unique:
        assert t.object in g.spo[t.subject][t.predicate]
        assert t.subject in g.pos[t.predicate][t.object]
        assert t.predicate in g.osp[t.object][t.subject]


@settings(max_examples=100, deadline=None)
@given(st.lists(_triples, max_size=30))
def test_insertion_idempotent(triples):
    g = Graph(triples)
    before = len(g)
    for t in triples:
        assert g.add(t) is False
    assert len(g) == before


@settings(max_examples=100, deadline=None)
@given(st.lists(_triples, max_size=30), _terms, _preds)
def test_match_equals_filter(triples, s, p):
    g = Graph(triples)
    expected = {(t.subject, t.predicate, t.object) for t in set(triples) if t.subject == s and t.predicate == p}
    assert set(g.match(s, p, None)) == expected
    expected_p = {(t.subject, t.predicate, t.object) for t in set(triples) if t.predicate == p}
    assert set(g.match(None, p, None)) == expected_p


# -- profile


def test_default_profile_matches_schema_table():
    prof = default_profile()
    assert prof.classes == {DBO + "Company", GN + "Feature", FOAF + "Person"}
    assert prof.predicate_whitelist == {DBO + p for p in
                                        ("location", "industry", "keyPerson", "foundingYear", "numberOfEmployees")}
    assert set(prof.label_predicates) == {RDFS_LABEL, SPB_PREFLABEL, FOAF + "name"}
    assert prof.check() == []


# -- slicing


def _company(g: Graph, name: str, **preds) -> IRI:
    c = IRI(DBR + name)
    g.add(Triple(c, TYPE, COMPANY))
    g.add(Triple(c, IRI(RDFS_LABEL), Literal(name, lang="en")))
    for local, obj in preds.items():
        g.add(Triple(c, IRI(DBO + local), obj))
    return c


def test_slice_drops_company_without_core_predicates():
    src = Graph()
    _company(src, "A", location=IRI(DBR + "X"))
    _company(src, "B", numberOfEmployees=Literal(10))
    _company(src, "C", revenue=Literal(99))
    out = extract_slice(src, default_profile(), 10)
    companies = {t.subject for t in out if t.predicate == TYPE and t.object == COMPANY}
    assert companies == {IRI(DBR + "A"), IRI(DBR + "B")}
    assert all(t.predicate.value != DBO + "revenue" for t in out)


def test_slice_rejects_zero():
    with pytest.raises(ValueError):
        extract_slice(Graph(), default_profile(), 0)


def test_slice_of_schema_pure_source_is_identity(reference_graph):
    assert extract_slice(reference_graph, default_profile(), 100) == reference_graph


def test_slice_limits_and_linked_labels():
    src = Graph()
    loc = IRI(DBR + "Place")
    src.add(Triple(loc, TYPE, IRI(GN + "Feature")))
    src.add(Triple(loc, IRI(SPB_PREFLABEL), Literal("Place")))
    src.add(Triple(loc, IRI(DBO + "population"), Literal(5)))
    for i in range(5):
        _company(src, f"Co{i}", location=loc, foundingYear=Literal(str(1900 + i), XSD + "gYear"))
    out = extract_slice(src, default_profile(), 3)
    companies = sorted(t.subject.value for t in out if t.object == COMPANY)
    assert companies == [DBR + "Co0", DBR + "Co1", DBR + "Co2"]
    assert Triple(loc, IRI(SPB_PREFLABEL), Literal("Place")) in out
    assert all(t.predicate.value != DBO + "population" for t in out)
    years = [t.object for t in out if t.predicate.value == DBO + "foundingYear"]
    assert years and all(y.datatype == XSD + "integer" for y in years)
    shuffled = extract_slice(src, default_profile(), 3, shuffle_seed=1)
    assert len([t for t in shuffled if t.object == COMPANY]) == 3


def test_synthetic_slice_is_schema_pure(slice_graph):
    prof = default_profile()
    allowed = prof.allowed_predicates
    assert all(t.predicate.value in allowed for t in slice_graph)
    assert len([t for t in slice_graph if t.object == COMPANY]) > 200


# -- labels


def test_label_priority(reference_graph, profile):
    # persons prefer foaf:name over rdfs:label
    assert label_of(DBR + "Herbert_Diess", reference_graph, profile) == "Herbert Diess"
    # locations prefer spb:prefLabel
    assert label_of(DBR + "Menlo_Park,_California", reference_graph, profile) == "Menlo Park, California"
    # Texas has only rdfs:label
    assert label_of(DBR + "Texas", reference_graph, profile) == "Texas"
    assert label_of(DBR + "Volkswagen", reference_graph, profile) == "Volkswagen"


def test_label_missing_and_untyped_fallback(reference_graph, profile):
    assert label_of(DBR + "Unnamed_Board_Member", reference_graph, profile) is None
    diags: list[str] = []
    assert label_of(DBR + "Software", reference_graph, profile, diags) == "Software"
    assert diags and diags[0].startswith("label-fallback:untyped")
