from __future__ import annotations

import pytest

from rdfbench.graph import IRI
from rdfbench.namespaces import DBR
from rdfbench.policy import Category
from rdfbench.sparql import evaluate, parse_query, serialize
from rdfbench.templates import (
    TemplateError,
    TemplateSpec,
    UnlabeledEntity,
    builtin_library,
    check_template,
    instantiate,
    reverse_query_ast,
)

LIB = builtin_library()


def test_library_size_and_validity(profile):
    assert sum(len(v) for v in LIB.values()) == 54
    assert all(len(LIB[c]) == 6 for c in Category)
    for tpls in LIB.values():
        for tpl in tpls:
            check_template(tpl, profile)


def test_template_ids_are_unique():
    ids = [t.template_id for tpls in LIB.values() for t in tpls]
    assert len(ids) == len(set(ids))
    assert LIB[Category.COUNTING][2].template_id == "counting-03"


def test_volkswagen_generic_pair(reference_graph, profile, reference_queries):
    tpl = LIB[Category.GENERIC][0]
    question, sparql = instantiate(tpl, {"company": IRI(DBR + "Volkswagen")}, reference_graph, profile)
    expected = next(q for q in reference_queries if q["category"] == "generic")
    assert question == expected["question"]
    assert sparql == serialize(parse_query(expected["sparql"]))


def test_unlabeled_binding_is_refused(reference_graph, profile):
    tpl = TemplateSpec("t", Category.GENERIC, "Which companies have {person} as a key person?",
                       "SELECT DISTINCT ?company WHERE { ?company a dbo:Company . ?company dbo:keyPerson ?person . }",
                       {"person": "person"})
    with pytest.raises(UnlabeledEntity):
        instantiate(tpl, {"person": IRI(DBR + "Unnamed_Board_Member")}, reference_graph, profile)


def test_reverse_query_yields_distinct_questions(reference_graph, profile):
    tpl = LIB[Category.GENERIC][0]
    rq = reverse_query_ast(tpl, profile, row_cap=25)
    res, _ = evaluate(rq, reference_graph)
    bindings = [dict(zip([c.lstrip("?") for c in res.columns], row)) for row in res.rows]
    assert {b["company"].value for b in bindings} == {DBR + "Volkswagen", DBR + "Facebook"}
    questions = [instantiate(tpl, b, reference_graph, profile)[0] for b in bindings]
    assert len(set(questions)) == len(questions)


def test_reverse_query_respects_row_cap(rowcap_graph, profile):
    tpl = LIB[Category.GENERIC][0]
    assert len(evaluate(reverse_query_ast(tpl, profile, row_cap=25), rowcap_graph)[0].rows) == 25


def test_same_kind_slots_must_differ(profile):
    tpl = next(t for t in LIB[Category.COMPARATIVE] if len(t.slots) == 2)
    rq = reverse_query_ast(tpl, profile, row_cap=10)
    assert any(getattr(f, "op", None) == "!=" for f in rq.filters)


def test_slotless_template_has_no_reverse_query(profile):
    tpl = next(t for t in LIB[Category.SUPERLATIVE] if not t.slots)
    assert reverse_query_ast(tpl, profile, row_cap=5) is None


@pytest.mark.parametrize("nl,sparql,slots,needle", [
    ("Who runs {company}?", "SELECT ?p WHERE { ?company dbo:keyPerson ?p . }", {}, "no slot type"),
    ("Who runs {company}?", "SELECT ?p WHERE { ?company dbo:keyPerson ?p . }", {"company": "planet"}, "unknown kind"),
    ("Who runs {company}?", "SELECT ?p WHERE { ?c dbo:keyPerson ?p . }", {"company": "company"}, "does not occur"),
    ("Who runs {company}?", "SELECT ?p WHERE { ?company dbo:ceo ?p . }", {"company": "company"}, "whitelist"),
    ("Who runs {company}?", "SELECT ?p WHERE { ?company", {"company": "company"}, "does not parse"),
])
def test_invalid_templates(profile, nl, sparql, slots, needle):
    with pytest.raises(TemplateError) as info:
        check_template(TemplateSpec("bad", Category.GENERIC, nl, sparql, slots), profile)
    assert needle in str(info.value)


def test_dict_round_trip():
    tpl = LIB[Category.DIFFERENCE][0]
    assert TemplateSpec.from_dict(tpl.to_dict()) == tpl
