"""Deterministic synthetic company graph for offline runs and tests.

The generator produces a raw source graph that includes some out-of-schema
noise (extra predicates, companies without core predicates, unlabeled
people) so slice extraction has something to remove.
"""

from __future__ import annotations

import random

from .graph import IRI, Graph, Literal, Triple
from .namespaces import DBO, DBR, FOAF, GN, RDF_TYPE, RDFS, RDFS_LABEL, SPB_PREFLABEL, FOAF_NAME, XSD

LOCATIONS = [
    "Menlo Park, California", "California", "Texas", "Seattle", "Austin, Texas", "New York City",
    "Boston", "Chicago", "Denver", "Portland, Oregon", "San Jose, California", "Atlanta",
    "Munich", "Berlin", "Hamburg", "Wolfsburg", "Paris", "Toulouse", "Lyon", "London",
    "Manchester", "Dublin", "Amsterdam", "Rotterdam", "Stockholm", "Oslo", "Helsinki",
    "Copenhagen", "Zurich", "Geneva", "Milan", "Turin", "Madrid", "Barcelona", "Lisbon",
    "Tokyo", "Osaka", "Seoul", "Singapore", "Sydney",
]

INDUSTRIES = [
    "Software", "Automotive industry", "Aerospace", "Banking", "Retail", "Telecommunications",
    "Pharmaceutical industry", "Energy industry", "Consumer electronics", "Insurance",
    "Food processing", "Video game industry", "Logistics", "Semiconductor industry", "Construction",
]

_PREFIXES = [
    "Acme", "Blue", "Northwind", "Vertex", "Helio", "Granite", "Orbit", "Cobalt", "Summit", "Pioneer",
    "Silver", "Redwood", "Quantum", "Harbor", "Falcon", "Crescent", "Atlas", "Nimbus", "Polar", "Zephyr",
]
_SUFFIXES = ["Systems", "Motors", "Labs", "Holdings", "Works", "Dynamics", "Foods", "Networks",
             "Energy", "Logistics", "Games", "Bank", "Retail", "Aero", "Pharma"]
_FIRST = ["Anna", "Ben", "Chen", "Dara", "Emil", "Farah", "Goran", "Hana", "Ivan", "Jonas",
          "Keiko", "Lena", "Mateo", "Nadia", "Omar", "Priya", "Quinn", "Rosa", "Sven", "Tariq"]
_LAST = ["Adler", "Brandt", "Castillo", "Dubois", "Eriksen", "Fischer", "Garcia", "Hoffmann",
         "Ito", "Jensen", "Kowalski", "Larsen", "Moreau", "Novak", "Okafor", "Petrov", "Rossi",
         "Schmidt", "Tanaka", "Vogel"]


def _resource(name: str) -> str:
    return DBR + name.replace(" ", "_")


def synthetic_source(n_companies: int = 300, seed: int = 7) -> Graph:
    rng = random.Random(seed)
    g = Graph()
    rdf_type = IRI(RDF_TYPE)
    company_cls, feature_cls, person_cls = IRI(DBO + "Company"), IRI(GN + "Feature"), IRI(FOAF + "Person")
    location, industry, key_person = IRI(DBO + "location"), IRI(DBO + "industry"), IRI(DBO + "keyPerson")
    founding, employees = IRI(DBO + "foundingYear"), IRI(DBO + "numberOfEmployees")
    label, pref, name = IRI(RDFS_LABEL), IRI(SPB_PREFLABEL), IRI(FOAF_NAME)
    noise = [IRI(DBO + "revenue"), IRI(RDFS + "comment"), IRI(DBO + "wikiPageID")]

    locs = [IRI(_resource(n)) for n in LOCATIONS]
    for i, (term, text) in enumerate(zip(locs, LOCATIONS)):
        g.add(Triple(term, rdf_type, feature_cls))
        # every fourth location has only rdfs:label
        if i % 4 != 2:
            g.add(Triple(term, pref, Literal(text)))
        g.add(Triple(term, label, Literal(text, lang="en")))
    inds = [IRI(_resource(n)) for n in INDUSTRIES]
    for term, text in zip(inds, INDUSTRIES):
        g.add(Triple(term, label, Literal(text, lang="en")))

    people: list[IRI] = []
    seen_people: set[str] = set()
    while len(people) < n_companies // 2:
        full = f"{rng.choice(_FIRST)} {rng.choice(_LAST)}"
        if full in seen_people:
            full = f"{full} {len(people)}"
        seen_people.add(full)
        term = IRI(_resource(full))
        people.append(term)
        g.add(Triple(term, rdf_type, person_cls))
        roll = rng.random()
        if roll < 0.9:
            g.add(Triple(term, name, Literal(full)))
        if 0.6 < roll:
            g.add(Triple(term, label, Literal(f"{full} (executive)", lang="en")))

    used: set[str] = set()
    for i in range(n_companies):
        base = f"{rng.choice(_PREFIXES)} {rng.choice(_SUFFIXES)}"
        text = base if base not in used else f"{base} {i}"
        used.add(text)
        term = IRI(_resource(text))
        g.add(Triple(term, rdf_type, company_cls))
        g.add(Triple(term, label, Literal(text, lang="en")))
        if i % 37 == 5:
            # no core predicates: slice extraction must drop it
            g.add(Triple(term, noise[0], Literal(rng.randrange(10**6, 10**9))))
            continue
        for loc in rng.sample(locs, 1 if rng.random() < 0.7 else 2):
            g.add(Triple(term, location, loc))
        if rng.random() < 0.85:
            g.add(Triple(term, industry, rng.choice(inds)))
        for person in rng.sample(people, rng.choice([0, 1, 1, 2])):
            g.add(Triple(term, key_person, person))
        if rng.random() < 0.85:
            g.add(Triple(term, founding, Literal(str(rng.randrange(1850, 2021)), XSD + "gYear")))
        if rng.random() < 0.85:
            g.add(Triple(term, employees, Literal(rng.randrange(5, 400_000))))
        if rng.random() < 0.5:
            g.add(Triple(term, rng.choice(noise), Literal(f"note {i}")))
    return g
