"""In-memory triple store, N-Triples I/O, schema slicing and label lookup."""

from __future__ import annotations

import io
import logging
import random
import re
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Iterator, Optional, Union

from .namespaces import (
    DBO,
    FOAF,
    FOAF_NAME,
    GN,
    INTEGER_DATATYPES,
    RDF_TYPE,
    RDFS_LABEL,
    SPB_PREFLABEL,
    XSD_INTEGER,
)

log = logging.getLogger(__name__)

IRI_KIND = "iri"
LITERAL_KIND = "literal"
BLANK_KIND = "blank"

_INT_RE = re.compile(r"[+-]?[0-9]+")


@dataclass(frozen=True, slots=True)
class Term:
    kind: str
    value: str
    datatype: Optional[str] = None
    lang: Optional[str] = None

    def __post_init__(self) -> None:
        if self.kind == IRI_KIND:
            if not self.value or any(c.isspace() for c in self.value):
                raise ValueError(f"invalid IRI {self.value!r}")
            if self.datatype is not None or self.lang is not None:
                raise ValueError("IRIs carry no datatype or language")
        elif self.kind == LITERAL_KIND:
            if self.datatype is not None and self.lang is not None:
                raise ValueError("literal cannot have both datatype and language")
            if self.datatype in INTEGER_DATATYPES and not _INT_RE.fullmatch(self.value.strip()):
                raise ValueError(f"{self.value!r} is not a valid integer literal")
        elif self.kind == BLANK_KIND:
            if not self.value:
                raise ValueError("empty blank node label")
        else:
            raise ValueError(f"unknown term kind {self.kind!r}")

    @property
    def is_iri(self) -> bool:
        return self.kind == IRI_KIND

    @property
    def is_literal(self) -> bool:
        return self.kind == LITERAL_KIND

    @property
    def is_blank(self) -> bool:
        return self.kind == BLANK_KIND

    def integer_value(self) -> Optional[int]:
        """Numeric value for integer-typed literals, else None."""
        if self.kind == LITERAL_KIND and self.datatype in INTEGER_DATATYPES:
            return int(self.value.strip())
        return None

    def n3(self) -> str:
        if self.kind == IRI_KIND:
            return f"<{self.value}>"
        if self.kind == BLANK_KIND:
            return f"_:{self.value}"
        text = f'"{escape_literal(self.value)}"'
        if self.lang:
            return f"{text}@{self.lang}"
        if self.datatype:
            return f"{text}^^<{self.datatype}>"
        return text

    def __str__(self) -> str:
        return self.n3()


def IRI(value: str) -> Term:
    return Term(IRI_KIND, value)


def Literal(value: str | int, datatype: str | None = None, lang: str | None = None) -> Term:
    if isinstance(value, int) and datatype is None:
        datatype = XSD_INTEGER
    return Term(LITERAL_KIND, str(value), datatype, lang)


def BNode(label: str) -> Term:
    return Term(BLANK_KIND, label)


@dataclass(frozen=True, slots=True)
class Triple:
    subject: Term
    predicate: Term
    object: Term

    def __post_init__(self) -> None:
        if self.subject.kind == LITERAL_KIND:
            raise ValueError("literal cannot be a subject")
        if self.predicate.kind != IRI_KIND:
            raise ValueError("predicate must be an IRI")

    def n3(self) -> str:
        return f"{self.subject.n3()} {self.predicate.n3()} {self.object.n3()} ."


class Graph:
    """Append-only triple set with SPO, POS and OSP indexes.

    Index levels are insertion-ordered dicts, so iteration order is a function
    of load order only (no dependence on string hash randomization).
    """

    def __init__(self, triples: Iterable[Triple] = ()) -> None:
        self._triples: dict[Triple, None] = {}
        self.spo: dict[Term, dict[Term, dict[Term, None]]] = {}
        self.pos: dict[Term, dict[Term, dict[Term, None]]] = {}
        self.osp: dict[Term, dict[Term, dict[Term, None]]] = {}
        for t in triples:
            self.add(t)

    def add(self, triple: Triple) -> bool:
        if triple in self._triples:
            return False
        s, p, o = triple.subject, triple.predicate, triple.object
        self._triples[triple] = None
        self.spo.setdefault(s, {}).setdefault(p, {})[o] = None
        self.pos.setdefault(p, {}).setdefault(o, {})[s] = None
        self.osp.setdefault(o, {}).setdefault(s, {})[p] = None
        return True

    def __len__(self) -> int:
        return len(self._triples)

    def __iter__(self) -> Iterator[Triple]:
        return iter(self._triples)

    def __contains__(self, triple: object) -> bool:
        return triple in self._triples

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self._triples.keys() == other._triples.keys()

    def has(self, s: Term, p: Term, o: Term) -> bool:
        return o in self.spo.get(s, {}).get(p, {})

    def match(
        self, s: Optional[Term] = None, p: Optional[Term] = None, o: Optional[Term] = None
    ) -> Iterator[tuple[Term, Term, Term]]:
        """Yield (s, p, o) for every triple matching the bound positions."""
        if s is not None:
            by_p = self.spo.get(s)
            if not by_p:
                return
            if p is not None:
                objs = by_p.get(p)
                if not objs:
                    return
                if o is not None:
                    if o in objs:
                        yield s, p, o
                    return
                for obj in objs:
                    yield s, p, obj
                return
            if o is not None:
                for pred in self.osp.get(o, {}).get(s, {}):
                    yield s, pred, o
                return
            for pred, objs in by_p.items():
                for obj in objs:
                    yield s, pred, obj
            return
        if p is not None:
            by_o = self.pos.get(p)
            if not by_o:
                return
            if o is not None:
                for subj in by_o.get(o, {}):
                    yield subj, p, o
                return
            for obj, subjs in by_o.items():
                for subj in subjs:
                    yield subj, p, obj
            return
        if o is not None:
            for subj, preds in self.osp.get(o, {}).items():
                for pred in preds:
                    yield subj, pred, o
            return
        for t in self._triples:
            yield t.subject, t.predicate, t.object

    def objects(self, s: Term, p: Term) -> list[Term]:
        return list(self.spo.get(s, {}).get(p, {}))

    def subjects(self, p: Term, o: Term) -> list[Term]:
        return list(self.pos.get(p, {}).get(o, {}))

    def terms(self) -> set[Term]:
        out: set[Term] = set()
        for t in self._triples:
            out.update((t.subject, t.predicate, t.object))
        return out


# --------------------------------------------------------------------------
# Schema profile


@dataclass
class SchemaProfile:
    classes: set[str]
    predicate_whitelist: set[str]
    label_predicates: list[str]
    slot_types: dict[str, str]
    label_priority: dict[str, list[str]]
    numeric_predicates: set[str]
    # Predicate whose object range is the slot kind; used when a slot has no
    # class of its own in the slice (industries are untyped).
    slot_predicates: dict[str, str] = field(default_factory=dict)
    # class -> predicates, in display order, for prompt schema summaries
    class_predicates: dict[str, list[str]] = field(default_factory=dict)

    @property
    def allowed_predicates(self) -> set[str]:
        return self.predicate_whitelist | set(self.label_predicates) | {RDF_TYPE}

    @property
    def global_label_priority(self) -> list[str]:
        return list(self.label_predicates)

    def check(self) -> list[str]:
        """Return consistency problems with this profile (empty when sound)."""
        problems = []
        known = self.predicate_whitelist | set(self.label_predicates)
        for cls, preds in self.label_priority.items():
            for p in preds:
                if p not in known:
                    problems.append(f"label predicate {p} for {cls} not allowed")
        for kind, p in self.slot_predicates.items():
            if p not in known:
                problems.append(f"slot predicate {p} for {kind} not allowed")
        return problems


def default_profile() -> SchemaProfile:
    company, feature, person = DBO + "Company", GN + "Feature", FOAF + "Person"
    return SchemaProfile(
        classes={company, feature, person},
        predicate_whitelist={
            DBO + "location",
            DBO + "industry",
            DBO + "keyPerson",
            DBO + "foundingYear",
            DBO + "numberOfEmployees",
        },
        label_predicates=[RDFS_LABEL, SPB_PREFLABEL, FOAF_NAME],
        slot_types={
            "company": company,
            "location": feature,
            "person": person,
            "industry": DBO + "Industry",
        },
        label_priority={
            company: [RDFS_LABEL],
            feature: [SPB_PREFLABEL, RDFS_LABEL],
            person: [FOAF_NAME, RDFS_LABEL],
        },
        numeric_predicates={DBO + "foundingYear", DBO + "numberOfEmployees"},
        slot_predicates={
            "location": DBO + "location",
            "industry": DBO + "industry",
            "person": DBO + "keyPerson",
        },
        class_predicates={
            company: [
                DBO + "location",
                DBO + "industry",
                DBO + "keyPerson",
                DBO + "foundingYear",
                DBO + "numberOfEmployees",
                RDFS_LABEL,
            ],
            feature: [RDFS_LABEL, SPB_PREFLABEL],
            person: [FOAF_NAME, RDFS_LABEL],
        },
    )


# --------------------------------------------------------------------------
# N-Triples


@dataclass
class LoadDiagnostic:
    line: int
    reason: str
    text: str


_ESCAPES = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}

_NT_IRI = r"<([^<>\"{}|^`\\\x00-\x20]*)>"
_NT_BNODE = r"_:([A-Za-z0-9_][A-Za-z0-9_.\-]*)"
_NT_LITERAL = r'"((?:[^"\\\n\r]|\\.)*)"(?:@([A-Za-z]+(?:-[A-Za-z0-9]+)*)|\^\^' + _NT_IRI + r")?"
_NT_LINE = re.compile(
    r"\s*(?:" + _NT_IRI + "|" + _NT_BNODE + r")\s*"
    + _NT_IRI + r"\s*"
    + r"(?:" + _NT_IRI + "|" + _NT_BNODE + "|" + _NT_LITERAL + r")\s*\.\s*(?:#.*)?"
)


def unescape_literal(text: str) -> str:
    out = []
    i = 0
    while i < len(text):
        c = text[i]
        if c != "\\":
            out.append(c)
            i += 1
            continue
        nxt = text[i + 1] if i + 1 < len(text) else ""
        if nxt in _ESCAPES:
            out.append(_ESCAPES[nxt])
            i += 2
        elif nxt in "uU":
            width = 4 if nxt == "u" else 8
            digits = text[i + 2:i + 2 + width]
            if len(digits) != width or not all(d in "0123456789abcdefABCDEF" for d in digits):
                raise ValueError(f"bad unicode escape at offset {i}")
            out.append(chr(int(digits, 16)))
            i += 2 + width
        else:
            raise ValueError(f"bad escape \\{nxt}")
    return "".join(out)


def escape_literal(text: str) -> str:
    return (
        text.replace("\\", "\\\\")
        .replace('"', '\\"')
        .replace("\n", "\\n")
        .replace("\r", "\\r")
        .replace("\t", "\\t")
    )


def parse_ntriples_line(line: str) -> Optional[Triple]:
    """Parse one N-Triples line; None for blank/comment lines, ValueError if malformed."""
    stripped = line.strip()
    if not stripped or stripped.startswith("#"):
        return None
    m = _NT_LINE.fullmatch(line.rstrip("\r\n"))
    if m is None:
        raise ValueError("not a well-formed N-Triples statement")
    s_iri, s_bn, p_iri, o_iri, o_bn, lit, lang, dt = m.groups()
    subject = IRI(s_iri) if s_iri is not None else BNode(s_bn)
    predicate = IRI(p_iri)
    if o_iri is not None:
        obj = IRI(o_iri)
    elif o_bn is not None:
        obj = BNode(o_bn)
    else:
        obj = Term(LITERAL_KIND, unescape_literal(lit), dt, lang)
    return Triple(subject, predicate, obj)


def load_ntriples(
    source: Union[bytes, str, BinaryIO, Iterable[bytes]],
    errors: Optional[list[LoadDiagnostic]] = None,
) -> Graph:
    """Load UTF-8 N-Triples. Malformed lines are skipped and reported in ``errors``."""
    if isinstance(source, (bytes, str)):
        data = source.encode("utf-8") if isinstance(source, str) else source
        source = io.BytesIO(data)
    graph = Graph()
    for lineno, raw in enumerate(source, start=1):
        try:
            line = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            _reject(errors, lineno, f"invalid UTF-8: {exc}", repr(raw))
            continue
        try:
            triple = parse_ntriples_line(line)
        except ValueError as exc:
            _reject(errors, lineno, str(exc), line.rstrip("\n"))
            continue
        if triple is not None:
            graph.add(triple)
    return graph


def _reject(errors, lineno, reason, text):
    log.warning("line %d rejected: %s", lineno, reason)
    if errors is not None:
        errors.append(LoadDiagnostic(lineno, reason, text))


def load_ntriples_file(path, errors: Optional[list[LoadDiagnostic]] = None) -> Graph:
    with open(path, "rb") as fh:
        return load_ntriples(fh, errors)


def serialize_ntriples(graph: Graph) -> str:
    """N-Triples text, sorted by subject then predicate then object."""
    lines = sorted(
        (t.subject.n3(), t.predicate.n3(), t.object.n3()) for t in graph
    )
    return "".join(f"{s} {p} {o} .\n" for s, p, o in lines)


# --------------------------------------------------------------------------
# Slicing and labels


def extract_slice(
    source: Graph,
    profile: SchemaProfile,
    max_companies: int,
    shuffle_seed: Optional[int] = None,
) -> Graph:
    """Company-centred sub-graph restricted to the profile's schema.

    Companies (subjects typed with the company class having at least one
    whitelisted predicate) are taken in subject sort order, or in a seeded
    shuffle order when ``shuffle_seed`` is given. Linked IRIs come along with
    their class and label triples only. Integer-like values of numeric
    predicates are retyped to xsd:integer.
    """
    if max_companies < 1:
        raise ValueError("max_companies must be >= 1")
    rdf_type = IRI(RDF_TYPE)
    company_cls = IRI(profile.slot_types["company"])
    whitelist = [IRI(p) for p in sorted(profile.predicate_whitelist)]
    labels = [IRI(p) for p in profile.label_predicates]
    classes = {IRI(c) for c in profile.classes}
    numeric = {IRI(p) for p in profile.numeric_predicates}

    candidates = sorted(
        (s for s in source.subjects(rdf_type, company_cls) if s.is_iri),
        key=lambda t: t.value,
    )
    qualifying = [c for c in candidates if any(source.objects(c, p) for p in whitelist)]
    if shuffle_seed is not None:
        random.Random(shuffle_seed).shuffle(qualifying)
    chosen = qualifying[:max_companies]

    out = Graph()
    linked: dict[Term, None] = {}

    def add_types_and_labels(entity: Term) -> None:
        for cls in source.objects(entity, rdf_type):
            if cls in classes:
                out.add(Triple(entity, rdf_type, cls))
        for lp in labels:
            for lab in source.objects(entity, lp):
                if lab.is_literal:
                    out.add(Triple(entity, lp, lab))

    for company in sorted(chosen, key=lambda t: t.value):
        add_types_and_labels(company)
        for p in whitelist:
            for obj in source.objects(company, p):
                if obj.is_blank:
                    continue
                if p in numeric and obj.is_literal:
                    obj = _as_integer(obj)
                out.add(Triple(company, p, obj))
                if obj.is_iri:
                    linked[obj] = None
    for entity in linked:
        add_types_and_labels(entity)
    return out


def _as_integer(term: Term) -> Term:
    lexical = term.value.strip()
    if term.datatype != XSD_INTEGER and _INT_RE.fullmatch(lexical):
        return Term(LITERAL_KIND, lexical, XSD_INTEGER)
    return term


def label_of(
    entity: Term | str,
    graph: Graph,
    profile: SchemaProfile,
    diagnostics: Optional[list[str]] = None,
) -> Optional[str]:
    """First label for ``entity`` following its class's label priority.

    Entities without an rdf:type fall back to the global priority order; the
    fallback is noted in ``diagnostics``.
    """
    if isinstance(entity, str):
        entity = IRI(entity)
    types = [t.value for t in graph.objects(entity, IRI(RDF_TYPE))]
    priority: list[str] | None = None
    for cls in types:
        if cls in profile.label_priority:
            priority = profile.label_priority[cls]
            break
    if priority is None:
        priority = profile.global_label_priority
        if diagnostics is not None:
            reason = "untyped" if not types else "unprofiled-type"
            diagnostics.append(f"label-fallback:{reason}:{entity.value}")
    for pred in priority:
        labels = [t for t in graph.objects(entity, IRI(pred)) if t.is_literal]
        if labels:
            preferred = [t for t in labels if t.lang in (None, "en")]
            return (preferred or labels)[0].value
    return None
