"""IRI namespaces used by the company/location slice."""

import re

RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDFS = "http://www.w3.org/2000/01/rdf-schema#"
XSD = "http://www.w3.org/2001/XMLSchema#"
DBO = "http://dbpedia.org/ontology/"
DBR = "http://dbpedia.org/resource/"
FOAF = "http://xmlns.com/foaf/0.1/"
GN = "http://www.geonames.org/ontology#"
SPB = "http://www.ldbcouncil.org/spb#"

RDF_TYPE = RDF + "type"
RDFS_LABEL = RDFS + "label"
FOAF_NAME = FOAF + "name"
SPB_PREFLABEL = SPB + "prefLabel"

XSD_INTEGER = XSD + "integer"
XSD_STRING = XSD + "string"

# Integer-valued XSD datatypes that are compared numerically without a cast.
INTEGER_DATATYPES = frozenset(
    XSD + name
    for name in (
        "integer",
        "int",
        "long",
        "short",
        "byte",
        "nonNegativeInteger",
        "positiveInteger",
        "negativeInteger",
        "nonPositiveInteger",
        "unsignedLong",
        "unsignedInt",
        "unsignedShort",
        "unsignedByte",
    )
)

# Prefixes every query may use without declaring them.
DEFAULT_PREFIXES = {
    "rdf": RDF,
    "rdfs": RDFS,
    "xsd": XSD,
    "dbo": DBO,
    "dbr": DBR,
    "foaf": FOAF,
    "gn": GN,
    "spb": SPB,
}

# Prefixes used when compacting IRIs on output. Resources stay as full IRIs,
# which keeps labels like "Menlo_Park,_California" legal.
COMPACT_PREFIXES = {k: v for k, v in DEFAULT_PREFIXES.items() if k != "dbr"}


_LOCAL_NAME = re.compile(r"[A-Za-z0-9_][A-Za-z0-9_\-]*")


def compact(iri: str, prefixes: dict[str, str] | None = None) -> str:
    """Return ``prefix:local`` for ``iri`` when a known namespace matches."""
    table = COMPACT_PREFIXES if prefixes is None else prefixes
    for prefix, base in table.items():
        if iri.startswith(base):
            local = iri[len(base):]
            if _LOCAL_NAME.fullmatch(local):
                return f"{prefix}:{local}"
    return f"<{iri}>"
