"""Schema-grounded, category-balanced NL-to-SPARQL benchmark construction."""

__version__ = "0.1.0"
