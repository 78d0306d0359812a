"""Tokenizer and recursive-descent parser for the supported SPARQL subset.

The subset covers SELECT/ASK over basic graph patterns with VALUES,
comparison FILTERs, FILTER NOT EXISTS, COUNT([DISTINCT] ?v), ORDER BY and
LIMIT. Well-formed SPARQL outside this subset raises UnsupportedFeatureError
so callers can tell "wrong" from "not handled here".
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from ..graph import IRI_KIND, LITERAL_KIND, Term
from ..namespaces import DEFAULT_PREFIXES, RDF_TYPE, XSD, XSD_INTEGER
from .ast import (
    ASK,
    COMPARE_OPS,
    SELECT,
    Cast,
    Compare,
    Count,
    OrderKey,
    QueryAst,
    TriplePattern,
    ValuesClause,
    Var,
    check_ast,
)
from .errors import SemanticError, SparqlSyntaxError, UnsupportedFeatureError

# keyword -> feature name reported to the caller
UNSUPPORTED_KEYWORDS = {
    "OPTIONAL": "OPTIONAL",
    "UNION": "UNION",
    "MINUS": "MINUS",
    "GRAPH": "GRAPH",
    "SERVICE": "SERVICE",
    "BIND": "BIND",
    "GROUP": "GROUP BY",
    "HAVING": "HAVING",
    "OFFSET": "OFFSET",
    "CONSTRUCT": "CONSTRUCT",
    "DESCRIBE": "DESCRIBE",
    "INSERT": "SPARQL UPDATE",
    "DELETE": "SPARQL UPDATE",
    "LOAD": "SPARQL UPDATE",
    "CLEAR": "SPARQL UPDATE",
    "DROP": "SPARQL UPDATE",
    "CREATE": "SPARQL UPDATE",
    "WITH": "SPARQL UPDATE",
    "FROM": "FROM",
    "BASE": "BASE",
    "REDUCED": "REDUCED",
    "UNDEF": "UNDEF",
    "SUM": "aggregate SUM",
    "AVG": "aggregate AVG",
    "MIN": "aggregate MIN",
    "MAX": "aggregate MAX",
    "SAMPLE": "aggregate SAMPLE",
    "GROUP_CONCAT": "aggregate GROUP_CONCAT",
}

KEYWORDS = {
    "SELECT", "ASK", "WHERE", "DISTINCT", "COUNT", "AS", "FILTER", "NOT",
    "EXISTS", "VALUES", "ORDER", "BY", "ASC", "DESC", "LIMIT", "PREFIX",
}

_TOKEN_SPEC = [
    ("WS", r"\s+|#[^\n]*"),
    ("IRI", r"<[^<>\"{}|^`\\\x00-\x20]*>"),
    ("VAR", r"[?$][A-Za-z0-9_]+"),
    ("STRING", r'"(?:[^"\\\n\r]|\\.)*"|\'(?:[^\'\\\n\r]|\\.)*\''),
    ("LANGTAG", r"@[A-Za-z]+(?:-[A-Za-z0-9]+)*"),
    ("DTMARK", r"\^\^"),
    ("DECIMAL", r"[+-]?[0-9]*\.[0-9]+(?:[eE][+-]?[0-9]+)?"),
    ("INTEGER", r"[+-]?[0-9]+"),
    ("PNAME", r"(?:[A-Za-z][A-Za-z0-9_\-]*)?:(?:[A-Za-z0-9_](?:[A-Za-z0-9_\-.]*[A-Za-z0-9_\-])?)?"),
    ("WORD", r"[A-Za-z_][A-Za-z0-9_]*"),
    ("OP", r"!=|<=|>=|&&|\|\||[=<>!]"),
    ("PUNCT", r"[{}().;,*/|^+\[\]]"),
]
_TOKEN_RE = re.compile("|".join(f"(?P<{name}>{pat})" for name, pat in _TOKEN_SPEC))


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    pos: int

    @property
    def upper(self) -> str:
        return self.text.upper()


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise SparqlSyntaxError(f"unexpected character {text[pos]!r}", pos, (), text)
        kind = m.lastgroup
        if kind != "WS":
            tokens.append(Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(Token("EOF", "", len(text)))
    return tokens


_STRING_ESCAPES = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}


def _unescape(body: str) -> str:
    out = []
    i = 0
    while i < len(body):
        c = body[i]
        if c == "\\" and i + 1 < len(body):
            nxt = body[i + 1]
            if nxt in _STRING_ESCAPES:
                out.append(_STRING_ESCAPES[nxt])
                i += 2
                continue
            if nxt in "uU":
                width = 4 if nxt == "u" else 8
                out.append(chr(int(body[i + 2:i + 2 + width], 16)))
                i += 2 + width
                continue
            raise ValueError(f"bad escape \\{nxt}")
        out.append(c)
        i += 1
    return "".join(out)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0
        self.declared: dict[str, str] = {}

    # -- token helpers ----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message: str, *expected: str) -> SparqlSyntaxError:
        return SparqlSyntaxError(message, self.tok.pos, expected, self.text)

    def unsupported(self, feature: str) -> UnsupportedFeatureError:
        return UnsupportedFeatureError(feature, self.tok.pos, self.text)

    def is_word(self, *words: str) -> bool:
        return self.tok.kind == "WORD" and self.tok.upper in words

    def is_punct(self, *chars: str) -> bool:
        return self.tok.kind == "PUNCT" and self.tok.text in chars

    def expect_punct(self, char: str) -> Token:
        if not self.is_punct(char):
            raise self.error(f"unexpected {self._describe()}", repr(char))
        return self.advance()

    def expect_word(self, word: str) -> Token:
        if not self.is_word(word):
            raise self.error(f"unexpected {self._describe()}", word)
        return self.advance()

    def check_unsupported_word(self) -> None:
        if self.tok.kind == "WORD" and self.tok.upper in UNSUPPORTED_KEYWORDS:
            raise self.unsupported(UNSUPPORTED_KEYWORDS[self.tok.upper])

    def _describe(self) -> str:
        if self.tok.kind == "EOF":
            return "end of query"
        return f"{self.tok.text!r}"

    # -- terms --------------------------------------------------------------

    def expand_pname(self, tok: Token) -> str:
        prefix, _, local = tok.text.partition(":")
        if prefix in self.declared:
            base = self.declared[prefix]
        elif prefix in DEFAULT_PREFIXES:
            base = DEFAULT_PREFIXES[prefix]
        else:
            raise SparqlSyntaxError(f"undeclared prefix {prefix!r}", tok.pos, (), self.text)
        return base + local

    def parse_iri(self) -> str:
        tok = self.advance()
        if tok.kind == "IRI":
            value = tok.text[1:-1]
        else:
            value = self.expand_pname(tok)
        if not value:
            raise SparqlSyntaxError("empty IRI", tok.pos, (), self.text)
        return value

    def parse_literal(self) -> Term:
        tok = self.tok
        if tok.kind == "STRING":
            self.advance()
            try:
                value = _unescape(tok.text[1:-1])
            except ValueError as exc:
                raise SparqlSyntaxError(str(exc), tok.pos, (), self.text) from None
            if self.tok.kind == "LANGTAG":
                return Term(LITERAL_KIND, value, None, self.advance().text[1:])
            if self.tok.kind == "DTMARK":
                self.advance()
                if self.tok.kind not in ("IRI", "PNAME"):
                    raise self.error("datatype IRI required after ^^", "IRI")
                dt = self.parse_iri()
                try:
                    return Term(LITERAL_KIND, value, dt)
                except ValueError as exc:
                    raise SparqlSyntaxError(str(exc), tok.pos, (), self.text) from None
            return Term(LITERAL_KIND, value)
        if tok.kind == "INTEGER":
            self.advance()
            return Term(LITERAL_KIND, tok.text, XSD_INTEGER)
        if tok.kind == "DECIMAL":
            raise self.unsupported("decimal literal")
        if self.is_word("TRUE", "FALSE") and tok.text in ("true", "false"):
            self.advance()
            return Term(LITERAL_KIND, tok.text, XSD + "boolean")
        raise self.error(f"unexpected {self._describe()}", "literal")

    def parse_node(self, position: str):
        tok = self.tok
        if tok.kind == "WORD" and tok.text == "_" and self.peek().text.startswith(":"):
            raise self.unsupported("blank node")
        if tok.kind == "VAR":
            self.advance()
            return Var(tok.text[1:])
        if tok.kind in ("IRI", "PNAME"):
            return Term(IRI_KIND, self.parse_iri())
        if position == "predicate":
            if tok.kind == "WORD" and tok.text == "a":
                self.advance()
                return Term(IRI_KIND, RDF_TYPE)
            if self.is_punct("^", "("):
                raise self.unsupported("property path")
            raise self.error(f"unexpected {self._describe()}", "variable", "IRI", "'a'")
        if self.is_punct("["):
            raise self.unsupported("blank node property list")
        if position == "subject":
            if tok.kind in ("STRING", "INTEGER", "DECIMAL"):
                raise self.error("literal cannot be a subject", "variable", "IRI")
            self.check_unsupported_word()
            raise self.error(f"unexpected {self._describe()}", "variable", "IRI")
        if tok.kind in ("STRING", "INTEGER", "DECIMAL") or self.is_word("TRUE", "FALSE"):
            return self.parse_literal()
        self.check_unsupported_word()
        raise self.error(f"unexpected {self._describe()}", "variable", "IRI", "literal")

    # -- query ------------------------------------------------------------

    def parse(self) -> QueryAst:
        while True:
            self.check_unsupported_word()
            if not self.is_word("PREFIX"):
                break
            self.advance()
            tok = self.tok
            if tok.kind != "PNAME" or not tok.text.endswith(":") or tok.text.count(":") != 1:
                raise self.error("prefix name expected", "prefix:")
            self.advance()
            if self.tok.kind != "IRI":
                raise self.error(f"unexpected {self._describe()}", "IRI")
            self.declared[tok.text[:-1]] = self.advance().text[1:-1]
        if self.is_word("SELECT"):
            ast = self.parse_select()
        elif self.is_word("ASK"):
            ast = self.parse_ask()
        else:
            raise self.error(f"unexpected {self._describe()}", "SELECT", "ASK")
        if self.tok.kind != "EOF":
            self.check_unsupported_word()
            raise self.error(f"unexpected trailing {self._describe()}", "end of query")
        return check_ast(ast.replace(prefixes=tuple(sorted(self.declared.items()))))

    def parse_select(self) -> QueryAst:
        self.advance()
        distinct = False
        if self.is_word("DISTINCT"):
            self.advance()
            distinct = True
        self.check_unsupported_word()
        projection = []
        while True:
            if self.tok.kind == "VAR":
                projection.append(Var(self.advance().text[1:]))
            elif self.is_punct("("):
                projection.append(self.parse_aggregate())
            elif self.is_punct("*"):
                raise self.unsupported("SELECT *")
            else:
                break
        if not projection:
            raise self.error(f"unexpected {self._describe()}", "variable", "(COUNT(...) AS ?v)")
        self.check_unsupported_word()
        if self.is_word("WHERE"):
            self.advance()
        body = self.parse_group()
        order_keys, limit = self.parse_modifiers()
        return QueryAst(
            form=SELECT,
            distinct=distinct,
            projection=tuple(projection),
            order_keys=order_keys,
            limit=limit,
            **body,
        )

    def parse_aggregate(self) -> Count:
        self.expect_punct("(")
        self.check_unsupported_word()
        if not self.is_word("COUNT"):
            raise self.unsupported("expression in projection")
        self.advance()
        self.expect_punct("(")
        distinct = False
        if self.is_word("DISTINCT"):
            self.advance()
            distinct = True
        if self.is_punct("*"):
            raise self.unsupported("COUNT(*)")
        if self.tok.kind != "VAR":
            raise self.error(f"unexpected {self._describe()}", "variable")
        var = Var(self.advance().text[1:])
        self.expect_punct(")")
        self.expect_word("AS")
        if self.tok.kind != "VAR":
            raise self.error(f"unexpected {self._describe()}", "variable")
        alias = Var(self.advance().text[1:])
        self.expect_punct(")")
        return Count(var, alias, distinct)

    def parse_ask(self) -> QueryAst:
        self.advance()
        if self.is_word("WHERE"):
            self.advance()
        body = self.parse_group()
        self.check_unsupported_word()
        if self.is_word("ORDER", "LIMIT"):
            raise SemanticError("ASK takes no ORDER BY or LIMIT", self.tok.pos, (), self.text)
        return QueryAst(form=ASK, **body)

    def parse_modifiers(self):
        self.check_unsupported_word()
        order_keys: list[OrderKey] = []
        limit: Optional[int] = None
        if self.is_word("ORDER"):
            self.advance()
            self.expect_word("BY")
            while True:
                if self.is_word("ASC", "DESC"):
                    descending = self.advance().upper == "DESC"
                    self.expect_punct("(")
                    expr = self.parse_order_expr()
                    self.expect_punct(")")
                    order_keys.append(OrderKey(expr, descending))
                elif self.tok.kind == "VAR" or (self.tok.kind == "PNAME" and self.peek().text == "("):
                    order_keys.append(OrderKey(self.parse_order_expr(), False))
                elif self.is_punct("("):
                    self.advance()
                    expr = self.parse_order_expr()
                    self.expect_punct(")")
                    order_keys.append(OrderKey(expr, False))
                else:
                    break
            if not order_keys:
                raise self.error(f"unexpected {self._describe()}", "ORDER BY key")
        self.check_unsupported_word()
        if self.is_word("LIMIT"):
            self.advance()
            tok = self.tok
            if tok.kind != "INTEGER" or tok.text.startswith(("+", "-")):
                raise self.error(f"unexpected {self._describe()}", "non-negative integer")
            self.advance()
            limit = int(tok.text)
        self.check_unsupported_word()
        return tuple(order_keys), limit

    def parse_order_expr(self):
        if self.tok.kind == "VAR":
            return Var(self.advance().text[1:])
        if self.tok.kind == "PNAME":
            return self.parse_cast()
        self.check_unsupported_word()
        raise self.error(f"unexpected {self._describe()}", "variable")

    def parse_cast(self) -> Cast:
        tok = self.tok
        iri = self.parse_iri()
        if iri != XSD_INTEGER:
            raise UnsupportedFeatureError(f"function {tok.text}", tok.pos, self.text)
        self.expect_punct("(")
        if self.tok.kind != "VAR":
            raise self.error(f"unexpected {self._describe()}", "variable")
        var = Var(self.advance().text[1:])
        self.expect_punct(")")
        return Cast(var, iri)

    # -- group graph pattern ------------------------------------------------

    def parse_group(self) -> dict:
        self.check_unsupported_word()
        self.expect_punct("{")
        patterns: list[TriplePattern] = []
        filters: list[Compare] = []
        blocks: list[tuple[TriplePattern, ...]] = []
        values: list[ValuesClause] = []
        while not self.is_punct("}"):
            tok = self.tok
            if tok.kind == "EOF":
                raise self.error("unclosed group", "'}'")
            if self.is_punct("{"):
                raise self.unsupported("nested group (UNION or subquery)")
            self.check_unsupported_word()
            if self.is_word("SELECT", "ASK"):
                raise self.unsupported("subquery")
            if self.is_word("FILTER"):
                self.advance()
                item = self.parse_filter()
                if isinstance(item, tuple):
                    blocks.append(item)
                else:
                    filters.append(item)
                if self.is_punct("."):
                    self.advance()
            elif self.is_word("VALUES"):
                values.append(self.parse_values())
                if self.is_punct("."):
                    self.advance()
            else:
                patterns.extend(self.parse_triples_same_subject())
                if self.is_punct("."):
                    self.advance()
                elif not self.is_punct("}") and not self.is_word("FILTER", "VALUES"):
                    self.check_unsupported_word()
                    raise self.error(f"unexpected {self._describe()}", "'.'", "'}'")
        self.advance()
        return dict(
            patterns=tuple(patterns),
            filters=tuple(filters),
            not_exists_blocks=tuple(blocks),
            values_clauses=tuple(values),
        )

    def parse_triples_same_subject(self) -> list[TriplePattern]:
        subject = self.parse_node("subject")
        out = []
        while True:
            predicate = self.parse_node("predicate")
            if self.is_punct("/", "|", "*", "+", "^"):
                raise self.unsupported("property path")
            while True:
                obj = self.parse_node("object")
                out.append(TriplePattern(subject, predicate, obj))
                if self.is_punct(","):
                    self.advance()
                    continue
                break
            if self.is_punct(";"):
                while self.is_punct(";"):
                    self.advance()
                if self.is_punct(".", "}") or self.is_word("FILTER", "VALUES"):
                    break
                continue
            break
        return out

    def parse_values(self) -> ValuesClause:
        self.advance()
        if self.is_punct("("):
            raise self.unsupported("multi-variable VALUES")
        if self.tok.kind != "VAR":
            raise self.error(f"unexpected {self._describe()}", "variable")
        var = Var(self.advance().text[1:])
        self.expect_punct("{")
        terms = []
        while not self.is_punct("}"):
            if self.tok.kind == "EOF":
                raise self.error("unclosed VALUES block", "'}'")
            self.check_unsupported_word()
            if self.tok.kind in ("IRI", "PNAME"):
                terms.append(Term(IRI_KIND, self.parse_iri()))
            else:
                terms.append(self.parse_literal())
        self.advance()
        return ValuesClause(var, tuple(terms))

    def parse_filter(self):
        if self.is_word("NOT"):
            self.advance()
            self.expect_word("EXISTS")
            return self.parse_not_exists_body()
        if self.is_word("EXISTS"):
            raise self.unsupported("FILTER EXISTS")
        if not self.is_punct("("):
            if self.tok.kind in ("WORD", "PNAME"):
                raise self.unsupported(f"function {self.tok.text}")
            raise self.error(f"unexpected {self._describe()}", "'('", "NOT EXISTS")
        self.advance()
        if self.is_word("NOT") and self.peek().upper == "EXISTS":
            self.advance()
            self.advance()
            block = self.parse_not_exists_body()
            self.expect_punct(")")
            return block
        depth = 0
        while self.is_punct("("):
            self.advance()
            depth += 1
        if self.tok.kind == "OP" and self.tok.text == "!":
            raise self.unsupported("logical negation")
        lhs = self.parse_operand()
        if self.tok.kind != "OP" or self.tok.text not in COMPARE_OPS:
            if self.tok.kind == "OP" and self.tok.text in ("&&", "||"):
                raise self.unsupported("logical connective " + self.tok.text)
            raise self.error(f"unexpected {self._describe()}", *COMPARE_OPS)
        op = self.advance().text
        rhs = self.parse_operand()
        for _ in range(depth):
            self.expect_punct(")")
        if self.tok.kind == "OP" and self.tok.text in ("&&", "||"):
            raise self.unsupported("logical connective " + self.tok.text)
        self.expect_punct(")")
        return Compare(op, lhs, rhs)

    def parse_operand(self):
        tok = self.tok
        if tok.kind == "VAR":
            self.advance()
            return Var(tok.text[1:])
        if tok.kind == "PNAME" and self.peek().text == "(":
            return self.parse_cast()
        if tok.kind in ("IRI", "PNAME"):
            return Term(IRI_KIND, self.parse_iri())
        if tok.kind == "WORD" and tok.text not in ("true", "false"):
            raise self.unsupported(f"function {tok.text}")
        return self.parse_literal()

    def parse_not_exists_body(self) -> tuple[TriplePattern, ...]:
        self.expect_punct("{")
        patterns: list[TriplePattern] = []
        while not self.is_punct("}"):
            if self.tok.kind == "EOF":
                raise self.error("unclosed NOT EXISTS block", "'}'")
            if self.is_punct("{"):
                raise self.unsupported("nested group (UNION or subquery)")
            self.check_unsupported_word()
            if self.is_word("FILTER", "VALUES"):
                raise self.unsupported(f"{self.tok.upper} inside NOT EXISTS")
            patterns.extend(self.parse_triples_same_subject())
            if self.is_punct("."):
                self.advance()
            elif not self.is_punct("}"):
                raise self.error(f"unexpected {self._describe()}", "'.'", "'}'")
        self.advance()
        if not patterns:
            raise self.error("empty NOT EXISTS block")
        return tuple(patterns)


def parse_query(text: str) -> QueryAst:
    """Parse ``text`` into a QueryAst.

    Raises SparqlSyntaxError (with position and expected tokens),
    UnsupportedFeatureError, or SemanticError.
    """
    return _Parser(text).parse()
