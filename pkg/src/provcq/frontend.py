"""Query-language parser, database file loader, and result renderers.

Query grammar (one rule per input)::

    query := IDENT '(' [term {',' term}] ')' ':-' atom {',' atom}
    atom  := IDENT '(' [term {',' term}] ')'
    term  := VAR | '_' | STRING | INT

Variables start with a lowercase letter. ``'...'`` is a string constant with
``''`` as the escaped quote; integers are sugar for their decimal string.
``%`` comments run to the end of the line. Every ``_`` becomes a distinct
fresh variable ``_g1``, ``_g2``, ...
"""

from __future__ import annotations

import json
import json.decoder
import json.scanner
import re
from dataclasses import dataclass
from typing import Iterator, NamedTuple

from .model import (
    AnnotatedDatabase,
    AnnotatedRelation,
    AnnotatedResult,
    Atom,
    ProvError,
    Query,
    Row,
    Term,
    UnsafeQueryError,
    shape_violations,
)


class SourceError(ProvError):
    """Error in a query or database source, with a 1-based position."""

    def __init__(self, kind: str, line: int, column: int, message: str):
        self.kind = kind  # lex | syntax | schema
        self.line = line
        self.column = column
        self.message = message
        super().__init__(f"{kind} error at {line}:{column}: {message}")


def _line_col(text: str, pos: int) -> tuple[int, int]:
    line = text.count("\n", 0, pos) + 1
    return line, pos - (text.rfind("\n", 0, pos) + 1) + 1


# --- query lexer -----------------------------------------------------------

class Token(NamedTuple):
    kind: str  # IDENT ANON STRING INT LPAREN RPAREN COMMA IMPLIES EOF
    text: str
    pos: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|%[^\n]*)
  | (?P<IMPLIES>:-)
  | (?P<LPAREN>\()
  | (?P<RPAREN>\))
  | (?P<COMMA>,)
  | (?P<INT>[0-9]+)
  | (?P<IDENT>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<STRING>'(?:[^']|'')*')
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> Iterator[Token]:
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            line, col = _line_col(text, pos)
            if text[pos] == "'":
                raise SourceError("lex", line, col, "unterminated string literal")
            raise SourceError("lex", line, col, f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        if kind != "ws":
            tok = m.group()
            if kind == "IDENT" and tok == "_":
                kind = "ANON"
            elif kind == "STRING":
                tok = tok[1:-1].replace("''", "'")
            elif kind == "INT":
                tok = str(int(tok))
            yield Token(kind, tok, pos)
        pos = m.end()
    yield Token("EOF", "", pos)


# --- query parser ----------------------------------------------------------

class _QueryParser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = list(tokenize(text))
        self.i = 0
        self.fresh = 0

    def peek(self) -> Token:
        return self.tokens[self.i]

    def error(self, tok: Token, message: str) -> SourceError:
        line, col = _line_col(self.text, tok.pos)
        return SourceError("syntax", line, col, message)

    def expect(self, kind: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            found = "end of input" if tok.kind == "EOF" else repr(tok.text)
            raise self.error(tok, f"expected {kind}, found {found}")
        self.i += 1
        return tok

    def term(self) -> Term:
        tok = self.peek()
        self.i += 1
        if tok.kind == "ANON":
            self.fresh += 1
            return Term.var(f"_g{self.fresh}")
        if tok.kind in ("STRING", "INT"):
            return Term.const(tok.text)
        if tok.kind == "IDENT":
            if not tok.text[0].islower():
                raise self.error(
                    tok,
                    f"{tok.text!r} is not a variable (variables start lowercase; "
                    "quote constants)",
                )
            return Term.var(tok.text)
        self.i -= 1
        raise self.error(tok, f"expected a term, found {tok.text or 'end of input'!r}")

    def term_list(self) -> list[Term]:
        self.expect("LPAREN")
        terms = []
        if self.peek().kind != "RPAREN":
            terms.append(self.term())
            while self.peek().kind == "COMMA":
                self.i += 1
                terms.append(self.term())
        self.expect("RPAREN")
        return terms

    def atom(self) -> Atom:
        name = self.expect("IDENT").text
        return Atom(name, tuple(self.term_list()))

    def query(self) -> Query:
        name_tok = self.expect("IDENT")
        head = self.term_list()
        self.expect("IMPLIES")
        body = [self.atom()]
        while self.peek().kind == "COMMA":
            self.i += 1
            body.append(self.atom())
        self.expect("EOF")
        return Query(name_tok.text, tuple(head), tuple(body))


def parse_query(text: str) -> Query:
    q = _QueryParser(text).query()
    violations = shape_violations(q)
    if violations:
        raise UnsafeQueryError(violations)
    return q


# --- database files --------------------------------------------------------

class _Located(dict):
    pos: int = 0


class _LocatingDecoder(json.JSONDecoder):
    """JSON decoder whose objects remember their source offset."""

    def __init__(self):
        super().__init__()

        def parse_object(s_and_end, *args, **kwargs):
            obj, end = json.decoder.JSONObject(s_and_end, *args, **kwargs)
            located = _Located(obj)
            located.pos = s_and_end[1] - 1
            return located, end

        self.parse_object = parse_object
        self.scan_once = json.scanner.py_make_scanner(self)


def parse_database(text: str) -> AnnotatedDatabase:
    try:
        doc = _LocatingDecoder().decode(text)
    except json.JSONDecodeError as exc:
        raise SourceError("syntax", exc.lineno, exc.colno, exc.msg) from None
    return _DatabaseBuilder(text).build(doc)


@dataclass
class _DatabaseBuilder:
    text: str

    def fail(self, kind: str, node, message: str) -> SourceError:
        line, col = _line_col(self.text, getattr(node, "pos", 0))
        return SourceError(kind, line, col, message)

    def obj(self, node, keys: set[str], what: str, parent) -> dict:
        if not isinstance(node, dict):
            raise self.fail("syntax", parent, f"{what} must be an object")
        extra = set(node) - keys
        missing = keys - set(node)
        if missing:
            raise self.fail("syntax", node, f"{what} is missing {sorted(missing)}")
        if extra:
            raise self.fail("syntax", node, f"{what} has unknown keys {sorted(extra)}")
        return node

    def strings(self, node, what: str, at, allow_int: bool = False) -> list[str]:
        if not isinstance(node, list):
            raise self.fail("syntax", at, f"{what} must be an array")
        out = []
        for item in node:
            if allow_int and isinstance(item, int) and not isinstance(item, bool):
                item = str(item)
            if not isinstance(item, str):
                raise self.fail("syntax", at, f"{what} must contain only strings")
            out.append(item)
        return out

    def build(self, doc) -> AnnotatedDatabase:
        doc = self.obj(doc, {"relations"}, "database document", None)
        if not isinstance(doc["relations"], list):
            raise self.fail("syntax", doc, '"relations" must be an array')
        relations: dict[str, AnnotatedRelation] = {}
        for rel_node in doc["relations"]:
            rel = self.relation(rel_node, doc)
            if rel.name in relations:
                raise self.fail("schema", rel_node, f"duplicate relation {rel.name!r}")
            relations[rel.name] = rel
        return AnnotatedDatabase(relations)

    def relation(self, node, parent) -> AnnotatedRelation:
        node = self.obj(node, {"name", "attributes", "tuples"}, "relation", parent)
        name = node["name"]
        if not isinstance(name, str) or not name:
            raise self.fail("syntax", node, "relation name must be a nonempty string")
        attributes = self.strings(node["attributes"], "attributes", node)
        if len(set(attributes)) != len(attributes):
            raise self.fail("schema", node, f"relation {name}: duplicate attribute names")
        if not isinstance(node["tuples"], list):
            raise self.fail("syntax", node, '"tuples" must be an array')
        rows = []
        seen = set()
        for tup in node["tuples"]:
            tup = self.obj(tup, {"values", "annotations"}, "tuple", node)
            values = tuple(self.strings(tup["values"], "values", tup, allow_int=True))
            ann_node = tup["annotations"]
            if not isinstance(ann_node, list):
                raise self.fail("syntax", tup, '"annotations" must be an array')
            annotations = []
            for cell in ann_node:
                cell = self.strings(cell, "annotation set", tup)
                if len(set(cell)) != len(cell):
                    raise self.fail("schema", tup, "duplicate annotation in a cell")
                annotations.append(frozenset(cell))
            if len(values) != len(attributes) or len(annotations) != len(attributes):
                raise self.fail(
                    "schema",
                    tup,
                    f"relation {name}: tuple has {len(values)} values and "
                    f"{len(annotations)} annotation sets, expected {len(attributes)}",
                )
            if values in seen:
                raise self.fail("schema", tup, f"relation {name}: duplicate tuple {list(values)}")
            seen.add(values)
            rows.append(Row(values, tuple(annotations)))
        return AnnotatedRelation(name, tuple(attributes), tuple(rows))


def dump_database(db: AnnotatedDatabase) -> str:
    doc = {
        "relations": [
            {
                "name": rel.name,
                "attributes": list(rel.attributes),
                "tuples": [
                    {
                        "values": list(row.values),
                        "annotations": [sorted(a) for a in row.annotations],
                    }
                    for row in rel.rows
                ],
            }
            for rel in db.relations.values()
        ]
    }
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


# --- rendering -------------------------------------------------------------

def format_cell(value: str, annotations) -> str:
    if not annotations:
        return value
    return f"{value}^{{{','.join(sorted(annotations))}}}"


def format_witness(witness) -> str:
    return "{" + ",".join(str(t) for t in sorted(witness)) + "}"


def format_basis(witnesses) -> str:
    return "{" + ",".join(format_witness(w) for w in witnesses) + "}"


def _row_extra(row) -> list[str]:
    if row.witnesses is not None:
        return [format_basis(row.witnesses)]
    if row.lineage is not None:
        return [format_witness(row.lineage)]
    return []


def render_table(result: AnnotatedResult) -> str:
    header = list(result.attributes)
    if result.scheme in ("why", "why-minimal", "lineage"):
        header.append(result.scheme)
    lines = [header]
    for row in result.rows:
        cells = [format_cell(v, a) for v, a in zip(row.values, row.annotations)]
        lines.append(cells + _row_extra(row))
    widths = [max(len(line[i]) for line in lines) for i in range(len(header))]
    rule = ["-" * w for w in widths]
    out = []
    for line in [lines[0], rule] + lines[1:]:
        out.append("  ".join(c.ljust(w) for c, w in zip(line, widths)).rstrip())
    return "\n".join(out) + "\n"


def result_to_json(result: AnnotatedResult) -> dict:
    rows = []
    for row in result.rows:
        item = {
            "values": list(row.values),
            "annotations": [sorted(a) for a in row.annotations],
        }
        if row.witnesses is not None:
            item["witnesses"] = [[str(t) for t in sorted(w)] for w in row.witnesses]
        if row.lineage is not None:
            item["lineage"] = [str(t) for t in sorted(row.lineage)]
        rows.append(item)
    return {"attributes": list(result.attributes), "rows": rows}


def render_result(result: AnnotatedResult, format: str = "table") -> str:
    if format == "table":
        return render_table(result)
    if format == "json":
        return json.dumps(result_to_json(result), indent=2, ensure_ascii=False) + "\n"
    raise ValueError(f"unknown format {format!r}")
