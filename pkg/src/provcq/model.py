"""Immutable core types: terms, atoms, conjunctive queries, annotated databases."""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, NamedTuple, Optional

AnnotationSet = frozenset  # frozenset[str]; annotation strings are opaque

VAR = "var"
CONST = "const"


class ProvError(Exception):
    """Base class for every error raised by the package."""


class SchemaError(ProvError):
    """A database violates a relation invariant."""


class QueryError(ProvError):
    """A query is structurally invalid or does not fit the database schema."""

    def __init__(self, violations: Iterable["Violation"]):
        self.violations = tuple(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class UnsafeQueryError(QueryError):
    pass


class TupleNotInOutput(ProvError):
    def __init__(self, values: tuple[str, ...], query_name: str):
        self.values = values
        super().__init__(f"{values!r} is not an output tuple of {query_name}")


@dataclass(frozen=True, order=True)
class Term:
    kind: str
    value: str

    def __post_init__(self):
        if self.kind not in (VAR, CONST):
            raise ValueError(f"unknown term kind {self.kind!r}")
        if self.kind == VAR and not self.value:
            raise ValueError("variable names must be nonempty")

    @classmethod
    def var(cls, name: str) -> "Term":
        return cls(VAR, name)

    @classmethod
    def const(cls, value: str) -> "Term":
        return cls(CONST, str(value))

    @property
    def is_var(self) -> bool:
        return self.kind == VAR

    def __str__(self) -> str:
        if self.is_var:
            return self.value
        return "'" + self.value.replace("'", "''") + "'"


@dataclass(frozen=True, order=True)
class Atom:
    relation: str
    terms: tuple[Term, ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))

    @property
    def arity(self) -> int:
        return len(self.terms)

    def variables(self) -> Iterator[str]:
        return (t.value for t in self.terms if t.is_var)

    def __str__(self) -> str:
        return f"{self.relation}({','.join(map(str, self.terms))})"


@dataclass(frozen=True, eq=False)
class Query:
    """A conjunctive query ``name(head) :- body``.

    The body is a set: repeated atoms are dropped (first occurrence wins the
    position) and equality ignores atom order. Safety is not enforced here so
    that :func:`validate_query` can report it; the parser enforces it.
    """

    name: str
    head: tuple[Term, ...]
    body: tuple[Atom, ...]

    def __post_init__(self):
        object.__setattr__(self, "head", tuple(self.head))
        object.__setattr__(self, "body", tuple(dict.fromkeys(self.body)))

    def _key(self):
        return (self.name, self.head, frozenset(self.body))

    def __eq__(self, other):
        if not isinstance(other, Query):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    @property
    def arity(self) -> int:
        return len(self.head)

    def variables(self) -> list[str]:
        """Variables in order of first occurrence (head first, then body)."""
        seen = dict.fromkeys(t.value for t in self.head if t.is_var)
        for atom in self.body:
            seen.update(dict.fromkeys(atom.variables()))
        return list(seen)

    def body_variables(self) -> set[str]:
        return {v for atom in self.body for v in atom.variables()}

    def constants(self) -> set[str]:
        terms = list(self.head) + [t for a in self.body for t in a.terms]
        return {t.value for t in terms if not t.is_var}

    def with_body(self, body: Iterable[Atom]) -> "Query":
        return Query(self.name, self.head, tuple(body))

    def __str__(self) -> str:
        head = f"{self.name}({','.join(map(str, self.head))})"
        return f"{head} :- {', '.join(map(str, self.body))}"


class TupleId(NamedTuple):
    relation: str
    index: int

    def __str__(self) -> str:
        return f"{self.relation}[{self.index}]"


Witness = frozenset  # frozenset[TupleId]


class Row(NamedTuple):
    values: tuple[str, ...]
    annotations: tuple[AnnotationSet, ...]


@dataclass(frozen=True)
class AnnotatedRelation:
    name: str
    attributes: tuple[str, ...]
    rows: tuple[Row, ...] = ()
    _index: Mapping[tuple[str, ...], int] = field(
        init=False, repr=False, compare=False
    )

    def __post_init__(self):
        attributes = tuple(self.attributes)
        if len(set(attributes)) != len(attributes):
            raise SchemaError(f"relation {self.name}: duplicate attribute names")
        rows = []
        index: dict[tuple[str, ...], int] = {}
        for i, row in enumerate(self.rows):
            values, annotations = row
            values = tuple(values)
            annotations = tuple(frozenset(a) for a in annotations)
            if len(values) != len(attributes) or len(annotations) != len(attributes):
                raise SchemaError(
                    f"relation {self.name}, tuple {i}: expected {len(attributes)} "
                    f"values and annotation sets, got {len(values)} and {len(annotations)}"
                )
            if values in index:
                raise SchemaError(
                    f"relation {self.name}: duplicate tuple {values!r} (set semantics)"
                )
            index[values] = i
            rows.append(Row(values, annotations))
        object.__setattr__(self, "attributes", attributes)
        object.__setattr__(self, "rows", tuple(rows))
        object.__setattr__(self, "_index", MappingProxyType(index))

    @property
    def arity(self) -> int:
        return len(self.attributes)

    def lookup(self, values: tuple[str, ...]) -> Optional[int]:
        return self._index.get(values)

    def __len__(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class AnnotatedDatabase:
    relations: Mapping[str, AnnotatedRelation]

    def __post_init__(self):
        object.__setattr__(self, "relations", MappingProxyType(dict(self.relations)))

    @classmethod
    def of(cls, *relations: AnnotatedRelation) -> "AnnotatedDatabase":
        names = [r.name for r in relations]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate relation name")
        return cls({r.name: r for r in relations})

    def schema(self) -> dict[str, int]:
        return {name: rel.arity for name, rel in self.relations.items()}

    def tuple_ids(self) -> list[TupleId]:
        return [
            TupleId(name, i)
            for name, rel in self.relations.items()
            for i in range(len(rel))
        ]

    def row(self, tid: TupleId) -> Row:
        return self.relations[tid.relation].rows[tid.index]

    def restrict(self, tids: Iterable[TupleId]) -> "AnnotatedDatabase":
        """Sub-database holding only ``tids``. Tuple ids are renumbered."""
        keep = set(tids)
        return AnnotatedDatabase(
            {
                name: AnnotatedRelation(
                    name,
                    rel.attributes,
                    tuple(
                        row for i, row in enumerate(rel.rows) if TupleId(name, i) in keep
                    ),
                )
                for name, rel in self.relations.items()
            }
        )


class Violation(NamedTuple):
    kind: str  # unknown-relation | arity-mismatch | unsafe-head-variable | empty-body
    detail: str

    def __str__(self) -> str:
        return f"{self.kind}({self.detail})"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def raise_for_violations(self) -> None:
        if not self.violations:
            return
        if self.kinds() <= {"unsafe-head-variable"}:
            raise UnsafeQueryError(self.violations)
        raise QueryError(self.violations)


def shape_violations(q: Query) -> list[Violation]:
    out = []
    if not q.body:
        out.append(Violation("empty-body", q.name))
    body_vars = q.body_variables()
    for t in q.head:
        if t.is_var and t.value not in body_vars:
            out.append(Violation("unsafe-head-variable", t.value))
    return list(dict.fromkeys(out))


def validate_query(q: Query, db: Optional[AnnotatedDatabase] = None) -> ValidationReport:
    """Check the query invariants and, given a database, its schema fit."""
    violations = shape_violations(q)
    if db is not None:
        for atom in q.body:
            rel = db.relations.get(atom.relation)
            if rel is None:
                violations.append(Violation("unknown-relation", atom.relation))
            elif rel.arity != atom.arity:
                violations.append(
                    Violation(
                        "arity-mismatch",
                        f"{atom.relation}: expected {rel.arity}, got {atom.arity}",
                    )
                )
    return ValidationReport(tuple(dict.fromkeys(violations)))


class Match(NamedTuple):
    """One valuation of a query together with what it produces."""

    valuation: Mapping[str, str]
    head: tuple[str, ...]
    images: tuple[TupleId, ...]  # aligned with query.body

    @property
    def witness(self) -> Witness:
        return frozenset(self.images)


def instantiate(term: Term, valuation: Mapping[str, str]) -> Optional[str]:
    if not term.is_var:
        return term.value
    return valuation.get(term.value)


def apply_valuation(
    q: Query, valuation: Mapping[str, str], db: AnnotatedDatabase
) -> Optional[Match]:
    """Instantiate ``q`` under a total valuation; None when some atom is absent."""
    images = []
    for atom in q.body:
        rel = db.relations.get(atom.relation)
        if rel is None:
            return None
        values = tuple(instantiate(t, valuation) for t in atom.terms)
        if None in values:
            raise ValueError(f"valuation is not total: {atom} has an unbound variable")
        idx = rel.lookup(values)
        if idx is None:
            return None
        images.append(TupleId(atom.relation, idx))
    head = tuple(instantiate(t, valuation) for t in q.head)
    if None in head:
        raise ValueError("valuation is not total on the head")
    return Match(MappingProxyType(dict(valuation)), head, tuple(images))


class ResultRow(NamedTuple):
    values: tuple[str, ...]
    annotations: tuple[AnnotationSet, ...]
    # row-level why-provenance; set only for the why / why-minimal / lineage schemes
    witnesses: Optional[tuple[Witness, ...]] = None
    lineage: Optional[frozenset] = None


@dataclass(frozen=True)
class AnnotatedResult:
    attributes: tuple[str, ...]
    rows: tuple[ResultRow, ...]
    scheme: str = "where"

    def __post_init__(self):
        rows = tuple(sorted(self.rows, key=lambda r: r.values))
        if len({r.values for r in rows}) != len(rows):
            raise ValueError("result rows must have unique values")
        object.__setattr__(self, "attributes", tuple(self.attributes))
        object.__setattr__(self, "rows", rows)

    def row(self, values: tuple[str, ...]) -> ResultRow:
        for r in self.rows:
            if r.values == tuple(values):
                return r
        raise KeyError(values)

    def cells(self) -> dict["CellRef", AnnotationSet]:
        return {
            CellRef(r.values, col): ann
            for r in self.rows
            for col, ann in enumerate(r.annotations)
        }


class CellRef(NamedTuple):
    values: tuple[str, ...]
    column: int
