"""Where-provenance schemes and annotated result tables.

All schemes copy annotations from the input cells that sit at the atom
positions of an output column's head variable. They differ in which
valuations, and which queries, are consulted:

* ``where``: every valuation producing the output tuple;
* ``default-all``: every valuation of every equivalent query;
* ``minimal``: only valuations of the query's core whose body image is a
  minimal witness.

Head constants never carry annotations.
"""

from __future__ import annotations

from enum import Enum
from functools import lru_cache
from typing import Iterable, Optional, Sequence

from .engine import (
    evaluate,
    lineage,
    matches_for,
    minimal_elements,
    sorted_basis,
)
from .model import (
    AnnotatedDatabase,
    AnnotatedResult,
    Match,
    Query,
    ResultRow,
    validate_query,
)
from .rewrite import core, enumerate_redundant_rewrites


class Scheme(str, Enum):
    WHERE = "where"
    DEFAULT_ALL = "default-all"
    MINIMAL = "minimal"
    WHY = "why"
    WHY_MINIMAL = "why-minimal"
    LINEAGE = "lineage"

    @property
    def is_why(self) -> bool:
        return self in (Scheme.WHY, Scheme.WHY_MINIMAL, Scheme.LINEAGE)


class OracleDisagreement(AssertionError):
    """Fast default-all differs from the rewrite-enumeration oracle."""


def _propagate(q: Query, db: AnnotatedDatabase, matches: Iterable[Match], col: int) -> frozenset:
    x = q.head[col]
    if not x.is_var:
        return frozenset()
    positions = [
        (i, p)
        for i, atom in enumerate(q.body)
        for p, term in enumerate(atom.terms)
        if term == x
    ]
    out: set[str] = set()
    for m in matches:
        for i, p in positions:
            out |= db.row(m.images[i]).annotations[p]
    return frozenset(out)


def where_provenance(t: Sequence[str], col: int, q: Query, db: AnnotatedDatabase) -> frozenset:
    return _propagate(q, db, matches_for(q, db, t), col)


def default_all(t: Sequence[str], col: int, q: Query, db: AnnotatedDatabase) -> frozenset:
    """Union of where-provenance over all equivalent queries, without rewriting.

    For each (relation, position) at which ``q`` holds the column's head
    variable, take that position's annotation from every tuple of the relation
    whose value there equals the output value. Adding one atom with the head
    variable at that position and fresh variables elsewhere gives an
    equivalent query realizing exactly these tuples, and any equivalent query
    maps into ``q`` with the head variable fixed, so nothing else can appear.
    """
    matches_for(q, db, t)
    x = q.head[col]
    if not x.is_var:
        return frozenset()
    value = t[col]
    sites = {
        (atom.relation, p)
        for atom in q.body
        for p, term in enumerate(atom.terms)
        if term == x
    }
    out: set[str] = set()
    for relation, p in sites:
        for row in db.relations[relation].rows:
            if row.values[p] == value:
                out |= row.annotations[p]
    return frozenset(out)


def default_all_oracle(
    t: Sequence[str],
    col: int,
    q: Query,
    db: AnnotatedDatabase,
    k: int = 1,
    rewrites: Optional[Sequence[Query]] = None,
) -> frozenset:
    """Default-all by brute force over rewrites with up to ``k`` extra atoms."""
    if k < 1:
        raise ValueError("oracle budget must be at least 1")
    if rewrites is None:
        rewrites = enumerate_redundant_rewrites(q, k, db.schema())
    matches_for(q, db, t)
    out: set[str] = set()
    for q2 in rewrites:
        out |= where_provenance(t, col, q2, db)
    return frozenset(out)


def minimal_propagation_direct(
    t: Sequence[str], col: int, q: Query, db: AnnotatedDatabase
) -> frozenset:
    """Where-provenance of ``q`` itself, restricted to valuations whose body
    image is a minimal witness.

    Needs no rewriting, and equals :func:`minimal_propagation` whenever ``q``
    is its own core. On a query with a redundant atom it can leak annotations:
    for ``Q(u,x) :- R(x,x), R(u,'3'), R(u,w)`` over R(2,2), R(2,3), the
    redundant ``R(u,w)`` lands on R(2,2), which is already in the minimal
    witness, and carries its A annotation into the ``u`` column.
    """
    matches = matches_for(q, db, t)
    minimal = minimal_elements(m.witness for m in matches)
    return _propagate(q, db, (m for m in matches if m.witness in minimal), col)


@lru_cache(maxsize=256)
def _core(q: Query) -> Query:
    return core(q)


def minimal_propagation(
    t: Sequence[str], col: int, q: Query, db: AnnotatedDatabase
) -> frozenset:
    """Minimal-witness propagation evaluated on the core of ``q``.

    Equivalent queries have isomorphic cores, so the result is the same for
    every rewrite of ``q``; the minimal witnesses of ``q`` and of its core
    coincide.
    """
    matches_for(q, db, t)
    return minimal_propagation_direct(t, col, _core(q), db)


def output_attributes(q: Query, db: AnnotatedDatabase) -> tuple[str, ...]:
    """Name each output column after the first input attribute its variable
    occupies; constant columns are named by the constant."""
    names = []
    for term in q.head:
        name = str(term)
        if term.is_var:
            for atom in q.body:
                if term in atom.terms:
                    rel = db.relations[atom.relation]
                    name = rel.attributes[atom.terms.index(term)]
                    break
        names.append(name)
    return tuple(names)


_CELL_SCHEMES = {
    Scheme.WHERE: where_provenance,
    Scheme.DEFAULT_ALL: default_all,
    Scheme.MINIMAL: minimal_propagation,
}


def annotate_result(
    q: Query,
    db: AnnotatedDatabase,
    scheme,
    oracle_budget: Optional[int] = None,
) -> AnnotatedResult:
    """Evaluate ``q`` and annotate every output cell (or row) under ``scheme``.

    With ``oracle_budget`` the default-all cells come from the rewrite oracle,
    and :class:`OracleDisagreement` is raised if they differ from the fast path.
    """
    scheme = Scheme(scheme)
    validate_query(q, db).raise_for_violations()
    if oracle_budget is not None and scheme is not Scheme.DEFAULT_ALL:
        raise ValueError("the oracle applies to the default-all scheme only")
    rewrites = None
    if oracle_budget is not None:
        rewrites = enumerate_redundant_rewrites(q, oracle_budget, db.schema())
    rows = []
    for values in evaluate(q, db):
        if scheme.is_why:
            matches = matches_for(q, db, values)
            basis = frozenset(m.witness for m in matches)
            empty = tuple(frozenset() for _ in values)
            if scheme is Scheme.WHY:
                rows.append(ResultRow(values, empty, witnesses=sorted_basis(basis)))
            elif scheme is Scheme.WHY_MINIMAL:
                rows.append(
                    ResultRow(values, empty, witnesses=sorted_basis(minimal_elements(basis)))
                )
            else:
                rows.append(ResultRow(values, empty, lineage=lineage(values, q, db)))
            continue
        cell = _CELL_SCHEMES[scheme]
        annotations = []
        for col in range(len(values)):
            ann = cell(values, col, q, db)
            if rewrites is not None:
                slow = default_all_oracle(values, col, q, db, oracle_budget, rewrites)
                if slow != ann:
                    raise OracleDisagreement(
                        f"default-all mismatch at {values}[{col}]: "
                        f"fast {sorted(ann)} vs oracle {sorted(slow)}"
                    )
                ann = slow
            annotations.append(ann)
        rows.append(ResultRow(values, tuple(annotations)))
    return AnnotatedResult(output_attributes(q, db), tuple(rows), scheme.value)
