"""Set-semantics evaluation of conjunctive queries and why-provenance.

Valuations are found by left-to-right backtracking over the body atoms with a
full scan of each relation; inputs are desk-sized, so no indexes are kept.
"""

from __future__ import annotations

from typing import Iterator, Optional, Sequence

from .model import (
    AnnotatedDatabase,
    Match,
    Query,
    TupleId,
    TupleNotInOutput,
    Witness,
)

WitnessBasis = frozenset  # frozenset[Witness]


def _bind_head(q: Query, values: Sequence[str]) -> Optional[dict[str, str]]:
    if len(values) != q.arity:
        return None
    binding: dict[str, str] = {}
    for term, value in zip(q.head, values):
        if term.is_var:
            if binding.setdefault(term.value, value) != value:
                return None
        elif term.value != value:
            return None
    return binding


def enumerate_valuations(
    q: Query, db: AnnotatedDatabase, restrict_to: Optional[Sequence[str]] = None
) -> Iterator[Match]:
    """Yield every valuation whose instantiated body lies in ``db``.

    With ``restrict_to`` only valuations producing that output tuple are
    yielded. Each valuation appears once: once an atom's terms are all bound,
    at most one tuple of its relation can match (relations are sets).
    """
    binding: dict[str, str] = {}
    if restrict_to is not None:
        start = _bind_head(q, tuple(restrict_to))
        if start is None:
            return
        binding = start
    body = q.body
    images: list[TupleId] = []

    def extend(i: int) -> Iterator[Match]:
        if i == len(body):
            head = tuple(
                binding[t.value] if t.is_var else t.value for t in q.head
            )
            yield Match(dict(binding), head, tuple(images))
            return
        atom = body[i]
        rel = db.relations[atom.relation]
        for idx, row in enumerate(rel.rows):
            added = []
            ok = True
            for term, value in zip(atom.terms, row.values):
                if term.is_var:
                    bound = binding.get(term.value)
                    if bound is None:
                        binding[term.value] = value
                        added.append(term.value)
                    elif bound != value:
                        ok = False
                        break
                elif term.value != value:
                    ok = False
                    break
            if ok:
                images.append(TupleId(atom.relation, idx))
                yield from extend(i + 1)
                images.pop()
            for name in added:
                del binding[name]

    yield from extend(0)


def evaluate(q: Query, db: AnnotatedDatabase) -> set[tuple[str, ...]]:
    return {m.head for m in enumerate_valuations(q, db)}


def matches_for(q: Query, db: AnnotatedDatabase, t: Sequence[str]) -> list[Match]:
    """All valuations producing ``t``; raises if ``t`` is not an output tuple."""
    matches = list(enumerate_valuations(q, db, restrict_to=t))
    if not matches:
        raise TupleNotInOutput(tuple(t), q.name)
    return matches


def witness_basis(t: Sequence[str], q: Query, db: AnnotatedDatabase) -> WitnessBasis:
    return frozenset(m.witness for m in matches_for(q, db, t))


def minimal_elements(witnesses) -> WitnessBasis:
    """The subset-minimal members of a family of sets."""
    ws = set(witnesses)
    return frozenset(w for w in ws if not any(o < w for o in ws))


def minimal_witness_basis(
    t: Sequence[str], q: Query, db: AnnotatedDatabase
) -> WitnessBasis:
    return minimal_elements(witness_basis(t, q, db))


def lineage(t: Sequence[str], q: Query, db: AnnotatedDatabase) -> frozenset:
    return frozenset().union(*witness_basis(t, q, db))


def sorted_basis(basis) -> tuple[Witness, ...]:
    return tuple(sorted(basis, key=lambda w: sorted(w)))
