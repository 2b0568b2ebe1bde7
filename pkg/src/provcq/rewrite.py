"""Homomorphisms, containment, equivalence, cores, and redundant rewrites of CQs."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Optional

from .model import Atom, ProvError, Query, Term, shape_violations


class HeadArityMismatch(ProvError, ValueError):
    pass


@dataclass(frozen=True)
class Homomorphism:
    """Variable mapping from a source query onto the terms of a target query."""

    mapping: Mapping[str, Term]

    def apply(self, term: Term) -> Term:
        return self.mapping[term.value] if term.is_var else term

    def apply_atom(self, atom: Atom) -> Atom:
        return Atom(atom.relation, tuple(self.apply(t) for t in atom.terms))

    def __str__(self) -> str:
        pairs = ", ".join(f"{v}->{self.mapping[v]}" for v in sorted(self.mapping))
        return "{" + pairs + "}"


def _unify(atom: Atom, target: Atom, mapping: dict[str, Term]) -> Optional[list[str]]:
    """Extend ``mapping`` so that ``atom`` maps onto ``target``.

    Returns the newly bound variables, or None (leaving ``mapping`` unchanged).
    """
    if atom.relation != target.relation or atom.arity != target.arity:
        return None
    added = []
    for s, d in zip(atom.terms, target.terms):
        if not s.is_var:
            ok = s == d
        else:
            bound = mapping.get(s.value)
            if bound is None:
                mapping[s.value] = d
                added.append(s.value)
                ok = True
            else:
                ok = bound == d
        if not ok:
            for v in added:
                del mapping[v]
            return None
    return added


def _head_mapping(src: Query, dst: Query) -> Optional[dict[str, Term]]:
    if src.arity != dst.arity:
        raise HeadArityMismatch(
            f"head arity mismatch: {src.name}/{src.arity} vs {dst.name}/{dst.arity}"
        )
    mapping: dict[str, Term] = {}
    for s, d in zip(src.head, dst.head):
        if not s.is_var:
            if s != d:
                return None
        elif mapping.setdefault(s.value, d) != d:
            return None
    return mapping


def iter_homomorphisms(src: Query, dst: Query) -> Iterator[Homomorphism]:
    """Every head-preserving homomorphism from ``src`` into ``dst``.

    Backtracking picks, at each step, the unmapped source atom with the fewest
    compatible target atoms.
    """
    mapping = _head_mapping(src, dst)
    if mapping is None:
        return
    targets = {}
    for atom in dst.body:
        targets.setdefault((atom.relation, atom.arity), []).append(atom)

    def candidates(atom: Atom) -> list[Atom]:
        out = []
        for target in targets.get((atom.relation, atom.arity), ()):
            added = _unify(atom, target, mapping)
            if added is not None:
                out.append(target)
                for v in added:
                    del mapping[v]
        return out

    def search(remaining: list[Atom]) -> Iterator[Homomorphism]:
        if not remaining:
            yield Homomorphism(dict(mapping))
            return
        best, best_cands = None, None
        for atom in remaining:
            cands = candidates(atom)
            if best_cands is None or len(cands) < len(best_cands):
                best, best_cands = atom, cands
                if not cands:
                    return
        rest = [a for a in remaining if a is not best]
        for target in best_cands:
            added = _unify(best, target, mapping)
            yield from search(rest)
            for v in added:
                del mapping[v]

    yield from search(list(src.body))


def find_homomorphism(src: Query, dst: Query) -> Optional[Homomorphism]:
    return next(iter_homomorphisms(src, dst), None)


def contains(qa: Query, qb: Query) -> bool:
    """True iff ``qb`` is contained in ``qa`` (a homomorphism qa -> qb exists)."""
    return find_homomorphism(qa, qb) is not None


def equivalent(qa: Query, qb: Query) -> bool:
    if qa.arity != qb.arity:
        return False
    return contains(qa, qb) and contains(qb, qa)


def core(q: Query) -> Query:
    """Smallest equivalent subquery; the lexicographically least atom set wins ties."""
    # Greedy retraction finds the core size (all cores are isomorphic).
    current = list(q.body)
    changed = True
    while changed:
        changed = False
        for atom in sorted(current):
            rest = [a for a in current if a != atom]
            sub = q.with_body(rest)
            if rest and not shape_violations(sub) and contains(q, sub):
                current = rest
                changed = True
                break
    size = len(current)
    order = {atom: i for i, atom in enumerate(q.body)}
    for combo in itertools.combinations(sorted(q.body), size):
        sub = q.with_body(sorted(combo, key=order.__getitem__))
        if not shape_violations(sub) and contains(q, sub):
            return sub
    raise AssertionError("unreachable: the retraction result is itself a candidate")


# --- redundant rewrites ----------------------------------------------------

def _fresh_prefix(q: Query) -> str:
    prefix = "_f"
    names = q.variables()
    while any(n.startswith(prefix) for n in names):
        prefix = "_" + prefix
    return prefix


def _canonical_extra(atoms: Iterable[Atom], fresh: set[str], prefix: str) -> tuple[Atom, ...]:
    """Canonical form of a set of added atoms modulo renaming of fresh variables."""
    atoms = set(atoms)
    fixed = sorted(a for a in atoms if not fresh.intersection(a.variables()))
    floating = [a for a in atoms if fresh.intersection(a.variables())]
    best = None
    for perm in itertools.permutations(floating):
        rename: dict[str, Term] = {}
        for atom in perm:
            for t in atom.terms:
                if t.is_var and t.value in fresh and t.value not in rename:
                    rename[t.value] = Term.var(f"{prefix}{len(rename) + 1}")
        renamed = tuple(
            sorted(
                Atom(a.relation, tuple(rename.get(t.value, t) if t.is_var else t for t in a.terms))
                for a in perm
            )
        )
        if best is None or renamed < best:
            best = renamed
    return tuple(fixed) + (best or ())


def enumerate_redundant_rewrites(
    q: Query, k: int, schema: Optional[Mapping[str, int]] = None
) -> list[Query]:
    """Equivalent queries obtained by adding at most ``k`` atoms to ``q``.

    Added atoms use the variables and constants of ``q`` plus fresh variables.
    Instead of filtering every candidate atom set, the sets are generated from
    their homomorphism back into ``q``: choose an endomorphism ``g`` of ``q``
    and a target atom of ``q`` for each added atom, then fill every position
    with a preimage of the target term (a variable ``u`` with ``g(u)`` equal to
    it, the constant itself, or a fresh variable bound to it). Every generated
    set is equivalent by construction, and every equivalent set arises this
    way from the homomorphism that witnesses it.

    ``schema`` only narrows the relations atoms may be added over; relations
    absent from ``q`` can never occur in an equivalent rewrite.
    """
    if k < 0:
        raise ValueError("extra-atom budget must be nonnegative")
    prefix = _fresh_prefix(q)
    targets = [
        a for a in q.body if schema is None or schema.get(a.relation) == a.arity
    ]
    found: dict[tuple[Atom, ...], None] = {(): None}
    body = set(q.body)
    for g in iter_homomorphisms(q, q):
        preimage: dict[Term, list[Term]] = {}
        for name in sorted(g.mapping):
            preimage.setdefault(g.mapping[name], []).append(Term.var(name))
        for term in {t for a in q.body for t in a.terms if not t.is_var}:
            preimage.setdefault(term, []).append(term)

        # No pruning on already-seen sets: one set can admit several fresh
        # bindings (and endomorphisms), each allowing different extensions.
        def grow(extra: list[Atom], binding: dict[str, Term]) -> None:
            found[_canonical_extra(extra, set(binding), prefix)] = None
            if len(extra) == k:
                return
            for target in targets:
                for atom, new_binding in _preimage_atoms(target, preimage, binding, prefix):
                    if atom in body or atom in extra:
                        continue
                    grow(extra + [atom], new_binding)

        grow([], {})
    return [q.with_body(list(q.body) + list(extra)) for extra in sorted(found)]


def _preimage_atoms(target: Atom, preimage, binding: dict[str, Term], prefix: str):
    """Atoms mapping onto ``target``, with fresh variables bound as needed."""

    def fill(i: int, terms: list[Term], binding: dict[str, Term]):
        if i == target.arity:
            yield Atom(target.relation, tuple(terms)), binding
            return
        goal = target.terms[i]
        for term in preimage.get(goal, ()):
            yield from fill(i + 1, terms + [term], binding)
        for name, bound in binding.items():
            if bound == goal:
                yield from fill(i + 1, terms + [Term.var(name)], binding)
        name = f"{prefix}{len(binding) + 1}"
        yield from fill(i + 1, terms + [Term.var(name)], {**binding, name: goal})

    yield from fill(0, [], binding)


def enumerate_redundant_rewrites_bruteforce(
    q: Query,
    k: int,
    schema: Mapping[str, int],
    extra_constants: Iterable[str] = (),
) -> list[Query]:
    """Literal enumeration: every atom set of size <= k over the term pool,
    kept when the extended query is equivalent to ``q``. Exponential; for
    cross-checking :func:`enumerate_redundant_rewrites` on small inputs.
    """
    prefix = _fresh_prefix(q)
    max_arity = max(schema.values(), default=0)
    fresh = [f"{prefix}{i + 1}" for i in range(k * max_arity)]
    pool = (
        [Term.var(v) for v in q.variables()]
        + [Term.var(v) for v in fresh]
        + [Term.const(c) for c in sorted(q.constants() | set(extra_constants))]
    )
    candidates = [
        Atom(rel, terms)
        for rel, arity in sorted(schema.items())
        for terms in itertools.product(pool, repeat=arity)
        if Atom(rel, terms) not in q.body
    ]
    found = set()
    for size in range(k + 1):
        for extra in itertools.combinations(candidates, size):
            q2 = q.with_body(list(q.body) + list(extra))
            if equivalent(q, q2):
                found.add(_canonical_extra(extra, set(fresh), prefix))
    return [q.with_body(list(q.body) + list(extra)) for extra in sorted(found)]
