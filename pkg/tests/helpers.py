"""Random instance generation and brute-force oracles shared by the tests."""

import itertools
import random

from provcq.engine import evaluate
from provcq.model import AnnotatedDatabase, AnnotatedRelation, Atom, Query, Row, Term

VARS = ["x", "y", "z", "u"]


def random_instance(rng: random.Random, max_tuples=8, max_atoms=3, const_rate=0.12):
    """A safe query (<= max_atoms atoms over <= 2 relations of arity <= 3) and a
    database of <= max_tuples tuples whose every cell has a unique annotation."""
    names = "RS"[: rng.randint(1, 2)]
    arities = {n: rng.randint(1, 3) for n in names}
    domain = ["1", "2", "3"][: rng.randint(2, 3)]
    budget = rng.randint(1, max_tuples)
    per_rel = max(1, budget // len(names))
    counter = itertools.count()
    relations = []
    for name, arity in arities.items():
        values = list(
            dict.fromkeys(
                tuple(rng.choice(domain) for _ in range(arity)) for _ in range(per_rel)
            )
        )
        rows = [
            Row(v, tuple(frozenset([f"n{next(counter)}"]) for _ in v)) for v in values
        ]
        relations.append(AnnotatedRelation(name, tuple("ABC"[:arity]), tuple(rows)))
    db = AnnotatedDatabase.of(*relations)

    body = []
    for _ in range(rng.randint(1, max_atoms)):
        rel = rng.choice(names)
        terms = tuple(
            Term.const(rng.choice(domain)) if rng.random() < const_rate
            else Term.var(rng.choice(VARS))
            for _ in range(arities[rel])
        )
        body.append(Atom(rel, terms))
    body_vars = sorted({v for a in body for v in a.variables()})
    head = [Term.var(v) for v in rng.sample(body_vars, rng.randint(0, min(2, len(body_vars))))]
    if rng.random() < 0.05:
        head.append(Term.const(rng.choice(domain)))
    return Query("Q", tuple(head), tuple(body)), db


def random_instances(n, seed=0, **kwargs):
    rng = random.Random(seed)
    return [random_instance(rng, **kwargs) for _ in range(n)]


def brute_force_minimal_witnesses(t, q, db):
    """Subset-minimal W of the database's tuples with t in q(W), by trying
    every subset in order of size."""
    tids = db.tuple_ids()
    assert len(tids) <= 12
    minimal = []
    for size in range(len(tids) + 1):
        for subset in itertools.combinations(tids, size):
            w = frozenset(subset)
            if any(m <= w for m in minimal):
                continue
            if tuple(t) in evaluate(q, db.restrict(w)):
                minimal.append(w)
    return frozenset(minimal)
