"""Provenance-aware conjunctive queries over cell-annotated relations."""

from .engine import (
    enumerate_valuations,
    evaluate,
    lineage,
    minimal_witness_basis,
    witness_basis,
)
from .frontend import SourceError, parse_database, parse_query, render_result
from .model import (
    AnnotatedDatabase,
    AnnotatedRelation,
    AnnotatedResult,
    Atom,
    CellRef,
    Query,
    Term,
    TupleId,
    apply_valuation,
    validate_query,
)
from .provenance import (
    Scheme,
    annotate_result,
    default_all,
    default_all_oracle,
    minimal_propagation,
    minimal_propagation_direct,
    where_provenance,
)
from .rewrite import (
    contains,
    core,
    enumerate_redundant_rewrites,
    equivalent,
    find_homomorphism,
)

__version__ = "0.1.0"
