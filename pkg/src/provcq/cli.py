"""``provcli``: evaluate queries under a provenance scheme, compare queries,
compute cores, and cross-check default-all against its rewrite oracle.

Exit codes: 0 ok, 1 parse or usage error, 2 schema violation, 3 unsafe query,
4 oracle disagreement. Results go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .engine import evaluate
from .frontend import SourceError, format_cell, parse_database, parse_query, render_result
from .model import QueryError, UnsafeQueryError, validate_query
from .provenance import OracleDisagreement, Scheme, annotate_result, default_all, default_all_oracle
from .rewrite import core, enumerate_redundant_rewrites, find_homomorphism

EXIT_OK, EXIT_PARSE, EXIT_SCHEMA, EXIT_UNSAFE, EXIT_ORACLE = 0, 1, 2, 3, 4


class CommandError(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        super().__init__(message)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CommandError(EXIT_PARSE, message)


@dataclass(frozen=True)
class RunConfig:
    db_path: Path
    query_path: Optional[Path] = None
    query_text: Optional[str] = None
    scheme: Scheme = Scheme.WHERE
    format: str = "table"
    oracle: bool = False
    max_extra_atoms: int = 1

    def __post_init__(self):
        if (self.query_path is None) == (self.query_text is None):
            raise CommandError(EXIT_PARSE, "give exactly one of --query / --query-text")
        if self.oracle and Scheme(self.scheme) is not Scheme.DEFAULT_ALL:
            raise CommandError(EXIT_PARSE, "--oracle applies to --scheme default-all only")
        if self.oracle and self.max_extra_atoms < 1:
            raise CommandError(EXIT_PARSE, "--max-extra-atoms must be at least 1")


def _read(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CommandError(EXIT_PARSE, f"cannot read {path}: {exc.strerror}") from None


def _source_error(origin: str, exc: SourceError) -> CommandError:
    code = EXIT_SCHEMA if exc.kind == "schema" else EXIT_PARSE
    return CommandError(code, f"{origin}:{exc.line}:{exc.column}: {exc.kind} error: {exc.message}")


def _load_db(path):
    try:
        return parse_database(_read(path))
    except SourceError as exc:
        raise _source_error(str(path), exc) from None


def _load_query(path=None, text=None):
    origin = "<query-text>" if path is None else str(path)
    try:
        return parse_query(_read(path) if path is not None else text)
    except SourceError as exc:
        raise _source_error(origin, exc) from None
    except UnsafeQueryError as exc:
        raise CommandError(EXIT_UNSAFE, f"{origin}: unsafe query: {exc}") from None


def _checked(q, db):
    try:
        validate_query(q, db).raise_for_violations()
    except UnsafeQueryError as exc:
        raise CommandError(EXIT_UNSAFE, f"unsafe query: {exc}") from None
    except QueryError as exc:
        raise CommandError(EXIT_SCHEMA, f"query does not fit the database: {exc}") from None
    return q


def run_command(cfg: RunConfig) -> str:
    db = _load_db(cfg.db_path)
    q = _checked(_load_query(cfg.query_path, cfg.query_text), db)
    try:
        result = annotate_result(
            q, db, cfg.scheme, oracle_budget=cfg.max_extra_atoms if cfg.oracle else None
        )
    except OracleDisagreement as exc:
        raise CommandError(EXIT_ORACLE, str(exc)) from None
    return render_result(result, cfg.format)


def equiv_command(q1_path, q2_path) -> str:
    q1, q2 = _load_query(q1_path), _load_query(q2_path)
    if q1.arity != q2.arity:
        return "incomparable\n"
    forward = find_homomorphism(q1, q2)
    backward = find_homomorphism(q2, q1)
    if forward and backward:
        verdict = "equivalent"
    elif forward:
        verdict = "q1 contains q2"
    elif backward:
        verdict = "q2 contains q1"
    else:
        verdict = "incomparable"
    lines = [verdict]
    if forward:
        lines.append(f"q1 -> q2: {forward}")
    if backward:
        lines.append(f"q2 -> q1: {backward}")
    return "\n".join(lines) + "\n"


def core_command(q_path) -> str:
    return f"{core(_load_query(q_path))}\n"


def oracle_command(db_path, q_path, max_extra_atoms: int) -> tuple[str, int]:
    if max_extra_atoms < 1:
        raise CommandError(EXIT_PARSE, "--max-extra-atoms must be at least 1")
    db = _load_db(db_path)
    q = _checked(_load_query(q_path), db)
    rewrites = enumerate_redundant_rewrites(q, max_extra_atoms, db.schema())
    lines, diffs, cells = [], 0, 0
    for values in sorted(evaluate(q, db)):
        for col in range(q.arity):
            fast = default_all(values, col, q, db)
            slow = default_all_oracle(values, col, q, db, max_extra_atoms, rewrites)
            cells += 1
            status = "ok" if fast == slow else "DIFF"
            diffs += fast != slow
            lines.append(
                f"({','.join(values)})[{col}]  fast {format_cell('', fast) or '{}'}"
                f"  oracle {format_cell('', slow) or '{}'}  {status}"
            )
    lines.append(
        f"{cells} cells, {len(rewrites)} rewrites (k={max_extra_atoms}), {diffs} disagreements"
    )
    return "\n".join(lines) + "\n", EXIT_ORACLE if diffs else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="provcli", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="evaluate a query and annotate its output")
    run.add_argument("--db", required=True, type=Path)
    group = run.add_mutually_exclusive_group(required=True)
    group.add_argument("--query", type=Path)
    group.add_argument("--query-text")
    run.add_argument("--scheme", required=True, choices=[s.value for s in Scheme])
    run.add_argument("--format", default="table", choices=["table", "json"])
    run.add_argument("--oracle", action="store_true",
                     help="compute default-all by rewrite enumeration and cross-check")
    run.add_argument("--max-extra-atoms", type=int, default=1)

    equiv = sub.add_parser("equiv", help="decide containment between two queries")
    equiv.add_argument("--q1", required=True, type=Path)
    equiv.add_argument("--q2", required=True, type=Path)

    core_p = sub.add_parser("core", help="print the core of a query")
    core_p.add_argument("--query", required=True, type=Path)

    oracle = sub.add_parser("oracle", help="compare fast default-all with the oracle")
    oracle.add_argument("--db", required=True, type=Path)
    oracle.add_argument("--query", required=True, type=Path)
    oracle.add_argument("--max-extra-atoms", required=True, type=int)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    code = EXIT_OK
    try:
        args = build_parser().parse_args(argv)
        if args.command == "run":
            out = run_command(
                RunConfig(
                    db_path=args.db,
                    query_path=args.query,
                    query_text=args.query_text,
                    scheme=Scheme(args.scheme),
                    format=args.format,
                    oracle=args.oracle,
                    max_extra_atoms=args.max_extra_atoms,
                )
            )
        elif args.command == "equiv":
            out = equiv_command(args.q1, args.q2)
        elif args.command == "core":
            out = core_command(args.query)
        else:
            out, code = oracle_command(args.db, args.query, args.max_extra_atoms)
    except CommandError as exc:
        print(f"provcli: error: {exc}", file=sys.stderr)
        return exc.code
    sys.stdout.write(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
