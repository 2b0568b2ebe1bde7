"""Bundled example databases and queries (db1-db3, q1-q4)."""

from importlib import resources

from .frontend import parse_database, parse_query
from .model import AnnotatedDatabase, Query


def path(filename: str):
    return resources.files(__package__) / "fixtures" / filename


def load_db(name: str) -> AnnotatedDatabase:
    return parse_database(path(f"{name}.json").read_text(encoding="utf-8"))


def load_query(name: str) -> Query:
    return parse_query(path(f"{name}.dl").read_text(encoding="utf-8"))
