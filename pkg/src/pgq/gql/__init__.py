"""GQL fragment: syntax, schemas, reference semantics, and compilers."""

from . import ast
from .parser import parse_path_pattern, parse_query
from .printer import print_pattern, print_query
from .schema import Classification, classify, pattern_schema, query_schema

__all__ = [
    "ast", "parse_query", "parse_path_pattern", "print_query", "print_pattern",
    "classify", "Classification", "pattern_schema", "query_schema",
]
