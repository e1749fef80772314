"""Exception hierarchy shared across the package."""

from __future__ import annotations


class PgqError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(PgqError):
    """Malformed input text (graph JSON, formula, query, schema, automaton)."""

    def __init__(self, message: str, position: int | None = None, line: int | None = None):
        self.position = position
        self.line = line
        where = ""
        if line is not None:
            where = f" (line {line})"
        elif position is not None:
            where = f" (offset {position})"
        super().__init__(message + where)


class IntegrityError(PgqError):
    """Graph data violates a structural invariant (dangling ids, duplicates)."""


class EvalError(PgqError):
    """Base class for formula-evaluation failures."""


class UnboundVariable(EvalError):
    """A free variable was not bound by the valuation."""


class ArityMismatch(EvalError):
    """Relation or relation-variable used with the wrong number of arguments."""


class CapExceeded(EvalError):
    """A configured enumeration or size cap would be exceeded."""


class NotPositive(PgqError):
    """A transitive-closure operator occurs under an odd number of negations."""


class SchemaError(PgqError):
    """Query violates a static schema rule (e.g. union branches disagree)."""


class DomainMismatch(PgqError):
    """Set operation applied to tables with different column sets."""


class UnsupportedFeature(PgqError):
    """Query uses a construct outside the supported fragment."""


class NotBasic(UnsupportedFeature):
    """Query is not in the basic fragment (binds paths or lists)."""


class NotRestrictorFree(UnsupportedFeature):
    """Query uses restrictors where a restrictor-free one is required."""


class TypeMismatch(EvalError):
    """Non-numeric value in a numeric position, or wrong numeric sort."""


class ModeError(EvalError):
    """Operation not available in the active theory mode."""


class NonLinear(EvalError):
    """Multiplication involving the eliminated variable in a linear mode."""


class NonActiveQuantifier(EvalError):
    """An unrestricted theory quantifier survived elimination."""


class NormalFormError(PgqError):
    """Register automaton is not in leading-# normal form."""


class RegexSyntaxError(ParseError):
    """Malformed path regular expression."""


class UnresolvedTypeName(PgqError):
    """Schema references a type name that is not declared."""


class UnsupportedConstruct(PgqError):
    """Schema grammar production that is parsed but not translated."""
