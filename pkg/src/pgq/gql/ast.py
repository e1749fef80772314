"""Abstract syntax for the supported GQL fragment.

Path patterns are node/edge atoms composed by concatenation, union,
bounded or unbounded repetition and where-filters; descriptors on atoms
carry an optional variable and label, with descriptor conditions pulled
out into a where-wrapper at parse time. Graph patterns add restrictors
and optional path bindings; clauses, linear queries and full queries
follow the standard shape (match/let/for/filter, use-scoping, return
projections, then-chains and set operations).

Nodes are immutable; `span` carries the source position for diagnostics
and never takes part in equality.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from ..values import Value

FORWARD = "forward"
BACKWARD = "backward"
UNDIRECTED = "undirected"

Span = tuple[int, int]  # (line, column), 1-based


def _span_field():
    return field(default=None, compare=False, repr=False)


# -- terms (χ and M-terms) ----------------------------------------------------


@dataclass(frozen=True)
class VarTerm:
    name: str
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class PropTerm:
    var: str
    key: str
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class ConstTerm:
    value: Value
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class ArithTerm:
    """Theory-mode composite: op in + - * abs neg."""

    op: str
    args: tuple["GqlTerm", ...]
    span: Optional[Span] = _span_field()


GqlTerm = Union[VarTerm, PropTerm, ConstTerm, ArithTerm]


# -- conditions ---------------------------------------------------------------


@dataclass(frozen=True)
class TermEq:
    lhs: GqlTerm
    rhs: GqlTerm
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Compare:
    """Theory-mode order comparison; op in < <=."""

    op: str
    lhs: GqlTerm
    rhs: GqlTerm
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class HasLabel:
    var: str
    label: str
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class CondNot:
    body: "Condition"
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class CondAnd:
    lhs: "Condition"
    rhs: "Condition"
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class CondOr:
    lhs: "Condition"
    rhs: "Condition"
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class ExistsCond:
    query: "Query"
    span: Optional[Span] = _span_field()


Condition = Union[TermEq, Compare, HasLabel, CondNot, CondAnd, CondOr, ExistsCond]


# -- path patterns ---------------------------------------------------------------


@dataclass(frozen=True)
class NodePat:
    var: Optional[str] = None
    label: Optional[str] = None
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class EdgePat:
    direction: str = FORWARD
    var: Optional[str] = None
    label: Optional[str] = None
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Concat:
    parts: tuple["PathPattern", ...]
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class PatternUnion:
    lhs: "PathPattern"
    rhs: "PathPattern"
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Repeat:
    body: "PathPattern"
    lo: int
    hi: Optional[int]  # None means unbounded
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Where:
    body: "PathPattern"
    cond: Condition
    span: Optional[Span] = _span_field()


PathPattern = Union[NodePat, EdgePat, Concat, PatternUnion, Repeat, Where]


# -- graph patterns ----------------------------------------------------------------


@dataclass(frozen=True)
class Restrictor:
    shortest: bool = False
    mode: Optional[str] = None  # None | "trail" | "acyclic"

    @property
    def is_none(self) -> bool:
        return not self.shortest and self.mode is None

    def keyword(self) -> str:
        parts = (["shortest"] if self.shortest else []) + \
            ([self.mode] if self.mode else [])
        return " ".join(parts)


@dataclass(frozen=True)
class PathSpec:
    restrictor: Restrictor
    binder: Optional[str]  # path-binding variable; outside the basic fragment
    pattern: PathPattern
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class GraphJoin:
    parts: tuple[PathSpec, ...]
    span: Optional[Span] = _span_field()


GraphPattern = GraphJoin  # joins of restricted path specs


# -- clauses and queries --------------------------------------------------------------


@dataclass(frozen=True)
class MatchClause:
    pattern: GraphPattern
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class LetClause:
    var: str
    term: GqlTerm
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class ForClause:
    var: str
    source: str
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class FilterClause:
    cond: Condition
    span: Optional[Span] = _span_field()


Clause = Union[MatchClause, LetClause, ForClause, FilterClause]


@dataclass(frozen=True)
class UseStep:
    graph: str
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class ReturnItem:
    term: GqlTerm
    name: str
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class LinearQuery:
    steps: tuple[Union[UseStep, Clause], ...]
    returns: tuple[ReturnItem, ...]
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class UseThen:
    graph: str
    chain: tuple["Query", ...]
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class SetOp:
    op: str  # intersect | union | except
    lhs: "Query"
    rhs: "Query"
    span: Optional[Span] = _span_field()


Query = Union[LinearQuery, UseThen, SetOp]
