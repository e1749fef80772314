"""Schema computation and fragment classification.

The schema of a pattern is its set of output variables, computed
bottom-up: atoms contribute their descriptor variable, concatenation and
joins take unions, union branches must agree, where-filters and repeats
are transparent. Clause and query schemas thread the table domain through
the pipeline; the whole-query schema starts from the unit table.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import SchemaError
from . import ast as A


def condition_schema(cond: A.Condition) -> frozenset[str]:
    if isinstance(cond, (A.TermEq, A.Compare)):
        return term_schema(cond.lhs) | term_schema(cond.rhs)
    if isinstance(cond, A.HasLabel):
        return frozenset((cond.var,))
    if isinstance(cond, A.CondNot):
        return condition_schema(cond.body)
    if isinstance(cond, (A.CondAnd, A.CondOr)):
        return condition_schema(cond.lhs) | condition_schema(cond.rhs)
    if isinstance(cond, A.ExistsCond):
        return frozenset()
    raise TypeError(f"not a condition: {cond!r}")


def term_schema(term: A.GqlTerm) -> frozenset[str]:
    if isinstance(term, A.VarTerm):
        return frozenset((term.name,))
    if isinstance(term, A.PropTerm):
        return frozenset((term.var,))
    if isinstance(term, A.ConstTerm):
        return frozenset()
    out: frozenset[str] = frozenset()
    for a in term.args:
        out |= term_schema(a)
    return out


def pattern_schema(pi: A.PathPattern) -> frozenset[str]:
    if isinstance(pi, (A.NodePat, A.EdgePat)):
        return frozenset((pi.var,)) if pi.var else frozenset()
    if isinstance(pi, A.Concat):
        out: frozenset[str] = frozenset()
        for p in pi.parts:
            out |= pattern_schema(p)
        return out
    if isinstance(pi, A.PatternUnion):
        return pattern_schema(pi.lhs)
    if isinstance(pi, A.Repeat):
        return pattern_schema(pi.body)
    if isinstance(pi, A.Where):
        return pattern_schema(pi.body)
    raise TypeError(f"not a path pattern: {pi!r}")


def graph_pattern_schema(xi: A.GraphPattern) -> frozenset[str]:
    out: frozenset[str] = frozenset()
    for spec in xi.parts:
        out |= pattern_schema(spec.pattern)
        if spec.binder:
            out |= {spec.binder}
    return out


def clause_out_schema(clause: A.Clause, table: frozenset[str]) -> frozenset[str]:
    if isinstance(clause, A.MatchClause):
        return table | graph_pattern_schema(clause.pattern)
    if isinstance(clause, A.LetClause):
        if clause.var in table:
            raise SchemaError(
                f"let rebinds {clause.var!r}, already in the table", )
        _require(term_schema(clause.term), table, clause.span, "let")
        return table | {clause.var}
    if isinstance(clause, A.ForClause):
        # pass-through: list unbinding never applies in the basic fragment
        if clause.source not in table:
            raise SchemaError(f"for iterates over unbound {clause.source!r}")
        return table
    if isinstance(clause, A.FilterClause):
        _require(condition_schema(clause.cond), table, clause.span, "filter")
        return table
    raise TypeError(f"not a clause: {clause!r}")


def _require(used: frozenset[str], table: frozenset[str], span, what: str) -> None:
    missing = used - table
    if missing:
        where = f" at {span[0]}:{span[1]}" if span else ""
        raise SchemaError(f"{what} references unbound {sorted(missing)}{where}")


def query_out_schema(q: A.Query, table: frozenset[str]) -> frozenset[str]:
    if isinstance(q, A.LinearQuery):
        current = table
        for step in q.steps:
            if isinstance(step, A.UseStep):
                continue
            current = clause_out_schema(step, current)
        for item in q.returns:
            _require(term_schema(item.term), current, item.span, "return")
        names = [item.name for item in q.returns]
        if len(set(names)) != len(names):
            raise SchemaError(f"duplicate return names: {names}")
        return frozenset(names)
    if isinstance(q, A.UseThen):
        current = table
        for part in q.chain:
            current = query_out_schema(part, current)
        return current
    if isinstance(q, A.SetOp):
        left = query_out_schema(q.lhs, table)
        right = query_out_schema(q.rhs, table)
        if left != right:
            raise SchemaError(
                f"{q.op} branches have different schemas: "
                f"{sorted(left)} vs {sorted(right)}")
        return left
    raise TypeError(f"not a query: {q!r}")


def query_schema(q: A.Query) -> frozenset[str]:
    """Schema of the whole query, starting from the unit table."""
    return query_out_schema(q, frozenset())


def check_pattern(pi: A.PathPattern) -> None:
    """Structural checks: union branch schemas agree, repeat bounds are
    sane, where-conditions only use pattern variables."""
    if isinstance(pi, (A.NodePat, A.EdgePat)):
        return
    if isinstance(pi, A.Concat):
        for p in pi.parts:
            check_pattern(p)
        return
    if isinstance(pi, A.PatternUnion):
        check_pattern(pi.lhs)
        check_pattern(pi.rhs)
        left, right = pattern_schema(pi.lhs), pattern_schema(pi.rhs)
        if left != right:
            raise SchemaError(
                f"union branches have different schemas: "
                f"{sorted(left)} vs {sorted(right)}")
        return
    if isinstance(pi, A.Repeat):
        check_pattern(pi.body)
        if pi.lo < 0 or (pi.hi is not None and pi.hi < pi.lo):
            raise SchemaError(f"bad repetition bounds {pi.lo}..{pi.hi}")
        return
    if isinstance(pi, A.Where):
        check_pattern(pi.body)
        _require(condition_schema(pi.cond), pattern_schema(pi.body),
                 pi.span, "where")
        return
    raise TypeError(f"not a path pattern: {pi!r}")


def check_query(q: A.Query) -> frozenset[str]:
    """All static checks; returns the query schema."""
    for pat in _patterns_of(q):
        check_pattern(pat)
    return query_schema(q)


def _patterns_of(q: A.Query):
    if isinstance(q, A.LinearQuery):
        for step in q.steps:
            if isinstance(step, A.MatchClause):
                for spec in step.pattern.parts:
                    yield spec.pattern
            if isinstance(step, A.FilterClause):
                yield from _patterns_of_cond(step.cond)
    elif isinstance(q, A.UseThen):
        for part in q.chain:
            yield from _patterns_of(part)
    elif isinstance(q, A.SetOp):
        yield from _patterns_of(q.lhs)
        yield from _patterns_of(q.rhs)


def _patterns_of_cond(cond: A.Condition):
    if isinstance(cond, A.CondNot):
        yield from _patterns_of_cond(cond.body)
    elif isinstance(cond, (A.CondAnd, A.CondOr)):
        yield from _patterns_of_cond(cond.lhs)
        yield from _patterns_of_cond(cond.rhs)
    elif isinstance(cond, A.ExistsCond):
        yield from _patterns_of(cond.query)


# -- classification ---------------------------------------------------------------


@dataclass(frozen=True)
class Classification:
    basic: bool
    restrictor_free: bool
    positive: bool


def classify(q: A.Query, strict_concat: bool = False) -> Classification:
    """Fragment membership.

    basic: no path bindings and every repetition body has empty schema
    (variables under repetition would bind lists). With `strict_concat`,
    concatenations must additionally have disjoint sub-schemas; by default
    shared concatenation variables are allowed, which is what the
    translation joins on.
    """
    basic = True
    restrictor_free = True
    positive = _positive_query(q)

    def visit_pattern(pi: A.PathPattern) -> None:
        nonlocal basic
        if isinstance(pi, A.Concat):
            if strict_concat:
                seen: set[str] = set()
                for p in pi.parts:
                    sub = pattern_schema(p)
                    if seen & sub:
                        basic = False
                    seen |= sub
            for p in pi.parts:
                visit_pattern(p)
        elif isinstance(pi, A.PatternUnion):
            visit_pattern(pi.lhs)
            visit_pattern(pi.rhs)
        elif isinstance(pi, A.Repeat):
            if pattern_schema(pi.body):
                basic = False
            visit_pattern(pi.body)
        elif isinstance(pi, A.Where):
            visit_pattern(pi.body)

    def visit_query(query: A.Query) -> None:
        nonlocal basic, restrictor_free
        if isinstance(query, A.LinearQuery):
            for step in query.steps:
                if isinstance(step, A.MatchClause):
                    for spec in step.pattern.parts:
                        if spec.binder is not None:
                            basic = False
                        if not spec.restrictor.is_none:
                            restrictor_free = False
                        visit_pattern(spec.pattern)
                if isinstance(step, A.FilterClause):
                    for inner in _exists_queries(step.cond):
                        visit_query(inner)
        elif isinstance(query, A.UseThen):
            for part in query.chain:
                visit_query(part)
        elif isinstance(query, A.SetOp):
            visit_query(query.lhs)
            visit_query(query.rhs)

    visit_query(q)
    # conditions nested inside patterns also carry exists{} subqueries
    for pat in _patterns_of(q):
        for cond in _conds_of_pattern(pat):
            for inner in _exists_queries(cond):
                visit_query(inner)
    return Classification(basic=basic, restrictor_free=restrictor_free,
                          positive=positive)


def _conds_of_pattern(pi: A.PathPattern):
    if isinstance(pi, A.Where):
        yield pi.cond
        yield from _conds_of_pattern(pi.body)
    elif isinstance(pi, A.Concat):
        for p in pi.parts:
            yield from _conds_of_pattern(p)
    elif isinstance(pi, A.PatternUnion):
        yield from _conds_of_pattern(pi.lhs)
        yield from _conds_of_pattern(pi.rhs)
    elif isinstance(pi, A.Repeat):
        yield from _conds_of_pattern(pi.body)


def _exists_queries(cond: A.Condition):
    if isinstance(cond, A.ExistsCond):
        yield cond.query
    elif isinstance(cond, A.CondNot):
        yield from _exists_queries(cond.body)
    elif isinstance(cond, (A.CondAnd, A.CondOr)):
        yield from _exists_queries(cond.lhs)
        yield from _exists_queries(cond.rhs)


def _positive_query(q: A.Query) -> bool:
    def cond_positive(cond: A.Condition) -> bool:
        if isinstance(cond, A.CondNot):
            return False
        if isinstance(cond, (A.CondAnd, A.CondOr)):
            return cond_positive(cond.lhs) and cond_positive(cond.rhs)
        if isinstance(cond, A.ExistsCond):
            return _positive_query(cond.query)
        return True

    if isinstance(q, A.SetOp):
        if q.op == "except":
            return False
        return _positive_query(q.lhs) and _positive_query(q.rhs)
    if isinstance(q, A.UseThen):
        return all(_positive_query(part) for part in q.chain)
    if isinstance(q, A.LinearQuery):
        for step in q.steps:
            if isinstance(step, A.FilterClause) and not cond_positive(step.cond):
                return False
            if isinstance(step, A.MatchClause):
                for spec in step.pattern.parts:
                    for cond in _conds_of_pattern(spec.pattern):
                        if not cond_positive(cond):
                            return False
        return True
    raise TypeError(f"not a query: {q!r}")
