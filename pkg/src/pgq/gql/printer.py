"""Canonical text rendering of query ASTs (inverse of the parser)."""

from __future__ import annotations

from ..values import Value, render_value
from . import ast as A


def print_term(t: A.GqlTerm) -> str:
    if isinstance(t, A.VarTerm):
        return t.name
    if isinstance(t, A.PropTerm):
        return f"{t.var}.{_name(t.key)}"
    if isinstance(t, A.ConstTerm):
        return _const(t.value)
    if t.op == "neg":
        return f"- {_wrap(t.args[0])}"
    if t.op == "abs":
        return f"abs({print_term(t.args[0])})"
    joiner = f" {t.op} "
    return joiner.join(_wrap(a) for a in t.args)


def _wrap(t: A.GqlTerm) -> str:
    if isinstance(t, A.ArithTerm) and t.op in ("+", "-", "*"):
        return f"({print_term(t)})"
    return print_term(t)


def _const(v: Value) -> str:
    if v.kind in ("str",):
        return render_value(v)
    if v.kind in ("int", "rat"):
        return render_value(v)
    return render_value(v)


def _name(name: str) -> str:
    import re
    if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*(?:-[A-Za-z0-9_]+)*", name):
        return name
    escaped = name.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


def print_condition(c: A.Condition) -> str:
    if isinstance(c, A.TermEq):
        return f"{print_term(c.lhs)} = {print_term(c.rhs)}"
    if isinstance(c, A.Compare):
        return f"{print_term(c.lhs)} {c.op} {print_term(c.rhs)}"
    if isinstance(c, A.HasLabel):
        return f"{c.var} : {_name(c.label)}"
    if isinstance(c, A.CondNot):
        return f"not {_wrap_cond(c.body)}"
    if isinstance(c, A.CondAnd):
        return f"{_wrap_cond(c.lhs)} and {_wrap_cond(c.rhs)}"
    if isinstance(c, A.CondOr):
        return f"{_wrap_cond(c.lhs)} or {_wrap_cond(c.rhs)}"
    if isinstance(c, A.ExistsCond):
        return "exists { " + print_query(c.query) + " }"
    raise TypeError(f"not a condition: {c!r}")


def _wrap_cond(c: A.Condition) -> str:
    if isinstance(c, (A.CondAnd, A.CondOr)):
        return f"({print_condition(c)})"
    return print_condition(c)


def _descriptor(var, label) -> str:
    out = var or ""
    if label:
        out += f" :{_name(label)}" if out else f":{_name(label)}"
    return out


def print_pattern(pi: A.PathPattern) -> str:
    if isinstance(pi, A.NodePat):
        return f"({_descriptor(pi.var, pi.label)})"
    if isinstance(pi, A.EdgePat):
        inner = _descriptor(pi.var, pi.label)
        if pi.direction == A.FORWARD:
            return f"-[{inner}]->"
        if pi.direction == A.BACKWARD:
            return f"<-[{inner}]-"
        return f"-[{inner}]-"
    if isinstance(pi, A.Concat):
        return "".join(_wrap_pattern(p) for p in pi.parts)
    if isinstance(pi, A.PatternUnion):
        return f"{_wrap_pattern(pi.lhs)} + {_wrap_pattern(pi.rhs)}"
    if isinstance(pi, A.Repeat):
        hi = "inf" if pi.hi is None else str(pi.hi)
        return f"{_wrap_pattern(pi.body)}{{{pi.lo}..{hi}}}"
    if isinstance(pi, A.Where):
        return f"{_wrap_pattern(pi.body)} where {print_condition(pi.cond)}"
    raise TypeError(f"not a path pattern: {pi!r}")


def _wrap_pattern(pi: A.PathPattern) -> str:
    if isinstance(pi, (A.Concat, A.PatternUnion, A.Where)):
        return f"({print_pattern(pi)})"
    if isinstance(pi, A.Repeat):
        return print_pattern(pi)
    return print_pattern(pi)


def print_graph_pattern(xi: A.GraphPattern) -> str:
    parts = []
    for spec in xi.parts:
        prefix = spec.restrictor.keyword()
        binder = f"{spec.binder} = " if spec.binder else ""
        body = print_pattern(spec.pattern)
        parts.append((prefix + " " if prefix else "") + binder + body)
    return ", ".join(parts)


def print_query(q: A.Query) -> str:
    if isinstance(q, A.LinearQuery):
        chunks = []
        for step in q.steps:
            if isinstance(step, A.UseStep):
                chunks.append(f"use {step.graph}")
            elif isinstance(step, A.MatchClause):
                chunks.append("match " + print_graph_pattern(step.pattern))
            elif isinstance(step, A.LetClause):
                chunks.append(f"let {step.var} = {print_term(step.term)}")
            elif isinstance(step, A.ForClause):
                chunks.append(f"for {step.var} in {step.source}")
            elif isinstance(step, A.FilterClause):
                chunks.append("filter " + print_condition(step.cond))
        items = ", ".join(
            item.name if (isinstance(item.term, A.VarTerm)
                          and item.term.name == item.name)
            else f"{print_term(item.term)} as {item.name}"
            for item in q.returns)
        chunks.append(("return " + items).rstrip())
        return " ".join(chunks)
    if isinstance(q, A.UseThen):
        inner = " then ".join(print_query(part) for part in q.chain)
        return f"use {q.graph} {{ {inner} }}"
    if isinstance(q, A.SetOp):
        return f"({print_query(q.lhs)}) {q.op} ({print_query(q.rhs)})"
    raise TypeError(f"not a query: {q!r}")
