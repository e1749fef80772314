"""S-expression concrete syntax for formulas.

    (and f ...)  (or f ...)  (not f)  (implies f g)
    (exists x f)  (forall x f)          active-domain quantifiers
    (exists* x f)  (forall* x f)        theory-domain quantifiers
    (= t t)  (rel NAME t ...)  (rvar NAME t ...)
    (tc (u ...) (v ...) body (x ...) (y ...))
    (so-exists R k f)  (so-forall R k f)
    (so-exists R k f (v1 .. vk) support) with an explicit support formula
    (theory MODE (op mt mt)) with op in = < <= > >= and m-terms
        (+ a b ...)  (- a [b])  (* a b ...)  (abs a)  (prop x KEY)

Constants are written #n:ID, #e:ID, "text", 42, -7/3, lbl:NAME, key:NAME;
anything else names a variable. print_formula and parse_formula are
mutually inverse on this format.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .. import theory
from ..errors import ParseError
from ..values import Value, parse_value, render_value
from .ast import (
    ACTIVE,
    And,
    Const,
    Eq,
    Exists,
    Forall,
    Formula,
    Implies,
    Not,
    Or,
    RelAtom,
    RelVarAtom,
    SoExists,
    SoForall,
    Tc,
    Term,
    THEORY,
    TheoryAtom,
    Var,
)

_INT_RE = re.compile(r"-?\d+$")
_RAT_RE = re.compile(r"-?\d+/\d+$")
_CONST_PREFIXES = ("#n:", "#e:", "lbl:", "key:")


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------


def print_term(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    return render_value(t.value)


def _print_mterm(t) -> str:
    if isinstance(t, theory.VarRef):
        return t.name
    if isinstance(t, theory.NumConst):
        f = t.value
        return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"
    if isinstance(t, theory.PropAccess):
        return f"(prop {t.var} {t.key})"
    return "(" + t.func + " " + " ".join(_print_mterm(a) for a in t.args) + ")"


def print_formula(phi: Formula) -> str:
    if isinstance(phi, Eq):
        return f"(= {print_term(phi.lhs)} {print_term(phi.rhs)})"
    if isinstance(phi, RelAtom):
        inner = " ".join(print_term(t) for t in phi.terms)
        return f"(rel {phi.name} {inner})" if inner else f"(rel {phi.name})"
    if isinstance(phi, RelVarAtom):
        inner = " ".join(print_term(t) for t in phi.terms)
        return f"(rvar {phi.rel_var} {inner})" if inner else f"(rvar {phi.rel_var})"
    if isinstance(phi, Not):
        return f"(not {print_formula(phi.body)})"
    if isinstance(phi, And):
        if not phi.parts:
            return "(and)"
        return "(and " + " ".join(print_formula(p) for p in phi.parts) + ")"
    if isinstance(phi, Or):
        if not phi.parts:
            return "(or)"
        return "(or " + " ".join(print_formula(p) for p in phi.parts) + ")"
    if isinstance(phi, Implies):
        return f"(implies {print_formula(phi.lhs)} {print_formula(phi.rhs)})"
    if isinstance(phi, Exists):
        head = "exists" if phi.domain == ACTIVE else "exists*"
        return f"({head} {phi.var} {print_formula(phi.body)})"
    if isinstance(phi, Forall):
        head = "forall" if phi.domain == ACTIVE else "forall*"
        return f"({head} {phi.var} {print_formula(phi.body)})"
    if isinstance(phi, Tc):
        return "(tc ({}) ({}) {} ({}) ({}))".format(
            " ".join(phi.u_vars), " ".join(phi.v_vars), print_formula(phi.body),
            " ".join(print_term(t) for t in phi.x_args),
            " ".join(print_term(t) for t in phi.y_args))
    if isinstance(phi, (SoExists, SoForall)):
        head = "so-exists" if isinstance(phi, SoExists) else "so-forall"
        base = f"({head} {phi.rel_var} {phi.arity} {print_formula(phi.body)}"
        if phi.support is not None:
            base += " (" + " ".join(phi.support_vars) + ") " + print_formula(phi.support)
            if phi.max_size is not None:
                base += " " + phi.max_size
        return base + ")"
    if isinstance(phi, TheoryAtom):
        a: theory.MAtom = phi.atom  # type: ignore[assignment]
        inner = f"({a.rel} {_print_mterm(a.lhs)} {_print_mterm(a.rhs)})"
        if phi.mode:
            return f"(theory {phi.mode} {inner})"
        return f"(theory {inner})"
    raise TypeError(f"not a formula: {phi!r}")


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _tokenize(text: str) -> list[str]:
    tokens: list[str] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in " \t\r\n":
            i += 1
        elif c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c in "()":
            tokens.append(c)
            i += 1
        elif c == '"':
            j = i + 1
            out = ['"']
            while j < n and text[j] != '"':
                if text[j] == "\\" and j + 1 < n:
                    out.append(text[j:j + 2])
                    j += 2
                else:
                    out.append(text[j])
                    j += 1
            if j >= n:
                raise ParseError("unterminated string literal", position=i)
            out.append('"')
            tokens.append("".join(out))
            i = j + 1
        else:
            j = i
            while j < n and text[j] not in ' \t\r\n();"':
                j += 1
            tokens.append(text[i:j])
            i = j
    return tokens


def _read(tokens: list[str], pos: int):
    if pos >= len(tokens):
        raise ParseError("unexpected end of input")
    tok = tokens[pos]
    if tok == "(":
        items = []
        pos += 1
        while pos < len(tokens) and tokens[pos] != ")":
            item, pos = _read(tokens, pos)
            items.append(item)
        if pos >= len(tokens):
            raise ParseError("missing closing parenthesis")
        return items, pos + 1
    if tok == ")":
        raise ParseError("unexpected ')'", position=pos)
    return tok, pos + 1


def _is_const_token(tok: str) -> bool:
    return (tok.startswith(_CONST_PREFIXES) or tok.startswith('"')
            or _INT_RE.match(tok) is not None or _RAT_RE.match(tok) is not None)


def _parse_term(node) -> Term:
    if isinstance(node, list):
        raise ParseError(f"expected a term, got a list: {node!r}")
    if _is_const_token(node):
        return Const(parse_value(node))
    return Var(node)


def _parse_mterm(node):
    if isinstance(node, str):
        if _INT_RE.match(node):
            return theory.NumConst(Fraction(int(node)))
        if _RAT_RE.match(node):
            num, _, den = node.partition("/")
            return theory.NumConst(Fraction(int(num), int(den)))
        return theory.VarRef(node)
    if not node:
        raise ParseError("empty m-term")
    head = node[0]
    if head == "prop":
        if len(node) != 3 or not isinstance(node[1], str) or not isinstance(node[2], str):
            raise ParseError(f"bad property access: {node!r}")
        return theory.PropAccess(node[1], node[2])
    if head in ("+", "-", "*", "abs"):
        return theory.Apply(head, tuple(_parse_mterm(a) for a in node[1:]))
    raise ParseError(f"unknown m-term head {head!r}")


def _parse_theory_atom(node) -> theory.MAtom:
    if not isinstance(node, list) or len(node) != 3:
        raise ParseError(f"theory atom must be (op lhs rhs): {node!r}")
    op = node[0]
    if op not in ("=", "<", "<=", ">", ">="):
        raise ParseError(f"unknown theory relation {op!r}")
    return theory.atom(op, _parse_mterm(node[1]), _parse_mterm(node[2]))


def _var_list(node, what: str) -> tuple[str, ...]:
    if not isinstance(node, list) or not all(isinstance(x, str) for x in node):
        raise ParseError(f"expected a variable list for {what}: {node!r}")
    return tuple(node)


def _parse_formula(node) -> Formula:
    if isinstance(node, str):
        raise ParseError(f"expected a formula, got atom {node!r}")
    if not node:
        raise ParseError("empty formula")
    head = node[0]
    args = node[1:]
    if head == "and":
        return And(tuple(_parse_formula(a) for a in args))
    if head == "or":
        return Or(tuple(_parse_formula(a) for a in args))
    if head == "not":
        _expect(args, 1, "not")
        return Not(_parse_formula(args[0]))
    if head == "implies":
        _expect(args, 2, "implies")
        return Implies(_parse_formula(args[0]), _parse_formula(args[1]))
    if head in ("exists", "forall", "exists*", "forall*"):
        _expect(args, 2, head)
        if not isinstance(args[0], str) or _is_const_token(args[0]):
            raise ParseError(f"bad quantified variable in {head}: {args[0]!r}")
        domain = THEORY if head.endswith("*") else ACTIVE
        cls = Exists if head.startswith("exists") else Forall
        return cls(args[0], _parse_formula(args[1]), domain)
    if head == "=":
        _expect(args, 2, "=")
        return Eq(_parse_term(args[0]), _parse_term(args[1]))
    if head == "rel":
        if not args or not isinstance(args[0], str):
            raise ParseError("rel needs a relation name")
        return RelAtom(args[0], tuple(_parse_term(a) for a in args[1:]))
    if head == "rvar":
        if not args or not isinstance(args[0], str):
            raise ParseError("rvar needs a relation-variable name")
        return RelVarAtom(args[0], tuple(_parse_term(a) for a in args[1:]))
    if head == "tc":
        _expect(args, 5, "tc")
        u = _var_list(args[0], "tc step source")
        v = _var_list(args[1], "tc step target")
        body = _parse_formula(args[2])
        if not isinstance(args[3], list) or not isinstance(args[4], list):
            raise ParseError("tc endpoints must be term lists")
        x = tuple(_parse_term(a) for a in args[3])
        y = tuple(_parse_term(a) for a in args[4])
        try:
            return Tc(u, v, body, x, y)
        except ValueError as exc:
            raise ParseError(str(exc)) from exc
    if head in ("so-exists", "so-forall"):
        if len(args) not in (3, 5, 6):
            raise ParseError(
                f"{head} takes (R k body), (R k body (vars) support) or "
                f"(R k body (vars) support nodes|edges)")
        rel_var, arity_tok, body_node = args[0], args[1], args[2]
        if not isinstance(rel_var, str) or not isinstance(arity_tok, str):
            raise ParseError(f"bad {head} header")
        try:
            arity = int(arity_tok)
        except ValueError as exc:
            raise ParseError(f"bad arity {arity_tok!r}") from exc
        support = None
        support_vars: tuple[str, ...] = ()
        max_size = None
        if len(args) >= 5:
            support_vars = _var_list(args[3], f"{head} support")
            if len(support_vars) != arity:
                raise ParseError(f"{head} support variable count must equal arity")
            support = _parse_formula(args[4])
        if len(args) == 6:
            if args[5] not in ("nodes", "edges"):
                raise ParseError(f"bad cardinality bound {args[5]!r}")
            max_size = args[5]
        cls = SoExists if head == "so-exists" else SoForall
        return cls(rel_var, arity, _parse_formula(body_node), support, support_vars,
                   max_size)
    if head == "theory":
        if len(args) == 1:
            return TheoryAtom(_parse_theory_atom(args[0]), None)
        _expect(args, 2, "theory")
        if args[0] not in theory.MODES:
            raise ParseError(f"unknown theory mode {args[0]!r}")
        return TheoryAtom(_parse_theory_atom(args[1]), args[0])
    raise ParseError(f"unknown formula head {head!r}")


def _expect(args, n: int, what: str) -> None:
    if len(args) != n:
        raise ParseError(f"{what} takes {n} arguments, got {len(args)}")


def parse_formula(text: str) -> Formula:
    """Parse one formula; `;` starts a line comment."""
    tokens = _tokenize(text)
    if not tokens:
        raise ParseError("empty formula text")
    node, pos = _read(tokens, 0)
    if pos != len(tokens):
        raise ParseError(f"trailing tokens after formula: {tokens[pos:]}")
    return _parse_formula(node)
