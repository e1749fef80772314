"""Concrete syntax for the query language.

The notation is the paper-style pattern syntax in ASCII: `-[d]->`,
`<-[d]-`, `-[d]-` edges, `{n..m}` repetition with `inf` for the missing
upper bound, `+` for pattern union, lowercase clause keywords, and `#`
line comments. Identifiers may contain interior hyphens (`x-coord`,
`Bike-lane`); a binary minus therefore needs surrounding whitespace.
Arithmetic terms and order comparisons are only accepted when a theory
mode is passed in.

    match (x :Town)-[:Bike-lane]-{1..inf}(y :Town)
    filter x.name = "Yan"
    return x, y

Parsing performs the static schema checks (union branches must agree,
conditions may only use pattern variables, no let-rebinding), so a
returned AST is always schema-consistent.
"""

from __future__ import annotations

import re
from fractions import Fraction

from ..errors import ParseError, SchemaError
from ..values import integer, rational, string
from . import ast as A
from .schema import check_query, check_pattern

KEYWORDS = {
    "match", "let", "for", "in", "filter", "return", "as", "use", "then",
    "intersect", "union", "except", "exists", "where", "and", "or", "not",
    "shortest", "trail", "acyclic", "inf", "abs",
}

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<string>"(?:\\.|[^"\\])*")
  | (?P<number>\d+(?:/\d+|\.\d+)?)
  | (?P<punct><-\[|-\[|\]->|\]-|\.\.|<=|>=|<|>|=|\(|\)|\{|\}|,|\+|\*|\||:|\.)
  | (?P<minus>-)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*(?:-[A-Za-z0-9_]+)*)
""", re.VERBOSE)


class Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind: str, text: str, line: int, col: int):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col

    def __repr__(self):  # pragma: no cover
        return f"Token({self.kind}, {self.text!r}, {self.line}:{self.col})"


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line=line)
        kind = m.lastgroup
        value = m.group()
        if kind not in ("ws", "comment"):
            if kind == "ident" and value in KEYWORDS:
                tokens.append(Token(value, value, line, col))
            elif kind == "minus":
                tokens.append(Token("-", value, line, col))
            elif kind == "punct":
                tokens.append(Token(value, value, line, col))
            else:
                tokens.append(Token(kind, value, line, col))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            col = len(value) - value.rfind("\n")
        else:
            col += len(value)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


_RELOPS = ("=", "<", "<=", ">", ">=")
_PATTERN_STARTS = ("(", "-[", "<-[")


class Parser:
    def __init__(self, tokens: list[Token], theory_mode: str | None = None):
        self.tokens = tokens
        self.pos = 0
        self.theory_mode = theory_mode

    # -- token plumbing -------------------------------------------------------

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at(self, *kinds: str) -> bool:
        return self.peek().kind in kinds

    def expect(self, kind: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError(
                f"expected {kind!r}, found {tok.text or 'end of input'!r}",
                line=tok.line)
        return self.next()

    def error(self, message: str) -> ParseError:
        tok = self.peek()
        return ParseError(message + f", found {tok.text or 'end of input'!r}",
                          line=tok.line)

    def span(self) -> A.Span:
        tok = self.peek()
        return (tok.line, tok.col)

    # -- queries ---------------------------------------------------------------

    def parse_query(self) -> A.Query:
        q = self.parse_set_expr()
        self.expect("eof")
        return q

    def parse_set_expr(self) -> A.Query:
        left = self.parse_query_block()
        while self.at("intersect", "union", "except"):
            op = self.next().kind
            right = self.parse_query_block()
            left = A.SetOp(op, left, right)
        return left

    def parse_query_block(self) -> A.Query:
        if self.at("("):
            self.next()
            inner = self.parse_set_expr()
            self.expect(")")
            return inner
        if self.at("use"):
            span = self.span()
            self.next()
            name = self.ident("graph name")
            if self.at("{"):
                self.next()
                chain = [self.parse_set_expr()]
                while self.at("then"):
                    self.next()
                    chain.append(self.parse_set_expr())
                self.expect("}")
                return A.UseThen(name, tuple(chain), span=span)
            return self.parse_linear(prefix=[A.UseStep(name, span=span)])
        return self.parse_linear(prefix=[])

    def parse_linear(self, prefix: list) -> A.LinearQuery:
        steps: list = list(prefix)
        span = self.span()
        while True:
            if self.at("use"):
                use_span = self.span()
                self.next()
                steps.append(A.UseStep(self.ident("graph name"), span=use_span))
            elif self.at("match"):
                s = self.span()
                self.next()
                steps.append(A.MatchClause(self.parse_graph_pattern(), span=s))
            elif self.at("let"):
                s = self.span()
                self.next()
                var = self.ident("variable")
                self.expect("=")
                steps.append(A.LetClause(var, self.parse_term(), span=s))
            elif self.at("for"):
                s = self.span()
                self.next()
                var = self.ident("variable")
                self.expect("in")
                steps.append(A.ForClause(var, self.ident("variable"), span=s))
            elif self.at("filter"):
                s = self.span()
                self.next()
                steps.append(A.FilterClause(self.parse_condition(), span=s))
            elif self.at("return"):
                s = self.span()
                self.next()
                return A.LinearQuery(tuple(steps), self.parse_return_items(),
                                     span=span)
            else:
                raise self.error("expected a clause or return")

    def parse_return_items(self) -> tuple[A.ReturnItem, ...]:
        items: list[A.ReturnItem] = []
        if self.at("eof", "}", "then", "intersect", "union", "except", ")"):
            return ()
        while True:
            s = self.span()
            term = self.parse_term()
            if self.at("as"):
                self.next()
                name = self.ident("output name")
            elif isinstance(term, A.VarTerm):
                name = term.name
            else:
                raise self.error("return item needs `as <name>`")
            items.append(A.ReturnItem(term, name, span=s))
            if self.at(","):
                self.next()
                continue
            return tuple(items)

    def ident(self, what: str) -> str:
        tok = self.peek()
        if tok.kind != "ident":
            raise self.error(f"expected {what}")
        return self.next().text

    # -- graph patterns -----------------------------------------------------------

    def parse_graph_pattern(self) -> A.GraphPattern:
        parts = [self.parse_path_spec()]
        while self.at(","):
            self.next()
            parts.append(self.parse_path_spec())
        return A.GraphJoin(tuple(parts))

    def parse_path_spec(self) -> A.PathSpec:
        span = self.span()
        shortest = False
        mode = None
        if self.at("shortest"):
            shortest = True
            self.next()
        if self.at("trail", "acyclic"):
            mode = self.next().kind
        binder = None
        if self.at("ident") and self.peek(1).kind == "=":
            binder = self.next().text
            self.next()
        pattern = self.parse_path_pattern()
        return A.PathSpec(A.Restrictor(shortest, mode), binder, pattern, span=span)

    def parse_path_pattern(self) -> A.PathPattern:
        pat = self.parse_union()
        if self.at("where"):
            span = self.span()
            self.next()
            cond = self.parse_condition()
            pat = A.Where(pat, cond, span=span)
        return pat

    def parse_union(self) -> A.PathPattern:
        left = self.parse_concat()
        while self.at("+"):
            span = self.span()
            self.next()
            right = self.parse_concat()
            left = A.PatternUnion(left, right, span=span)
        return left

    def parse_concat(self) -> A.PathPattern:
        parts = [self.parse_postfix()]
        while self.at(*_PATTERN_STARTS):
            parts.append(self.parse_postfix())
        if len(parts) == 1:
            return parts[0]
        return A.Concat(tuple(parts))

    def parse_postfix(self) -> A.PathPattern:
        pat = self.parse_atom_pattern()
        while self.at("{"):
            span = self.span()
            self.next()
            lo = self.parse_bound()
            self.expect("..")
            if self.at("inf"):
                self.next()
                hi = None
            else:
                hi = self.parse_bound()
            self.expect("}")
            pat = A.Repeat(pat, lo, hi, span=span)
        return pat

    def parse_bound(self) -> int:
        tok = self.expect("number")
        if not tok.text.isdigit():
            raise ParseError(f"repetition bound must be an integer, got {tok.text}",
                             line=tok.line)
        return int(tok.text)

    def parse_atom_pattern(self) -> A.PathPattern:
        span = self.span()
        if self.at("("):
            if self.peek(1).kind in _PATTERN_STARTS:
                self.next()
                inner = self.parse_path_pattern()
                self.expect(")")
                return inner
            return self.parse_node_pattern()
        if self.at("-["):
            self.next()
            var, label, cond = self.parse_descriptor("]->", "]-")
            closer = self.next()
            direction = A.FORWARD if closer.kind == "]->" else A.UNDIRECTED
            pat: A.PathPattern = A.EdgePat(direction, var, label, span=span)
            if cond is not None:
                pat = A.Where(pat, cond, span=span)
            return pat
        if self.at("<-["):
            self.next()
            var, label, cond = self.parse_descriptor("]-")
            self.next()
            pat = A.EdgePat(A.BACKWARD, var, label, span=span)
            if cond is not None:
                pat = A.Where(pat, cond, span=span)
            return pat
        raise self.error("expected a node or edge pattern")

    def parse_node_pattern(self) -> A.PathPattern:
        span = self.span()
        self.expect("(")
        var, label, cond = self.parse_descriptor(")")
        self.expect(")")
        pat: A.PathPattern = A.NodePat(var, label, span=span)
        if cond is not None:
            pat = A.Where(pat, cond, span=span)
        return pat

    def parse_descriptor(self, *closers: str):
        """`x :Label where cond`, every part optional."""
        var = None
        label = None
        cond = None
        if self.at("ident"):
            var = self.next().text
        if self.at(":"):
            self.next()
            label = self.label_or_key("label")
        if self.at("where"):
            self.next()
            cond = self.parse_condition()
        if not self.at(*closers):
            raise self.error("malformed descriptor")
        return var, label, cond

    def label_or_key(self, what: str) -> str:
        tok = self.peek()
        if tok.kind == "ident":
            return self.next().text
        if tok.kind == "string":
            return _unquote(self.next().text)
        raise self.error(f"expected a {what}")

    # -- conditions ------------------------------------------------------------------

    def parse_condition(self) -> A.Condition:
        left = self.parse_and_condition()
        while self.at("or"):
            span = self.span()
            self.next()
            left = A.CondOr(left, self.parse_and_condition(), span=span)
        return left

    def parse_and_condition(self) -> A.Condition:
        left = self.parse_not_condition()
        while self.at("and"):
            span = self.span()
            self.next()
            left = A.CondAnd(left, self.parse_not_condition(), span=span)
        return left

    def parse_not_condition(self) -> A.Condition:
        if self.at("not"):
            span = self.span()
            self.next()
            return A.CondNot(self.parse_not_condition(), span=span)
        return self.parse_atom_condition()

    def parse_atom_condition(self) -> A.Condition:
        span = self.span()
        if self.at("exists"):
            self.next()
            self.expect("{")
            inner = self.parse_set_expr()
            self.expect("}")
            return A.ExistsCond(inner, span=span)
        # label test `x : Label`
        if self.at("ident") and self.peek(1).kind == ":":
            var = self.next().text
            self.next()
            return A.HasLabel(var, self.label_or_key("label"), span=span)
        if self.at("("):
            # backtrack between parenthesized condition and term
            saved = self.pos
            try:
                term = self.parse_term()
                if self.at(*_RELOPS):
                    return self.finish_comparison(term, span)
            except ParseError:
                pass
            self.pos = saved
            self.next()
            inner = self.parse_condition()
            self.expect(")")
            return inner
        term = self.parse_term()
        if not self.at(*_RELOPS):
            raise self.error("expected a comparison operator")
        return self.finish_comparison(term, span)

    def finish_comparison(self, lhs: A.GqlTerm, span: A.Span) -> A.Condition:
        op = self.next().kind
        rhs = self.parse_term()
        if op == "=":
            return A.TermEq(lhs, rhs, span=span)
        if self.theory_mode is None:
            raise ParseError(
                f"order comparison {op!r} requires a numeric theory mode "
                "(pass one of lia/lra/rof)", line=span[0])
        if op == ">":
            return A.Compare("<", rhs, lhs, span=span)
        if op == ">=":
            return A.Compare("<=", rhs, lhs, span=span)
        return A.Compare(op, lhs, rhs, span=span)

    # -- terms -----------------------------------------------------------------------

    def parse_term(self) -> A.GqlTerm:
        if self.theory_mode is None:
            return self.parse_simple_term()
        return self.parse_additive()

    def parse_additive(self) -> A.GqlTerm:
        span = self.span()
        left = self.parse_multiplicative()
        while self.at("+", "-"):
            op = self.next().kind
            right = self.parse_multiplicative()
            left = A.ArithTerm("+" if op == "+" else "-", (left, right), span=span)
        return left

    def parse_multiplicative(self) -> A.GqlTerm:
        span = self.span()
        left = self.parse_unary_term()
        while self.at("*"):
            self.next()
            right = self.parse_unary_term()
            left = A.ArithTerm("*", (left, right), span=span)
        return left

    def parse_unary_term(self) -> A.GqlTerm:
        span = self.span()
        if self.at("-"):
            self.next()
            return A.ArithTerm("neg", (self.parse_unary_term(),), span=span)
        if self.at("abs"):
            self.next()
            self.expect("(")
            inner = self.parse_additive()
            self.expect(")")
            return A.ArithTerm("abs", (inner,), span=span)
        if self.at("|"):
            self.next()
            inner = self.parse_additive()
            self.expect("|")
            return A.ArithTerm("abs", (inner,), span=span)
        if self.at("("):
            self.next()
            inner = self.parse_additive()
            self.expect(")")
            return inner
        return self.parse_simple_term()

    def parse_simple_term(self) -> A.GqlTerm:
        span = self.span()
        tok = self.peek()
        if tok.kind == "string":
            self.next()
            return A.ConstTerm(string(_unquote(tok.text)), span=span)
        if tok.kind == "number":
            self.next()
            return A.ConstTerm(_number_value(tok.text), span=span)
        if tok.kind == "ident":
            name = self.next().text
            if self.at("."):
                self.next()
                key = self.label_or_key("property key")
                return A.PropTerm(name, key, span=span)
            return A.VarTerm(name, span=span)
        raise self.error("expected a term")


def _number_value(text: str):
    if "/" in text:
        num, _, den = text.partition("/")
        return rational(int(num), int(den))
    if "." in text:
        return rational(Fraction(text))
    return integer(int(text))


def _unquote(text: str) -> str:
    body = text[1:-1]
    out, i = [], 0
    while i < len(body):
        if body[i] == "\\" and i + 1 < len(body):
            out.append(body[i + 1])
            i += 2
        else:
            out.append(body[i])
            i += 1
    return "".join(out)


def parse_query(text: str, theory_mode: str | None = None) -> A.Query:
    """Parse a whole query and run the static schema checks."""
    parser = Parser(tokenize(text), theory_mode)
    q = parser.parse_query()
    check_query(q)
    return q


def parse_path_pattern(text: str, theory_mode: str | None = None) -> A.PathPattern:
    """Parse a standalone path pattern (used by tests and demos)."""
    parser = Parser(tokenize(text), theory_mode)
    pat = parser.parse_path_pattern()
    parser.expect("eof")
    check_pattern(pat)
    return pat
