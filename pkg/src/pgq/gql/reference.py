"""Direct interpreter for the query semantics; the oracle the compilers
are differentially tested against.

Pattern semantics are sets of (path, binding) pairs. In restrictor-free
position only endpoints and bindings are observable downstream, so
composition deduplicates on (source, target, binding) and keeps one
witness path; unbounded repetition is an endpoint-pair fixpoint. Under a
restrictor, paths themselves are filtered, so patterns are evaluated by
exhaustive path enumeration with restrictor-aware pruning — exponential
by design (simple-path semantics is NP-hard), guarded by a node budget.

Condition terms resolve properties and labels database-wide: an element
keeps its properties when a `then` chain switches the active graph.
A term on an element that lacks the key makes the enclosing atomic
condition false (there are no nulls); `let` over such a term drops the
row.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional

from .. import theory
from ..errors import CapExceeded, DomainMismatch, TypeMismatch, UnsupportedFeature
from ..graph import GraphDatabase, PropertyGraph
from ..values import Value, edge_id, node_id, render_value, sort_key
from . import ast as A
from .schema import pattern_schema

Binding = dict[str, Value]
FrozenBinding = tuple[tuple[str, Value], ...]


def _freeze(mu: Binding) -> FrozenBinding:
    return tuple(sorted(mu.items()))


def _compatible(a: Binding, b: Binding) -> bool:
    for k, v in a.items():
        if k in b and b[k] != v:
            return False
    return True


@dataclass(frozen=True)
class Path:
    """Alternating node/edge sequence; a single node is a length-0 path."""

    nodes: tuple[str, ...]
    edges: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.nodes) != len(self.edges) + 1 or not self.nodes:
            raise ValueError("path must alternate n0 e0 n1 ... ek-1 nk")

    @property
    def src(self) -> str:
        return self.nodes[0]

    @property
    def tgt(self) -> str:
        return self.nodes[-1]

    @property
    def length(self) -> int:
        return len(self.edges)

    def concat(self, other: "Path") -> "Path":
        if self.tgt != other.src:
            raise ValueError("paths do not concatenate")
        return Path(self.nodes + other.nodes[1:], self.edges + other.edges)

    def node_simple(self) -> bool:
        return len(set(self.nodes)) == len(self.nodes)

    def edge_simple(self) -> bool:
        return len(set(self.edges)) == len(self.edges)


@dataclass(frozen=True)
class BindingTable:
    columns: frozenset[str]
    rows: frozenset[FrozenBinding]

    def __post_init__(self) -> None:
        for row in self.rows:
            if {k for k, _ in row} != self.columns:
                raise ValueError("row domain differs from table columns")

    @staticmethod
    def unit() -> "BindingTable":
        return BindingTable(frozenset(), frozenset({()}))

    @staticmethod
    def empty(columns: frozenset[str]) -> "BindingTable":
        return BindingTable(columns, frozenset())

    def dicts(self) -> list[Binding]:
        return [dict(row) for row in self.rows]

    def render(self) -> str:
        """Deterministic text: sorted header, one line per row."""
        header = "\t".join(sorted(self.columns))
        lines = []
        for row in self.rows:
            by_var = dict(row)
            lines.append("\t".join(
                render_value(by_var[c]) for c in sorted(self.columns)))
        return "\n".join([header] + sorted(lines)) if self.columns else \
            "\n".join([""] + (["()"] if self.rows else []))


@dataclass
class Ctx:
    db: GraphDatabase
    graph: str
    node_budget: int = 12
    theory_mode: str | None = None

    def current(self) -> PropertyGraph:
        return self.db.graph(self.graph)

    def with_graph(self, name: str) -> "Ctx":
        return Ctx(self.db, name, self.node_budget, self.theory_mode)


# ---------------------------------------------------------------------------
# Conditions and terms
# ---------------------------------------------------------------------------


def _db_property_values(ctx: Ctx, element: Value, key: str) -> set[Value]:
    out = set()
    for g in ctx.db.graphs:
        eid = element.data
        if eid in g.nodes or eid in g.edges():
            got = g.property_value(eid, key)
            if got is not None:
                out.add(got)
    return out


def _db_labels(ctx: Ctx, element: Value) -> set[str]:
    out: set[str] = set()
    for g in ctx.db.graphs:
        eid = element.data
        if eid in g.nodes or eid in g.edges():
            out |= g.labels_of(eid)
    return out


def term_values(term: A.GqlTerm, mu: Binding, ctx: Ctx) -> set[Value]:
    """All values a term can denote; empty when a property is missing."""
    if isinstance(term, A.VarTerm):
        if term.name not in mu:
            raise UnsupportedFeature(f"unbound variable {term.name!r} in term")
        return {mu[term.name]}
    if isinstance(term, A.ConstTerm):
        return {term.value}
    if isinstance(term, A.PropTerm):
        if term.var not in mu:
            raise UnsupportedFeature(f"unbound variable {term.var!r} in term")
        return _db_property_values(ctx, mu[term.var], term.key)
    # arithmetic: exact evaluation over every combination of operand values
    out: set[Value] = set()
    arg_sets = [term_values(a, mu, ctx) for a in term.args]
    if any(not s for s in arg_sets):
        return set()
    mode = ctx.theory_mode or theory.LRA
    import itertools as _it
    for combo in _it.product(*arg_sets):
        fracs = []
        for v in combo:
            if v.kind == "str":
                raise TypeMismatch(f"string value in numeric position: {v.data!r}")
            if not v.is_numeric():
                return set()
            fracs.append(v.as_fraction())
        if term.op == "+":
            got = sum(fracs, Fraction(0))
        elif term.op == "-":
            got = fracs[0] - fracs[1]
        elif term.op == "neg":
            got = -fracs[0]
        elif term.op == "abs":
            got = abs(fracs[0])
        else:
            if mode != theory.ROF:
                raise TypeMismatch("product of terms requires rof mode")
            got = fracs[0] * fracs[1]
        from ..values import numeric
        out.add(numeric(got))
    return out


def eval_condition(cond: A.Condition, mu: Binding, ctx: Ctx) -> bool:
    if isinstance(cond, A.TermEq):
        if isinstance(cond.lhs, A.ArithTerm) or isinstance(cond.rhs, A.ArithTerm):
            return _numeric_compare("=", cond.lhs, cond.rhs, mu, ctx)
        left = term_values(cond.lhs, mu, ctx)
        right = term_values(cond.rhs, mu, ctx)
        return bool(left & right)
    if isinstance(cond, A.Compare):
        return _numeric_compare(cond.op, cond.lhs, cond.rhs, mu, ctx)
    if isinstance(cond, A.HasLabel):
        if cond.var not in mu:
            raise UnsupportedFeature(f"unbound variable {cond.var!r} in condition")
        return cond.label in _db_labels(ctx, mu[cond.var])
    if isinstance(cond, A.CondNot):
        return not eval_condition(cond.body, mu, ctx)
    if isinstance(cond, A.CondAnd):
        return eval_condition(cond.lhs, mu, ctx) and eval_condition(cond.rhs, mu, ctx)
    if isinstance(cond, A.CondOr):
        return eval_condition(cond.lhs, mu, ctx) or eval_condition(cond.rhs, mu, ctx)
    if isinstance(cond, A.ExistsCond):
        seeded = BindingTable(frozenset(mu), frozenset({_freeze(mu)}))
        return bool(eval_query_on(cond.query, seeded, ctx).rows)
    raise TypeError(f"not a condition: {cond!r}")


def _numeric_compare(op: str, lhs: A.GqlTerm, rhs: A.GqlTerm,
                     mu: Binding, ctx: Ctx) -> bool:
    left = term_values(lhs, mu, ctx)
    right = term_values(rhs, mu, ctx)
    for lv in left:
        for rv in right:
            if lv.kind == "str" or rv.kind == "str":
                if op == "=":
                    if lv == rv:
                        return True
                    continue
                raise TypeMismatch("string value under an order comparison")
            if not (lv.is_numeric() and rv.is_numeric()):
                continue
            a, b = lv.as_fraction(), rv.as_fraction()
            if (op == "=" and a == b) or (op == "<" and a < b) or \
                    (op == "<=" and a <= b):
                return True
    return False


# ---------------------------------------------------------------------------
# Path patterns, restrictor-free composition
# ---------------------------------------------------------------------------

_Entry = tuple[Path, FrozenBinding]


def _atom_paths(pi: A.PathPattern, g: PropertyGraph) -> Iterator[tuple[Path, Binding]]:
    if isinstance(pi, A.NodePat):
        for n in sorted(g.nodes):
            if pi.label is not None and pi.label not in g.labels_of(n):
                continue
            mu = {pi.var: node_id(n)} if pi.var else {}
            yield Path((n,), ()), mu
        return
    if isinstance(pi, A.EdgePat):
        if pi.direction == A.FORWARD:
            pool = [(e, g.src[e], g.tgt[e]) for e in sorted(g.dir_edges)]
        elif pi.direction == A.BACKWARD:
            pool = [(e, g.tgt[e], g.src[e]) for e in sorted(g.dir_edges)]
        else:
            pool = []
            for e in sorted(g.undir_edges):
                pool.append((e, g.src[e], g.tgt[e]))
                if g.src[e] != g.tgt[e]:
                    pool.append((e, g.tgt[e], g.src[e]))
        for e, s, t in pool:
            if pi.label is not None and pi.label not in g.labels_of(e):
                continue
            mu = {pi.var: edge_id(e)} if pi.var else {}
            yield Path((s, t), (e,)), mu
        return
    raise TypeError(f"not an atom pattern: {pi!r}")


def eval_path_pattern(pi: A.PathPattern, g: PropertyGraph, ctx: Ctx
                      ) -> set[tuple[Path, FrozenBinding]]:
    """Restrictor-free semantics, deduplicated on (src, tgt, binding) with
    one witness path per class."""
    entries = _epp(pi, g, ctx)
    return set(entries.values())


def _epp(pi: A.PathPattern, g: PropertyGraph, ctx: Ctx
         ) -> dict[tuple[str, str, FrozenBinding], _Entry]:
    if isinstance(pi, (A.NodePat, A.EdgePat)):
        out = {}
        for path, mu in _atom_paths(pi, g):
            out[(path.src, path.tgt, _freeze(mu))] = (path, _freeze(mu))
        return out
    if isinstance(pi, A.Concat):
        current = _epp(pi.parts[0], g, ctx)
        for part in pi.parts[1:]:
            nxt = _epp(part, g, ctx)
            joined: dict = {}
            for (s1, t1, mu1), (p1, _) in current.items():
                for (s2, t2, mu2), (p2, _) in nxt.items():
                    if t1 != s2:
                        continue
                    d1, d2 = dict(mu1), dict(mu2)
                    if not _compatible(d1, d2):
                        continue
                    mu = _freeze({**d1, **d2})
                    key = (s1, t2, mu)
                    if key not in joined:
                        joined[key] = (p1.concat(p2), mu)
            current = joined
        return current
    if isinstance(pi, A.PatternUnion):
        out = dict(_epp(pi.lhs, g, ctx))
        for key, entry in _epp(pi.rhs, g, ctx).items():
            out.setdefault(key, entry)
        return out
    if isinstance(pi, A.Where):
        out = {}
        for key, (path, mu) in _epp(pi.body, g, ctx).items():
            if eval_condition(pi.cond, dict(mu), ctx):
                out[key] = (path, mu)
        return out
    if isinstance(pi, A.Repeat):
        if pattern_schema(pi.body):
            raise UnsupportedFeature(
                "variables under repetition bind lists; outside the basic fragment")
        return _repeat_pairs(pi, g, ctx)
    raise TypeError(f"not a path pattern: {pi!r}")


def _repeat_pairs(pi: A.Repeat, g: PropertyGraph, ctx: Ctx) -> dict:
    """Endpoint pairs of a repeated empty-schema pattern, one witness path
    each. π^{lo..∞} is π^lo followed by the reflexive-transitive closure."""
    base = _epp(pi.body, g, ctx)
    steps: dict[str, list[tuple[str, Path]]] = {}
    for (s, _t, _mu), (path, _) in base.items():
        steps.setdefault(s, []).append((path.tgt, path))

    def identity() -> dict[tuple[str, str], Path]:
        return {(n, n): Path((n,), ()) for n in sorted(g.nodes)}

    def advance(power: dict) -> dict:
        nxt: dict[tuple[str, str], Path] = {}
        for (s, t1), p1 in power.items():
            for t2, piece in steps.get(t1, ()):
                if (s, t2) not in nxt:
                    nxt[(s, t2)] = p1.concat(piece)
        return nxt

    def closure() -> dict[tuple[str, str], Path]:
        out: dict[tuple[str, str], Path] = {}
        from collections import deque
        for start in sorted(g.nodes):
            best = {start: Path((start,), ())}
            queue = deque([best[start]])
            while queue:
                prefix = queue.popleft()
                for t, piece in steps.get(prefix.tgt, ()):
                    if t not in best:
                        candidate = prefix.concat(piece)
                        best[t] = candidate
                        queue.append(candidate)
            for t, path in best.items():
                out[(start, t)] = path
        return out

    if pi.hi is None:
        pairs = closure()
        if pi.lo > 0:
            prefix = identity()
            for _ in range(pi.lo):
                prefix = advance(prefix)
            combined: dict[tuple[str, str], Path] = {}
            for (s, mid), p1 in prefix.items():
                for (mid2, t), p2 in pairs.items():
                    if mid == mid2 and (s, t) not in combined:
                        combined[(s, t)] = p1.concat(p2)
            pairs = combined
    else:
        pairs = {}
        power = identity()
        if pi.lo == 0:
            pairs.update(power)
        for k in range(1, pi.hi + 1):
            power = advance(power)
            if k >= pi.lo:
                for key, path in power.items():
                    pairs.setdefault(key, path)
    return {(s, t, ()): (path, ()) for (s, t), path in pairs.items()}


# ---------------------------------------------------------------------------
# Restrictor evaluation by path enumeration
# ---------------------------------------------------------------------------


def _edge_cap(pi: A.PathPattern, n_nodes: int) -> int:
    """Bound on the length of any path worth enumerating: longer matches
    always contain a repeat iteration that can be cut without changing
    the binding or the endpoints."""
    if isinstance(pi, A.NodePat):
        return 0
    if isinstance(pi, A.EdgePat):
        return 1
    if isinstance(pi, A.Concat):
        return sum(_edge_cap(p, n_nodes) for p in pi.parts)
    if isinstance(pi, A.PatternUnion):
        return max(_edge_cap(pi.lhs, n_nodes), _edge_cap(pi.rhs, n_nodes))
    if isinstance(pi, A.Repeat):
        count = pi.hi if pi.hi is not None else max(n_nodes, pi.lo, 1)
        return count * _edge_cap(pi.body, n_nodes)
    if isinstance(pi, A.Where):
        return _edge_cap(pi.body, n_nodes)
    raise TypeError(f"not a path pattern: {pi!r}")


def _match_steps(pi: A.EdgePat, g: PropertyGraph, at: str):
    if pi.direction == A.FORWARD:
        pool = [(e, g.src[e], g.tgt[e]) for e in g.dir_edges]
    elif pi.direction == A.BACKWARD:
        pool = [(e, g.tgt[e], g.src[e]) for e in g.dir_edges]
    else:
        pool = []
        for e in g.undir_edges:
            pool.append((e, g.src[e], g.tgt[e]))
            if g.src[e] != g.tgt[e]:
                pool.append((e, g.tgt[e], g.src[e]))
    for e, s, t in sorted(pool):
        if s != at:
            continue
        if pi.label is not None and pi.label not in g.labels_of(e):
            continue
        yield e, t


def enumerate_matches(pi: A.PathPattern, g: PropertyGraph, ctx: Ctx,
                      mode: str | None) -> Iterator[tuple[Path, Binding]]:
    """Every (path, binding) matching pi, pruned for the restrictor mode
    (`acyclic` prunes node revisits, `trail` edge revisits) and capped in
    length. Exponential in general; the node budget guards runaways."""
    if len(g.nodes) > ctx.node_budget:
        raise CapExceeded(
            f"restrictor enumeration on {len(g.nodes)} nodes exceeds the "
            f"budget of {ctx.node_budget}")
    cap = _edge_cap(pi, len(g.nodes))
    if mode == "trail":
        cap = min(cap, len(g.edges()))

    def extend(part: A.PathPattern, path: Path, mu: Binding
               ) -> Iterator[tuple[Path, Binding]]:
        if isinstance(part, A.NodePat):
            at = path.tgt
            if part.label is not None and part.label not in g.labels_of(at):
                return
            if part.var:
                bound = mu.get(part.var)
                if bound is not None and bound != node_id(at):
                    return
                yield path, {**mu, part.var: node_id(at)}
            else:
                yield path, mu
            return
        if isinstance(part, A.EdgePat):
            if path.length + 1 > cap:
                return
            for e, t in _match_steps(part, g, path.tgt):
                if mode == "acyclic" and t in path.nodes:
                    continue
                if mode == "trail" and e in path.edges:
                    continue
                if part.var:
                    bound = mu.get(part.var)
                    if bound is not None and bound != edge_id(e):
                        continue
                    yield path.concat(Path((path.tgt, t), (e,))), \
                        {**mu, part.var: edge_id(e)}
                else:
                    yield path.concat(Path((path.tgt, t), (e,))), mu
            return
        if isinstance(part, A.Concat):
            def chain(idx: int, p: Path, m: Binding):
                if idx == len(part.parts):
                    yield p, m
                    return
                for p2, m2 in extend(part.parts[idx], p, m):
                    yield from chain(idx + 1, p2, m2)
            yield from chain(0, path, mu)
            return
        if isinstance(part, A.PatternUnion):
            yield from extend(part.lhs, path, mu)
            yield from extend(part.rhs, path, mu)
            return
        if isinstance(part, A.Where):
            for p2, m2 in extend(part.body, path, mu):
                if eval_condition(part.cond, m2, ctx):
                    yield p2, m2
            return
        if isinstance(part, A.Repeat):
            def iterate(k: int, p: Path, m: Binding):
                if k >= part.lo:
                    yield p, m
                if part.hi is not None and k >= part.hi:
                    return
                if p.length >= cap and _edge_cap(part.body, len(g.nodes)) > 0:
                    return
                for p2, m2 in extend(part.body, p, m):
                    if p2.length == p.length:
                        # zero-length iteration: repeating it changes nothing
                        if k + 1 >= part.lo and k == 0:
                            yield p2, m2
                        continue
                    yield from iterate(k + 1, p2, m2)
            yield from iterate(0, path, mu)
            return
        raise TypeError(f"not a path pattern: {part!r}")

    seen: set[tuple[tuple, tuple, FrozenBinding]] = set()
    for seed in sorted(g.nodes):
        for path, mu in extend(pi, Path((seed,), ()), {}):
            key = (path.nodes, path.edges, _freeze(mu))
            if key not in seen:
                seen.add(key)
                yield path, mu


# ---------------------------------------------------------------------------
# Graph patterns
# ---------------------------------------------------------------------------


def eval_path_spec(spec: A.PathSpec, g: PropertyGraph, ctx: Ctx
                   ) -> set[tuple[Path, FrozenBinding]]:
    if spec.binder is not None:
        raise UnsupportedFeature(
            "path bindings are outside the basic fragment")
    r = spec.restrictor
    if r.is_none:
        return eval_path_pattern(spec.pattern, g, ctx)
    matches = list(enumerate_matches(spec.pattern, g, ctx, r.mode))
    if r.mode == "acyclic":
        matches = [(p, mu) for p, mu in matches if p.node_simple()]
    elif r.mode == "trail":
        matches = [(p, mu) for p, mu in matches if p.edge_simple()]
    if r.shortest:
        best: dict[tuple[FrozenBinding, str, str], int] = {}
        for p, mu in matches:
            key = (_freeze(mu), p.src, p.tgt)
            if key not in best or p.length < best[key]:
                best[key] = p.length
        matches = [(p, mu) for p, mu in matches
                   if best[(_freeze(mu), p.src, p.tgt)] == p.length]
    return {(p, _freeze(mu)) for p, mu in matches}


def eval_graph_pattern(xi: A.GraphPattern, g: PropertyGraph, ctx: Ctx
                       ) -> set[tuple[tuple[Path, ...], FrozenBinding]]:
    """Join of restricted path specs: tuples of paths with merged bindings."""
    current: set[tuple[tuple[Path, ...], FrozenBinding]] = {((), ())}
    for spec in xi.parts:
        entries = eval_path_spec(spec, g, ctx)
        nxt = set()
        for paths, mu1 in current:
            d1 = dict(mu1)
            for p, mu2 in entries:
                d2 = dict(mu2)
                if _compatible(d1, d2):
                    nxt.add((paths + (p,), _freeze({**d1, **d2})))
        current = nxt
    return current


# ---------------------------------------------------------------------------
# Clauses, linear queries, queries
# ---------------------------------------------------------------------------


def _apply_match(clause: A.MatchClause, table: BindingTable, ctx: Ctx
                 ) -> BindingTable:
    matches = eval_graph_pattern(clause.pattern, ctx.current(), ctx)
    bindings = {mu for _paths, mu in matches}
    from .schema import graph_pattern_schema
    columns = table.columns | graph_pattern_schema(clause.pattern)
    rows = set()
    for row in table.rows:
        mu = dict(row)
        for mu2f in bindings:
            mu2 = dict(mu2f)
            if _compatible(mu, mu2):
                rows.add(_freeze({**mu, **mu2}))
    return BindingTable(columns, frozenset(rows))


def _apply_let(clause: A.LetClause, table: BindingTable, ctx: Ctx
               ) -> BindingTable:
    columns = table.columns | {clause.var}
    rows = set()
    for row in table.rows:
        mu = dict(row)
        for value in term_values(clause.term, mu, ctx):
            rows.add(_freeze({**mu, clause.var: value}))
    return BindingTable(columns, frozenset(rows))


def _apply_filter(clause: A.FilterClause, table: BindingTable, ctx: Ctx
                  ) -> BindingTable:
    rows = frozenset(row for row in table.rows
                     if eval_condition(clause.cond, dict(row), ctx))
    return BindingTable(table.columns, rows)


def _apply_return(items: tuple[A.ReturnItem, ...], table: BindingTable,
                  ctx: Ctx) -> BindingTable:
    columns = frozenset(item.name for item in items)
    rows = set()
    for row in table.rows:
        mu = dict(row)
        value_sets = []
        for item in items:
            value_sets.append([(item.name, v)
                               for v in term_values(item.term, mu, ctx)])
        import itertools as _it
        for combo in _it.product(*value_sets):
            rows.add(_freeze(dict(combo)))
    return BindingTable(columns, frozenset(rows))


def eval_query_on(q: A.Query, table: BindingTable, ctx: Ctx) -> BindingTable:
    if isinstance(q, A.LinearQuery):
        current = table
        local = ctx
        for step in q.steps:
            if isinstance(step, A.UseStep):
                local = local.with_graph(step.graph)
            elif isinstance(step, A.MatchClause):
                current = _apply_match(step, current, local)
            elif isinstance(step, A.LetClause):
                current = _apply_let(step, current, local)
            elif isinstance(step, A.ForClause):
                pass  # list unbinding cannot occur in the basic fragment
            elif isinstance(step, A.FilterClause):
                current = _apply_filter(step, current, local)
            else:
                raise TypeError(f"not a clause: {step!r}")
        return _apply_return(q.returns, current, local)
    if isinstance(q, A.UseThen):
        local = ctx.with_graph(q.graph)
        current = table
        for part in q.chain:
            current = eval_query_on(part, current, local)
        return current
    if isinstance(q, A.SetOp):
        left = eval_query_on(q.lhs, table, ctx)
        right = eval_query_on(q.rhs, table, ctx)
        if left.columns != right.columns:
            raise DomainMismatch(
                f"{q.op} over tables with columns {sorted(left.columns)} "
                f"vs {sorted(right.columns)}")
        if q.op == "intersect":
            rows = left.rows & right.rows
        elif q.op == "union":
            rows = left.rows | right.rows
        else:
            rows = left.rows - right.rows
        return BindingTable(left.columns, rows)
    raise TypeError(f"not a query: {q!r}")


def eval_query(q: A.Query, db: GraphDatabase, node_budget: int = 12,
               theory_mode: str | None = None) -> BindingTable:
    """Evaluate a whole query: the output is ⟦q⟧ applied to the unit table
    on the default graph."""
    from ..errors import NotBasic
    from .schema import classify
    if not classify(q).basic:
        raise NotBasic("query binds paths or lists; outside the basic fragment")
    ctx = Ctx(db, db.default, node_budget, theory_mode)
    return eval_query_on(q, BindingTable.unit(), ctx)
