"""Compilation of queries into transitive-closure and second-order logic
over the relational encoding.

Restrictor-free queries become FO[TC]: pattern atoms translate to guarded
relation atoms over Node/Edir/Eundir/src/tgt/property/label (per-graph
tagged when a database is in play; condition lookups use the untagged
union relations), concatenation joins through an existential node, union
is disjunction, bounded repetition unrolls, and unbounded repetition is a
Node-guarded transitive closure — the closure alone is reflexive on every
active-domain value, so the source is pinned to a node, matching the
single-node base case of the repetition semantics.

Restrictors existentially quantify a ternary step relation R over the
pattern's own step support:

    acyclic π   ∃R (ψ_acyclic(R) ∧ φ^R_π)    ψ: valid steps, functional,
                                              injective, cycle-free
    trail π     ∃R (ψ_trail(R) ∧ φ^R_π)      ψ: valid steps, one traversal
                                              per edge
    shortest π  ∃R (ψ_chain(R,s,t) ∧ φ^R_π ∧ ∀S (ψ_chain ∧ φ^S_π →
                                              not shorter(S,R)))

where φ^R conjoins R(u,e,v) onto every edge atom and `shorter` compares
chain lengths by a lockstep transitive closure over pairs of positions
(an S=∅ disjunct covers zero-length paths). A semantically redundant copy
of the unrestricted pattern translation is conjoined outside each ∃R as a
candidate generator for the evaluator.

Exactness notes: the acyclic encoding agrees with the reference on every
basic pattern. A ternary step set cannot count edge uses, so the trail
and shortest encodings are exact for patterns whose repetitions have
lower bound ≤ 1 and whose bounded runs of edge atoms are short (two on
loop-free graphs); tests pin both the guaranteed class and the known
divergence shape.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from .. import theory
from ..errors import NotBasic, NotRestrictorFree, TypeMismatch, UnsupportedFeature
from ..graph import (
    EDIR_REL,
    EUNDIR_REL,
    LABEL_REL,
    NODE_REL,
    PROPERTY_REL,
    SRC_REL,
    TGT_REL,
    tagged,
)
from ..logic import ast as L
from ..logic.rewrite import tc_to_eso
from ..values import Value, key as key_const, label as label_const
from . import ast as A
from .schema import classify, pattern_schema, query_schema

FOTC = "fotc"
ESO = "eso"
SO = "so"


@dataclass(frozen=True)
class CompiledQuery:
    formula: L.Formula
    free_vars: tuple[str, ...]
    target: str
    source_spans: dict = field(default_factory=dict, compare=False, repr=False)


@dataclass
class _Table:
    """Table formula: free variables are exactly the column variables plus
    any protected (correlated) outer variables."""

    formula: L.Formula
    cols: dict[str, str]  # column name → formula variable


class _Compiler:
    def __init__(self, graph_tag: str | None, theory_mode: str | None,
                 so_allowed: bool, protected: frozenset[str] = frozenset()):
        self.tag = graph_tag
        self.theory_mode = theory_mode
        self.so_allowed = so_allowed
        self.protected = protected
        self._counter = itertools.count()
        self.spans: dict[int, A.Span] = {}
        self.used_so = False
        self.used_so_forall = False

    def fresh(self, hint: str = "v") -> str:
        return f"${hint}{next(self._counter)}"

    def rel(self, name: str, *terms: L.Term) -> L.Formula:
        return L.RelAtom(tagged(name, self.tag), tuple(terms))

    def shared(self, name: str, *terms: L.Term) -> L.Formula:
        # untagged union relation: condition lookups are database-wide
        return L.RelAtom(name, tuple(terms))

    # -- path patterns -------------------------------------------------------

    def pattern(self, pi: A.PathPattern, s: str, t: str,
                so_rel: str | None = None) -> L.Formula:
        """φ_π(s, t, sch(π)), with step atoms confined to so_rel if given."""
        if isinstance(pi, A.NodePat):
            parts = [self.rel(NODE_REL, L.Var(s)), L.Eq(L.Var(s), L.Var(t))]
            if pi.label is not None:
                parts.append(self.rel(LABEL_REL, L.Var(s),
                                      L.Const(label_const(pi.label))))
            if pi.var is not None:
                parts.append(L.Eq(L.Var(pi.var), L.Var(s)))
            return L.conj(parts)
        if isinstance(pi, A.EdgePat):
            x = pi.var or self.fresh("e")
            parts = [
                self.rel(EUNDIR_REL if pi.direction == A.UNDIRECTED else EDIR_REL,
                         L.Var(x)),
                self.rel(NODE_REL, L.Var(s)),
                self.rel(NODE_REL, L.Var(t)),
            ]
            if pi.direction == A.FORWARD:
                parts.append(self.rel(SRC_REL, L.Var(x), L.Var(s)))
                parts.append(self.rel(TGT_REL, L.Var(x), L.Var(t)))
            elif pi.direction == A.BACKWARD:
                parts.append(self.rel(SRC_REL, L.Var(x), L.Var(t)))
                parts.append(self.rel(TGT_REL, L.Var(x), L.Var(s)))
            else:
                parts.append(L.Or((
                    L.And((self.rel(SRC_REL, L.Var(x), L.Var(s)),
                           self.rel(TGT_REL, L.Var(x), L.Var(t)))),
                    L.And((self.rel(SRC_REL, L.Var(x), L.Var(t)),
                           self.rel(TGT_REL, L.Var(x), L.Var(s)))),
                )))
            if pi.label is not None:
                parts.append(self.rel(LABEL_REL, L.Var(x),
                                      L.Const(label_const(pi.label))))
            if so_rel is not None:
                parts.append(L.RelVarAtom(so_rel, (L.Var(s), L.Var(x), L.Var(t))))
            body = L.conj(parts)
            if pi.var is None:
                body = L.Exists(x, body)
            return body
        if isinstance(pi, A.Concat):
            return self._concat(pi.parts, s, t, so_rel)
        if isinstance(pi, A.PatternUnion):
            return L.disj([self.pattern(pi.lhs, s, t, so_rel),
                           self.pattern(pi.rhs, s, t, so_rel)])
        if isinstance(pi, A.Where):
            return L.conj([self.pattern(pi.body, s, t, so_rel),
                           self.condition(pi.cond,
                                          {v: v for v in pattern_schema(pi.body)})])
        if isinstance(pi, A.Repeat):
            return self._repeat(pi, s, t, so_rel)
        raise TypeError(f"not a path pattern: {pi!r}")

    def _concat(self, parts, s: str, t: str, so_rel) -> L.Formula:
        if len(parts) == 1:
            return self.pattern(parts[0], s, t, so_rel)
        mid = self.fresh("n")
        left = self.pattern(parts[0], s, mid, so_rel)
        right = self._concat(parts[1:], mid, t, so_rel)
        return L.Exists(mid, L.conj([self.rel(NODE_REL, L.Var(mid)), left, right]))

    def _power(self, body: A.PathPattern, k: int, s: str, t: str, so_rel
               ) -> L.Formula:
        """π^k: k-fold concatenation; k = 0 is a single node."""
        if k == 0:
            return L.conj([self.rel(NODE_REL, L.Var(s)), L.Eq(L.Var(s), L.Var(t))])
        names = [s] + [self.fresh("n") for _ in range(k - 1)] + [t]
        parts = [self.pattern(body, names[i], names[i + 1], so_rel)
                 for i in range(k)]
        inner = L.conj(
            [self.rel(NODE_REL, L.Var(n)) for n in names[1:-1]] + parts)
        return L.exists_many(names[1:-1], inner)

    def _repeat(self, pi: A.Repeat, s: str, t: str, so_rel) -> L.Formula:
        if pattern_schema(pi.body):
            raise NotBasic(
                "variables under repetition bind lists; outside the basic fragment")
        if pi.hi is not None:
            return L.disj([self._power(pi.body, k, s, t, so_rel)
                           for k in range(pi.lo, pi.hi + 1)])
        # π^{lo..∞} = π^lo · π^{0..∞}; the closure is Node-guarded because a
        # reflexive TC alone would accept any active-domain value at s = t
        u, v = self.fresh("u"), self.fresh("v")
        step = self.pattern(pi.body, u, v, so_rel)
        closure = L.conj([
            self.rel(NODE_REL, L.Var(s)),
            L.Tc((u,), (v,), step, (L.Var(s),), (L.Var(t),)),
        ])
        if pi.lo == 0:
            return closure
        mid = self.fresh("n")
        prefix = self._power(pi.body, pi.lo, s, mid, so_rel)
        tail = L.conj([
            self.rel(NODE_REL, L.Var(mid)),
            L.Tc((u,), (v,), step, (L.Var(mid),), (L.Var(t),)),
        ])
        return L.Exists(mid, L.conj([self.rel(NODE_REL, L.Var(mid)), prefix, tail]))

    # -- conditions ------------------------------------------------------------

    def condition(self, cond: A.Condition, scope: dict[str, str]) -> L.Formula:
        if isinstance(cond, A.HasLabel):
            return self.shared(LABEL_REL, L.Var(scope.get(cond.var, cond.var)),
                               L.Const(label_const(cond.label)))
        if isinstance(cond, A.CondNot):
            return L.Not(self.condition(cond.body, scope))
        if isinstance(cond, A.CondAnd):
            return L.conj([self.condition(cond.lhs, scope),
                           self.condition(cond.rhs, scope)])
        if isinstance(cond, A.CondOr):
            return L.disj([self.condition(cond.lhs, scope),
                           self.condition(cond.rhs, scope)])
        if isinstance(cond, A.ExistsCond):
            return self._exists_condition(cond, scope)
        if isinstance(cond, A.TermEq):
            if not (isinstance(cond.lhs, A.ArithTerm)
                    or isinstance(cond.rhs, A.ArithTerm)):
                return self._plain_equality(cond, scope)
            return self._numeric_condition("=", cond.lhs, cond.rhs, scope)
        if isinstance(cond, A.Compare):
            return self._numeric_condition(cond.op, cond.lhs, cond.rhs, scope)
        raise TypeError(f"not a condition: {cond!r}")

    def _plain_equality(self, cond: A.TermEq, scope) -> L.Formula:
        lhs, rhs = cond.lhs, cond.rhs
        # normalize property access to the left
        if isinstance(rhs, A.PropTerm) and not isinstance(lhs, A.PropTerm):
            lhs, rhs = rhs, lhs
        if isinstance(lhs, A.PropTerm):
            x = L.Var(scope.get(lhs.var, lhs.var))
            k = L.Const(key_const(lhs.key))
            if isinstance(rhs, A.PropTerm):
                y = L.Var(scope.get(rhs.var, rhs.var))
                k2 = L.Const(key_const(rhs.key))
                p = self.fresh("p")
                return L.Exists(p, L.And((
                    self.shared(PROPERTY_REL, x, k, L.Var(p)),
                    self.shared(PROPERTY_REL, y, k2, L.Var(p)))))
            value = self._term_to_logic(rhs, scope)
            return self.shared(PROPERTY_REL, x, k, value)
        return L.Eq(self._term_to_logic(lhs, scope), self._term_to_logic(rhs, scope))

    def _term_to_logic(self, term: A.GqlTerm, scope) -> L.Term:
        if isinstance(term, A.VarTerm):
            return L.Var(scope.get(term.name, term.name))
        if isinstance(term, A.ConstTerm):
            return L.Const(term.value)
        raise TypeError(f"term does not denote a first-order value: {term!r}")

    def _numeric_condition(self, op: str, lhs: A.GqlTerm, rhs: A.GqlTerm,
                           scope) -> L.Formula:
        """M-condition: property reads become guarded value variables, the
        comparison becomes an exact theory atom over them."""
        prop_vars: list[tuple[str, L.Formula]] = []

        def to_mterm(term: A.GqlTerm) -> theory.MTerm:
            if isinstance(term, A.VarTerm):
                return theory.VarRef(scope.get(term.name, term.name))
            if isinstance(term, A.ConstTerm):
                if not term.value.is_numeric():
                    raise TypeMismatch(
                        f"non-numeric constant under an arithmetic comparison: "
                        f"{term.value}")
                return theory.NumConst(term.value.as_fraction())
            if isinstance(term, A.PropTerm):
                p = self.fresh("p")
                guard = self.shared(
                    PROPERTY_REL, L.Var(scope.get(term.var, term.var)),
                    L.Const(key_const(term.key)), L.Var(p))
                prop_vars.append((p, guard))
                return theory.VarRef(p)
            ops = {"+": "+", "-": "-", "*": "*", "abs": "abs", "neg": "-"}
            return theory.Apply(ops[term.op], tuple(to_mterm(a) for a in term.args))

        atom = theory.MAtom(op, to_mterm(lhs), to_mterm(rhs))
        body = L.conj([g for _p, g in prop_vars]
                      + [L.TheoryAtom(atom, self.theory_mode)])
        return L.exists_many([p for p, _g in prop_vars], body)

    def _exists_condition(self, cond: A.ExistsCond, scope) -> L.Formula:
        inner = _Compiler(self.tag, self.theory_mode, self.so_allowed,
                          protected=self.protected | frozenset(scope.values()))
        inner._counter = self._counter  # keep fresh names globally unique
        seed = _Table(L.TRUE, dict(scope))
        result = inner.query(cond.query, seed)
        self.used_so |= inner.used_so
        self.used_so_forall |= inner.used_so_forall
        out_vars = [result.cols[c] for c in sorted(result.cols)]
        return L.exists_many(out_vars, result.formula)

    # -- restrictors --------------------------------------------------------------

    def _step_support(self, pi: A.PathPattern, names: tuple[str, str, str]
                      ) -> L.Formula:
        """Union of the pattern's step shapes over (source, edge, target)."""
        a, e, b = names
        shapes: dict[tuple[str, Optional[str]], L.Formula] = {}

        def visit(p: A.PathPattern) -> None:
            if isinstance(p, A.EdgePat):
                key = (p.direction, p.label)
                if key in shapes:
                    return
                parts = [self.rel(
                    EUNDIR_REL if p.direction == A.UNDIRECTED else EDIR_REL,
                    L.Var(e))]
                if p.direction == A.FORWARD:
                    parts += [self.rel(SRC_REL, L.Var(e), L.Var(a)),
                              self.rel(TGT_REL, L.Var(e), L.Var(b))]
                elif p.direction == A.BACKWARD:
                    parts += [self.rel(SRC_REL, L.Var(e), L.Var(b)),
                              self.rel(TGT_REL, L.Var(e), L.Var(a))]
                else:
                    parts.append(L.Or((
                        L.And((self.rel(SRC_REL, L.Var(e), L.Var(a)),
                               self.rel(TGT_REL, L.Var(e), L.Var(b)))),
                        L.And((self.rel(SRC_REL, L.Var(e), L.Var(b)),
                               self.rel(TGT_REL, L.Var(e), L.Var(a)))),
                    )))
                if p.label is not None:
                    parts.append(self.rel(LABEL_REL, L.Var(e),
                                          L.Const(label_const(p.label))))
                shapes[key] = L.conj(parts)
            elif isinstance(p, A.Concat):
                for q in p.parts:
                    visit(q)
            elif isinstance(p, A.PatternUnion):
                visit(p.lhs)
                visit(p.rhs)
            elif isinstance(p, (A.Repeat, A.Where)):
                visit(p.body)

        visit(pi)
        return L.disj(list(shapes.values())) if shapes else L.FALSE

    def _r_atom(self, rel: str, a: str, e: str, b: str) -> L.Formula:
        return L.RelVarAtom(rel, (L.Var(a), L.Var(e), L.Var(b)))

    def _psi_validity(self, rel: str, support: L.Formula,
                      names: tuple[str, str, str]) -> L.Formula:
        a, e, b = names
        return L.forall_many([a, e, b],
                             L.Implies(self._r_atom(rel, a, e, b), support))

    def _psi_functional(self, rel: str) -> L.Formula:
        a, e, b, e2, b2 = (self.fresh(h) for h in "aebfc")
        return L.forall_many([a, e, b, e2, b2], L.Implies(
            L.And((self._r_atom(rel, a, e, b), self._r_atom(rel, a, e2, b2))),
            L.And((L.Eq(L.Var(e), L.Var(e2)), L.Eq(L.Var(b), L.Var(b2))))))

    def _psi_injective(self, rel: str) -> L.Formula:
        a, e, b, a2, e2 = (self.fresh(h) for h in "aebcd")
        return L.forall_many([a, e, b, a2, e2], L.Implies(
            L.And((self._r_atom(rel, a, e, b), self._r_atom(rel, a2, e2, b))),
            L.And((L.Eq(L.Var(a), L.Var(a2)), L.Eq(L.Var(e), L.Var(e2))))))

    def _psi_one_triple_per_edge(self, rel: str) -> L.Formula:
        a, e, b, a2, b2 = (self.fresh(h) for h in "aebcd")
        return L.forall_many([a, e, b, a2, b2], L.Implies(
            L.And((self._r_atom(rel, a, e, b), self._r_atom(rel, a2, e, b2))),
            L.And((L.Eq(L.Var(a), L.Var(a2)), L.Eq(L.Var(b), L.Var(b2))))))

    def _reach(self, rel: str, frm: L.Term, to: L.Term) -> L.Formula:
        p, q, f = self.fresh("p"), self.fresh("q"), self.fresh("f")
        step = L.Exists(f, self._r_atom(rel, p, f, q))
        return L.Tc((p,), (q,), step, (frm,), (to,))

    def _psi_acyclic_steps(self, rel: str) -> L.Formula:
        a, e, b = (self.fresh(h) for h in "aeb")
        return L.forall_many([a, e, b], L.Implies(
            self._r_atom(rel, a, e, b),
            L.Not(self._reach(rel, L.Var(b), L.Var(a)))))

    def _psi_empty(self, rel: str) -> L.Formula:
        a, e, b = (self.fresh(h) for h in "aeb")
        return L.forall_many([a, e, b], L.Not(self._r_atom(rel, a, e, b)))

    def _psi_chain(self, rel: str, s: str, t: str, support: L.Formula,
                   names) -> L.Formula:
        """R is exactly one simple chain s→t (s≠t), or ∅ / one simple cycle
        through s (s=t); chain length is then the cardinality of R."""
        base = [self._psi_validity(rel, support, names),
                self._psi_functional(rel), self._psi_injective(rel)]
        a, e, b = (self.fresh(h) for h in "aeb")
        no_in_s = L.forall_many([e, b], L.Not(self._r_atom(rel, b, e, s)))
        no_out_t = L.forall_many([e, b], L.Not(self._r_atom(rel, t, e, b)))
        spans_chain = L.forall_many([a, e, b], L.Implies(
            self._r_atom(rel, a, e, b),
            L.And((self._reach(rel, L.Var(s), L.Var(a)),
                   self._reach(rel, L.Var(b), L.Var(t))))))
        chain = L.conj(base + [no_in_s, no_out_t, spans_chain,
                               L.Not(L.Eq(L.Var(s), L.Var(t)))])
        a2, e2, b2 = (self.fresh(h) for h in "aeb")
        through_s = L.forall_many([a2, e2, b2], L.Implies(
            self._r_atom(rel, a2, e2, b2),
            L.And((self._reach(rel, L.Var(s), L.Var(a2)),
                   self._reach(rel, L.Var(b2), L.Var(s))))))
        loop = L.conj(base + [through_s, L.Eq(L.Var(s), L.Var(t))])
        empty = L.conj([self._psi_empty(rel), L.Eq(L.Var(s), L.Var(t))])
        return L.disj([chain, loop, empty])

    def _shorter(self, s_rel: str, r_rel: str, s: str, t: str) -> L.Formula:
        """len(S) < len(R) for two chain/cycle instantiations sharing the
        endpoints, via a lockstep closure over pairs of positions."""
        p1, p2, q1, q2 = (self.fresh(h) for h in ("p", "p", "q", "q"))
        f1, f2 = self.fresh("f"), self.fresh("f")
        r_step = L.Exists(f1, self._r_atom(r_rel, p1, f1, q1))
        s_step = L.Exists(f2, self._r_atom(s_rel, p2, f2, q2))
        a = self.fresh("a")
        # chains (s ≠ t): S exhausts at t while R is elsewhere
        pair_step = L.And((r_step, s_step))
        chain_case = L.Exists(a, L.conj([
            L.Not(L.Eq(L.Var(a), L.Var(t))),
            L.Tc((p1, p2), (q1, q2), pair_step,
                 (L.Var(s), L.Var(s)), (L.Var(a), L.Var(t))),
        ]))
        # cycles (s = t): block either component from stepping out of s
        # mid-walk, take one explicit first step, and ask for (≠s, s)
        blocked = L.conj([
            L.Not(L.Eq(L.Var(p1), L.Var(s))),
            L.Not(L.Eq(L.Var(p2), L.Var(s))),
            r_step, s_step,
        ])
        a1, b1, e1, e2, az = (self.fresh(h) for h in ("a", "b", "f", "f", "a"))
        cycle_case = L.exists_many([a1, b1, az], L.conj([
            L.Exists(e1, self._r_atom(r_rel, s, e1, a1)),
            L.Exists(e2, self._r_atom(s_rel, s, e2, b1)),
            L.Not(L.Eq(L.Var(az), L.Var(s))),
            L.Tc((p1, p2), (q1, q2), blocked,
                 (L.Var(a1), L.Var(b1)), (L.Var(az), L.Var(s))),
        ]))
        a3, e3, b3 = (self.fresh(h) for h in "aeb")
        nonempty_r = L.exists_many([a3, e3, b3], self._r_atom(r_rel, a3, e3, b3))
        s_empty_case = L.conj([self._psi_empty(s_rel), nonempty_r])
        branch = L.disj([
            L.conj([L.Not(L.Eq(L.Var(s), L.Var(t))), chain_case]),
            L.conj([L.Eq(L.Var(s), L.Var(t)), cycle_case]),
        ])
        return L.disj([s_empty_case, branch])

    @staticmethod
    def _min_len(pi: A.PathPattern) -> int:
        if isinstance(pi, A.NodePat):
            return 0
        if isinstance(pi, A.EdgePat):
            return 1
        if isinstance(pi, A.Concat):
            return sum(_Compiler._min_len(p) for p in pi.parts)
        if isinstance(pi, A.PatternUnion):
            return min(_Compiler._min_len(pi.lhs), _Compiler._min_len(pi.rhs))
        if isinstance(pi, A.Repeat):
            return pi.lo * _Compiler._min_len(pi.body)
        if isinstance(pi, A.Where):
            return _Compiler._min_len(pi.body)
        raise TypeError(f"not a path pattern: {pi!r}")

    def path_spec(self, spec: A.PathSpec, scope_hint: str = "") -> L.Formula:
        """φ_ξ(sch) for one restricted path spec: ∃s,t around the pattern
        translation, wrapped in the restrictor encoding when present."""
        if spec.binder is not None:
            raise NotBasic("path bindings are outside the basic fragment")
        s, t = self.fresh("s"), self.fresh("t")
        r = spec.restrictor
        if r.is_none:
            return L.exists_many([s, t], self.pattern(spec.pattern, s, t))
        if not self.so_allowed:
            raise NotRestrictorFree(
                f"restrictor {r.keyword()!r} needs the second-order pipeline")
        self.used_so = True
        rel = self.fresh("R")
        names = (self.fresh("a"), self.fresh("e"), self.fresh("b"))
        support = self._step_support(spec.pattern, names)
        confined = self.pattern(spec.pattern, s, t, so_rel=rel)
        plain = self.pattern(spec.pattern, s, t)
        if r.mode == "acyclic" and self._min_len(spec.pattern) >= 1:
            # a node-simple path of positive length cannot close a loop
            plain = L.conj([plain, L.Not(L.Eq(L.Var(s), L.Var(t)))])
        if r.shortest:
            self.used_so_forall = True
            psi_r = self._psi_chain(rel, s, t, support, names)
            s_rel = self.fresh("S")
            names2 = (self.fresh("a"), self.fresh("e"), self.fresh("b"))
            support2 = self._step_support(spec.pattern, names2)
            psi_s = self._psi_chain(s_rel, s, t, support2, names2)
            confined_s = self.pattern(spec.pattern, s, t, so_rel=s_rel)
            if r.mode == "acyclic":
                psi_r = L.conj([psi_r, self._psi_acyclic_steps(rel)])
                psi_s = L.conj([psi_s, self._psi_acyclic_steps(s_rel)])
            elif r.mode == "trail":
                psi_r = L.conj([psi_r, self._psi_one_triple_per_edge(rel)])
                psi_s = L.conj([psi_s, self._psi_one_triple_per_edge(s_rel)])
            minimal = L.SoForall(
                s_rel, 3,
                L.Implies(L.conj([psi_s, confined_s]),
                          L.Not(self._shorter(s_rel, rel, s, t))),
                support=support2, support_vars=names2, max_size="nodes",
                distinct_pos=0)
            body = L.conj([psi_r, confined, minimal])
            return L.exists_many([s, t], L.conj([
                plain,
                L.SoExists(rel, 3, body, support=support, support_vars=names,
                           max_size="nodes", distinct_pos=0),
            ]))
        if r.mode == "acyclic":
            psi = L.conj([self._psi_validity(rel, support, names),
                          self._psi_functional(rel),
                          self._psi_injective(rel),
                          self._psi_acyclic_steps(rel)])
            bound = "nodes"  # functional step sets have one triple per source
            distinct = 0
        else:  # trail
            psi = L.conj([self._psi_validity(rel, support, names),
                          self._psi_one_triple_per_edge(rel)])
            bound = "edges"
            distinct = 1
        return L.exists_many([s, t], L.conj([
            plain,
            L.SoExists(rel, 3, L.conj([psi, confined]),
                       support=support, support_vars=names, max_size=bound,
                       distinct_pos=distinct),
        ]))

    # -- clauses, linear queries, queries ---------------------------------------

    def graph_pattern(self, xi: A.GraphPattern) -> L.Formula:
        return L.conj([self.path_spec(spec) for spec in xi.parts])

    def _let_value(self, term: A.GqlTerm, var: str, scope) -> L.Formula:
        """x = χ as a conjunct; property terms bind through the property
        relation, so rows where the key is missing drop out."""
        if isinstance(term, A.PropTerm):
            return self.shared(
                PROPERTY_REL, L.Var(scope.get(term.var, term.var)),
                L.Const(key_const(term.key)), L.Var(var))
        if isinstance(term, A.ArithTerm):
            return self._numeric_condition("=", A.VarTerm(var), term,
                                           {**scope, var: var})
        return L.Eq(L.Var(var), self._term_to_logic(term, scope))

    def clause(self, c: A.Clause, table: _Table) -> _Table:
        if isinstance(c, A.MatchClause):
            from .schema import graph_pattern_schema
            pattern_vars = graph_pattern_schema(c.pattern)
            # the pattern formula uses the user variable names; align any
            # shared table column onto the same name so the join holds
            formula = table.formula
            cols = dict(table.cols)
            for name in sorted(pattern_vars):
                if name in cols and cols[name] != name:
                    formula = L.alpha_away(formula, name,
                                           lambda: self.fresh("q"))
                    formula = L.rename_var(formula, cols[name], name)
                    cols[name] = name
            phi = self.graph_pattern(c.pattern)
            self.spans[id(phi)] = c.span
            for v in pattern_vars:
                cols.setdefault(v, v)
            return _Table(L.conj([formula, phi]), cols)
        if isinstance(c, A.LetClause):
            cols = dict(table.cols)
            cols[c.var] = c.var
            value = self._let_value(c.term, c.var, table.cols)
            return _Table(L.conj([table.formula, value]), cols)
        if isinstance(c, A.ForClause):
            return table  # pass-through in the basic fragment
        if isinstance(c, A.FilterClause):
            phi = self.condition(c.cond, table.cols)
            self.spans[id(phi)] = c.span
            return _Table(L.conj([table.formula, phi]), table.cols)
        raise TypeError(f"not a clause: {c!r}")

    def linear(self, q: A.LinearQuery, table: _Table) -> _Table:
        saved_tag = self.tag
        try:
            for step in q.steps:
                if isinstance(step, A.UseStep):
                    # single-graph compilations keep untagged relations
                    self.tag = None if self._single else step.graph
                else:
                    table = self.clause(step, table)
            # return: fresh output variables equated with the return terms,
            # all other table variables projected away
            out_cols: dict[str, str] = {}
            eqs: list[L.Formula] = []
            for item in q.returns:
                ov = self.fresh("o")
                out_cols[item.name] = ov
                eqs.append(self._let_value(item.term, ov, table.cols))
            inner_vars = [v for v in table.cols.values()
                          if v not in self.protected]
            body = L.conj([table.formula] + eqs)
            return _Table(L.exists_many(sorted(set(inner_vars)), body), out_cols)
        finally:
            self.tag = saved_tag

    def query(self, q: A.Query, table: _Table) -> _Table:
        if isinstance(q, A.LinearQuery):
            return self.linear(q, table)
        if isinstance(q, A.UseThen):
            saved = self.tag
            self.tag = q.graph if not self._single else None
            try:
                current = table
                for part in q.chain:
                    current = self.query(part, current)
                return current
            finally:
                self.tag = saved
        if isinstance(q, A.SetOp):
            left = self.query(q.lhs, table)
            right = self.query(q.rhs, table)
            if set(left.cols) != set(right.cols):
                from ..errors import DomainMismatch
                raise DomainMismatch(
                    f"{q.op} branches have columns {sorted(left.cols)} "
                    f"vs {sorted(right.cols)}")
            rhs_formula = right.formula
            for name, var in right.cols.items():
                target = left.cols[name]
                if var != target:
                    rhs_formula = L.rename_var(rhs_formula, var, target)
            if q.op == "intersect":
                return _Table(L.conj([left.formula, rhs_formula]), left.cols)
            if q.op == "union":
                return _Table(L.disj([left.formula, rhs_formula]), left.cols)
            return _Table(L.conj([left.formula, L.Not(rhs_formula)]), left.cols)
        raise TypeError(f"not a query: {q!r}")

    _single = True


def _finalize(comp: _Compiler, result: _Table, target: str) -> CompiledQuery:
    formula = result.formula
    free = []
    for name in sorted(result.cols):
        var = result.cols[name]
        if var != name:
            # inner binders of the output name would capture the rename
            formula = L.alpha_away(formula, name, lambda: comp.fresh("q"))
            formula = L.rename_var(formula, var, name)
        free.append(name)
    return CompiledQuery(formula, tuple(free), target, comp.spans)


def compile_query(q: A.Query, graph_names: tuple[str, ...] | None = None,
                  default_graph: str | None = None,
                  theory_mode: str | None = None) -> CompiledQuery:
    """Basic restrictor-free query → FO[TC] formula over sch(q)."""
    cls = classify(q)
    if not cls.basic:
        raise NotBasic("query binds paths or lists")
    if not cls.restrictor_free:
        raise NotRestrictorFree("query uses restrictors; compile for SO instead")
    comp = _make_compiler(graph_names, default_graph, theory_mode, so_allowed=False)
    result = comp.query(q, _Table(L.TRUE, {}))
    return _finalize(comp, result, FOTC)


def compile_query_so(q: A.Query, graph_names: tuple[str, ...] | None = None,
                     default_graph: str | None = None,
                     theory_mode: str | None = None,
                     target: str | None = None) -> CompiledQuery:
    """Basic query → SO/ESO formula; restrictor-free queries reuse the
    FO[TC] translation (rewritten via tc_to_eso when ESO is the target)."""
    cls = classify(q)
    if not cls.basic:
        raise NotBasic("query binds paths or lists")
    uses_shortest = _uses_shortest(q)
    if target is None:
        target = ESO if (cls.positive and not uses_shortest) else SO
    if cls.restrictor_free:
        base = compile_query(q, graph_names, default_graph, theory_mode)
        if target == ESO:
            return CompiledQuery(tc_to_eso(base.formula), base.free_vars, ESO,
                                 base.source_spans)
        return CompiledQuery(base.formula, base.free_vars, SO, base.source_spans)
    comp = _make_compiler(graph_names, default_graph, theory_mode, so_allowed=True)
    result = comp.query(q, _Table(L.TRUE, {}))
    if target == ESO and comp.used_so_forall:
        raise NotRestrictorFree(
            "shortest requires universal second-order quantification; "
            "target must be so")
    return _finalize(comp, result, ESO if target == ESO else SO)


def _uses_shortest(q: A.Query) -> bool:
    if isinstance(q, A.LinearQuery):
        for step in q.steps:
            if isinstance(step, A.MatchClause):
                for spec in step.pattern.parts:
                    if spec.restrictor.shortest:
                        return True
        return False
    if isinstance(q, A.UseThen):
        return any(_uses_shortest(part) for part in q.chain)
    if isinstance(q, A.SetOp):
        return _uses_shortest(q.lhs) or _uses_shortest(q.rhs)
    return False


def _make_compiler(graph_names, default_graph, theory_mode, so_allowed) -> _Compiler:
    single = graph_names is None
    tag = None if single else (default_graph or graph_names[0])
    comp = _Compiler(tag, theory_mode, so_allowed)
    comp._single = single
    return comp


def compile_path_pattern(pi: A.PathPattern, graph_tag: str | None = None,
                         theory_mode: str | None = None
                         ) -> tuple[L.Formula, str, str]:
    """φ_π(s, t, sch(π)) for a standalone pattern; returns the formula and
    the fresh endpoint variable names."""
    comp = _Compiler(graph_tag, theory_mode, so_allowed=False)
    comp._single = graph_tag is None
    s, t = comp.fresh("s"), comp.fresh("t")
    return comp.pattern(pi, s, t), s, t


def hardness_fixture() -> A.Query:
    """The acyclic even-length-path query: simple-path semantics for the
    language (aa)*, the standard NP-hardness witness family."""
    from .parser import parse_query
    return parse_query("match acyclic (x)(-[]->-[]->){1..inf}(y) return x, y")
