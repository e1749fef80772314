"""Rewriting positive transitive closures into existential second order.

Each [TC_{ū,v̄}(body)](x̄,ȳ) becomes

    (x̄ = ȳ ∧ x̄ ∈ adom^k)
    ∨ ∃R^2k ( R(x̄,ȳ) ∧ strict-linear-order-on-field(R)
              ∧ x̄ minimal ∧ ȳ maximal
              ∧ ∀ū,v̄ (succ_R(ū,v̄) → body) )

i.e. R orders the tuples of one witnessing chain; its field is exactly
that chain, x̄ is the least and ȳ the greatest element, and consecutive
elements satisfy the step body. The first disjunct covers the reflexive
zero-step case (closure tuples must still lie in the active domain, which
the guard ∃a (a = x) expresses). Inner closures are rewritten first.
"""

from __future__ import annotations

import itertools

from .ast import (
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
    TheoryAtom,
    Var,
    check_positive_tc,
    conj,
    disj,
    exists_many,
    forall_many,
)


def tc_to_eso(phi: Formula) -> Formula:
    """Rewrite every TC into an ∃R block; input must be in FO+[TC]."""
    check_positive_tc(phi)
    counter = itertools.count()
    return _rewrite(phi, counter)


def _rewrite(phi: Formula, counter) -> Formula:
    if isinstance(phi, (Eq, RelAtom, RelVarAtom, TheoryAtom)):
        return phi
    if isinstance(phi, Not):
        return Not(_rewrite(phi.body, counter))
    if isinstance(phi, And):
        return And(tuple(_rewrite(p, counter) for p in phi.parts))
    if isinstance(phi, Or):
        return Or(tuple(_rewrite(p, counter) for p in phi.parts))
    if isinstance(phi, Implies):
        return Implies(_rewrite(phi.lhs, counter), _rewrite(phi.rhs, counter))
    if isinstance(phi, Exists):
        return Exists(phi.var, _rewrite(phi.body, counter), phi.domain)
    if isinstance(phi, Forall):
        return Forall(phi.var, _rewrite(phi.body, counter), phi.domain)
    if isinstance(phi, SoExists):
        return SoExists(phi.rel_var, phi.arity, _rewrite(phi.body, counter),
                        phi.support, phi.support_vars, phi.max_size, phi.distinct_pos)
    if isinstance(phi, SoForall):
        return SoForall(phi.rel_var, phi.arity, _rewrite(phi.body, counter),
                        phi.support, phi.support_vars, phi.max_size, phi.distinct_pos)
    if isinstance(phi, Tc):
        return _rewrite_tc(phi, counter)
    raise TypeError(f"not a formula: {phi!r}")


def _tuple_eq(lhs, rhs) -> Formula:
    return conj([Eq(a, b) for a, b in zip(lhs, rhs)])


def _tuple_neq(lhs, rhs) -> Formula:
    return disj([Not(Eq(a, b)) for a, b in zip(lhs, rhs)])


def _adom_member(term: Term, fresh: str) -> Formula:
    return Exists(fresh, Eq(Var(fresh), term))


def _rewrite_tc(phi: Tc, counter) -> Formula:
    body = _rewrite(phi.body, counter)
    k = len(phi.u_vars)
    n = next(counter)
    rel = f"$ord{n}"

    def tup(prefix: str) -> tuple[Var, ...]:
        return tuple(Var(f"${prefix}{n}_{i}") for i in range(k))

    def names(t: tuple[Var, ...]) -> list[str]:
        return [v.name for v in t]

    a, b, c, w = tup("a"), tup("b"), tup("c"), tup("w")

    def in_r(left, right) -> Formula:
        return RelVarAtom(rel, tuple(left) + tuple(right))

    antisym = forall_many(names(a) + names(b),
                          Implies(in_r(a, b), Not(in_r(b, a))))
    transitive = forall_many(
        names(a) + names(b) + names(c),
        Implies(And((in_r(a, b), in_r(b, c))), in_r(a, c)))

    def field(t) -> Formula:
        return exists_many(names(w), Or((in_r(t, w), in_r(w, t))))

    total = forall_many(
        names(a) + names(b),
        Implies(conj([field(a), field(b), _tuple_neq(a, b)]),
                Or((in_r(a, b), in_r(b, a)))))
    minimal = Not(exists_many(names(w), in_r(w, phi.x_args)))
    maximal = Not(exists_many(names(w), in_r(phi.y_args, w)))

    u = tuple(Var(v) for v in phi.u_vars)
    v = tuple(Var(v) for v in phi.v_vars)
    succ = And((in_r(u, v),
                Not(exists_many(names(w), And((in_r(u, w), in_r(w, v)))))))
    steps = forall_many(list(phi.u_vars) + list(phi.v_vars), Implies(succ, body))

    main = SoExists(rel, 2 * k, conj([
        in_r(phi.x_args, phi.y_args),
        antisym, transitive, total, minimal, maximal, steps,
    ]))

    zero = conj(
        [_tuple_eq(phi.x_args, phi.y_args)]
        + [_adom_member(t, f"$m{n}_{i}") for i, t in enumerate(phi.x_args)])
    return Or((zero, main))
