"""Unified formula AST for FO, FO[TC], SO/ESO, and theory-extended hybrids.

Quantifiers carry a domain flag: ACTIVE quantifiers range over the active
domain of the structure, THEORY quantifiers over the infinite numeric
domain of the ambient theory (they must be eliminated or grid-searched at
evaluation time). Second-order quantifiers may carry an optional support
formula: a formula over `arity` fresh variables delimiting the ground
atoms the quantified relation can mention. Evaluation enumerates subsets
of the support set. This is exact whenever the body entails membership of
every tuple of the relation in the support, which the query compiler
guarantees by construction.

Formulas are immutable; sharing across threads is safe. Formula nodes
compare by identity (structural comparison goes through the printer);
terms compare structurally.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Union

from ..errors import NotPositive
from ..values import Value

ACTIVE = "active"
THEORY = "theory"


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    value: Value


Term = Union[Var, Const]


@dataclass(frozen=True, eq=False)
class Eq:
    lhs: Term
    rhs: Term


@dataclass(frozen=True, eq=False)
class RelAtom:
    name: str
    terms: tuple[Term, ...]


@dataclass(frozen=True, eq=False)
class RelVarAtom:
    rel_var: str
    terms: tuple[Term, ...]


@dataclass(frozen=True, eq=False)
class Not:
    body: "Formula"


@dataclass(frozen=True, eq=False)
class And:
    parts: tuple["Formula", ...]


@dataclass(frozen=True, eq=False)
class Or:
    parts: tuple["Formula", ...]


@dataclass(frozen=True, eq=False)
class Implies:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True, eq=False)
class Exists:
    var: str
    body: "Formula"
    domain: str = ACTIVE


@dataclass(frozen=True, eq=False)
class Forall:
    var: str
    body: "Formula"
    domain: str = ACTIVE


@dataclass(frozen=True, eq=False)
class Tc:
    """[TC_{ū,v̄}(body)](x̄, ȳ) with |ū|=|v̄|=|x̄|=|ȳ|=k.

    Free variables of the body other than ū,v̄ are parameters, fixed by the
    ambient valuation. The closure is reflexive (zero-step sequences are
    allowed) and its tuples range over the active domain.
    """

    u_vars: tuple[str, ...]
    v_vars: tuple[str, ...]
    body: "Formula"
    x_args: tuple[Term, ...]
    y_args: tuple[Term, ...]

    def __post_init__(self) -> None:
        k = len(self.u_vars)
        if not (len(self.v_vars) == len(self.x_args) == len(self.y_args) == k) or k == 0:
            raise ValueError("TC tuple dimensions disagree")
        if len(set(self.u_vars) | set(self.v_vars)) != 2 * k:
            raise ValueError("TC step variables must be distinct")


@dataclass(frozen=True, eq=False)
class SoExists:
    rel_var: str
    arity: int
    body: "Formula"
    support: "Formula | None" = None
    support_vars: tuple[str, ...] = ()
    # structural cardinality bound: None, or "nodes"/"edges" when the body
    # forces at most one tuple per node/edge of the structure
    max_size: str | None = None
    # position at which the body forces pairwise-distinct components
    # (functionality), letting evaluation skip conflicting subsets
    distinct_pos: int | None = None


@dataclass(frozen=True, eq=False)
class SoForall:
    rel_var: str
    arity: int
    body: "Formula"
    support: "Formula | None" = None
    support_vars: tuple[str, ...] = ()
    max_size: str | None = None
    distinct_pos: int | None = None


@dataclass(frozen=True, eq=False)
class TheoryAtom:
    """Opaque handle into the embedded theory: a binary numeric atom."""

    atom: object  # theory.MAtom; kept loose to avoid a module cycle
    mode: str | None = None


Formula = Union[
    Eq, RelAtom, RelVarAtom, Not, And, Or, Implies,
    Exists, Forall, Tc, SoExists, SoForall, TheoryAtom,
]

TRUE = And(())
FALSE = Or(())


def conj(parts) -> Formula:
    flat: list[Formula] = []
    for p in parts:
        if isinstance(p, And):
            flat.extend(p.parts)
        else:
            flat.append(p)
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def disj(parts) -> Formula:
    flat: list[Formula] = []
    for p in parts:
        if isinstance(p, Or):
            flat.extend(p.parts)
        else:
            flat.append(p)
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


def exists_many(names, body: Formula, domain: str = ACTIVE) -> Formula:
    for name in reversed(list(names)):
        body = Exists(name, body, domain)
    return body


def forall_many(names, body: Formula, domain: str = ACTIVE) -> Formula:
    for name in reversed(list(names)):
        body = Forall(name, body, domain)
    return body


def term_vars(t: Term) -> frozenset[str]:
    return frozenset((t.name,)) if isinstance(t, Var) else frozenset()


@lru_cache(maxsize=None)
def free_vars(phi: Formula) -> frozenset[str]:
    """First-order free variables (cached; ASTs are immutable)."""
    if isinstance(phi, Eq):
        return term_vars(phi.lhs) | term_vars(phi.rhs)
    if isinstance(phi, (RelAtom, RelVarAtom)):
        out: frozenset[str] = frozenset()
        for t in phi.terms:
            out |= term_vars(t)
        return out
    if isinstance(phi, Not):
        return free_vars(phi.body)
    if isinstance(phi, (And, Or)):
        out = frozenset()
        for p in phi.parts:
            out |= free_vars(p)
        return out
    if isinstance(phi, Implies):
        return free_vars(phi.lhs) | free_vars(phi.rhs)
    if isinstance(phi, (Exists, Forall)):
        return free_vars(phi.body) - {phi.var}
    if isinstance(phi, Tc):
        inner = free_vars(phi.body) - set(phi.u_vars) - set(phi.v_vars)
        for t in phi.x_args + phi.y_args:
            inner |= term_vars(t)
        return inner
    if isinstance(phi, (SoExists, SoForall)):
        out = free_vars(phi.body)
        if phi.support is not None:
            out |= free_vars(phi.support) - set(phi.support_vars)
        return out
    if isinstance(phi, TheoryAtom):
        return frozenset(phi.atom.variables())  # type: ignore[attr-defined]
    raise TypeError(f"not a formula: {phi!r}")


@lru_cache(maxsize=None)
def free_rel_vars(phi: Formula) -> frozenset[str]:
    if isinstance(phi, RelVarAtom):
        return frozenset((phi.rel_var,))
    if isinstance(phi, (Eq, RelAtom, TheoryAtom)):
        return frozenset()
    if isinstance(phi, Not):
        return free_rel_vars(phi.body)
    if isinstance(phi, (And, Or)):
        out: frozenset[str] = frozenset()
        for p in phi.parts:
            out |= free_rel_vars(p)
        return out
    if isinstance(phi, Implies):
        return free_rel_vars(phi.lhs) | free_rel_vars(phi.rhs)
    if isinstance(phi, (Exists, Forall)):
        return free_rel_vars(phi.body)
    if isinstance(phi, Tc):
        return free_rel_vars(phi.body)
    if isinstance(phi, (SoExists, SoForall)):
        out = free_rel_vars(phi.body) - {phi.rel_var}
        if phi.support is not None:
            out |= free_rel_vars(phi.support)
        return out
    raise TypeError(f"not a formula: {phi!r}")


def has_so(phi: Formula) -> bool:
    return any(isinstance(n, (SoExists, SoForall, RelVarAtom)) for n in walk(phi))


def has_tc(phi: Formula) -> bool:
    return any(isinstance(n, Tc) for n in walk(phi))


def walk(phi: Formula):
    """Yield every node of the formula tree (pre-order)."""
    yield phi
    if isinstance(phi, Not):
        yield from walk(phi.body)
    elif isinstance(phi, (And, Or)):
        for p in phi.parts:
            yield from walk(p)
    elif isinstance(phi, Implies):
        yield from walk(phi.lhs)
        yield from walk(phi.rhs)
    elif isinstance(phi, (Exists, Forall)):
        yield from walk(phi.body)
    elif isinstance(phi, Tc):
        yield from walk(phi.body)
    elif isinstance(phi, (SoExists, SoForall)):
        yield from walk(phi.body)
        if phi.support is not None:
            yield from walk(phi.support)


def rename_var(phi: Formula, old: str, new: str) -> Formula:
    """Rename a free first-order variable; stops at shadowing binders."""

    def term(t: Term) -> Term:
        if isinstance(t, Var) and t.name == old:
            return Var(new)
        return t

    if isinstance(phi, Eq):
        return Eq(term(phi.lhs), term(phi.rhs))
    if isinstance(phi, RelAtom):
        return RelAtom(phi.name, tuple(term(t) for t in phi.terms))
    if isinstance(phi, RelVarAtom):
        return RelVarAtom(phi.rel_var, tuple(term(t) for t in phi.terms))
    if isinstance(phi, Not):
        return Not(rename_var(phi.body, old, new))
    if isinstance(phi, And):
        return And(tuple(rename_var(p, old, new) for p in phi.parts))
    if isinstance(phi, Or):
        return Or(tuple(rename_var(p, old, new) for p in phi.parts))
    if isinstance(phi, Implies):
        return Implies(rename_var(phi.lhs, old, new), rename_var(phi.rhs, old, new))
    if isinstance(phi, (Exists, Forall)):
        if phi.var == old:
            return phi
        return type(phi)(phi.var, rename_var(phi.body, old, new), phi.domain)
    if isinstance(phi, Tc):
        body = phi.body
        if old not in phi.u_vars and old not in phi.v_vars:
            body = rename_var(body, old, new)
        return Tc(phi.u_vars, phi.v_vars, body,
                  tuple(term(t) for t in phi.x_args),
                  tuple(term(t) for t in phi.y_args))
    if isinstance(phi, (SoExists, SoForall)):
        support = phi.support
        if support is not None and old not in phi.support_vars:
            support = rename_var(support, old, new)
        return type(phi)(phi.rel_var, phi.arity, rename_var(phi.body, old, new),
                         support, phi.support_vars, phi.max_size, phi.distinct_pos)
    if isinstance(phi, TheoryAtom):
        return TheoryAtom(phi.atom.rename(old, new), phi.mode)  # type: ignore[attr-defined]
    raise TypeError(f"not a formula: {phi!r}")


def alpha_away(phi: Formula, name: str, fresh) -> Formula:
    """Rename every binder of `name` (and its bound occurrences) to a fresh
    variable, so that renaming a free variable to `name` cannot capture."""
    if isinstance(phi, (Eq, RelAtom, RelVarAtom, TheoryAtom)):
        return phi
    if isinstance(phi, Not):
        return Not(alpha_away(phi.body, name, fresh))
    if isinstance(phi, And):
        return And(tuple(alpha_away(p, name, fresh) for p in phi.parts))
    if isinstance(phi, Or):
        return Or(tuple(alpha_away(p, name, fresh) for p in phi.parts))
    if isinstance(phi, Implies):
        return Implies(alpha_away(phi.lhs, name, fresh),
                       alpha_away(phi.rhs, name, fresh))
    if isinstance(phi, (Exists, Forall)):
        body = phi.body
        var = phi.var
        if var == name:
            var = fresh()
            body = rename_var(body, name, var)
        return type(phi)(var, alpha_away(body, name, fresh), phi.domain)
    if isinstance(phi, Tc):
        u_vars, v_vars, body = phi.u_vars, phi.v_vars, phi.body
        if name in u_vars or name in v_vars:
            new = fresh()
            body = rename_var(body, name, new)
            u_vars = tuple(new if v == name else v for v in u_vars)
            v_vars = tuple(new if v == name else v for v in v_vars)
        return Tc(u_vars, v_vars, alpha_away(body, name, fresh),
                  phi.x_args, phi.y_args)
    if isinstance(phi, (SoExists, SoForall)):
        support = phi.support
        support_vars = phi.support_vars
        if support is not None:
            if name in support_vars:
                new = fresh()
                support = rename_var(support, name, new)
                support_vars = tuple(new if v == name else v for v in support_vars)
            support = alpha_away(support, name, fresh)
        return type(phi)(phi.rel_var, phi.arity,
                         alpha_away(phi.body, name, fresh), support, support_vars,
                         phi.max_size, phi.distinct_pos)
    raise TypeError(f"not a formula: {phi!r}")


def check_positive_tc(phi: Formula, negations: int = 0) -> None:
    """Raise NotPositive unless every TC sits under an even number of
    negations (an Implies left side counts as one)."""
    if isinstance(phi, Tc):
        if negations % 2 == 1:
            raise NotPositive("TC under an odd number of negations")
        check_positive_tc(phi.body, negations)
    elif isinstance(phi, Not):
        check_positive_tc(phi.body, negations + 1)
    elif isinstance(phi, (And, Or)):
        for p in phi.parts:
            check_positive_tc(p, negations)
    elif isinstance(phi, Implies):
        check_positive_tc(phi.lhs, negations + 1)
        check_positive_tc(phi.rhs, negations)
    elif isinstance(phi, (Exists, Forall)):
        check_positive_tc(phi.body, negations)
    elif isinstance(phi, (SoExists, SoForall)):
        check_positive_tc(phi.body, negations)
        if phi.support is not None:
            check_positive_tc(phi.support, negations)


def is_positive_tc(phi: Formula) -> bool:
    try:
        check_positive_tc(phi)
    except NotPositive:
        return False
    return True
