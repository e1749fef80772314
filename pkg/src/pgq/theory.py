"""Concrete-domain atoms and linear-arithmetic existential elimination.

Three numeric theories are supported: linear integer arithmetic (LIA),
linear real arithmetic (LRA), and the real ordered field (ROF).
Arithmetic is exact everywhere: integers are arbitrary precision and
rationals are Fractions; no floating point is used.

Multiplication is a ROF operation. In the linear modes a product is
accepted only when at most one factor mentions a variable or property
access (scalar multiplication); anything else is a ModeError, and a
product involving the eliminated variable is NonLinear.

Values flowing in from the graph side: Int and integer-valued Rat satisfy
LIA; fractional values under LIA and strings in any numeric position are
a TypeMismatch. Structural values (node/edge ids, labels, keys), which
active-domain quantifiers legitimately sweep in, make a numeric atom
false rather than raising.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Union

from .errors import CapExceeded, ModeError, NonLinear, TypeMismatch
from .values import Value, numeric

LIA = "lia"
LRA = "lra"
ROF = "rof"
MODES = (LIA, LRA, ROF)


# ---------------------------------------------------------------------------
# Terms and atoms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VarRef:
    name: str


@dataclass(frozen=True)
class PropAccess:
    var: str
    key: str


@dataclass(frozen=True)
class NumConst:
    value: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True)
class Apply:
    func: str  # one of + - * abs
    args: tuple["MTerm", ...]

    def __post_init__(self) -> None:
        if self.func not in ("+", "-", "*", "abs"):
            raise ValueError(f"unknown function {self.func!r}")
        if self.func == "abs" and len(self.args) != 1:
            raise ValueError("abs takes one argument")
        if self.func == "-" and len(self.args) not in (1, 2):
            raise ValueError("- takes one or two arguments")


MTerm = Union[VarRef, PropAccess, NumConst, Apply]


@dataclass(frozen=True)
class MAtom:
    """Binary numeric atom; rel is one of = <= <."""

    rel: str
    lhs: MTerm
    rhs: MTerm

    def __post_init__(self) -> None:
        if self.rel not in ("=", "<=", "<"):
            raise ValueError(f"unknown relation {self.rel!r}")

    def variables(self) -> frozenset[str]:
        return term_variables(self.lhs) | term_variables(self.rhs)

    def rename(self, old: str, new: str) -> "MAtom":
        return MAtom(self.rel, rename_term(self.lhs, old, new),
                     rename_term(self.rhs, old, new))


def atom(rel: str, lhs: MTerm, rhs: MTerm) -> MAtom:
    """Build an atom, normalizing > and >= by swapping the sides."""
    if rel == ">":
        return MAtom("<", rhs, lhs)
    if rel == ">=":
        return MAtom("<=", rhs, lhs)
    return MAtom(rel, lhs, rhs)


def rename_term(t: MTerm, old: str, new: str) -> MTerm:
    if isinstance(t, VarRef):
        return VarRef(new) if t.name == old else t
    if isinstance(t, PropAccess):
        return PropAccess(new, t.key) if t.var == old else t
    if isinstance(t, Apply):
        return Apply(t.func, tuple(rename_term(a, old, new) for a in t.args))
    return t


def term_variables(t: MTerm) -> frozenset[str]:
    if isinstance(t, VarRef):
        return frozenset((t.name,))
    if isinstance(t, PropAccess):
        return frozenset((t.var,))
    if isinstance(t, NumConst):
        return frozenset()
    out: frozenset[str] = frozenset()
    for a in t.args:
        out |= term_variables(a)
    return out


def check_mode_term(t: MTerm, mode: str) -> None:
    """Reject non-scalar products outside ROF."""
    if isinstance(t, Apply):
        if t.func == "*" and mode != ROF:
            open_args = [a for a in t.args if term_variables(a)]
            if len(open_args) > 1:
                raise ModeError(f"product of variables requires {ROF} mode")
        for a in t.args:
            check_mode_term(a, mode)


class _NonNumericValue(Exception):
    """Structural (id/label/key) value in a numeric position."""


def _value_to_fraction(v: Value, mode: str) -> Fraction:
    if v.kind == "str":
        raise TypeMismatch(f"string value in numeric position: {v.data!r}")
    if not v.is_numeric():
        raise _NonNumericValue()
    frac = v.as_fraction()
    if mode == LIA and frac.denominator != 1:
        raise TypeMismatch(f"non-integer value {frac} under {LIA}")
    return frac


PropLookup = Callable[[str, str], Value | None]


def eval_term(
    t: MTerm,
    binding: Mapping[str, Value],
    mode: str,
    prop_lookup: PropLookup | None = None,
) -> Fraction:
    if isinstance(t, NumConst):
        if mode == LIA and t.value.denominator != 1:
            raise TypeMismatch(f"non-integer literal {t.value} under {LIA}")
        return t.value
    if isinstance(t, VarRef):
        if t.name not in binding:
            from .errors import UnboundVariable

            raise UnboundVariable(f"unbound theory variable {t.name!r}")
        return _value_to_fraction(binding[t.name], mode)
    if isinstance(t, PropAccess):
        if prop_lookup is None:
            raise TypeMismatch(f"no property context to resolve {t.var}.{t.key}")
        got = prop_lookup(t.var, t.key)
        if got is None:
            raise TypeMismatch(f"property {t.var}.{t.key} is not present")
        return _value_to_fraction(got, mode)
    args = [eval_term(a, binding, mode, prop_lookup) for a in t.args]
    if t.func == "+":
        return sum(args, Fraction(0))
    if t.func == "-":
        return -args[0] if len(args) == 1 else args[0] - args[1]
    if t.func == "abs":
        return abs(args[0])
    # product
    result = Fraction(1)
    for a in args:
        result *= a
    return result


def eval_atom(
    a: MAtom,
    binding: Mapping[str, Value],
    mode: str = LRA,
    prop_lookup: PropLookup | None = None,
) -> bool:
    """Exact truth value of a numeric atom under the given binding."""
    check_mode_term(a.lhs, mode)
    check_mode_term(a.rhs, mode)
    try:
        lhs = eval_term(a.lhs, binding, mode, prop_lookup)
        rhs = eval_term(a.rhs, binding, mode, prop_lookup)
    except _NonNumericValue:
        return False
    if a.rel == "=":
        return lhs == rhs
    if a.rel == "<=":
        return lhs <= rhs
    return lhs < rhs


# ---------------------------------------------------------------------------
# Linear forms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinExpr:
    """Σ coeff·var + const over Fractions."""

    coeffs: tuple[tuple[str, Fraction], ...]
    const: Fraction

    def coeff(self, var: str) -> Fraction:
        for v, c in self.coeffs:
            if v == var:
                return c
        return Fraction(0)

    def drop(self, var: str) -> "LinExpr":
        return LinExpr(tuple((v, c) for v, c in self.coeffs if v != var), self.const)


def _lin(coeffs: dict[str, Fraction], const: Fraction) -> LinExpr:
    items = tuple(sorted((v, c) for v, c in coeffs.items() if c != 0))
    return LinExpr(items, const)


def lin_add(a: LinExpr, b: LinExpr, sign: int = 1) -> LinExpr:
    coeffs = dict(a.coeffs)
    for v, c in b.coeffs:
        coeffs[v] = coeffs.get(v, Fraction(0)) + sign * c
    return _lin(coeffs, a.const + sign * b.const)


def lin_scale(a: LinExpr, factor: Fraction) -> LinExpr:
    return _lin({v: c * factor for v, c in a.coeffs}, a.const * factor)


def linearize(t: MTerm, eliminating: str | None = None) -> LinExpr:
    """Term → linear expression; abs must have been desugared already."""
    if isinstance(t, NumConst):
        return LinExpr((), t.value)
    if isinstance(t, VarRef):
        return LinExpr(((t.name, Fraction(1)),), Fraction(0))
    if isinstance(t, PropAccess):
        raise NonLinear("property access cannot appear in an eliminated body")
    if t.func == "+":
        out = LinExpr((), Fraction(0))
        for a in t.args:
            out = lin_add(out, linearize(a, eliminating))
        return out
    if t.func == "-":
        if len(t.args) == 1:
            return lin_scale(linearize(t.args[0], eliminating), Fraction(-1))
        return lin_add(linearize(t.args[0], eliminating), linearize(t.args[1], eliminating), -1)
    if t.func == "abs":
        raise NonLinear("abs must be desugared before linearization")
    # product: legal only when at most one factor is non-constant
    open_parts = [a for a in t.args if term_variables(a)]
    if len(open_parts) > 1:
        raise NonLinear("product of two non-constant terms")
    result = LinExpr((), Fraction(1))
    scalar = Fraction(1)
    varlike: LinExpr | None = None
    for a in t.args:
        sub = linearize(a, eliminating)
        if sub.coeffs:
            varlike = sub
        else:
            scalar *= sub.const
    if varlike is None:
        return LinExpr((), scalar)
    return lin_scale(varlike, scalar)


def lin_term(e: LinExpr) -> MTerm:
    """Rebuild an MTerm from a linear expression."""
    parts: list[MTerm] = []
    for v, c in e.coeffs:
        if c == 1:
            parts.append(VarRef(v))
        else:
            parts.append(Apply("*", (NumConst(c), VarRef(v))))
    if e.const != 0 or not parts:
        parts.append(NumConst(e.const))
    if len(parts) == 1:
        return parts[0]
    return Apply("+", tuple(parts))


# ---------------------------------------------------------------------------
# Fourier–Motzkin elimination
# ---------------------------------------------------------------------------

# internal boolean tree over (rel, LinExpr-lhs-minus-rhs) leaves:
#   leaf (rel, e) means e rel 0 with rel in {"=", "<=", "<"}.

_Leaf = tuple[str, LinExpr]


def _find_abs(t: MTerm) -> MTerm | None:
    if isinstance(t, Apply):
        if t.func == "abs":
            return t
        for a in t.args:
            got = _find_abs(a)
            if got is not None:
                return got
    return None


def _replace_term(t: MTerm, old: MTerm, new: MTerm) -> MTerm:
    if t == old:
        return new
    if isinstance(t, Apply):
        return Apply(t.func, tuple(_replace_term(a, old, new) for a in t.args))
    return t


def desugar_abs(formula):
    """Case-split every abs subterm: φ[|e|] → (e≥0 ∧ φ[e]) ∨ (e<0 ∧ φ[−e]).

    Works on logic formulas whose theory leaves are TheoryAtoms.
    """
    from .logic import ast as L

    def rewrite(phi):
        if isinstance(phi, L.TheoryAtom):
            a: MAtom = phi.atom  # type: ignore[assignment]
            for side in (a.lhs, a.rhs):
                hit = _find_abs(side)
                if hit is not None:
                    arg = hit.args[0]
                    pos = MAtom(
                        rel="<=", lhs=NumConst(Fraction(0)), rhs=arg)
                    neg = MAtom(rel="<", lhs=arg, rhs=NumConst(Fraction(0)))
                    a_pos = MAtom(a.rel, _replace_term(a.lhs, hit, arg),
                                  _replace_term(a.rhs, hit, arg))
                    a_neg = MAtom(a.rel, _replace_term(a.lhs, hit, Apply("-", (arg,))),
                                  _replace_term(a.rhs, hit, Apply("-", (arg,))))
                    return L.disj([
                        L.conj([L.TheoryAtom(pos, phi.mode),
                                rewrite(L.TheoryAtom(a_pos, phi.mode))]),
                        L.conj([L.TheoryAtom(neg, phi.mode),
                                rewrite(L.TheoryAtom(a_neg, phi.mode))]),
                    ])
            return phi
        if isinstance(phi, L.Not):
            return L.Not(rewrite(phi.body))
        if isinstance(phi, L.And):
            return L.conj([rewrite(p) for p in phi.parts])
        if isinstance(phi, L.Or):
            return L.disj([rewrite(p) for p in phi.parts])
        if isinstance(phi, L.Implies):
            return L.Implies(rewrite(phi.lhs), rewrite(phi.rhs))
        return phi

    return rewrite(formula)


def _to_leaves(phi, negated: bool, mode: str) -> list[list[_Leaf]]:
    """Negation normal form straight into DNF (list of conjunctions)."""
    from .logic import ast as L

    if isinstance(phi, L.TheoryAtom):
        a: MAtom = phi.atom  # type: ignore[assignment]
        diff = lin_add(linearize(a.lhs), linearize(a.rhs), -1)
        if not negated:
            return [[(a.rel, diff)]]
        if a.rel == "<=":  # ¬(e ≤ 0) ⇔ 0 < e
            return [[("<", lin_scale(diff, Fraction(-1)))]]
        if a.rel == "<":
            return [[("<=", lin_scale(diff, Fraction(-1)))]]
        # ¬(e = 0) ⇔ e < 0 ∨ 0 < e
        return [[("<", diff)], [("<", lin_scale(diff, Fraction(-1)))]]
    if isinstance(phi, L.Not):
        return _to_leaves(phi.body, not negated, mode)
    if isinstance(phi, L.Implies):
        return _to_leaves(L.Or((L.Not(phi.lhs), phi.rhs)), negated, mode)
    if isinstance(phi, (L.And, L.Or)):
        conjunctive = isinstance(phi, L.And) != negated
        branches = [_to_leaves(p, negated, mode) for p in phi.parts]
        if conjunctive:
            out: list[list[_Leaf]] = [[]]
            for br in branches:
                out = [a + b for a in out for b in br]
                if len(out) > 10_000:
                    raise CapExceeded("DNF blowup during elimination")
            return out
        merged: list[list[_Leaf]] = []
        for br in branches:
            merged.extend(br)
        return merged
    raise NonLinear(f"non-atomic construct in eliminated body: {type(phi).__name__}")


def _leaf_formula(rel: str, e: LinExpr, mode: str):
    from .logic import ast as L

    return L.TheoryAtom(MAtom(rel, lin_term(e), NumConst(Fraction(0))), mode)


def _eliminate_from_conj(leaves: list[_Leaf], var: str, mode: str) -> list[list[_Leaf]]:
    """Fourier–Motzkin on one conjunction; returns DNF of the result."""
    # substitute via the first equality involving var
    for i, (rel, e) in enumerate(leaves):
        c = e.coeff(var)
        if rel == "=" and c != 0:
            # var = -(e - c·var)/c
            rest = lin_scale(e.drop(var), Fraction(-1) / c)
            new: list[_Leaf] = []
            for j, (rel2, e2) in enumerate(leaves):
                if j == i:
                    continue
                c2 = e2.coeff(var)
                if c2 == 0:
                    new.append((rel2, e2))
                else:
                    new.append((rel2, lin_add(e2.drop(var), lin_scale(rest, c2))))
            return [new]
    lowers: list[tuple[LinExpr, bool]] = []  # bound ≤/< var
    uppers: list[tuple[LinExpr, bool]] = []  # var ≤/< bound
    rest: list[_Leaf] = []
    for rel, e in leaves:
        c = e.coeff(var)
        if c == 0:
            rest.append((rel, e))
            continue
        bound = lin_scale(e.drop(var), Fraction(-1) / c)
        strict = rel == "<"
        if c > 0:  # c·var + rest ⋈ 0  ⇔  var ⋈ bound
            uppers.append((bound, strict))
        else:
            lowers.append((bound, strict))
    out = list(rest)
    for lo, s1 in lowers:
        for up, s2 in uppers:
            diff = lin_add(lo, up, -1)  # lo - up ⋈ 0
            out.append(("<" if (s1 or s2) else "<=", diff))
    return [out]


def eliminate_exists_lra(phi) -> "object":
    """Eliminate a theory-domain ∃ from a quantifier-free linear body.

    Input: Exists(x, body, domain=theory) with body a boolean combination
    of LRA atoms over x and parameters. Output: an equivalent
    quantifier-free formula over the parameters only.
    """
    from .logic import ast as L

    if not isinstance(phi, L.Exists):
        raise NonLinear("eliminate_exists_lra expects an existential formula")
    var = phi.var
    for node in L.walk(phi.body):
        if isinstance(node, L.TheoryAtom) and node.mode not in (None, LRA):
            raise ModeError(f"elimination is implemented for {LRA} only")
        if isinstance(node, (L.Exists, L.Forall, L.Tc, L.SoExists, L.SoForall,
                             L.RelAtom, L.RelVarAtom, L.Eq)):
            raise NonLinear("body must be a boolean combination of theory atoms")
    body = desugar_abs(phi.body)
    disjuncts = _to_leaves(body, negated=False, mode=LRA)
    out_disjuncts = []
    for leaves in disjuncts:
        for reduced in _eliminate_from_conj(leaves, var, LRA):
            out_disjuncts.append(reduced)
    formulas = []
    for leaves in out_disjuncts:
        formulas.append(L.conj([_leaf_formula(rel, e, LRA) for rel, e in leaves])
                        if leaves else L.TRUE)
    if not formulas:
        return L.FALSE
    return L.disj(formulas)


# ---------------------------------------------------------------------------
# Parameter grids
# ---------------------------------------------------------------------------


def parameter_candidates(values: Iterable[Value], mode: str, widen: int = 0) -> list[Value]:
    """Finite search grid for read-only theory parameters.

    Numeric active-domain values, midpoints of adjacent ones, and one
    point beyond each extreme. Complete for guards whose satisfaction
    regions are finite unions of intervals with active-domain endpoints;
    `widen` adds that many extra integer steps outward.
    """
    numerics = sorted({v.as_fraction() for v in values if v.is_numeric()})
    grid: set[Fraction] = set(numerics)
    grid.add(Fraction(0))
    grid.add(Fraction(1))
    for a, b in zip(numerics, numerics[1:]):
        mid = (a + b) / 2
        if mode == LIA:
            stepped = a + 1
            if stepped < b:
                grid.add(stepped)
        else:
            grid.add(mid)
    if numerics:
        for step in range(1, widen + 2):
            grid.add(numerics[0] - step)
            grid.add(numerics[-1] + step)
    if mode == LIA:
        grid = {f for f in grid if f.denominator == 1}
    return [numeric(f) for f in sorted(grid)]
