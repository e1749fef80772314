"""S-expression round trips for the formula syntax."""

import random

import pytest

from pgq.errors import ParseError
from pgq.logic import parse_formula, print_formula
from pgq.logic import ast as L
from pgq import theory
from pgq.values import integer, label, node_id, rational, string


def roundtrip(text: str) -> str:
    return print_formula(parse_formula(text))


def test_equality_atom():
    phi = parse_formula("(= x x)")
    assert isinstance(phi, L.Eq)
    assert phi.lhs == L.Var("x") and phi.rhs == L.Var("x")
    assert roundtrip("(= x x)") == "(= x x)"


def test_rpq_reachability_formula():
    text = "(tc (u) (v) (rel E u v) (x) (y))"
    phi = parse_formula(text)
    assert isinstance(phi, L.Tc)
    assert phi.u_vars == ("u",) and phi.v_vars == ("v",)
    assert roundtrip(text) == text


def test_constant_forms():
    phi = parse_formula('(and (= x #n:n1) (= y #e:e1) (= z "hi") (= a 3) (= b -7/3) (= c lbl:Town) (= d key:name))')
    consts = [p.rhs.value for p in phi.parts]
    assert consts == [node_id("n1"), edge_id_val("e1"), string("hi"), integer(3),
                      rational(-7, 3), label("Town"), key_val("name")]


def edge_id_val(name):
    from pgq.values import edge_id
    return edge_id(name)


def key_val(name):
    from pgq.values import key
    return key(name)


def test_theory_atom_round_trip():
    text = "(theory lra (< (+ x 1) y))"
    phi = parse_formula(text)
    assert isinstance(phi, L.TheoryAtom)
    assert phi.mode == theory.LRA
    assert roundtrip(text) == text


def test_star_quantifiers_round_trip():
    text = "(exists* p (theory lra (<= p x)))"
    phi = parse_formula(text)
    assert phi.domain == L.THEORY
    assert roundtrip(text) == text


def test_so_with_support_round_trip():
    text = "(so-exists R 2 (rvar R x y) (a b) (rel E a b))"
    phi = parse_formula(text)
    assert phi.support is not None and phi.support_vars == ("a", "b")
    assert roundtrip(text) == text


def test_parse_errors():
    for bad in ["", "(= x)", "(tc (u) (v) (rel E u v) (x))", "(frob x)",
                "(exists 3 (= x x))", "(and (= x x)", '(= x "open']:
        with pytest.raises(ParseError):
            parse_formula(bad)


def test_comments_ignored():
    phi = parse_formula("; header comment\n(= x y) ; trailing")
    assert isinstance(phi, L.Eq)


# -- randomized round trip -----------------------------------------------------

_NAMES = ["x", "y", "z", "u1", "v1", "w"]
_RELS = ["E", "Node", "src", "label"]
_CONSTS = [node_id("n1"), string("a b"), integer(-4), rational(1, 3), label("T")]


def random_term(rng):
    if rng.random() < 0.5:
        return L.Var(rng.choice(_NAMES))
    return L.Const(rng.choice(_CONSTS))


def random_mterm(rng, depth):
    if depth <= 0 or rng.random() < 0.4:
        if rng.random() < 0.5:
            return theory.VarRef(rng.choice(_NAMES))
        return theory.NumConst(rational(rng.randint(-9, 9), rng.randint(1, 5)).data)
    func = rng.choice(["+", "-", "*", "abs"])
    n_args = 1 if func == "abs" else rng.choice([1, 2] if func == "-" else [2, 3])
    return theory.Apply(func, tuple(random_mterm(rng, depth - 1) for _ in range(n_args)))


def random_formula(rng, depth):
    if depth <= 0:
        kind = rng.choice(["eq", "rel", "theory"])
        if kind == "eq":
            return L.Eq(random_term(rng), random_term(rng))
        if kind == "rel":
            return L.RelAtom(rng.choice(_RELS),
                             tuple(random_term(rng) for _ in range(rng.randint(0, 3))))
        return L.TheoryAtom(
            theory.MAtom(rng.choice(["=", "<=", "<"]),
                         random_mterm(rng, 2), random_mterm(rng, 2)),
            rng.choice([None, "lia", "lra", "rof"]))
    kind = rng.choice(["not", "and", "or", "implies", "exists", "forall",
                       "tc", "so", "rvar"])
    if kind == "not":
        return L.Not(random_formula(rng, depth - 1))
    if kind in ("and", "or"):
        parts = tuple(random_formula(rng, depth - 1) for _ in range(rng.randint(0, 3)))
        return (L.And if kind == "and" else L.Or)(parts)
    if kind == "implies":
        return L.Implies(random_formula(rng, depth - 1), random_formula(rng, depth - 1))
    if kind in ("exists", "forall"):
        cls = L.Exists if kind == "exists" else L.Forall
        return cls(rng.choice(_NAMES), random_formula(rng, depth - 1),
                   rng.choice([L.ACTIVE, L.THEORY]))
    if kind == "tc":
        k = rng.randint(1, 2)
        u = tuple(f"u{i}" for i in range(k))
        v = tuple(f"v{i}" for i in range(k))
        return L.Tc(u, v, random_formula(rng, depth - 1),
                    tuple(random_term(rng) for _ in range(k)),
                    tuple(random_term(rng) for _ in range(k)))
    if kind == "so":
        cls = rng.choice([L.SoExists, L.SoForall])
        if rng.random() < 0.3:
            k = rng.randint(1, 2)
            sup_vars = tuple(f"s{i}" for i in range(k))
            return cls("R", k, random_formula(rng, depth - 1),
                       L.RelAtom("E", tuple(L.Var(n) for n in sup_vars)), sup_vars)
        return cls("R", rng.randint(1, 3), random_formula(rng, depth - 1))
    return L.RelVarAtom("R", tuple(random_term(rng) for _ in range(rng.randint(1, 2))))


def test_print_parse_identity_on_random_formulas():
    rng = random.Random(20240817)
    for _ in range(1000):
        phi = random_formula(rng, rng.randint(0, 4))
        text = print_formula(phi)
        assert print_formula(parse_formula(text)) == text
