"""Exact numeric atoms, hybrid evaluation, and Fourier–Motzkin elimination."""

import random
from fractions import Fraction

import pytest

from pgq import theory
from pgq.errors import ModeError, NonActiveQuantifier, NonLinear, TypeMismatch
from pgq.graph import make_structure
from pgq.logic import EvalSettings, eval_formula, parse_formula, print_formula
from pgq.logic import ast as L
from pgq.theory import Apply, MAtom, NumConst, PropAccess, VarRef, atom, eval_atom
from pgq.values import integer, node_id, rational, string


def n(x):
    return NumConst(Fraction(x))


def test_flooded_disc_arithmetic():
    # (x-x2)^2 + (y-y2)^2 > r^2 at x=0,x2=3,y=0,y2=4,r=4: 25 > 16
    lhs = Apply("+", (
        Apply("*", (Apply("-", (VarRef("x"), VarRef("x2"))),) * 2),
        Apply("*", (Apply("-", (VarRef("y"), VarRef("y2"))),) * 2),
    ))
    rhs = Apply("*", (VarRef("r"), VarRef("r")))
    a = atom(">", lhs, rhs)
    binding = {"x": integer(0), "x2": integer(3), "y": integer(0),
               "y2": integer(4), "r": integer(4)}
    assert eval_atom(a, binding, theory.ROF)
    binding["r"] = integer(5)
    assert not eval_atom(a, binding, theory.ROF)


def test_zero_leq_zero():
    assert eval_atom(atom("<=", n(0), n(0)), {}, theory.LIA)


def test_manhattan_filter_matches_big_rational_recomputation():
    # |x1.x - y1.x| + |x1.y - y1.y| < c on fixture coordinates
    coords = {"x1": (Fraction(0), Fraction(0)), "y1": (Fraction(5), Fraction(1))}

    def lookup(var, key):
        x, y = coords[var]
        return rational(x) if key == "x-coord" else rational(y)

    lhs = Apply("+", (
        Apply("abs", (Apply("-", (PropAccess("x1", "x-coord"),
                                  PropAccess("y1", "x-coord"))),)),
        Apply("abs", (Apply("-", (PropAccess("x1", "y-coord"),
                                  PropAccess("y1", "y-coord"))),)),
    ))
    binding = {"x1": node_id("n1"), "y1": node_id("n3")}
    # independent recomputation with Fraction arithmetic
    expected = abs(coords["x1"][0] - coords["y1"][0]) + \
        abs(coords["x1"][1] - coords["y1"][1])
    assert expected == Fraction(6)
    assert eval_atom(atom("<", lhs, n(7)), binding, theory.LRA, lookup)
    assert not eval_atom(atom("<", lhs, n(6)), binding, theory.LRA, lookup)


def test_string_in_numeric_position_raises():
    with pytest.raises(TypeMismatch):
        eval_atom(atom("<", VarRef("x"), n(1)), {"x": string("five")}, theory.LRA)


def test_structural_values_make_atoms_false():
    assert not eval_atom(atom("<", VarRef("x"), n(1)),
                         {"x": node_id("n1")}, theory.LRA)


def test_lia_rejects_fractions():
    with pytest.raises(TypeMismatch):
        eval_atom(atom("<", VarRef("x"), n(1)), {"x": rational(1, 2)}, theory.LIA)
    # integer-valued rationals are integers
    assert eval_atom(atom("<=", VarRef("x"), n(3)), {"x": rational(6, 2)}, theory.LIA)


def test_products_of_variables_need_rof():
    a = atom("<", Apply("*", (VarRef("x"), VarRef("y"))), n(10))
    with pytest.raises(ModeError):
        eval_atom(a, {"x": integer(2), "y": integer(3)}, theory.LRA)
    assert eval_atom(a, {"x": integer(2), "y": integer(3)}, theory.ROF)
    # scalar multiplication is linear
    b = atom("<", Apply("*", (n(2), VarRef("x"))), n(10))
    assert eval_atom(b, {"x": integer(3)}, theory.LRA)


# -- elimination ---------------------------------------------------------------


def _exists(var, body):
    return L.Exists(var, body, L.THEORY)


def _atom_f(rel, lhs, rhs):
    return L.TheoryAtom(MAtom(rel, lhs, rhs), theory.LRA)


def test_interval_nonemptiness():
    # ∃z (x ≤ z ∧ z ≤ y)  ⇔  x ≤ y
    body = L.And((_atom_f("<=", VarRef("x"), VarRef("z")),
                  _atom_f("<=", VarRef("z"), VarRef("y"))))
    out = theory.eliminate_exists_lra(_exists("z", body))
    s = make_structure({})
    for x, y in [(0, 1), (1, 0), (2, 2)]:
        expected = x <= y
        got = eval_formula(out, s, {"x": integer(x), "y": integer(y)},
                           EvalSettings(theory_mode=theory.LRA))
        assert got == expected


def test_strict_interval():
    # ∃z (z < x ∧ y < z)  ⇔  y < x
    body = L.And((_atom_f("<", VarRef("z"), VarRef("x")),
                  _atom_f("<", VarRef("y"), VarRef("z"))))
    out = theory.eliminate_exists_lra(_exists("z", body))
    s = make_structure({})
    for x, y in [(0, 1), (1, 0), (2, 2)]:
        got = eval_formula(out, s, {"x": integer(x), "y": integer(y)},
                           EvalSettings(theory_mode=theory.LRA))
        assert got == (y < x)


def test_eliminated_variable_absent():
    body = L.Or((
        L.And((_atom_f("<=", VarRef("x"), VarRef("z")),
               _atom_f("<", VarRef("z"), n(5)))),
        L.Not(_atom_f("=", VarRef("z"), VarRef("y"))),
    ))
    out = theory.eliminate_exists_lra(_exists("z", body))
    for node in L.walk(out):
        if isinstance(node, L.TheoryAtom):
            assert "z" not in node.atom.variables()


def test_nonlinear_rejected():
    body = _atom_f("<", Apply("*", (VarRef("z"), VarRef("z"))), n(4))
    with pytest.raises(NonLinear):
        theory.eliminate_exists_lra(_exists("z", body))


def _random_linear_term(rng, vars_, depth=2):
    if depth == 0 or rng.random() < 0.4:
        if rng.random() < 0.5:
            return VarRef(rng.choice(vars_))
        return NumConst(Fraction(rng.randint(-6, 6), rng.randint(1, 4)))
    op = rng.choice(["+", "-", "-u", "abs", "*c"])
    if op == "+":
        return Apply("+", (_random_linear_term(rng, vars_, depth - 1),
                           _random_linear_term(rng, vars_, depth - 1)))
    if op == "-":
        return Apply("-", (_random_linear_term(rng, vars_, depth - 1),
                           _random_linear_term(rng, vars_, depth - 1)))
    if op == "-u":
        return Apply("-", (_random_linear_term(rng, vars_, depth - 1),))
    if op == "abs":
        return Apply("abs", (_random_linear_term(rng, vars_, depth - 1),))
    return Apply("*", (NumConst(Fraction(rng.randint(-3, 3))),
                       _random_linear_term(rng, vars_, depth - 1)))


def _random_body(rng):
    vars_ = ["z", "a", "b"]
    atoms = []
    for _ in range(3):
        atoms.append(_atom_f(rng.choice(["=", "<=", "<"]),
                             _random_linear_term(rng, vars_),
                             _random_linear_term(rng, vars_)))
    shape = rng.random()
    if shape < 0.4:
        return L.And(tuple(atoms))
    if shape < 0.7:
        return L.Or((L.And(tuple(atoms[:2])), atoms[2]))
    return L.And((atoms[0], L.Not(L.Or((atoms[1], atoms[2])))))


def _feasible_1d(body, params):
    """Exact feasibility oracle: truth of ∃z body(z, params) over ℚ.

    The truth value of the body is piecewise constant between the roots of
    its atoms in z, so testing every root, midpoints between consecutive
    roots, and points beyond the extremes decides feasibility exactly.
    """
    def atom_root(a):
        diff = theory.lin_add(theory.linearize(a.atom.lhs),
                              theory.linearize(a.atom.rhs), -1)
        c = diff.coeff("z")
        if c == 0:
            return None
        rest = diff.drop("z")
        val = rest.const + sum(co * params[v] for v, co in rest.coeffs)
        return -val / c

    desugared = theory.desugar_abs(body)
    roots = []
    for node in L.walk(desugared):
        if isinstance(node, L.TheoryAtom):
            r = atom_root(node)
            if r is not None:
                roots.append(r)
    roots = sorted(set(roots))
    candidates = list(roots)
    candidates.append(Fraction(0))
    if roots:
        candidates.append(roots[0] - 1)
        candidates.append(roots[-1] + 1)
        for a, b in zip(roots, roots[1:]):
            candidates.append((a + b) / 2)
    binding = {v: rational(val) for v, val in params.items()}
    s = make_structure({})
    st = EvalSettings(theory_mode=theory.LRA)
    for z in candidates:
        trial = dict(binding)
        trial["z"] = rational(z)
        if eval_formula(body, s, trial, st):
            return True
    return False


def test_elimination_agrees_with_feasibility_oracle():
    rng = random.Random(1234)
    s = make_structure({})
    st = EvalSettings(theory_mode=theory.LRA)
    cases = 0
    points = 0
    while cases < 25:
        body = _random_body(rng)
        try:
            out = theory.eliminate_exists_lra(_exists("z", body))
        except NonLinear:
            continue
        cases += 1
        for _ in range(40):
            params = {"a": Fraction(rng.randint(-40, 40), rng.randint(1, 6)),
                      "b": Fraction(rng.randint(-40, 40), rng.randint(1, 6))}
            got = eval_formula(out, s,
                               {k: rational(v) for k, v in params.items()}, st)
            assert got == _feasible_1d(body, params)
            points += 1
    assert points == 1000


def test_unrestricted_quantifier_without_grid_raises():
    s = make_structure({"P": {(integer(1),)}})
    phi = L.Exists("z", L.And((L.RelAtom("P", (L.Var("z"),)),)), L.THEORY)
    with pytest.raises(NonActiveQuantifier):
        eval_formula(phi, s, settings=EvalSettings(theory_mode=theory.LRA))


def test_grid_quantifier_finds_interval_witness():
    s = make_structure({"value": {(string("a"), integer(0)),
                                  (string("b"), integer(9))}})
    # ∃*p: both stored values within 5 of p  (witness p = 9/2 midpoint)
    phi = parse_formula(
        "(exists* p (forall x (forall w (implies (rel value x w)"
        " (and (theory lra (<= (- w p) 5)) (theory lra (<= (- p w) 5)))))))")
    st = EvalSettings(theory_mode=theory.LRA, theory_grid=True)
    assert eval_formula(phi, s, settings=st)
    s2 = make_structure({"value": {(string("a"), integer(0)),
                                   (string("b"), integer(11))}})
    assert not eval_formula(phi, s2, settings=st)


def test_exactness_no_floats_randomized_field_laws():
    rng = random.Random(99)
    for _ in range(200):
        vals = [Fraction(rng.randint(-50, 50), rng.randint(1, 12)) for _ in range(3)]
        a, b, c = vals
        assert (a + b) + c == a + (b + c)
        assert a * (b + c) == a * b + a * c
        t = Apply("+", (Apply("*", (n(a), n(b))), Apply("*", (n(a), n(c)))))
        got = theory.eval_term(t, {}, theory.ROF)
        assert isinstance(got, Fraction) and got == a * (b + c)


def _random_closed_formula(rng):
    """Random sentence over E/P with all variables quantifier-bound."""
    vars_ = ["x", "y", "w"]

    def leaf():
        kind = rng.random()
        if kind < 0.5:
            return L.RelAtom("E", (L.Var(rng.choice(vars_)), L.Var(rng.choice(vars_))))
        if kind < 0.8:
            return L.RelAtom("P", (L.Var(rng.choice(vars_)),))
        return L.Eq(L.Var(rng.choice(vars_)), L.Var(rng.choice(vars_)))

    def tree(depth):
        if depth == 0:
            return leaf()
        pick = rng.random()
        if pick < 0.3:
            return L.And((tree(depth - 1), tree(depth - 1)))
        if pick < 0.6:
            return L.Or((tree(depth - 1), tree(depth - 1)))
        if pick < 0.75:
            return L.Not(tree(depth - 1))
        return L.Tc(("u1",), ("v1",),
                    L.RelAtom("E", (L.Var("u1"), L.Var("v1"))),
                    (L.Var(rng.choice(vars_)),), (L.Var(rng.choice(vars_)),))

    body = tree(rng.randint(1, 3))
    for v in vars_:
        body = (L.Exists if rng.random() < 0.5 else L.Forall)(v, body)
    return body


def test_theory_session_is_conservative_over_plain_formulas():
    """A theory-mode session evaluates theory-free formulas exactly like
    the plain session, on 500 random formula/structure pairs."""
    rng = random.Random(5)
    names = [string(c) for c in "abcd"]
    plain = EvalSettings()
    hybrid = EvalSettings(theory_mode=theory.LRA, theory_grid=True)
    for _ in range(500):
        edges = {(rng.choice(names), rng.choice(names))
                 for _ in range(rng.randint(0, 6))}
        points = {(rng.choice(names),) for _ in range(rng.randint(0, 3))}
        s = make_structure({"E": edges, "P": points}, {"E": 2, "P": 1})
        phi = _random_closed_formula(rng)
        assert eval_formula(phi, s, settings=plain) == \
            eval_formula(phi, s, settings=hybrid)
