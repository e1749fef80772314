"""TC → existential-second-order rewriting."""

import itertools

import pytest

from pgq.errors import NotPositive
from pgq.graph import make_structure
from pgq.logic import EvalSettings, eval_all, parse_formula, print_formula, tc_to_eso
from pgq.logic import ast as L
from pgq.values import string

SO = EvalSettings(so_cap=600)


def all_structures(n_elems, relations=("E",)):
    elems = [string(c) for c in "abc"[:n_elems]]
    pair_space = list(itertools.product(elems, repeat=2))
    row_choices = []
    for _name in relations:
        row_choices.append([frozenset(p for p, b in zip(pair_space, bits) if b)
                            for bits in itertools.product([0, 1], repeat=len(pair_space))])
    for combo in itertools.product(*row_choices):
        yield make_structure(dict(zip(relations, combo)),
                             {name: 2 for name in relations})


def test_tc_free_formula_unchanged():
    phi = parse_formula("(and (rel E x y) (not (= x y)))")
    assert tc_to_eso(phi) is phi or print_formula(tc_to_eso(phi)) == print_formula(phi)


def test_negative_tc_rejected():
    phi = parse_formula("(not (tc (u) (v) (rel E u v) (x) (y)))")
    with pytest.raises(NotPositive):
        tc_to_eso(phi)
    # double negation is positive again
    assert tc_to_eso(parse_formula(
        "(not (not (tc (u) (v) (rel E u v) (x) (y))))")) is not None


def test_rewritten_formula_is_so_shaped():
    phi = parse_formula("(tc (u) (v) (rel E u v) (x) (y))")
    eso = tc_to_eso(phi)
    assert any(isinstance(n, L.SoExists) for n in L.walk(eso))
    assert not any(isinstance(n, L.Tc) for n in L.walk(eso))


def test_equivalence_exhaustive_one_binary_relation():
    """Exhaustive model check on every ≤3-element structure over E."""
    phi = parse_formula("(tc (u) (v) (rel E u v) (x) (y))")
    eso = tc_to_eso(phi)
    checked = 0
    for n in (1, 2, 3):
        for s in all_structures(n):
            assert eval_all(phi, s, ["x", "y"]) == eval_all(eso, s, ["x", "y"], SO)
            checked += 1
    assert checked == 2 + 16 + 512


def test_equivalence_with_parameters_small():
    # step body with a parameter: only steps into p's row count
    phi = parse_formula("(tc (u) (v) (and (rel E u v) (rel E v p)) (x) (y))")
    eso = tc_to_eso(phi)
    for s in itertools.islice(all_structures(2), 0, None):
        assert eval_all(phi, s, ["x", "y", "p"]) == eval_all(eso, s, ["x", "y", "p"], SO)


def test_nested_positive_tc_rewrites_inner_first():
    inner = "(tc (u) (v) (rel E u v) (u2) (v2))"
    outer = f"(tc (u2) (v2) {inner} (x) (y))"
    phi = parse_formula(outer)
    eso = tc_to_eso(phi)
    assert not any(isinstance(n, L.Tc) for n in L.walk(eso))
    # equivalence on all 2-element structures (outer TC of a closure is the closure)
    for s in all_structures(2):
        assert eval_all(phi, s, ["x", "y"]) == eval_all(eso, s, ["x", "y"], SO)


def test_two_binary_relations_spot_checks():
    phi = parse_formula("(tc (u) (v) (or (rel E u v) (rel F u v)) (x) (y))")
    eso = tc_to_eso(phi)
    elems = [string(c) for c in "ab"]
    pair_space = list(itertools.product(elems, repeat=2))
    for bits_e in itertools.product([0, 1], repeat=4):
        for bits_f in itertools.product([0, 1], repeat=4):
            s = make_structure(
                {"E": frozenset(p for p, b in zip(pair_space, bits_e) if b),
                 "F": frozenset(p for p, b in zip(pair_space, bits_f) if b)},
                {"E": 2, "F": 2})
            assert eval_all(phi, s, ["x", "y"]) == eval_all(eso, s, ["x", "y"], SO)
