"""Evaluator semantics: quantifiers, transitive closure, second order."""

import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from pgq.errors import ArityMismatch, CapExceeded, UnboundVariable
from pgq.graph import make_graph, make_structure, encode_relational
from pgq.logic import (
    EvalSettings,
    Valuation,
    eval_all,
    eval_formula,
    eval_tc,
    parse_formula,
)
from pgq.logic import ast as L
from pgq.values import integer, label, node_id, string


def S(relations, vocab=None):
    return make_structure(relations, vocab)


def pairs(*names):
    return {(string(a), string(b)) for a, b in names}


EMPTY = S({})


# -- eval --------------------------------------------------------------------


def test_constant_identity_is_true_everywhere():
    phi = parse_formula("(= 3 3)")
    assert eval_formula(phi, EMPTY)
    assert eval_formula(parse_formula('(= "a" "b")'), EMPTY) is False


def test_nonadom_constants_compare_by_equality():
    s = S({"E": pairs(("a", "b"))})
    assert eval_formula(parse_formula('(= #n:z #n:z)'), s)
    # quantifiers never range over constants outside the active domain
    assert not eval_formula(parse_formula('(exists x (= x #n:z))'), s)


def test_so_full_subset_exists_on_singleton():
    s = S({"P": {(string("a"),)}})
    phi = parse_formula("(so-exists R 1 (forall x (rvar R x)))")
    assert eval_formula(phi, s)


def test_two_colorability_of_cycles_brute_force_oracle():
    # ESO 2-colorability: ∃R ∀x,y (E(x,y) → (x∈R ↔ y∉R))
    phi = parse_formula(
        "(so-exists R 1 (forall x (forall y (implies (rel E x y)"
        " (and (implies (rvar R x) (not (rvar R y)))"
        "      (implies (not (rvar R x)) (rvar R y)))))))")
    for n in (4, 5, 6):
        names = [string(f"v{i}") for i in range(n)]
        cycle = {(names[i], names[(i + 1) % n]) for i in range(n)}
        s = S({"E": cycle})
        # oracle: brute force over all 2^n colorings
        def two_colorable():
            for bits in itertools.product([0, 1], repeat=n):
                color = dict(zip(names, bits))
                if all(color[a] != color[b] for a, b in cycle):
                    return True
            return False
        assert eval_formula(phi, s, settings=EvalSettings(so_cap=10)) == two_colorable()
        assert two_colorable() == (n % 2 == 0)


def test_unbound_variable_and_arity_errors():
    s = S({"E": pairs(("a", "b"))})
    with pytest.raises(UnboundVariable):
        eval_formula(parse_formula("(rel E x y)"), s)
    with pytest.raises(ArityMismatch):
        eval_formula(parse_formula("(rel E x)"), s,
                     {"x": string("a")})


def test_so_cap_guard():
    s = S({"E": {(string(a), string(b)) for a in "abcde" for b in "abcde"}})
    phi = parse_formula("(so-exists R 2 (rvar R x y))")
    with pytest.raises(CapExceeded):
        eval_formula(phi, s, {"x": string("a"), "y": string("b")})


# -- eval_tc -----------------------------------------------------------------


def path_struct(*chain):
    edges = {(string(a), string(b)) for a, b in zip(chain, chain[1:])}
    return S({"E": edges})


def test_tc_two_step_chain():
    s = path_struct("a", "b", "c")
    body = parse_formula("(rel E u1 v1)")
    assert eval_tc(body, 1, s, {}, (string("a"),), (string("c"),))
    assert not eval_tc(body, 1, s, {}, (string("c"),), (string("a"),))


def test_tc_reflexive_on_adom_only():
    s = path_struct("a", "b")
    body = parse_formula("(rel E u1 v1)")
    assert eval_tc(body, 1, s, {}, (string("a"),), (string("a"),))
    # tuples outside the active domain are not closure members, even reflexively
    assert not eval_tc(body, 1, s, {}, (string("zz"),), (string("zz"),))


def test_tc_bike_lane_reaches_n3(bike_struct):
    # oracle: brute-force path enumeration up to |N| edges over lane steps
    lane_step = parse_formula(
        "(exists e (and (rel Eundir e) (rel label e lbl:Bike-lane)"
        " (or (and (rel src e u1) (rel tgt e v1))"
        "     (and (rel src e v1) (rel tgt e u1)))))")
    assert eval_tc(lane_step, 1, bike_struct, {},
                   (node_id("n1"),), (node_id("n3"),))

    def adjacent(a, b, g):
        for e in g.undir_edges:
            if "Bike-lane" in g.labels_of(e) and {g.src[e], g.tgt[e]} == {a, b}:
                return True
        return False

    from pgq import fixtures
    g = fixtures.bike_graph()
    found = False
    nodes = sorted(g.nodes)
    for length in range(1, len(nodes) + 1):
        for walk in itertools.product(nodes, repeat=length + 1):
            if walk[0] == "n1" and walk[-1] == "n3" and all(
                    adjacent(a, b, g) for a, b in zip(walk, walk[1:])):
                found = True
                break
        if found:
            break
    assert found


def test_tc_idempotence_vs_floyd_warshall():
    # TC of a step body equals TC of the precomputed closure-edge relation
    rng = random.Random(7)
    names = ["a", "b", "c", "d"]
    for _ in range(25):
        edges = {(string(a), string(b))
                 for a in names for b in names if rng.random() < 0.35}
        s = S({"E": edges})
        # Floyd–Warshall closure oracle (reflexive, like the TC semantics)
        reach = {(string(a), string(b)): (string(a), string(b)) in edges
                 for a in names for b in names}
        for a in names:
            reach[(string(a), string(a))] = True
        for k in names:
            for i in names:
                for j in names:
                    ik = reach[(string(i), string(k))]
                    kj = reach[(string(k), string(j))]
                    if ik and kj:
                        reach[(string(i), string(j))] = True
        closure_rel = {p for p, ok in reach.items() if ok}
        s2 = S({"E": edges, "C": closure_rel})
        body = parse_formula("(rel E u1 v1)")
        body_closed = parse_formula("(rel C u1 v1)")
        adom = sorted({v for p in edges for v in p}, key=lambda v: v.data)
        for x in adom:
            for y in adom:
                direct = eval_tc(body, 1, s, {}, (x,), (y,))
                closed = eval_tc(body_closed, 1, s2, {}, (x,), (y,))
                assert direct == closed == reach[(x, y)]


# -- eval_all ----------------------------------------------------------------


def test_eval_all_nodes(bike_struct):
    rows = eval_all(parse_formula("(rel Node x)"), bike_struct, ["x"])
    assert rows == sorted(
        [(node_id(n),) for n in ("n1", "n2", "n3", "n4", "c1")],
        key=lambda r: r[0].data)


def test_eval_all_boolean_projection():
    assert eval_all(parse_formula("(= 1 1)"), EMPTY, []) == [()]
    assert eval_all(parse_formula("(= 1 2)"), EMPTY, []) == []


def test_eval_all_property_twin_pairs_brute_force():
    # elements sharing exactly the same key/value pairs, via
    # ∀zk,zv (property(x,zk,zv) ↔ property(x2,zk,zv))
    g = make_graph(
        nodes=["a", "b", "c"],
        properties=[("a", "k", integer(1)), ("b", "k", integer(1)),
                    ("c", "k", integer(2))],
    )
    s = encode_relational(g)
    phi = parse_formula(
        "(forall zk (forall zv"
        " (and (implies (rel property x zk zv) (rel property x2 zk zv))"
        "      (implies (rel property x2 zk zv) (rel property x zk zv)))))")
    rows = eval_all(phi, s, ["x", "x2"])

    # oracle: exhaustive check over all pairs and keys
    from pgq.values import sort_key
    adom = sorted(s.active_domain(), key=sort_key)
    expected = set()
    for x in adom:
        for x2 in adom:
            props_x = {(k, v) for e, k, v in s.rows("property") if e == x}
            props_x2 = {(k, v) for e, k, v in s.rows("property") if e == x2}
            if props_x == props_x2:
                expected.add((x, x2))
    assert set(rows) == expected
    assert (node_id("a"), node_id("b")) in set(rows)
    assert (node_id("a"), node_id("c")) not in set(rows)


def test_eval_all_matches_pointwise_eval(bike_struct):
    phi = parse_formula("(exists e (and (rel Edir e) (rel src e x) (rel tgt e y)))")
    rows = set(eval_all(phi, bike_struct, ["x", "y"]))
    adom = bike_struct.active_domain()
    for x in adom:
        for y in adom:
            assert (((x, y) in rows)
                    == eval_formula(phi, bike_struct, {"x": x, "y": y}))


def test_eval_all_deterministic_order(bike_struct):
    phi = parse_formula("(rel Node x)")
    assert eval_all(phi, bike_struct, ["x"]) == eval_all(phi, bike_struct, ["x"])


# -- monotonicity property ------------------------------------------------------


@st.composite
def _monotone_instances(draw):
    names = ["a", "b", "c"]
    base = {(string(x), string(y)) for x in names for y in names
            if draw(st.booleans())}
    extra = {(string(x), string(y)) for x in names for y in names
             if draw(st.booleans())}
    return base, base | extra


@given(_monotone_instances())
@settings(max_examples=60, deadline=None)
def test_negation_free_formulas_are_monotone(instance):
    small, big = instance
    phi = parse_formula(
        "(exists x (exists y (and (rel E x y)"
        " (tc (u) (v) (rel E u v) (x) (y)))))")
    if eval_formula(phi, S({"E": small}, {"E": 2})):
        assert eval_formula(phi, S({"E": big}, {"E": 2}))
