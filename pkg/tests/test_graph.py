"""Graph model, JSON round trips, and the relational encoding."""

import json

import pytest
from hypothesis import given, settings, strategies as st

from pgq.errors import IntegrityError, ParseError
from pgq.graph import (
    active_domain,
    decode_relational,
    dump_database,
    dump_graph,
    encode_database,
    encode_relational,
    load_database,
    load_graph,
    make_graph,
)
from pgq.values import Value, edge_id, integer, key, label, node_id, rational, string


def test_empty_graph():
    g = load_graph('{"nodes": [], "edges": []}')
    assert not g.nodes and not g.edges()
    assert not g.properties and not g.labels


def test_bike_fixture_has_example_binding_topology(bike):
    # e1 joins n1 and n2: the one-lane path behind the binding x=n1, y=n2
    assert {bike.src["e1"], bike.tgt["e1"]} == {"n1", "n2"}
    # n1 reaches n3 over e1 then e5
    assert {bike.src["e5"], bike.tgt["e5"]} == {"n2", "n3"}
    assert ("n1", "Town") in bike.labels and ("n3", "Town") in bike.labels


def test_dangling_src_rejected():
    doc = {"nodes": [{"id": "a"}],
           "edges": [{"id": "e", "directed": True, "src": "ghost", "tgt": "a"}]}
    with pytest.raises(IntegrityError):
        load_graph(json.dumps(doc))


def test_unknown_fields_rejected():
    with pytest.raises(ParseError):
        load_graph('{"nodes": [], "edges": [], "color": 3}')
    with pytest.raises(ParseError):
        load_graph('{"nodes": [{"id": "a", "weight": 1}], "edges": []}')


def test_duplicate_property_key_rejected():
    with pytest.raises(IntegrityError):
        make_graph(nodes=["a"], properties=[("a", "k", integer(1)),
                                            ("a", "k", integer(2))])


def test_duplicate_ids_rejected():
    with pytest.raises(IntegrityError):
        load_graph('{"nodes": [{"id": "a"}, {"id": "a"}], "edges": []}')


def test_single_labeled_node_encoding():
    g = make_graph(nodes=["n"], labels=[("n", "Town")])
    s = encode_relational(g)
    assert s.rows("label") == {(node_id("n"), label("Town"))}
    assert s.rows("Node") == {(node_id("n"),)}
    assert not s.rows("Edir") and not s.rows("Eundir")


def test_undirected_edge_canonical_orientation():
    g = make_graph(nodes=["b", "a"], undir_edges=[("e", "b", "a")])
    s = encode_relational(g)
    assert s.rows("Eundir") == {(edge_id("e"),)}
    assert s.rows("src") == {(edge_id("e"), node_id("a"))}
    assert s.rows("tgt") == {(edge_id("e"), node_id("b"))}


def test_bike_encoding_adjacency_scan(bike, bike_struct):
    # oracle: scan edges directly; the encoding must carry the same steps
    expected = set()
    for e in bike.undir_edges:
        if ("Bike-lane" in bike.labels_of(e)):
            expected.add(frozenset((bike.src[e], bike.tgt[e])))
    got = set()
    for (e,) in bike_struct.rows("Eundir"):
        lane = (e, label("Bike-lane")) in bike_struct.rows("label")
        if lane:
            (s_row,) = [r for r in bike_struct.rows("src") if r[0] == e]
            (t_row,) = [r for r in bike_struct.rows("tgt") if r[0] == e]
            got.add(frozenset((s_row[1].data, t_row[1].data)))
    assert got == expected
    assert frozenset(("n1", "n2")) in got


def test_active_domain_trivial_cases():
    empty = encode_relational(make_graph())
    assert active_domain(empty) == frozenset()
    g = make_graph(nodes=["n"], labels=[("n", "Town")])
    assert active_domain(encode_relational(g)) == {node_id("n"), label("Town")}


def test_active_domain_exhaustive_scan(bike_struct):
    # oracle: brute-force scan over every tuple of every relation
    expected = set()
    for rows in bike_struct.interp.values():
        for row in rows:
            expected.update(row)
    assert active_domain(bike_struct) == expected
    assert node_id("n1") in expected and key("x-coord") in expected


# -- property-based round trips ---------------------------------------------

_ids = st.text(alphabet="abcdefgh123", min_size=1, max_size=4)


@st.composite
def graphs(draw):
    nodes = draw(st.lists(_ids.map(lambda s: "n" + s), min_size=0, max_size=6,
                          unique=True))
    edges = []
    if nodes:
        n_edges = draw(st.integers(0, 6))
        for i in range(n_edges):
            edges.append((f"e{i}", draw(st.sampled_from(nodes)),
                          draw(st.sampled_from(nodes)),
                          draw(st.booleans())))
    elements = nodes + [e[0] for e in edges]
    labels = [(el, draw(st.sampled_from(["Town", "Road", "Person"])))
              for el in elements if draw(st.booleans())]
    values = st.one_of(
        st.integers(-5, 5).map(integer),
        st.text(max_size=3).map(string),
        st.tuples(st.integers(-9, 9), st.integers(1, 9)).map(
            lambda p: rational(p[0], p[1])),
    )
    props = [(el, draw(st.sampled_from(["name", "x-coord", "len"])), draw(values))
             for el in elements if draw(st.booleans())]
    props = list({(e, k): (e, k, v) for e, k, v in props}.values())
    return make_graph(
        "g",
        nodes=nodes,
        dir_edges=[(e, s, t) for e, s, t, d in edges if d],
        undir_edges=[(e, s, t) for e, s, t, d in edges if not d],
        properties=props,
        labels=labels,
    )


@given(graphs())
@settings(max_examples=80, deadline=None)
def test_json_round_trip(g):
    assert load_graph(dump_graph(g)) == g


@given(graphs())
@settings(max_examples=80, deadline=None)
def test_encoding_reconstructs_graph(g):
    assert decode_relational(encode_relational(g), "g") == g


@given(graphs())
@settings(max_examples=50, deadline=None)
def test_active_domain_covers_elements(g):
    adom = active_domain(encode_relational(g))
    for n in g.nodes:
        assert node_id(n) in adom
    for e in g.edges():
        assert edge_id(e) in adom


def test_database_round_trip(db):
    again = load_database(dump_database(db))
    assert again == db
    assert again.default == "social"


def test_database_encoding_has_tagged_and_union_relations(db):
    s = encode_database(db)
    assert s.rows("Node@bike") and s.rows("Node@social")
    assert s.rows("Node") == s.rows("Node@bike") | s.rows("Node@social")


def test_database_duplicate_names_rejected(bike):
    from pgq.graph import GraphDatabase
    with pytest.raises(IntegrityError):
        GraphDatabase(graphs=(bike, bike), default="bike")
