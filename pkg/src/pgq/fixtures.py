"""Canonical example data: the bike-lane/town graph, a small social
network, the transport schema, and flooded-area structures.

The bike graph has towns n1 (Meerkerk), n2 (Hoornaar), n3 (Asperen) and
n4 (Leerdam) joined by undirected Bike-lane edges e1 (n1–n2), e5 (n2–n3)
and e7 (n3–n4), one Crossroad c1, and directed Road edges through it.
n1 and n2 are bike-adjacent; n1 reaches n3 over two lanes (e1, e5); the
four-lane walk e1 e5 e7 e7 also lands on n3.
"""

from __future__ import annotations

from fractions import Fraction

from .graph import GraphDatabase, PropertyGraph, RelStructure, encode_relational, make_graph, make_structure
from .values import Value, integer, rational, string


def bike_graph() -> PropertyGraph:
    towns = {
        "n1": ("Meerkerk", 0, 0),
        "n2": ("Hoornaar", 2, 1),
        "n3": ("Asperen", 5, 1),
        "n4": ("Leerdam", 7, 0),
    }
    props: list[tuple[str, str, Value]] = []
    labels: list[tuple[str, str]] = []
    for nid, (name, x, y) in towns.items():
        labels.append((nid, "Town"))
        props.extend([
            (nid, "name", string(name)),
            (nid, "x-coord", integer(x)),
            (nid, "y-coord", integer(y)),
        ])
    labels.append(("c1", "Crossroad"))
    props.extend([("c1", "x-coord", integer(6)), ("c1", "y-coord", integer(2))])
    lanes = [("e1", "n1", "n2", 3), ("e5", "n2", "n3", 4), ("e7", "n3", "n4", 2)]
    for eid, s, t, length in lanes:
        labels.append((eid, "Bike-lane"))
        props.append((eid, "length", integer(length)))
    roads = [("r1", "n1", "c1", 2), ("r2", "c1", "n3", 0)]
    for eid, _s, _t, toll in roads:
        labels.append((eid, "Road"))
        props.append((eid, "toll", integer(toll)))
    return make_graph(
        "bike",
        nodes=list(towns) + ["c1"],
        dir_edges=[(e, s, t) for e, s, t, _ in roads],
        undir_edges=[(e, s, t) for e, s, t, _ in lanes],
        properties=props,
        labels=labels,
    )


def social_graph() -> PropertyGraph:
    people = {
        "p1": ("Yan", "Meerkerk"),
        "p2": ("Mia", "Asperen"),
        "p3": ("Rex", "Utrecht"),
    }
    props: list[tuple[str, str, Value]] = []
    labels: list[tuple[str, str]] = []
    for pid, (name, location) in people.items():
        labels.append((pid, "Person"))
        props.extend([
            (pid, "name", string(name)),
            (pid, "location", string(location)),
        ])
    friends = [("f1", "p1", "p2"), ("f2", "p1", "p3")]
    for eid, _s, _t in friends:
        labels.append((eid, "Friends"))
    return make_graph(
        "social",
        nodes=list(people),
        undir_edges=friends,
        properties=props,
        labels=labels,
    )


def bike_database() -> GraphDatabase:
    return GraphDatabase(graphs=(social_graph(), bike_graph()), default="social")


TRANSPORT_SCHEMA = """\
CREATE GRAPH TYPE transportGraphType LOOSE {
    (townType :Town {name STRING, x-coord INT, y-coord INT}),
    (crossroadType :Crossroad {x-coord INT, y-coord INT}),
    (:townType)-[bikeLaneType :Bike-lane]-(:townType)
}
"""


def flooded_structure(discs: list[tuple[Fraction, Fraction, Fraction]],
                      graph: PropertyGraph | None = None) -> RelStructure:
    """Bike-graph encoding extended with a Flooded(x, y, radius) relation."""
    base = encode_relational(graph if graph is not None else bike_graph())
    rows = {name: set(vals) for name, vals in base.interp.items()}
    rows["Flooded"] = {
        (rational(x), rational(y), rational(r)) for x, y, r in discs}
    vocab = dict(base.vocabulary)
    vocab["Flooded"] = 3
    return make_structure(rows, vocab)


# a disc drowning Hoornaar (2,1), cutting every n1→n3 bike route
BLOCKING_DISC = (Fraction(2), Fraction(1), Fraction(1))
# the same storm reported far away from every lane
HARMLESS_DISC = (Fraction(40), Fraction(40), Fraction(3))

EXAMPLE1_QUERY = """\
# Does Yan have a friend in a town reachable from theirs by bike lanes?
use social {
  match (x)-[:Friends]-(y :Person)
  filter x.name = "Yan"
  return x, y
  then
  use bike
  match (xt :Town)-[:Bike-lane]-{1..inf}(yt :Town)
  filter x.location = xt.name and y.location = yt.name
  return
}
"""

EXAMPLE2_PATTERN = '(x :Town)-[:Bike-lane]-{1..inf}(y :Town)'
