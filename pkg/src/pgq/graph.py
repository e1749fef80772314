"""Property graphs, graph databases, and their relational encoding.

A property graph is a tuple of node/edge sets with src/tgt endpoint maps,
single-valued key→value properties and label sets. Undirected edges store
their endpoints in canonical orientation: src ≤ tgt lexicographically on
the node id string. Graphs and structures are immutable after
construction and safe to share across concurrent evaluations.

The relational encoding interprets the vocabulary

    Node/1  Edir/1  Eundir/1  src/2  tgt/2  property/3  label/2

verbatim from the graph; label and key names enter the active domain as
Label/Key constants so formulas can quantify over them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Mapping

from .errors import IntegrityError, ParseError
from .values import (
    Value,
    edge_id,
    integer,
    key as key_const,
    label as label_const,
    node_id,
    rational,
    render_value,
    string,
)

NODE_REL = "Node"
EDIR_REL = "Edir"
EUNDIR_REL = "Eundir"
SRC_REL = "src"
TGT_REL = "tgt"
PROPERTY_REL = "property"
LABEL_REL = "label"

GRAPH_VOCABULARY: dict[str, int] = {
    NODE_REL: 1,
    EDIR_REL: 1,
    EUNDIR_REL: 1,
    SRC_REL: 2,
    TGT_REL: 2,
    PROPERTY_REL: 3,
    LABEL_REL: 2,
}


@dataclass(frozen=True)
class PropertyGraph:
    name: str
    nodes: frozenset[str]
    dir_edges: frozenset[str]
    undir_edges: frozenset[str]
    src: Mapping[str, str]
    tgt: Mapping[str, str]
    # property rows are (element id, key, value); (element, key) unique
    properties: frozenset[tuple[str, str, Value]]
    labels: frozenset[tuple[str, str]]

    def edges(self) -> frozenset[str]:
        return self.dir_edges | self.undir_edges

    def elements(self) -> frozenset[str]:
        return self.nodes | self.edges()

    def property_value(self, element: str, key: str) -> Value | None:
        for e, k, v in self.properties:
            if e == element and k == key:
                return v
        return None

    def labels_of(self, element: str) -> set[str]:
        return {l for e, l in self.labels if e == element}


@dataclass(frozen=True)
class GraphDatabase:
    graphs: tuple[PropertyGraph, ...]
    default: str

    def __post_init__(self) -> None:
        names = [g.name for g in self.graphs]
        if len(set(names)) != len(names):
            raise IntegrityError("duplicate graph names in database")
        if self.default not in names:
            raise IntegrityError(f"default graph {self.default!r} not in database")

    def graph(self, name: str) -> PropertyGraph:
        for g in self.graphs:
            if g.name == name:
                return g
        raise KeyError(name)

    @property
    def default_graph(self) -> PropertyGraph:
        return self.graph(self.default)


def make_graph(
    name: str = "g",
    nodes: Iterable[str] = (),
    dir_edges: Iterable[tuple[str, str, str]] = (),
    undir_edges: Iterable[tuple[str, str, str]] = (),
    properties: Iterable[tuple[str, str, Value]] = (),
    labels: Iterable[tuple[str, str]] = (),
) -> PropertyGraph:
    """Build and check a graph from edge triples (id, src, tgt)."""
    node_set = frozenset(nodes)
    src: dict[str, str] = {}
    tgt: dict[str, str] = {}
    dirs, undirs = set(), set()
    for eid, s, t in dir_edges:
        if eid in dirs:
            raise IntegrityError(f"duplicate edge id {eid!r}")
        dirs.add(eid)
        src[eid], tgt[eid] = s, t
    for eid, s, t in undir_edges:
        if eid in dirs or eid in undirs:
            raise IntegrityError(f"duplicate edge id {eid!r}")
        undirs.add(eid)
        # canonical orientation for undirected edges
        src[eid], tgt[eid] = (s, t) if s <= t else (t, s)
    g = PropertyGraph(
        name=name,
        nodes=node_set,
        dir_edges=frozenset(dirs),
        undir_edges=frozenset(undirs),
        src=src,
        tgt=tgt,
        properties=frozenset(properties),
        labels=frozenset(labels),
    )
    _check_graph(g)
    return g


def _check_graph(g: PropertyGraph) -> None:
    if g.nodes & g.edges():
        raise IntegrityError("node and edge id namespaces overlap")
    for eid in g.edges():
        if eid not in g.src or eid not in g.tgt:
            raise IntegrityError(f"edge {eid!r} lacks endpoints")
        if g.src[eid] not in g.nodes:
            raise IntegrityError(f"edge {eid!r} has dangling src {g.src[eid]!r}")
        if g.tgt[eid] not in g.nodes:
            raise IntegrityError(f"edge {eid!r} has dangling tgt {g.tgt[eid]!r}")
    for eid in g.undir_edges:
        if not g.src[eid] <= g.tgt[eid]:
            raise IntegrityError(f"undirected edge {eid!r} not canonically oriented")
    seen: set[tuple[str, str]] = set()
    for elem, k, _v in g.properties:
        if elem not in g.nodes and elem not in g.edges():
            raise IntegrityError(f"property on unknown element {elem!r}")
        if (elem, k) in seen:
            raise IntegrityError(f"duplicate property ({elem!r}, {k!r})")
        seen.add((elem, k))
    for elem, _l in g.labels:
        if elem not in g.nodes and elem not in g.edges():
            raise IntegrityError(f"label on unknown element {elem!r}")


# ---------------------------------------------------------------------------
# JSON format
# ---------------------------------------------------------------------------

_NODE_FIELDS = {"id", "labels", "properties"}
_EDGE_FIELDS = {"id", "directed", "src", "tgt", "labels", "properties"}
_GRAPH_FIELDS = {"name", "nodes", "edges"}


def _decode_property_value(raw: Any) -> Value:
    if not isinstance(raw, dict) or len(raw) != 1:
        raise ParseError(f"property value must be a one-key object, got {raw!r}")
    (tag, payload), = raw.items()
    if tag == "str":
        if not isinstance(payload, str):
            raise ParseError(f"str property payload must be a string: {raw!r}")
        return string(payload)
    if tag == "int":
        try:
            return integer(int(payload))
        except (TypeError, ValueError) as exc:
            raise ParseError(f"bad int property {raw!r}") from exc
    if tag == "rat":
        try:
            num, _, den = str(payload).partition("/")
            return rational(int(num), int(den or "1"))
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"bad rat property {raw!r}") from exc
    raise ParseError(f"unknown property value tag {tag!r}")


def _encode_property_value(v: Value) -> dict[str, str]:
    if v.kind == "str":
        return {"str": str(v.data)}
    if v.kind == "int":
        return {"int": str(v.data)}
    if v.kind == "rat":
        f: Fraction = v.data  # type: ignore[assignment]
        return {"rat": f"{f.numerator}/{f.denominator}"}
    raise ParseError(f"value {render_value(v)} cannot be stored as a property")


def graph_from_dict(doc: Any) -> PropertyGraph:
    if not isinstance(doc, dict):
        raise ParseError("graph document must be a JSON object")
    unknown = set(doc) - _GRAPH_FIELDS
    if unknown:
        raise ParseError(f"unknown graph fields: {sorted(unknown)}")
    name = doc.get("name", "g")
    if not isinstance(name, str):
        raise ParseError("graph name must be a string")
    nodes: list[str] = []
    properties: list[tuple[str, str, Value]] = []
    labels: list[tuple[str, str]] = []
    for raw in doc.get("nodes", []):
        if not isinstance(raw, dict):
            raise ParseError(f"node entry must be an object: {raw!r}")
        unknown = set(raw) - _NODE_FIELDS
        if unknown:
            raise ParseError(f"unknown node fields: {sorted(unknown)}")
        if "id" not in raw or not isinstance(raw["id"], str):
            raise ParseError(f"node entry needs a string id: {raw!r}")
        nid = raw["id"]
        if nid in nodes:
            raise IntegrityError(f"duplicate node id {nid!r}")
        nodes.append(nid)
        for l in raw.get("labels", []):
            labels.append((nid, str(l)))
        for k, v in raw.get("properties", {}).items():
            properties.append((nid, k, _decode_property_value(v)))
    dir_edges: list[tuple[str, str, str]] = []
    undir_edges: list[tuple[str, str, str]] = []
    edge_ids: set[str] = set()
    for raw in doc.get("edges", []):
        if not isinstance(raw, dict):
            raise ParseError(f"edge entry must be an object: {raw!r}")
        unknown = set(raw) - _EDGE_FIELDS
        if unknown:
            raise ParseError(f"unknown edge fields: {sorted(unknown)}")
        for fld in ("id", "src", "tgt"):
            if fld not in raw or not isinstance(raw[fld], str):
                raise ParseError(f"edge entry needs string {fld!r}: {raw!r}")
        eid = raw["id"]
        if eid in edge_ids:
            raise IntegrityError(f"duplicate edge id {eid!r}")
        edge_ids.add(eid)
        directed = raw.get("directed", True)
        if not isinstance(directed, bool):
            raise ParseError(f"edge 'directed' must be a boolean: {raw!r}")
        triple = (eid, raw["src"], raw["tgt"])
        (dir_edges if directed else undir_edges).append(triple)
        for l in raw.get("labels", []):
            labels.append((eid, str(l)))
        for k, v in raw.get("properties", {}).items():
            properties.append((eid, k, _decode_property_value(v)))
    return make_graph(name, nodes, dir_edges, undir_edges, properties, labels)


def load_graph(text: str) -> PropertyGraph:
    """Parse one property graph from its JSON document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc}") from exc
    return graph_from_dict(doc)


def dump_graph(g: PropertyGraph) -> str:
    doc = graph_to_dict(g)
    return json.dumps(doc, indent=2, sort_keys=False)


def graph_to_dict(g: PropertyGraph) -> dict[str, Any]:
    nodes = []
    for nid in sorted(g.nodes):
        entry: dict[str, Any] = {"id": nid}
        labs = sorted(g.labels_of(nid))
        if labs:
            entry["labels"] = labs
        props = {k: _encode_property_value(v) for e, k, v in sorted(
            g.properties, key=lambda row: (row[0], row[1])) if e == nid}
        if props:
            entry["properties"] = props
        nodes.append(entry)
    edges = []
    for eid in sorted(g.edges()):
        entry = {
            "id": eid,
            "directed": eid in g.dir_edges,
            "src": g.src[eid],
            "tgt": g.tgt[eid],
        }
        labs = sorted(g.labels_of(eid))
        if labs:
            entry["labels"] = labs
        props = {k: _encode_property_value(v) for e, k, v in sorted(
            g.properties, key=lambda row: (row[0], row[1])) if e == eid}
        if props:
            entry["properties"] = props
        edges.append(entry)
    return {"name": g.name, "nodes": nodes, "edges": edges}


def load_database(text: str) -> GraphDatabase:
    """Parse a database document: {"default": name, "graphs": [...]}.

    A bare graph document is accepted as a single-graph database.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc}") from exc
    if isinstance(doc, dict) and "graphs" in doc:
        unknown = set(doc) - {"default", "graphs"}
        if unknown:
            raise ParseError(f"unknown database fields: {sorted(unknown)}")
        graphs = tuple(graph_from_dict(raw) for raw in doc["graphs"])
        if not graphs:
            raise ParseError("database needs at least one graph")
        default = doc.get("default", graphs[0].name)
        return GraphDatabase(graphs=graphs, default=default)
    g = graph_from_dict(doc)
    return GraphDatabase(graphs=(g,), default=g.name)


def dump_database(db: GraphDatabase) -> str:
    doc = {
        "default": db.default,
        "graphs": [graph_to_dict(g) for g in db.graphs],
    }
    return json.dumps(doc, indent=2)


# ---------------------------------------------------------------------------
# Relational structures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RelStructure:
    """Finite interpretation of a relational vocabulary over Values."""

    vocabulary: Mapping[str, int]
    interp: Mapping[str, frozenset[tuple[Value, ...]]]
    _caches: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        for name, rows in self.interp.items():
            if name not in self.vocabulary:
                raise IntegrityError(f"relation {name!r} not in vocabulary")
            arity = self.vocabulary[name]
            for row in rows:
                if len(row) != arity:
                    raise IntegrityError(
                        f"tuple of length {len(row)} in {name!r}/{arity}")

    def rows(self, name: str) -> frozenset[tuple[Value, ...]]:
        return self.interp.get(name, frozenset())

    def active_domain(self) -> frozenset[Value]:
        cached = self._caches.get("adom")
        if cached is None:
            cached = frozenset(
                v for rows in self.interp.values() for row in rows for v in row)
            self._caches["adom"] = cached
        return cached

    def index(self, name: str, position: int) -> dict[Value, list[tuple[Value, ...]]]:
        """Rows of `name` grouped by the value at `position` (built lazily)."""
        cache = self._caches.setdefault("index", {})
        got = cache.get((name, position))
        if got is None:
            got = {}
            for row in self.rows(name):
                got.setdefault(row[position], []).append(row)
            cache[(name, position)] = got
        return got


def make_structure(
    relations: Mapping[str, Iterable[tuple[Value, ...]]],
    vocabulary: Mapping[str, int] | None = None,
) -> RelStructure:
    interp = {name: frozenset(rows) for name, rows in relations.items()}
    if vocabulary is None:
        vocabulary = {}
        for name, rows in interp.items():
            arities = {len(r) for r in rows}
            if len(arities) > 1:
                raise IntegrityError(f"mixed arities in relation {name!r}")
            vocabulary[name] = arities.pop() if arities else 1
    return RelStructure(vocabulary=dict(vocabulary), interp=interp)


def active_domain(s: RelStructure) -> frozenset[Value]:
    """Exact set of values occurring in any interpreted tuple."""
    return s.active_domain()


def _graph_relations(g: PropertyGraph) -> dict[str, set[tuple[Value, ...]]]:
    rels: dict[str, set[tuple[Value, ...]]] = {name: set() for name in GRAPH_VOCABULARY}
    for n in g.nodes:
        rels[NODE_REL].add((node_id(n),))
    for e in g.dir_edges:
        rels[EDIR_REL].add((edge_id(e),))
    for e in g.undir_edges:
        rels[EUNDIR_REL].add((edge_id(e),))
    for e in g.edges():
        rels[SRC_REL].add((edge_id(e), node_id(g.src[e])))
        rels[TGT_REL].add((edge_id(e), node_id(g.tgt[e])))
    for elem, k, v in g.properties:
        rels[PROPERTY_REL].add((_element_value(g, elem), key_const(k), v))
    for elem, l in g.labels:
        rels[LABEL_REL].add((_element_value(g, elem), label_const(l)))
    return rels


def _element_value(g: PropertyGraph, elem: str) -> Value:
    return node_id(elem) if elem in g.nodes else edge_id(elem)


def encode_relational(g: PropertyGraph) -> RelStructure:
    """View a property graph as a relational structure."""
    rels = _graph_relations(g)
    return make_structure(rels, GRAPH_VOCABULARY)


def tagged(name: str, graph_name: str | None) -> str:
    """Per-graph relation name used when one formula spans a database."""
    return name if graph_name is None else f"{name}@{graph_name}"


def encode_database(db: GraphDatabase) -> RelStructure:
    """Encode a whole database: per-graph tagged relations plus untagged
    union relations (the latter are what condition terms resolve against)."""
    vocab: dict[str, int] = dict(GRAPH_VOCABULARY)
    rels: dict[str, set[tuple[Value, ...]]] = {name: set() for name in GRAPH_VOCABULARY}
    for g in db.graphs:
        g_rels = _graph_relations(g)
        for name, rows in g_rels.items():
            rels[name] |= rows
            tname = tagged(name, g.name)
            vocab[tname] = GRAPH_VOCABULARY[name]
            rels[tname] = set(rows)
    return make_structure(rels, vocab)


def decode_relational(s: RelStructure, name: str = "g") -> PropertyGraph:
    """Rebuild a property graph from its untagged seven-relation encoding."""
    nodes = [v.data for (v,) in s.rows(NODE_REL)]
    src = {e.data: n.data for e, n in s.rows(SRC_REL)}
    tgt = {e.data: n.data for e, n in s.rows(TGT_REL)}
    dir_edges = [(v.data, src[v.data], tgt[v.data]) for (v,) in s.rows(EDIR_REL)]
    undir_edges = [(v.data, src[v.data], tgt[v.data]) for (v,) in s.rows(EUNDIR_REL)]
    properties = [(e.data, k.data, val) for e, k, val in s.rows(PROPERTY_REL)]
    labels = [(e.data, l.data) for e, l in s.rows(LABEL_REL)]
    return make_graph(name, nodes, dir_edges, undir_edges, properties, labels)
