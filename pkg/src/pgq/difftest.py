"""Differential testing: random graphs, query pools, engine comparison.

The compiled pipelines and the reference interpreter implement the same
semantics along two very different routes; agreement on seeded random
instances is the main correctness argument. Graph generation, the fixed
query pools, the digraph-isomorphism enumeration, and the mismatch
reproducer/minimizer all live here so the test suite and the command line
share one implementation.
"""

from __future__ import annotations

import itertools
import json
import os
import random
from dataclasses import dataclass

from .graph import (
    GraphDatabase,
    PropertyGraph,
    dump_database,
    encode_database,
    graph_to_dict,
    make_graph,
)
from .gql import ast as A
from .gql.compile import FOTC, compile_query, compile_query_so
from .gql.parser import parse_query
from .gql.printer import print_query
from .gql.reference import eval_query
from .logic import EvalSettings, eval_all
from .values import Value, integer, string

# -- graph generation ------------------------------------------------------------

EDGE_LABELS = ("a", "b")
NODE_LABELS = ("Town", "Stop")


def random_graph(rng: random.Random, name: str = "g1", max_nodes: int = 6,
                 max_edges: int = 10, undirected_share: float = 0.3,
                 with_properties: bool = True) -> PropertyGraph:
    n = rng.randint(1, max_nodes)
    nodes = [f"m{i}" for i in range(n)]
    labels = []
    props = []
    for node in nodes:
        if rng.random() < 0.5:
            labels.append((node, rng.choice(NODE_LABELS)))
        if with_properties and rng.random() < 0.6:
            props.append((node, "k", integer(rng.randint(0, 3))))
    dir_edges = []
    undir_edges = []
    for i in range(rng.randint(0, max_edges)):
        eid = f"e{i}"
        s, t = rng.choice(nodes), rng.choice(nodes)
        if rng.random() < undirected_share:
            undir_edges.append((eid, s, t))
            labels.append((eid, "u"))
        else:
            dir_edges.append((eid, s, t))
            labels.append((eid, rng.choice(EDGE_LABELS)))
        if with_properties and rng.random() < 0.4:
            props.append((eid, "k", integer(rng.randint(0, 3))))
    return make_graph(name, nodes, dir_edges, undir_edges, props, labels)


def random_database(rng: random.Random, max_nodes: int = 6,
                    max_edges: int = 10) -> GraphDatabase:
    g1 = random_graph(rng, "g1", max_nodes, max_edges)
    g2 = random_graph(rng, "g2", max_nodes, max_edges)
    return GraphDatabase(graphs=(g1, g2), default="g1")


def all_digraphs_up_to_iso(max_nodes: int):
    """Every loop-free digraph on ≤ max_nodes unlabeled nodes, one
    representative per isomorphism class. Differential answers are
    isomorphism-invariant, so the class representatives are exhaustive."""
    for n in range(0, max_nodes + 1):
        pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
        perms = list(itertools.permutations(range(n)))
        seen: set[tuple] = set()
        for bits in itertools.product((0, 1), repeat=len(pairs)):
            edges = [p for p, b in zip(pairs, bits) if b]
            canon = min(
                tuple(sorted((perm[i], perm[j]) for i, j in edges))
                for perm in perms) if n else ()
            if canon in seen:
                continue
            seen.add(canon)
            yield _digraph_from_edges(n, canon)


def _digraph_from_edges(n: int, edges: tuple[tuple[int, int], ...]) -> PropertyGraph:
    nodes = [f"m{i}" for i in range(n)]
    dir_edges = []
    labels = []
    for idx, (i, j) in enumerate(edges):
        eid = f"e{idx}"
        dir_edges.append((eid, f"m{i}", f"m{j}"))
        # fixed two-letter labeling: parity of the endpoint indices
        labels.append((eid, EDGE_LABELS[(i + j) % 2]))
    return make_graph("g1", nodes, dir_edges, [], [], labels)


# -- query pools --------------------------------------------------------------------

RESTRICTOR_FREE_POOL: tuple[str, ...] = (
    "match (x) return x",
    "match (x)-[]->(y) return x, y",
    "match (x)<-[]-(y) return x, y",
    "match (x)-[]-(y) return x, y",
    "match (x)-[:a]->(y) return x, y",
    "match (x)-[:u]-(y) return x, y",
    "match (x)-[e]->(y) return x, e, y",
    "match (x)-[]->{0..inf}(y) return x, y",
    "match (x)-[]->{1..inf}(y) return x, y",
    "match (x)-[:a]->{1..inf}(y) return x, y",
    "match (x)-[]-{1..inf}(y) return x, y",
    "match (x)(-[]->-[]->){1..inf}(y) return x, y",
    "match (x)(-[]-> + <-[]-){1..inf}(y) return x, y",
    "match (x)-[]->{2..3}(y) return x, y",
    "match (x)-[]->()-[]->{0..inf}(y) return x, y",
    "match (x)-[]->(y), (y)-[]->(z) return x, z",
    "match (x :Town) return x",
    "match (x :Town)-[]->{1..inf}(y :Town) return x, y",
    "match (x)-[]-(y) + (x)-[:a]->(y) return x, y",
    "match (x) where exists { match (x)-[]->(y) return y } return x",
    "match (x) where not exists { match (x)-[]->(y) return y } return x",
    "match (x) where x:Town or exists { match (x)-[]-(z) return z } return x",
    "match (x)-[]->(y) where x.k = y.k return x, y",
    "match (x) filter x.k = 1 return x",
    "match (x)-[e]->(y) filter not x.k = e.k return x, y",
    "match (x) let v = x.k return x, v",
    "match (x)-[e]->(y) for z in e return x, y",
    "(match (x)-[]->(y) return x, y) union (match (x)-[]-(y) return x, y)",
    "(match (x)-[]->{1..inf}(y) return x, y) intersect "
    "(match (y)-[]->{1..inf}(x) return x, y)",
    "(match (x)-[]->(y) return x, y) except (match (x)-[:a]->(y) return x, y)",
    "use g2 match (x)-[]->(y) return x, y",
    "use g1 { match (x)-[]->(y) return x, y then use g2 match (w)-[]->(z) "
    "filter x.k = w.k return x, z }",
    "use g1 { match (x) return x then match (x)-[]->{1..inf}(y) return y }",
)

# restrictor pool: drawn from the classes where the ternary-step encoding
# is exact (acyclic always; trail/shortest with lower bounds ≤ 1 and short
# bounded runs; no self-loops in generated graphs)
RESTRICTOR_POOL: tuple[str, ...] = (
    "match acyclic (x)-[:a]->{1..inf}(y) return x, y",
    "match acyclic (x)-[]->{1..inf}(y) return x, y",
    "match acyclic (x)(-[]->-[]->){1..inf}(y) return x, y",
    "match acyclic (x)-[]->()-[]->(y) return x, y",
    "match trail (x)-[:a]->{1..inf}(y) return x, y",
    "match trail (x)-[]->{1..inf}(y) return x, y",
    "match trail (x)-[:b]->(y) return x, y",
    "match shortest (x)-[:a]->{1..inf}(y) return x, y",
    "match shortest (x)-[]->{0..inf}(y) return x, y",
    "match shortest acyclic (x)-[]->{1..inf}(y) return x, y",
)


def random_query(rng: random.Random, restrictors: bool = False) -> A.Query:
    """Random basic query from a weighted grammar; unbounded repetition and
    nested exists are weighted up since they stress the closure and
    nested-translation paths."""

    def edge() -> str:
        shape = rng.choice(["-[{}]->", "<-[{}]-", "-[{}]-"])
        label = rng.choice(["", ":a", ":b", ":u"])
        return shape.format(label)

    def node(var: str | None) -> str:
        label = rng.choice(["", " :Town"])
        return f"({var or ''}{label})"

    def segment(var_out: str | None) -> str:
        kind = rng.random()
        if kind < 0.45:  # weighted toward unbounded repetition
            lo = rng.choice([0, 1, 1])
            return edge() + f"{{{lo}..inf}}" + node(var_out)
        if kind < 0.6:
            lo = rng.randint(0, 2)
            return edge() + f"{{{lo}..{lo + rng.randint(0, 1)}}}" + node(var_out)
        if kind < 0.75:
            return f"({edge()} + {edge()}){{1..inf}}" + node(var_out)
        return edge() + node(var_out)

    pattern = node("x")
    n_segments = rng.randint(1, 2)
    for i in range(n_segments):
        out = "y" if i == n_segments - 1 else None
        pattern = pattern + segment(out)
    prefix = ""
    if restrictors:
        prefix = rng.choice(["acyclic ", "trail ", "shortest ",
                             "shortest acyclic "])
    where = ""
    if not restrictors and rng.random() < 0.45:  # nested exists weighted up
        inner = rng.choice(["match (x)-[]->(w) return w",
                            "match (x)-[]-{1..inf}(w :Town) return w"])
        maybe_not = "not " if rng.random() < 0.4 else ""
        where = f" where {maybe_not}exists {{ {inner} }}"
    text = f"match {prefix}{pattern}{where} return x, y"
    if "y" not in pattern:
        text = f"match {prefix}{pattern}{where} return x"
    return parse_query(text)


# -- engines ----------------------------------------------------------------------


def reference_rows(q: A.Query, db: GraphDatabase, node_budget: int = 12
                   ) -> frozenset[tuple[Value, ...]]:
    table = eval_query(q, db, node_budget=node_budget)
    cols = sorted(table.columns)
    return frozenset(tuple(dict(row)[c] for c in cols) for row in table.rows)


_COMPILE_CACHE: dict = {}


def compiled_rows(q: A.Query, db: GraphDatabase, target: str | None = None,
                  so_cap: int = 64) -> frozenset[tuple[Value, ...]]:
    names = tuple(g.name for g in db.graphs)
    from .gql.schema import classify
    key = (id(q), names, db.default, target)
    compiled = _COMPILE_CACHE.get(key)
    if compiled is None:
        if target == FOTC or (target is None and classify(q).restrictor_free):
            compiled = compile_query(q, names, db.default)
        else:
            compiled = compile_query_so(q, names, db.default, target=target)
        _COMPILE_CACHE[key] = (compiled, q)  # hold q so the id stays valid
    else:
        compiled = compiled[0]
    structure = encode_database(db)
    settings = EvalSettings(so_cap=so_cap)
    return frozenset(eval_all(compiled.formula, structure,
                              compiled.free_vars, settings))


@dataclass
class Mismatch:
    case_index: int
    query_text: str
    db: GraphDatabase
    expected: frozenset
    actual: frozenset


@dataclass
class DiffReport:
    cases: int
    failures: list[Mismatch]

    @property
    def ok(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        if self.ok:
            return f"{self.cases}/{self.cases} OK"
        return (f"{self.cases - len(self.failures)}/{self.cases} OK, "
                f"first mismatch at case {self.failures[0].case_index}")


def run_differential(seed: int, cases: int, max_nodes: int = 6,
                     max_edges: int = 10, pool: tuple[str, ...] | None = None,
                     restrictors: bool = False, so_cap: int = 64,
                     node_budget: int = 12, stop_early: bool = True,
                     _compiled=compiled_rows) -> DiffReport:
    """Seeded random graphs × pooled queries, both engines compared."""
    rng = random.Random(seed)
    texts = pool if pool is not None else (
        RESTRICTOR_POOL if restrictors else RESTRICTOR_FREE_POOL)
    parsed = [parse_query(t) for t in texts]
    failures: list[Mismatch] = []
    for index in range(cases):
        q = parsed[index % len(parsed)]
        db = random_database(rng, max_nodes, max_edges)
        expected = reference_rows(q, db, node_budget)
        actual = _compiled(q, db, None, so_cap)
        if expected != actual:
            failures.append(Mismatch(index, print_query(q), db, expected, actual))
            if stop_early:
                break
    return DiffReport(cases=index + 1 if failures and stop_early else cases,
                      failures=failures)


# -- reproducers ----------------------------------------------------------------------


def minimize_database(q: A.Query, db: GraphDatabase, node_budget: int = 12,
                      so_cap: int = 64) -> GraphDatabase:
    """Greedy shrink: drop edges, then nodes, as long as the engines still
    disagree."""

    def disagrees(candidate: GraphDatabase) -> bool:
        try:
            return reference_rows(q, candidate, node_budget) != \
                compiled_rows(q, candidate, None, so_cap)
        except Exception:
            return False

    current = db
    changed = True
    while changed:
        changed = False
        for g in current.graphs:
            for eid in sorted(g.edges()):
                candidate = _drop_edge(current, g.name, eid)
                if disagrees(candidate):
                    current = candidate
                    changed = True
                    break
            if changed:
                break
        if changed:
            continue
        for g in current.graphs:
            for nid in sorted(g.nodes):
                candidate = _drop_node(current, g.name, nid)
                if candidate is not None and disagrees(candidate):
                    current = candidate
                    changed = True
                    break
            if changed:
                break
    return current


def _rebuild(db: GraphDatabase, name: str, g: PropertyGraph) -> GraphDatabase:
    return GraphDatabase(
        graphs=tuple(g if old.name == name else old for old in db.graphs),
        default=db.default)


def _drop_edge(db: GraphDatabase, graph_name: str, eid: str) -> GraphDatabase:
    g = db.graph(graph_name)
    new = make_graph(
        g.name, g.nodes,
        [(e, g.src[e], g.tgt[e]) for e in g.dir_edges if e != eid],
        [(e, g.src[e], g.tgt[e]) for e in g.undir_edges if e != eid],
        [(el, k, v) for el, k, v in g.properties if el != eid],
        [(el, l) for el, l in g.labels if el != eid])
    return _rebuild(db, graph_name, new)


def _drop_node(db: GraphDatabase, graph_name: str, nid: str) -> GraphDatabase | None:
    g = db.graph(graph_name)
    touching = {e for e in g.edges() if g.src[e] == nid or g.tgt[e] == nid}
    if len(g.nodes) == 1:
        return None
    new = make_graph(
        g.name, [n for n in g.nodes if n != nid],
        [(e, g.src[e], g.tgt[e]) for e in g.dir_edges if e not in touching],
        [(e, g.src[e], g.tgt[e]) for e in g.undir_edges if e not in touching],
        [(el, k, v) for el, k, v in g.properties
         if el != nid and el not in touching],
        [(el, l) for el, l in g.labels if el != nid and el not in touching])
    return _rebuild(db, graph_name, new)


def write_reproducer(directory: str, mismatch: Mismatch,
                     minimized: GraphDatabase | None = None) -> None:
    os.makedirs(directory, exist_ok=True)
    db = minimized if minimized is not None else mismatch.db
    with open(os.path.join(directory, "db.json"), "w") as handle:
        handle.write(dump_database(db))
    with open(os.path.join(directory, "query.gql"), "w") as handle:
        handle.write(mismatch.query_text + "\n")
    from .values import render_value

    def rows_text(rows):
        return "\n".join(sorted(
            "\t".join(render_value(v) for v in row) for row in rows))

    with open(os.path.join(directory, "expected.txt"), "w") as handle:
        handle.write(rows_text(mismatch.expected) + "\n")
    with open(os.path.join(directory, "actual.txt"), "w") as handle:
        handle.write(rows_text(mismatch.actual) + "\n")
    with open(os.path.join(directory, "README.txt"), "w") as handle:
        handle.write(
            "Engines disagreed on query.gql over db.json: expected.txt is the\n"
            "reference interpreter, actual.txt the compiled pipeline.\n")
