"""Command-line front door.

    pgq load      graph.json            check and summarize a graph file
    pgq compile   query.gql             print the compiled formula
    pgq eval      query.gql db.json     run a query (reference or compiled)
    pgq validate  schema.pgs graph.json check schema conformance
    pgq rdpq      aut.json graph.json --src a --tgt b
    pgq difftest  --seed 42 --cases 200 compare the engines on random input

Exit codes: 0 true/nonempty, 1 false/empty, 2 error. Set PGQ_COLOR=1 to
color the difftest summary.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import difftest as dt
from . import era as era_mod
from . import pgschema
from .errors import PgqError
from .graph import (
    GraphDatabase,
    RelStructure,
    encode_database,
    encode_relational,
    load_database,
    load_graph,
    make_structure,
)
from .gql.compile import FOTC, compile_query, compile_query_so
from .gql.parser import parse_query
from .gql.reference import eval_query
from .gql.schema import classify
from .logic import EvalSettings, eval_all, eval_formula, print_formula
from .logic.evaluate import Valuation
from .values import Value, node_id, parse_value, render_value


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as handle:
        return handle.read()


def render_rows(columns, rows) -> str:
    """Shared table rendering: sorted header, sorted rendered rows."""
    cols = sorted(columns)
    if not cols:
        return "true" if rows else "false"
    lines = sorted("\t".join(render_value(v) for v in row) for row in rows)
    return "\n".join(["\t".join(cols)] + lines)


def _rows_json(columns, rows):
    cols = sorted(columns)
    return {"columns": cols,
            "rows": sorted([render_value(v) for v in row] for row in rows)}


def _settings(args) -> EvalSettings:
    return EvalSettings(so_cap=args.cap_so, theory_mode=args.theory,
                        theory_grid=True)


def cmd_load(args) -> int:
    g = load_graph(_read(args.graph))
    print(f"graph {g.name!r}: {len(g.nodes)} nodes, "
          f"{len(g.dir_edges)} directed and {len(g.undir_edges)} undirected "
          f"edges, {len(g.properties)} properties, {len(g.labels)} labels")
    return 0


def _compile(args, q, db: GraphDatabase | None):
    names = tuple(g.name for g in db.graphs) if db else None
    default = db.default if db else None
    target = args.target
    if target == FOTC or (target is None and classify(q).restrictor_free):
        return compile_query(q, names, default, args.theory)
    return compile_query_so(q, names, default, args.theory, target=target)


def cmd_compile(args) -> int:
    q = parse_query(_read(args.query), args.theory)
    db = load_database(_read(args.db)) if args.db else None
    compiled = _compile(args, q, db)
    print(f"; target: {compiled.target}; vars: "
          + (" ".join(compiled.free_vars) or "(none)"))
    print(print_formula(compiled.formula))
    return 0


def cmd_eval(args) -> int:
    q = parse_query(_read(args.query), args.theory)
    db = load_database(_read(args.db))
    if args.engine == "reference":
        table = eval_query(q, db, node_budget=args.node_budget,
                           theory_mode=args.theory)
        columns = table.columns
        rows = {tuple(dict(r)[c] for c in sorted(columns)) for r in table.rows}
    else:
        compiled = _compile(args, q, db)
        structure = encode_database(db)
        columns = set(compiled.free_vars)
        rows = set(eval_all(compiled.formula, structure, compiled.free_vars,
                            _settings(args)))
    if args.format == "json":
        print(json.dumps(_rows_json(columns, rows)))
    else:
        print(render_rows(columns, rows))
    return 0 if rows else 1


def cmd_validate(args) -> int:
    schema = pgschema.parse_schema(_read(args.schema))
    g = load_graph(_read(args.graph))
    result = pgschema.validate(schema, g)
    print(result.report())
    return 0 if result.ok else 1


def _load_embedded(path: str) -> RelStructure:
    doc = json.loads(_read(path))
    if isinstance(doc, dict) and "relations" in doc:
        relations = {}
        for name, rows in doc["relations"].items():
            relations[name] = {tuple(_value_from_json(v) for v in row)
                               for row in rows}
        return make_structure(relations)
    return era_mod.data_graph_view(load_graph(_read(path)))


def _value_from_json(raw) -> Value:
    if isinstance(raw, dict):
        (tag, payload), = raw.items()
        if tag == "node":
            return node_id(payload)
        from .values import edge_id, integer, key, label, rational, string
        if tag == "edge":
            return edge_id(payload)
        if tag == "str":
            return string(payload)
        if tag == "int":
            return integer(int(payload))
        if tag == "rat":
            num, _, den = str(payload).partition("/")
            return rational(int(num), int(den or "1"))
        if tag == "label":
            return label(payload)
        if tag == "key":
            return key(payload)
    raise PgqError(f"bad embedded value {raw!r}")


def _endpoint(text: str) -> Value:
    if text.startswith(("#n:", "#e:", "lbl:", "key:", '"')) or \
            text.lstrip("-").replace("/", "").isdigit():
        return parse_value(text)
    return node_id(text)


def cmd_rdpq(args) -> int:
    automaton = era_mod.load_era(_read(args.automaton))
    structure = _load_embedded(args.graph)
    src, tgt = _endpoint(args.src), _endpoint(args.tgt)
    settings = _settings(args)
    if args.engine == "compiled":
        phi = era_mod.compile_era(automaton)
        verdict = eval_formula(
            phi, structure, Valuation(first_order={"src": src, "tgt": tgt}),
            settings)
    else:
        verdict = era_mod.run_product(automaton, structure, src, tgt, settings)
    print("accepted" if verdict else "rejected")
    return 0 if verdict else 1


def cmd_difftest(args) -> int:
    pool = dt.RESTRICTOR_POOL if args.pool == "restrictors" else None
    report = dt.run_differential(
        seed=args.seed, cases=args.cases, max_nodes=args.max_nodes,
        pool=pool, restrictors=args.pool == "restrictors",
        so_cap=args.cap_so, node_budget=args.node_budget)
    color = os.environ.get("PGQ_COLOR") == "1"
    text = report.summary()
    if color:
        tint = "\033[32m" if report.ok else "\033[31m"
        text = f"{tint}{text}\033[0m"
    print(text)
    if report.ok:
        return 0
    mismatch = report.failures[0]
    minimized = dt.minimize_database(
        parse_query(mismatch.query_text), mismatch.db,
        node_budget=args.node_budget, so_cap=args.cap_so)
    dt.write_reproducer(args.out, mismatch, minimized)
    print(f"reproducer written to {args.out}", file=sys.stderr)
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pgq",
        description="Property-graph querying through relational logic")
    parser.add_argument("--theory", choices=["lia", "lra", "rof"], default=None,
                        help="numeric theory mode for arithmetic conditions")
    parser.add_argument("--target", choices=["fotc", "eso", "so"], default=None,
                        help="compilation target (default: by query class)")
    parser.add_argument("--engine", default=None,
                        help="evaluation engine (command-specific)")
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--cap-so", type=int, default=64, dest="cap_so",
                        help="ground-atom cap for second-order enumeration")
    parser.add_argument("--node-budget", type=int, default=12, dest="node_budget",
                        help="node budget for restrictor path enumeration")
    parser.add_argument("--format", choices=["table", "sexpr", "json"],
                        default="table")
    sub = parser.add_subparsers(dest="command", required=True)

    p_load = sub.add_parser("load", help="check a graph file")
    p_load.add_argument("graph")
    p_load.set_defaults(func=cmd_load)

    p_compile = sub.add_parser("compile", help="compile a query to logic")
    p_compile.add_argument("query")
    p_compile.add_argument("--db", default=None,
                           help="database file for per-graph relation tags")
    p_compile.set_defaults(func=cmd_compile)

    p_eval = sub.add_parser("eval", help="evaluate a query")
    p_eval.add_argument("query")
    p_eval.add_argument("db")
    p_eval.set_defaults(func=cmd_eval)

    p_validate = sub.add_parser("validate", help="validate a graph type")
    p_validate.add_argument("schema")
    p_validate.add_argument("graph")
    p_validate.set_defaults(func=cmd_validate)

    p_rdpq = sub.add_parser("rdpq", help="run a register automaton")
    p_rdpq.add_argument("automaton")
    p_rdpq.add_argument("graph")
    p_rdpq.add_argument("--src", required=True)
    p_rdpq.add_argument("--tgt", required=True)
    p_rdpq.set_defaults(func=cmd_rdpq)

    p_diff = sub.add_parser("difftest", help="differentially test the engines")
    p_diff.add_argument("--cases", type=int, default=200)
    p_diff.add_argument("--max-nodes", type=int, default=6, dest="max_nodes")
    p_diff.add_argument("--pool", choices=["restrictor-free", "restrictors"],
                        default="restrictor-free")
    p_diff.add_argument("--out", default="pgq-reproducer")
    p_diff.set_defaults(func=cmd_difftest)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "eval" and args.engine is None:
        args.engine = "reference"
    if args.command == "rdpq" and args.engine is None:
        args.engine = "product"
    try:
        return args.func(args)
    except PgqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
