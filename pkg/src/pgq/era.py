"""Register automata over embedded graphs and their logic compilation.

An automaton walks binary relations of a structure, carrying mutable
registers confined to the active domain and read-only parameters valued
in the numeric theory. Guards are hybrid formulas over

    curr      the element just arrived at (the start node for the
              leading # transition)
    r, r'     pre- and post-transition value of register r
    p         read-only parameters

Normal form: each initial state has exactly one outgoing transition,
labeled #, no other # transitions exist, and nothing enters an initial
state; every run is # followed by relation symbols. A run of length zero
(initial state already final, source equals target) accepts, matching the
reflexive closure semantics of the compiled formula.

Evaluation is a product construction — breadth-first search over
(state, element, register values) per candidate parameter valuation from
the documented grid. Compilation emits one self-contained formula: a
guarded disjunction of the three domain regimes (enough elements to name
every state by a distinct constant; at least two elements, states coded
as bit vectors over a distinct pair; a one-element domain, where the
closure unrolls into a finite disjunction over simple state paths).
"""

from __future__ import annotations

import itertools
import json
import re
from collections import deque
from dataclasses import dataclass, field

from . import theory
from .errors import NormalFormError, ParseError, RegexSyntaxError
from .graph import PropertyGraph, RelStructure, make_structure
from .logic import ast as L
from .logic.evaluate import EvalSettings, Evaluator
from .logic.sexpr import parse_formula, print_formula
from .values import Value, edge_id, node_id, sort_key

HASH = "#"
CURR = "curr"


@dataclass(frozen=True)
class Transition:
    source: str
    symbol: str  # a binary relation name, or "#"
    guard: L.Formula
    target: str


@dataclass(frozen=True)
class Era:
    states: tuple[str, ...]
    initial: frozenset[str]
    final: frozenset[str]
    registers: tuple[str, ...]
    params: tuple[str, ...]
    transitions: tuple[Transition, ...]

    def check_normal_form(self) -> None:
        for q in self.initial:
            outgoing = [t for t in self.transitions if t.source == q]
            if len(outgoing) != 1 or outgoing[0].symbol != HASH:
                raise NormalFormError(
                    f"initial state {q!r} must have exactly one outgoing "
                    f"transition, labeled {HASH}")
        for t in self.transitions:
            if t.symbol == HASH and t.source not in self.initial:
                raise NormalFormError(
                    f"{HASH} transition from non-initial state {t.source!r}")
            if t.target in self.initial:
                raise NormalFormError(
                    f"transition into initial state {t.target!r}")
            if t.source not in self.states or t.target not in self.states:
                raise NormalFormError(f"transition uses unknown state: {t}")

    def guard_variables(self) -> set[str]:
        out = {CURR}
        for r in self.registers:
            out.add(r)
            out.add(r + "'")
        out.update(self.params)
        return out


def load_era(text: str) -> Era:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc}") from exc
    try:
        transitions = tuple(
            Transition(t["from"], t["symbol"], parse_formula(t["guard"]),
                       t["to"])
            for t in doc["transitions"])
        era = Era(
            states=tuple(doc["states"]),
            initial=frozenset(doc["initial"]),
            final=frozenset(doc["final"]),
            registers=tuple(doc.get("registers", ())),
            params=tuple(doc.get("params", ())),
            transitions=transitions,
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed automaton document: {exc}") from exc
    era.check_normal_form()
    return era


def dump_era(era: Era) -> str:
    return json.dumps({
        "states": list(era.states),
        "initial": sorted(era.initial),
        "final": sorted(era.final),
        "registers": list(era.registers),
        "params": list(era.params),
        "transitions": [
            {"from": t.source, "symbol": t.symbol,
             "guard": print_formula(t.guard), "to": t.target}
            for t in era.transitions],
    }, indent=2)


def data_graph_view(g: PropertyGraph) -> RelStructure:
    """Property graph as an embedded data graph: one binary relation per
    edge label (undirected edges appear in both orientations) and one
    binary relation per property key (element, value)."""
    relations: dict[str, set[tuple[Value, ...]]] = {}
    for e in g.edges():
        s = node_id(g.src[e])
        t = node_id(g.tgt[e])
        for lab in g.labels_of(e):
            rows = relations.setdefault(lab, set())
            rows.add((s, t))
            if e in g.undir_edges:
                rows.add((t, s))
    for elem, key, value in g.properties:
        holder = node_id(elem) if elem in g.nodes else edge_id(elem)
        relations.setdefault(key, set()).add((holder, value))
    return make_structure(relations)


# ---------------------------------------------------------------------------
# Product evaluation
# ---------------------------------------------------------------------------


def run_product(era: Era, s: RelStructure, src: Value, tgt: Value,
                settings: EvalSettings | None = None) -> bool:
    """Does some run over some path src → tgt accept, for some parameter
    valuation from the candidate grid?"""
    era.check_normal_form()
    settings = settings or EvalSettings(theory_grid=True)
    adom = s.active_domain()
    if src not in adom or tgt not in adom:
        return False
    mode = settings.theory_mode or theory.LRA
    grids = [theory.parameter_candidates(adom, mode, settings.grid_widen)
             for _p in era.params]
    adom_sorted = sorted(adom, key=sort_key)
    for combo in itertools.product(*grids) if era.params else [()]:
        if _run_with_params(era, s, src, tgt, dict(zip(era.params, combo)),
                            settings, adom_sorted):
            return True
    return False


def _run_with_params(era, s, src, tgt, params, settings, adom_sorted) -> bool:
    ev = Evaluator(s, settings)
    ev.env.update(params)
    regs = era.registers
    primed = tuple(r + "'" for r in regs)

    def guard_posts(tr, arrived, pre):
        """Post-register valuations permitted by the guard."""
        saved = dict(ev.env)
        ev.env[CURR] = arrived
        ev.env.update(zip(regs, pre))
        try:
            for binding in ev.solve(tr.guard,
                                    frozenset(primed) - set(ev.env)):
                yield tuple(binding.get(p, ev.env.get(p)) for p in primed)
        finally:
            ev.env.clear()
            ev.env.update(saved)

    # zero-length runs: initial-and-final state on src = tgt
    if src == tgt and era.initial & era.final:
        return True
    seen: set[tuple] = set()
    frontier: deque[tuple] = deque()
    for q in sorted(era.initial):
        (hash_tr,) = [t for t in era.transitions if t.source == q]
        for pre in itertools.product(adom_sorted, repeat=len(regs)):
            for post in guard_posts(hash_tr, src, pre):
                assert all(v in ev.adom for v in post), \
                    "register escaped the active domain"
                state = (hash_tr.target, src, post)
                if state not in seen:
                    if hash_tr.target in era.final and src == tgt:
                        return True
                    seen.add(state)
                    frontier.append(state)
    by_source: dict[str, list[Transition]] = {}
    for t in era.transitions:
        if t.symbol != HASH:
            by_source.setdefault(t.source, []).append(t)
    while frontier:
        q, element, pre = frontier.popleft()
        for tr in by_source.get(q, ()):
            for row in s.index(tr.symbol, 0).get(element, ()):
                arrived = row[1]
                for post in guard_posts(tr, arrived, pre):
                    assert all(v in ev.adom for v in post), \
                        "register escaped the active domain"
                    state = (tr.target, arrived, post)
                    if state in seen:
                        continue
                    if tr.target in era.final and arrived == tgt:
                        return True
                    seen.add(state)
                    frontier.append(state)
    return False


# ---------------------------------------------------------------------------
# Compilation to hybrid transitive closure
# ---------------------------------------------------------------------------


def _rename_guard(guard: L.Formula, era: Era, curr_var: str,
                  pre: dict[str, str], post: dict[str, str],
                  params: dict[str, str]) -> L.Formula:
    out = guard
    out = L.rename_var(out, CURR, curr_var)
    for r in era.registers:
        out = L.rename_var(out, r, pre[r])
        out = L.rename_var(out, r + "'", post[r])
    for p in era.params:
        out = L.rename_var(out, p, params[p])
    return out


def compile_era(era: Era) -> L.Formula:
    """φ(src, tgt): the automaton accepts some path src → tgt.

    The returned formula is the guarded disjunction of the three domain
    regimes and is correct on every embedded structure.
    """
    era.check_normal_form()
    fresh = map("$c{}".format, itertools.count())
    n = len(era.states)
    big_guard = _distinct_elements(n, fresh)
    two_guard = _distinct_elements(2, fresh)
    singleton = L.Not(_distinct_elements(2, fresh))
    branches = [
        L.conj([big_guard, _compile_named(era, fresh)]),
        L.conj([L.Not(_distinct_elements(n, fresh)), two_guard,
                _compile_binary(era, fresh)]) if n > 1 else None,
        L.conj([singleton, _compile_singleton(era, fresh)]),
    ]
    return L.disj([b for b in branches if b is not None])


def _distinct_elements(k: int, fresh) -> L.Formula:
    names = [next(fresh) for _ in range(k)]
    pairs = [L.Not(L.Eq(L.Var(a), L.Var(b)))
             for a, b in itertools.combinations(names, 2)]
    return L.exists_many(names, L.conj(pairs)) if k > 1 else L.TRUE


def _compile_named(era: Era, fresh) -> L.Formula:
    """States named by pairwise-distinct domain constants."""
    state_var = {q: next(fresh) for q in era.states}

    def encode(q: str):
        return (L.Var(state_var[q]),)

    return _compile_core(era, fresh, 1, encode,
                         extra_vars=list(state_var.values()),
                         extra_constraints=[
                             L.Not(L.Eq(L.Var(a), L.Var(b)))
                             for a, b in itertools.combinations(
                                 state_var.values(), 2)])


def _compile_binary(era: Era, fresh) -> L.Formula:
    """States coded as bit vectors over two distinct elements."""
    n = len(era.states)
    width = max(1, (n - 1).bit_length())
    zero, one = next(fresh), next(fresh)
    index = {q: i for i, q in enumerate(era.states)}

    def encode(q: str):
        bits = format(index[q], f"0{width}b")
        return tuple(L.Var(one if b == "1" else zero) for b in bits)

    return _compile_core(era, fresh, width, encode,
                         extra_vars=[zero, one],
                         extra_constraints=[L.Not(L.Eq(L.Var(zero), L.Var(one)))])


def _compile_core(era: Era, fresh, state_width: int, encode,
                  extra_vars: list[str],
                  extra_constraints: list[L.Formula]) -> L.Formula:
    regs = list(era.registers)
    k = 1 + state_width + len(regs)
    u = [next(fresh) for _ in range(k)]
    v = [next(fresh) for _ in range(k)]
    u_curr, u_state, u_regs = u[0], u[1:1 + state_width], u[1 + state_width:]
    v_curr, v_state, v_regs = v[0], v[1:1 + state_width], v[1 + state_width:]
    param_var = {p: next(fresh) for p in era.params}

    def state_eq(vec_vars: list[str], q: str) -> L.Formula:
        return L.conj([L.Eq(L.Var(var), term)
                       for var, term in zip(vec_vars, encode(q))])

    steps = []
    for tr in era.transitions:
        pre = dict(zip(regs, u_regs))
        post = dict(zip(regs, v_regs))
        guard = _rename_guard(tr.guard, era, v_curr, pre, post, param_var)
        move = (L.Eq(L.Var(u_curr), L.Var(v_curr)) if tr.symbol == HASH
                else L.RelAtom(tr.symbol, (L.Var(u_curr), L.Var(v_curr))))
        steps.append(L.conj([
            move, state_eq(u_state, tr.source), state_eq(v_state, tr.target),
            guard,
        ]))
    rho = L.disj(steps)

    init_state = [next(fresh) for _ in range(state_width)]
    end_state = [next(fresh) for _ in range(state_width)]
    regs0 = [next(fresh) for _ in regs]
    regs1 = [next(fresh) for _ in regs]
    closure = L.Tc(
        tuple(u), tuple(v), rho,
        tuple([L.Var("src")] + [L.Var(x) for x in init_state]
              + [L.Var(x) for x in regs0]),
        tuple([L.Var("tgt")] + [L.Var(x) for x in end_state]
              + [L.Var(x) for x in regs1]))
    body = L.conj(
        extra_constraints + [
            L.disj([state_eq(init_state, q) for q in sorted(era.initial)]),
            L.disj([state_eq(end_state, q) for q in sorted(era.final)]),
            closure,
        ])
    inner_names = init_state + end_state + regs0 + regs1
    body = L.exists_many(inner_names, body)
    for p in era.params:
        body = L.Exists(param_var[p], body, L.THEORY)
    return L.exists_many(extra_vars, body)


def _compile_singleton(era: Era, fresh) -> L.Formula:
    """One-element domains: unroll acceptance over simple state paths.

    Every variable denotes the single element, so each transition's
    enabledness is a fixed formula and runs revisiting states add nothing.
    """
    x = "src"
    param_var = {p: next(fresh) for p in era.params}

    def enabled(tr: Transition) -> L.Formula:
        pre = {r: x for r in era.registers}
        post = dict(pre)
        guard = _rename_guard(tr.guard, era, x, pre, post, param_var)
        if tr.symbol == HASH:
            return guard
        return L.conj([L.RelAtom(tr.symbol, (L.Var(x), L.Var(x))), guard])

    paths: list[L.Formula] = []
    if era.initial & era.final:
        paths.append(L.TRUE)

    def walk(state: str, visited: frozenset[str], conjuncts: list):
        if state in era.final:
            paths.append(L.conj(list(conjuncts)))
        for tr in era.transitions:
            if tr.source == state and tr.target not in visited:
                walk(tr.target, visited | {tr.target},
                     conjuncts + [enabled(tr)])

    for q in sorted(era.initial):
        (hash_tr,) = [t for t in era.transitions if t.source == q]
        walk(hash_tr.target, frozenset((q, hash_tr.target)),
             [enabled(hash_tr)])
    body = L.conj([L.Eq(L.Var("src"), L.Var("tgt")), L.disj(paths)])
    for p in era.params:
        body = L.Exists(param_var[p], body, L.THEORY)
    return body


# ---------------------------------------------------------------------------
# Path regular expressions
# ---------------------------------------------------------------------------


@dataclass
class _Nfa:
    transitions: list[tuple[int, str | None, int]] = field(default_factory=list)
    counter: int = 0

    def state(self) -> int:
        self.counter += 1
        return self.counter - 1


def _regex_parse(text: str):
    """regex := alt; alt := seq ('|' seq)*; seq := rep+; rep := atom '*'*;
    atom := NAME | 'eps' | '(' alt ')'."""
    tokens = re.findall(r"[A-Za-z_][A-Za-z0-9_-]*|[()|*]", text)
    if "".join(tokens).replace(" ", "") != text.replace(" ", ""):
        raise RegexSyntaxError(f"bad characters in regex {text!r}")
    pos = 0

    def peek():
        return tokens[pos] if pos < len(tokens) else None

    def take():
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        return tok

    def alt():
        out = [seq()]
        while peek() == "|":
            take()
            out.append(seq())
        return ("alt", out) if len(out) > 1 else out[0]

    def seq():
        out = []
        while peek() is not None and peek() not in ("|", ")"):
            out.append(rep())
        if not out:
            return ("eps",)
        return ("seq", out) if len(out) > 1 else out[0]

    def rep():
        node = atom()
        while peek() == "*":
            take()
            node = ("star", node)
        return node

    def atom():
        tok = peek()
        if tok is None:
            raise RegexSyntaxError("unexpected end of regex")
        if tok == "(":
            take()
            inner = alt()
            if peek() != ")":
                raise RegexSyntaxError("missing ')'")
            take()
            return inner
        if tok in (")", "|", "*"):
            raise RegexSyntaxError(f"unexpected {tok!r}")
        take()
        if tok == "eps":
            return ("eps",)
        return ("sym", tok)

    tree = alt()
    if pos != len(tokens):
        raise RegexSyntaxError(f"trailing regex tokens: {tokens[pos:]}")
    return tree


def _thompson(tree, nfa: _Nfa) -> tuple[int, int]:
    kind = tree[0]
    if kind == "sym":
        a, b = nfa.state(), nfa.state()
        nfa.transitions.append((a, tree[1], b))
        return a, b
    if kind == "eps":
        a, b = nfa.state(), nfa.state()
        nfa.transitions.append((a, None, b))
        return a, b
    if kind == "seq":
        first = _thompson(tree[1][0], nfa)
        start, end = first
        for part in tree[1][1:]:
            nxt = _thompson(part, nfa)
            nfa.transitions.append((end, None, nxt[0]))
            end = nxt[1]
        return start, end
    if kind == "alt":
        a, b = nfa.state(), nfa.state()
        for part in tree[1]:
            inner = _thompson(part, nfa)
            nfa.transitions.append((a, None, inner[0]))
            nfa.transitions.append((inner[1], None, b))
        return a, b
    if kind == "star":
        a, b = nfa.state(), nfa.state()
        inner = _thompson(tree[1], nfa)
        nfa.transitions.append((a, None, b))
        nfa.transitions.append((a, None, inner[0]))
        nfa.transitions.append((inner[1], None, b))
        nfa.transitions.append((inner[1], None, inner[0]))
        return a, b
    raise RegexSyntaxError(f"unknown regex node {kind!r}")


def rpq_to_era(regex: str) -> Era:
    """Thompson construction with trivial guards; epsilon transitions are
    closed away so only the leading # remains silent."""
    nfa = _Nfa()
    start, end = _thompson(_regex_parse(regex), nfa)
    closure: dict[int, set[int]] = {}

    def eps_closure(state: int) -> set[int]:
        got = closure.get(state)
        if got is None:
            got = {state}
            queue = deque((state,))
            while queue:
                current = queue.popleft()
                for a, sym, b in nfa.transitions:
                    if a == current and sym is None and b not in got:
                        got.add(b)
                        queue.append(b)
            closure[state] = got
        return got

    symbol_edges = [(a, sym, b) for a, sym, b in nfa.transitions
                    if sym is not None]
    reachable = {start}
    queue = deque((start,))
    edges: set[tuple[int, str, int]] = set()
    while queue:
        current = queue.popleft()
        for mid in eps_closure(current):
            for a, sym, b in symbol_edges:
                if a == mid:
                    edges.add((current, sym, b))
                    if b not in reachable:
                        reachable.add(b)
                        queue.append(b)
    finals = {q for q in reachable if end in eps_closure(q)}
    name = {q: f"q{q}" for q in sorted(reachable)}
    entry = "q_start"
    transitions = [Transition(entry, HASH, L.TRUE, name[start])]
    transitions += [Transition(name[a], sym, L.TRUE, name[b])
                    for a, sym, b in sorted(edges)]
    era = Era(
        states=(entry, *[name[q] for q in sorted(reachable)]),
        initial=frozenset((entry,)),
        final=frozenset(name[q] for q in sorted(finals)),
        registers=(),
        params=(),
        transitions=tuple(transitions),
    )
    era.check_normal_form()
    return era
