"""Formula evaluation over finite relational structures.

First-order quantifiers range over the active domain; transitive closure
is breadth-first reachability over active-domain k-tuples (reflexive:
zero-step sequences are allowed, so both endpoints must lie in adom^k);
second-order quantifiers enumerate subsets lazily in ascending
cardinality, over the quantifier's support universe when one is attached
and over adom^arity otherwise, guarded by a ground-atom cap.

Evaluation is goal-directed: conjunctions are solved by picking generator
atoms (relation scans through per-position indexes, equality bindings,
TC reachability sweeps) before falling back to domain enumeration, and
universal quantifiers over implications enumerate only the antecedent's
satisfiers. This is what keeps compiled-query evaluation and the product
construction for register automata polynomial in practice.

Binding-state convention: solver generators own the environment. While a
binding is yielded its entries are installed in `env`; the producer
removes them when resumed or closed. Consumers only read. A quantifier
whose variable is already bound renames it apart first.

Theory atoms are evaluated exactly through the embedded-theory module.
Theory-domain quantifiers are eliminated (LRA, quantifier-free linear
bodies) or, when `theory_grid` is enabled, searched over the documented
finite candidate grid.

Evaluators hold per-call state only; structures and formulas are shared
safely across threads.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

from .. import theory
from ..errors import (
    ArityMismatch,
    CapExceeded,
    ModeError,
    NonActiveQuantifier,
    NonLinear,
    UnboundVariable,
)
from ..graph import PROPERTY_REL, RelStructure
from ..values import Value, key as key_const, sort_key
from .ast import (
    ACTIVE,
    And,
    Const,
    Eq,
    Exists,
    Forall,
    Formula,
    Implies,
    Not,
    Or,
    RelAtom,
    RelVarAtom,
    SoExists,
    SoForall,
    Tc,
    Term,
    TheoryAtom,
    THEORY,
    Var,
    free_rel_vars,
    free_vars,
    rename_var,
)

# reserved unary predicates evaluated structurally on value variants
TYPE_PREDICATES = {"String": "str", "Integer": "int", "Real": "rat"}


@dataclass
class EvalSettings:
    so_cap: int = 24
    theory_mode: str | None = None
    theory_grid: bool = False
    grid_widen: int = 0


@dataclass
class Valuation:
    first_order: dict[str, Value] = field(default_factory=dict)
    second_order: dict[str, frozenset[tuple[Value, ...]]] = field(default_factory=dict)


_DEFAULT = EvalSettings()


def eval_formula(
    phi: Formula,
    s: RelStructure,
    nu: Valuation | Mapping[str, Value] | None = None,
    settings: EvalSettings | None = None,
) -> bool:
    """Truth value of phi in s under nu (free variables must be bound)."""
    ev = Evaluator(s, settings or _DEFAULT)
    if nu is None:
        nu = Valuation()
    elif not isinstance(nu, Valuation):
        nu = Valuation(first_order=dict(nu))
    missing = free_vars(phi) - set(nu.first_order)
    if missing:
        raise UnboundVariable(f"unbound variables: {sorted(missing)}")
    missing_rel = free_rel_vars(phi) - set(nu.second_order)
    if missing_rel:
        raise UnboundVariable(f"unbound relation variables: {sorted(missing_rel)}")
    ev.env.update(nu.first_order)
    ev.rho.update(nu.second_order)
    return ev.satisfy(phi)


def eval_all(
    phi: Formula,
    s: RelStructure,
    variables: Iterable[str],
    settings: EvalSettings | None = None,
) -> list[tuple[Value, ...]]:
    """All active-domain valuations of `variables` satisfying phi,
    deduplicated, in lexicographic order of value rendering."""
    names = tuple(variables)
    if free_rel_vars(phi):
        raise UnboundVariable("eval_all requires a formula without free relation variables")
    extra = free_vars(phi) - set(names)
    if extra:
        raise UnboundVariable(f"free variables not listed: {sorted(extra)}")
    ev = Evaluator(s, settings or _DEFAULT)
    seen: set[tuple[Value, ...]] = set()
    for binding in ev.solve(phi, frozenset(names)):
        seen.add(tuple(binding[n] for n in names))
    return sorted(seen, key=lambda row: tuple(sort_key(v) for v in row))


def eval_tc(
    body: Formula,
    k: int,
    s: RelStructure,
    nu: Valuation | Mapping[str, Value],
    x_tuple: tuple[Value, ...],
    y_tuple: tuple[Value, ...],
    u_vars: tuple[str, ...] | None = None,
    v_vars: tuple[str, ...] | None = None,
    settings: EvalSettings | None = None,
) -> bool:
    """Reachability of y from x in the step relation defined by `body`.

    `u_vars`/`v_vars` default to u1..uk / v1..vk. Parameters of the body
    are read from nu. Worst case O(|adom|^2k) step tests.
    """
    u_vars = u_vars or tuple(f"u{i+1}" for i in range(k))
    v_vars = v_vars or tuple(f"v{i+1}" for i in range(k))
    ev = Evaluator(s, settings or _DEFAULT)
    if isinstance(nu, Valuation):
        ev.env.update(nu.first_order)
        ev.rho.update(nu.second_order)
    else:
        ev.env.update(nu)
    return ev.tc_reachable(u_vars, v_vars, body, tuple(x_tuple), tuple(y_tuple))


# cost ranks used to order conjuncts / pick generators
_CHECK_COST = {
    Eq: 0, RelAtom: 1, RelVarAtom: 1, TheoryAtom: 2, Not: 3, And: 4, Or: 4,
    Implies: 4, Forall: 5, Exists: 6, Tc: 7, SoExists: 9, SoForall: 9,
}


class Evaluator:
    def __init__(self, s: RelStructure, settings: EvalSettings):
        self.s = s
        self.settings = settings
        self.env: dict[str, Value] = {}
        self.rho: dict[str, frozenset[tuple[Value, ...]]] = {}
        self.adom = s.active_domain()
        self._adom_sorted: list[Value] | None = None
        self._so_cache: dict = {}
        self._so_passing: dict = {}
        self._fresh = itertools.count()
        # identity-keyed caches; formula nodes hash by identity
        self._neg_cache: dict = {}
        self._order_cache: dict = {}

    def _negated(self, phi: Formula) -> Formula:
        got = self._neg_cache.get(phi)
        if got is None:
            got = _negate(phi)
            self._neg_cache[phi] = got
        return got

    def _ordered(self, phi: And | Or) -> tuple[Formula, ...]:
        got = self._order_cache.get(phi)
        if got is None:
            got = tuple(sorted(phi.parts, key=lambda q: _CHECK_COST[type(q)]))
            self._order_cache[phi] = got
        return got

    def _sorted_rows(self, name: str) -> list[tuple[Value, ...]]:
        cache = self.s._caches.setdefault("sorted_rows", {})
        got = cache.get(name)
        if got is None:
            got = sorted(self.s.rows(name),
                         key=lambda r: tuple(sort_key(v) for v in r))
            cache[name] = got
        return got

    # -- helpers ------------------------------------------------------------

    @property
    def adom_sorted(self) -> list[Value]:
        if self._adom_sorted is None:
            self._adom_sorted = sorted(self.adom, key=sort_key)
        return self._adom_sorted

    def term_value(self, t: Term) -> Value:
        if isinstance(t, Const):
            return t.value
        if t.name not in self.env:
            raise UnboundVariable(f"unbound variable {t.name!r}")
        return self.env[t.name]

    def _bound(self, t: Term) -> bool:
        return isinstance(t, Const) or t.name in self.env

    def _prop_lookup(self, var: str, key: str) -> Value | None:
        if var not in self.env:
            raise UnboundVariable(f"unbound variable {var!r}")
        element = self.env[var]
        for row in self.s.index(PROPERTY_REL, 0).get(element, ()):
            if row[1] == key_const(key):
                return row[2]
        return None

    def _theory_mode(self, phi: TheoryAtom) -> str:
        mode = self.settings.theory_mode or phi.mode or theory.LRA
        if self.settings.theory_mode and phi.mode and phi.mode != self.settings.theory_mode:
            raise ModeError(
                f"atom tagged {phi.mode} under a {self.settings.theory_mode} session")
        return mode

    def _apart(self, var: str, body: Formula) -> tuple[str, Formula]:
        """Rename a quantified variable apart if it is currently bound."""
        if var not in self.env:
            return var, body
        fresh = f"$r{next(self._fresh)}"
        while fresh in self.env:
            fresh = f"$r{next(self._fresh)}"
        return fresh, rename_var(body, var, fresh)

    # -- boolean evaluation ---------------------------------------------------

    def satisfy(self, phi: Formula) -> bool:
        if isinstance(phi, Eq):
            return self.term_value(phi.lhs) == self.term_value(phi.rhs)
        if isinstance(phi, RelAtom):
            return self._satisfy_rel(phi)
        if isinstance(phi, RelVarAtom):
            row = tuple(self.term_value(t) for t in phi.terms)
            rel = self.rho.get(phi.rel_var)
            if rel is None:
                raise UnboundVariable(f"unbound relation variable {phi.rel_var!r}")
            if rel and len(next(iter(rel))) != len(row):
                raise ArityMismatch(f"relation variable {phi.rel_var!r} arity")
            return row in rel
        if isinstance(phi, Not):
            return not self.satisfy(phi.body)
        if isinstance(phi, And):
            for p in self._ordered(phi):
                if not self.satisfy(p):
                    return False
            return True
        if isinstance(phi, Or):
            for p in self._ordered(phi):
                if self.satisfy(p):
                    return True
            return False
        if isinstance(phi, Implies):
            return not self.satisfy(phi.lhs) or self.satisfy(phi.rhs)
        if isinstance(phi, Exists):
            if phi.domain == THEORY:
                return self._satisfy_theory_exists(phi)
            var, body = self._apart(phi.var, phi.body)
            for _ in self.solve(body, frozenset((var,))):
                return True
            return False
        if isinstance(phi, Forall):
            if phi.domain == THEORY:
                flipped = Exists(phi.var, _negate(phi.body), THEORY)
                return not self._satisfy_theory_exists(flipped)
            var, body = self._apart(phi.var, phi.body)
            if var is phi.var and body is phi.body:
                negated = self._negated(body)
            else:
                negated = _negate(body)
            for _ in self.solve(negated, frozenset((var,))):
                return False
            return True
        if isinstance(phi, Tc):
            x_tuple = tuple(self.term_value(t) for t in phi.x_args)
            y_tuple = tuple(self.term_value(t) for t in phi.y_args)
            return self.tc_reachable(phi.u_vars, phi.v_vars, phi.body, x_tuple, y_tuple)
        if isinstance(phi, SoExists):
            return self._satisfy_so(phi, is_exists=True)
        if isinstance(phi, SoForall):
            return self._satisfy_so(phi, is_exists=False)
        if isinstance(phi, TheoryAtom):
            return theory.eval_atom(
                phi.atom, self.env, self._theory_mode(phi), self._prop_lookup)
        raise TypeError(f"not a formula: {phi!r}")

    def _satisfy_rel(self, phi: RelAtom) -> bool:
        row = tuple(self.term_value(t) for t in phi.terms)
        kind = TYPE_PREDICATES.get(phi.name)
        if kind is not None and phi.name not in self.s.vocabulary:
            if len(row) != 1:
                raise ArityMismatch(f"{phi.name} is unary")
            if kind == "rat":
                return row[0].kind in ("rat", "int")  # integers are reals
            return row[0].kind == kind
        arity = self.s.vocabulary.get(phi.name)
        if arity is not None and arity != len(row):
            raise ArityMismatch(f"{phi.name}/{arity} used with {len(row)} arguments")
        return row in self.s.rows(phi.name)

    def _satisfy_theory_exists(self, phi: Exists) -> bool:
        mode = self.settings.theory_mode or theory.LRA
        var, body = self._apart(phi.var, phi.body)
        if all(v in self.env for v in free_vars(body) - {var}):
            try:
                reduced = self._eliminate(Exists(var, body, THEORY))
            except (NonLinear, ModeError):
                reduced = None
            if reduced is not None:
                return self.satisfy(reduced)
        if not self.settings.theory_grid:
            raise NonActiveQuantifier(
                f"theory quantifier over {phi.var!r} is neither active-domain "
                "nor LRA-eliminable (enable the candidate grid for automaton "
                "parameter search)")
        candidates = theory.parameter_candidates(
            self.adom, mode, self.settings.grid_widen)
        try:
            for cand in candidates:
                self.env[var] = cand
                if self.satisfy(body):
                    return True
            return False
        finally:
            self.env.pop(var, None)

    def _eliminate(self, phi: Exists) -> Formula | None:
        mode = self.settings.theory_mode or theory.LRA
        if mode != theory.LRA:
            raise ModeError(f"elimination is implemented for {theory.LRA} only")
        return theory.eliminate_exists_lra(phi)

    # -- second order ---------------------------------------------------------

    def _so_universe(self, phi: SoExists | SoForall) -> list[tuple[Value, ...]]:
        if phi.support is not None:
            outer = tuple(sorted(
                (v, self.env[v])
                for v in free_vars(phi.support) - set(phi.support_vars)
                if v in self.env))
            cache = self.s._caches.setdefault("support", {})
            key = (phi, outer)
            universe = cache.get(key)
            if universe is None:
                inner = Evaluator(self.s, self.settings)
                inner.env.update(dict(outer))
                inner.rho.update(self.rho)
                found = {tuple(b[n] for n in phi.support_vars)
                         for b in inner.solve(phi.support,
                                              frozenset(phi.support_vars))}
                universe = sorted(
                    found, key=lambda row: tuple(sort_key(v) for v in row))
                cache[key] = universe
        else:
            if len(self.adom) ** phi.arity > self.settings.so_cap:
                raise CapExceeded(
                    f"second-order universe |adom|^{phi.arity} = "
                    f"{len(self.adom) ** phi.arity} exceeds cap {self.settings.so_cap}")
            universe = [tuple(row) for row in
                        itertools.product(self.adom_sorted, repeat=phi.arity)]
        if len(universe) > self.settings.so_cap:
            raise CapExceeded(
                f"second-order universe of {len(universe)} ground atoms exceeds "
                f"cap {self.settings.so_cap}")
        return universe

    def _so_size_cap(self, phi: SoExists | SoForall, universe_size: int) -> int:
        if phi.max_size == "nodes":
            return min(universe_size,
                       sum(1 for v in self.adom if v.kind == "node"))
        if phi.max_size == "edges":
            return min(universe_size,
                       sum(1 for v in self.adom if v.kind == "edge"))
        return universe_size

    def _so_candidates(self, phi: SoExists | SoForall, universe: list,
                       cap: int):
        """Subsets of the universe in ascending cardinality. A distinct_pos
        hint skips subsets with two tuples sharing that component — exact
        because the quantifier body forces functionality there."""
        if phi.distinct_pos is None:
            for size in range(cap + 1):
                yield from itertools.combinations(universe, size)
            return
        groups: dict[Value, list] = {}
        for row in universe:
            groups.setdefault(row[phi.distinct_pos], []).append(row)
        keyed = list(groups.values())
        choices = [[None, *rows] for rows in keyed]
        combos = []
        for picks in itertools.product(*choices):
            chosen = tuple(row for row in picks if row is not None)
            if len(chosen) <= cap:
                combos.append(chosen)
        combos.sort(key=len)
        yield from combos

    def _satisfy_so(self, phi: SoExists | SoForall, is_exists: bool) -> bool:
        universe = self._so_universe(phi)
        cap = self._so_size_cap(phi, len(universe))
        saved = self.rho.pop(phi.rel_var, None)
        try:
            if not is_exists and isinstance(phi.body, Implies):
                # ∀R (antecedent → consequent): the antecedent does not
                # depend on enclosing second-order choices in compiled
                # formulas, so its satisfiers are computed once and reused
                ante, cons = phi.body.lhs, phi.body.rhs
                for cand in self._passing(phi, ante, universe, cap):
                    self.rho[phi.rel_var] = cand
                    if not self.satisfy(cons):
                        return False
                return True
            for combo in self._so_candidates(phi, universe, cap):
                self.rho[phi.rel_var] = frozenset(combo)
                ok = self.satisfy(phi.body)
                if is_exists and ok:
                    return True
                if not is_exists and not ok:
                    return False
            return not is_exists
        finally:
            self.rho.pop(phi.rel_var, None)
            if saved is not None:
                self.rho[phi.rel_var] = saved

    def _passing(self, phi, ante: Formula, universe: list, cap: int
                 ) -> list[frozenset]:
        rel_var = phi.rel_var
        env_key = tuple(sorted(
            (v, self.env[v]) for v in free_vars(ante) if v in self.env))
        rho_key = tuple(sorted(
            (r, self.rho[r]) for r in free_rel_vars(ante) - {rel_var}
            if r in self.rho))
        key = (ante, env_key, rho_key, tuple(universe), cap)
        got = self._so_passing.get(key)
        if got is None:
            got = []
            for combo in self._so_candidates(phi, universe, cap):
                cand = frozenset(combo)
                self.rho[rel_var] = cand
                if self.satisfy(ante):
                    got.append(cand)
            self.rho.pop(rel_var, None)
            self._so_passing[key] = got
        return got

    # -- transitive closure -----------------------------------------------------

    def tc_reachable(self, u_vars, v_vars, body, x_tuple, y_tuple) -> bool:
        if any(v not in self.adom for v in x_tuple) or \
           any(v not in self.adom for v in y_tuple):
            return False
        if x_tuple == y_tuple:
            return True
        seen = {x_tuple}
        frontier = deque((x_tuple,))
        while frontier:
            current = frontier.popleft()
            for nxt in self._tc_successors(u_vars, v_vars, body, current):
                if nxt == y_tuple:
                    return True
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
        return False

    def tc_reachable_set(self, u_vars, v_vars, body, x_tuple) -> set[tuple[Value, ...]]:
        if any(v not in self.adom for v in x_tuple):
            return set()
        seen = {x_tuple}
        frontier = deque((x_tuple,))
        while frontier:
            current = frontier.popleft()
            for nxt in self._tc_successors(u_vars, v_vars, body, current):
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
        return seen

    def _tc_successors(self, u_vars, v_vars, body, current) -> Iterator[tuple[Value, ...]]:
        # step variables may shadow outer bindings; save and restore them
        saved = {n: self.env.pop(n) for n in (*u_vars, *v_vars) if n in self.env}
        self.env.update(zip(u_vars, current))
        try:
            emitted = set()
            for binding in self.solve(body, frozenset(v_vars)):
                nxt = tuple(binding[n] for n in v_vars)
                if nxt not in emitted and all(v in self.adom for v in nxt):
                    emitted.add(nxt)
                    yield nxt
        finally:
            for n in u_vars:
                self.env.pop(n, None)
            self.env.update(saved)

    def _tc_predecessors(self, u_vars, v_vars, body, current) -> Iterator[tuple[Value, ...]]:
        yield from self._tc_successors(v_vars, u_vars, body, current)

    # -- goal-directed solving ---------------------------------------------------

    def solve(self, phi: Formula, targets: frozenset[str]) -> Iterator[dict[str, Value]]:
        """Yield bindings for `targets` (all currently unbound) that make
        phi true; values always lie in the active domain. Entries are
        installed in env while a binding is yielded."""
        if not targets:
            if self.satisfy(phi):
                yield {}
            return
        yield from self._solve(phi, targets)

    def _solve(self, phi: Formula, targets: frozenset[str]) -> Iterator[dict[str, Value]]:
        if isinstance(phi, And):
            yield from self._solve_and(list(phi.parts), targets)
            return
        if isinstance(phi, RelAtom):
            yield from self._solve_rel(phi)
            return
        if isinstance(phi, RelVarAtom):
            rel = self.rho.get(phi.rel_var)
            if rel is None:
                raise UnboundVariable(f"unbound relation variable {phi.rel_var!r}")
            yield from self._solve_rows(phi.terms, rel)
            return
        if isinstance(phi, Eq):
            yield from self._solve_eq(phi)
            return
        if isinstance(phi, Or):
            seen: set[tuple] = set()
            for p in phi.parts:
                own = free_vars(p) & targets
                residual = sorted(targets - own)
                for binding in self.solve(p, own):
                    for extra in self._enum_bound(residual):
                        full = {**binding, **extra}
                        key = tuple(full[n] for n in sorted(full))
                        if key not in seen:
                            seen.add(key)
                            yield full
            return
        if isinstance(phi, Exists) and phi.domain == ACTIVE:
            var, body = self._apart(phi.var, phi.body)
            emitted: set[tuple] = set()
            for binding in self.solve(body, targets | {var}):
                out = {n: v for n, v in binding.items() if n != var}
                key = tuple(out[n] for n in sorted(out))
                if key not in emitted:
                    emitted.add(key)
                    yield out
            return
        if isinstance(phi, Tc):
            yield from self._solve_tc(phi)
            return
        # checker fallback: enumerate the domain for the targets, then test
        for extra in self._enum_bound(sorted(targets)):
            if self.satisfy(phi):
                yield extra

    def _enum_bound(self, names: list[str]) -> Iterator[dict[str, Value]]:
        """Domain product over names; entries live in env while yielded."""
        if not names:
            yield {}
            return
        name, rest = names[0], names[1:]
        try:
            for v in self.adom_sorted:
                self.env[name] = v
                for sub in self._enum_bound(rest):
                    yield {name: v, **sub}
        finally:
            self.env.pop(name, None)

    def _solve_rows(self, terms, rows) -> Iterator[dict[str, Value]]:
        fixed: list[tuple[int, Value]] = []
        open_pos: list[tuple[int, str]] = []
        for i, t in enumerate(terms):
            if isinstance(t, Const):
                fixed.append((i, t.value))
            elif t.name in self.env:
                fixed.append((i, self.env[t.name]))
            else:
                open_pos.append((i, t.name))
        names = [n for _i, n in open_pos]
        try:
            for row in rows:
                if any(row[i] != v for i, v in fixed):
                    continue
                binding: dict[str, Value] = {}
                ok = True
                for i, name in open_pos:
                    if name in binding:
                        if binding[name] != row[i]:
                            ok = False
                            break
                    else:
                        binding[name] = row[i]
                if ok:
                    self.env.update(binding)
                    yield binding
                    for n in binding:
                        self.env.pop(n, None)
        finally:
            for n in names:
                self.env.pop(n, None)

    def _solve_rel(self, phi: RelAtom) -> Iterator[dict[str, Value]]:
        kind = TYPE_PREDICATES.get(phi.name)
        if kind is not None and phi.name not in self.s.vocabulary:
            if len(phi.terms) != 1:
                raise ArityMismatch(f"{phi.name} is unary")
            t = phi.terms[0]
            if isinstance(t, Var) and t.name not in self.env:
                try:
                    for v in self.adom_sorted:
                        if (v.kind == kind) or (kind == "rat" and v.kind in ("rat", "int")):
                            self.env[t.name] = v
                            yield {t.name: v}
                            self.env.pop(t.name, None)
                finally:
                    self.env.pop(t.name, None)
            elif self.satisfy(phi):
                yield {}
            return
        arity = self.s.vocabulary.get(phi.name)
        if arity is not None and arity != len(phi.terms):
            raise ArityMismatch(f"{phi.name}/{arity} used with {len(phi.terms)} arguments")
        rows: Iterable[tuple[Value, ...]] = self._sorted_rows(phi.name)
        # narrow through an index on the first bound position
        for i, t in enumerate(phi.terms):
            if self._bound(t):
                rows = self.s.index(phi.name, i).get(self.term_value(t), [])
                break
        yield from self._solve_rows(phi.terms, rows)

    def _solve_eq(self, phi: Eq) -> Iterator[dict[str, Value]]:
        lhs, rhs = phi.lhs, phi.rhs
        l_open = isinstance(lhs, Var) and lhs.name not in self.env
        r_open = isinstance(rhs, Var) and rhs.name not in self.env
        if l_open and r_open:
            same = lhs.name == rhs.name
            try:
                for v in self.adom_sorted:
                    self.env[lhs.name] = v
                    if same:
                        yield {lhs.name: v}
                    else:
                        self.env[rhs.name] = v
                        yield {lhs.name: v, rhs.name: v}
                        self.env.pop(rhs.name, None)
                    self.env.pop(lhs.name, None)
            finally:
                self.env.pop(lhs.name, None)
                if not same:
                    self.env.pop(rhs.name, None)
            return
        if l_open or r_open:
            open_name = lhs.name if l_open else rhs.name
            v = self.term_value(rhs if l_open else lhs)
            if v in self.adom:
                self.env[open_name] = v
                try:
                    yield {open_name: v}
                finally:
                    self.env.pop(open_name, None)
            return
        if self.satisfy(phi):
            yield {}

    def _solve_tc(self, phi: Tc) -> Iterator[dict[str, Value]]:
        params = sorted((free_vars(phi.body) - set(phi.u_vars) - set(phi.v_vars))
                        - set(self.env))
        if params:
            for extra in self._enum_bound(params):
                for sub in self._solve_tc(phi):
                    yield {**extra, **sub}
            return
        x_bound = all(self._bound(t) for t in phi.x_args)
        y_bound = all(self._bound(t) for t in phi.y_args)
        if x_bound:
            x_tuple = tuple(self.term_value(t) for t in phi.x_args)
            reached = self.tc_reachable_set(phi.u_vars, phi.v_vars, phi.body, x_tuple)
            yield from self._solve_rows(phi.y_args, reached)
            return
        if y_bound:
            y_tuple = tuple(self.term_value(t) for t in phi.y_args)
            if any(v not in self.adom for v in y_tuple):
                return
            seen = {y_tuple}
            frontier = deque((y_tuple,))
            while frontier:
                current = frontier.popleft()
                for prv in self._tc_predecessors(phi.u_vars, phi.v_vars, phi.body, current):
                    if prv not in seen:
                        seen.add(prv)
                        frontier.append(prv)
            yield from self._solve_rows(phi.x_args, seen)
            return
        # both ends open: enumerate start tuples, then sweep forward
        open_names = sorted({t.name for t in phi.x_args if not self._bound(t)})
        for extra in self._enum_bound(open_names):
            x_tuple = tuple(self.term_value(t) for t in phi.x_args)
            reached = self.tc_reachable_set(phi.u_vars, phi.v_vars, phi.body, x_tuple)
            for sub in self._solve_rows(phi.y_args, sorted(
                    reached, key=lambda r: tuple(sort_key(v) for v in r))):
                yield {**extra, **sub}

    def _solve_and(self, parts: list[Formula], targets: frozenset[str]
                   ) -> Iterator[dict[str, Value]]:
        if not targets:
            if all(self.satisfy(p) for p in
                   sorted(parts, key=lambda q: _CHECK_COST[type(q)])):
                yield {}
            return
        checkers = [p for p in parts if not (free_vars(p) & targets)]
        open_parts = [p for p in parts if free_vars(p) & targets]
        for p in sorted(checkers, key=lambda q: _CHECK_COST[type(q)]):
            if not self.satisfy(p):
                return
        if not open_parts:
            # targets unconstrained by this conjunction: enumerate freely
            yield from self._enum_bound(sorted(targets))
            return
        idx = self._pick_generator(open_parts, targets)
        if idx is None:
            name = min(n for p in open_parts for n in free_vars(p) & targets)
            try:
                for v in self.adom_sorted:
                    self.env[name] = v
                    for sub in self._solve_and(open_parts, targets - {name}):
                        yield {name: v, **sub}
            finally:
                self.env.pop(name, None)
            return
        gen = open_parts[idx]
        rest = open_parts[:idx] + open_parts[idx + 1:]
        own = free_vars(gen) & targets
        for binding in self.solve(gen, own):
            remaining = targets - set(binding)
            if rest:
                for sub in self._solve_and(rest, remaining):
                    yield {**binding, **sub}
            elif remaining:
                for extra in self._enum_bound(sorted(remaining)):
                    yield {**binding, **extra}
            else:
                yield dict(binding)

    def _pick_generator(self, parts: list[Formula], targets: frozenset[str]) -> int | None:
        best = None
        best_rank = None
        for i, p in enumerate(parts):
            rank = self._generator_rank(p, targets)
            if rank is None:
                continue
            if best_rank is None or rank < best_rank:
                best, best_rank = i, rank
        return best

    def _generator_rank(self, p: Formula, targets: frozenset[str]):
        open_count = len(free_vars(p) & targets)
        if isinstance(p, (RelAtom, RelVarAtom)):
            return (0, open_count)
        if isinstance(p, Eq):
            l_open = isinstance(p.lhs, Var) and p.lhs.name not in self.env
            r_open = isinstance(p.rhs, Var) and p.rhs.name not in self.env
            if l_open != r_open:
                return (0, 1)
            return (3, open_count)
        if isinstance(p, Exists) and p.domain == ACTIVE:
            inner = self._generator_rank(p.body, targets)
            return None if inner is None else (inner[0] + 1, inner[1])
        if isinstance(p, And):
            ranks = [self._generator_rank(q, targets) for q in p.parts]
            ranks = [r for r in ranks if r is not None]
            return min(ranks) if ranks else None
        if isinstance(p, Or):
            return (4, open_count)
        if isinstance(p, Tc):
            x_bound = all(self._bound(t) for t in p.x_args)
            y_bound = all(self._bound(t) for t in p.y_args)
            if x_bound or y_bound:
                return (2, open_count)
            return (6, open_count)
        return None


def _negate(phi: Formula) -> Formula:
    """One-step negation push that keeps conjunct guards generative."""
    if isinstance(phi, Not):
        return phi.body
    if isinstance(phi, Implies):
        return And((phi.lhs, _negate(phi.rhs)))
    if isinstance(phi, And):
        return Or(tuple(_negate(p) for p in phi.parts))
    if isinstance(phi, Or):
        return And(tuple(_negate(p) for p in phi.parts))
    if isinstance(phi, Forall) and phi.domain == ACTIVE:
        return Exists(phi.var, _negate(phi.body), ACTIVE)
    return Not(phi)
