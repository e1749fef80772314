"""Graph-type schemas: parsing and translation into first-order sentences.

A graph type declares node types, edge types and typed property lists:

    CREATE GRAPH TYPE transportGraphType LOOSE {
        (townType :Town {name STRING, x-coord INT, y-coord INT}),
        (crossroadType :Crossroad {x-coord INT, y-coord INT}),
        (:townType)-[bikeLaneType :Bike-lane]-(:townType)
    }

Each declared type is rewritten into a guarded universal sentence over the
relational encoding: elements matching the declared label spec must carry
the declared properties with the declared base types, and edges matching a
middle type must have endpoints conforming to the endpoint types. Base
types STRING/INT/REAL become the structural value predicates. In LOOSE
mode extra properties and unmatched elements are allowed; STRICT mode adds
closed-world sentences (every element matches some declared type, and
non-OPEN property lists are exhaustive).

ABSTRACT types, graph type imports, and standalone CREATE NODE/EDGE TYPE
statements are parsed but not translated.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import ParseError, UnresolvedTypeName, UnsupportedConstruct
from .graph import (
    EDIR_REL,
    EUNDIR_REL,
    LABEL_REL,
    NODE_REL,
    PROPERTY_REL,
    RelStructure,
    SRC_REL,
    TGT_REL,
    encode_relational,
)
from .logic import ast as L
from .logic.evaluate import EvalSettings, Evaluator, eval_formula
from .values import key as key_const, label as label_const, render_value

BASE_TYPES = {"STRING": "String", "INT": "Integer", "REAL": "Real"}


# ---------------------------------------------------------------------------
# Syntax
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PropertyDecl:
    optional: bool
    key: str
    base: str  # STRING | INT | REAL


@dataclass(frozen=True)
class PropertySpec:
    entries: tuple[PropertyDecl, ...] = ()
    open: bool = False
    declared: bool = False  # whether a { ... } block was present


@dataclass(frozen=True)
class LabelLeaf:
    name: str


@dataclass(frozen=True)
class TypeRef:
    name: str


@dataclass(frozen=True)
class LabelOp:
    op: str  # "|" or "&" or "?"
    parts: tuple["LabelSpec", ...]


LabelSpec = Union[LabelLeaf, TypeRef, LabelOp]


@dataclass(frozen=True)
class LabelPropertySpec:
    label: Optional[LabelSpec] = None
    open: bool = False
    props: PropertySpec = PropertySpec()


@dataclass(frozen=True)
class NodeType:
    type_name: str
    spec: LabelPropertySpec
    abstract: bool = False


@dataclass(frozen=True)
class EdgeType:
    source: LabelPropertySpec
    middle_name: str
    middle: LabelPropertySpec
    target: LabelPropertySpec
    directed: bool = True
    abstract: bool = False


@dataclass(frozen=True)
class GraphType:
    name: str
    mode: str  # STRICT | LOOSE
    elements: tuple[Union[NodeType, EdgeType, TypeRef], ...]
    imports: tuple[str, ...] = ()

    def node_types(self) -> dict[str, NodeType]:
        return {e.type_name: e for e in self.elements if isinstance(e, NodeType)}

    def edge_types(self) -> list[EdgeType]:
        return [e for e in self.elements if isinstance(e, EdgeType)]


_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*|\#[^\n]*)
  | (?P<punct>-\[|\]->|\]-|->|[(){},;:|&?-])
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*(?:-[A-Za-z0-9_]+)*)
""", re.VERBOSE)

_KEYWORDS = {"CREATE", "GRAPH", "TYPE", "NODE", "EDGE", "ABSTRACT", "STRICT",
             "LOOSE", "OPEN", "OPTIONAL", "IMPORTS", "STRING", "INT", "REAL"}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    out = []
    line = 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line=line)
        kind, value = m.lastgroup, m.group()
        if kind == "ident" and value in _KEYWORDS:
            out.append((value, value, line))
        elif kind in ("punct", "ident"):
            out.append((kind if kind == "ident" else value, value, line))
        line += value.count("\n")
        pos = m.end()
    out.append(("eof", "", line))
    return out


class _SchemaParser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self, k=0):
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def next(self):
        tok = self.tokens[self.pos]
        if tok[0] != "eof":
            self.pos += 1
        return tok

    def at(self, *kinds):
        return self.peek()[0] in kinds

    def expect(self, kind):
        tok = self.peek()
        if tok[0] != kind:
            raise ParseError(f"expected {kind!r}, found {tok[1]!r}", line=tok[2])
        return self.next()

    def ident(self, what):
        tok = self.peek()
        if tok[0] != "ident":
            raise ParseError(f"expected {what}, found {tok[1]!r}", line=tok[2])
        return self.next()[1]

    # grammar ------------------------------------------------------------

    def parse_document(self) -> GraphType:
        graph_type: GraphType | None = None
        while not self.at("eof"):
            self.expect("CREATE")
            if self.at("GRAPH"):
                self.next()
                self.expect("TYPE")
                gt = self.parse_graph_type()
                if graph_type is not None:
                    raise UnsupportedConstruct(
                        "only one graph type per document is supported")
                graph_type = gt
            elif self.at("NODE", "EDGE"):
                # standalone node/edge type declarations are accepted but
                # carry no constraints of their own
                kind = self.next()[0]
                self.expect("TYPE")
                if self.at("ABSTRACT"):
                    self.next()
                if kind == "NODE":
                    self.parse_node_type(abstract=True)
                else:
                    self.parse_edge_type(abstract=True)
            else:
                tok = self.peek()
                raise ParseError(f"expected GRAPH/NODE/EDGE, found {tok[1]!r}",
                                 line=tok[2])
            if self.at(";"):
                self.next()
        if graph_type is None:
            raise ParseError("document declares no graph type")
        return graph_type

    def parse_graph_type(self) -> GraphType:
        name = self.ident("graph type name")
        mode = "LOOSE"
        if self.at("STRICT", "LOOSE"):
            mode = self.next()[0]
        imports: tuple[str, ...] = ()
        if self.at("IMPORTS"):
            self.next()
            names = [self.ident("import name")]
            while self.at(","):
                self.next()
                names.append(self.ident("import name"))
            imports = tuple(names)
        self.expect("{")
        elements: list = []
        if not self.at("}"):
            elements.append(self.parse_element_type())
            while self.at(","):
                self.next()
                elements.append(self.parse_element_type())
        self.expect("}")
        return GraphType(name, mode, tuple(elements), imports)

    def parse_element_type(self):
        if self.at("ident"):
            return TypeRef(self.next()[1])
        if self.at("("):
            # node type or the start of an edge type
            if self._looks_like_edge():
                return self.parse_edge_type()
            return self.parse_node_type()
        tok = self.peek()
        raise ParseError(f"expected an element type, found {tok[1]!r}",
                         line=tok[2])

    def _looks_like_edge(self) -> bool:
        depth = 0
        for k in range(0, len(self.tokens) - self.pos):
            kind = self.peek(k)[0]
            if kind == "(":
                depth += 1
            elif kind == ")":
                depth -= 1
                if depth == 0:
                    return self.peek(k + 1)[0] == "-["
            elif kind == "eof":
                return False
        return False

    def parse_node_type(self, abstract: bool = False) -> NodeType:
        self.expect("(")
        name = self.ident("node type name")
        spec = self.parse_label_property_spec()
        self.expect(")")
        return NodeType(name, spec, abstract)

    def parse_edge_type(self, abstract: bool = False) -> EdgeType:
        self.expect("(")
        source = self.parse_label_property_spec()
        self.expect(")")
        self.expect("-[")
        middle_name = self.ident("edge type name")
        middle = self.parse_label_property_spec()
        closer = self.peek()
        if closer[0] == "]->":
            self.next()
            directed = True
        elif closer[0] == "]-":
            self.next()
            directed = False
        else:
            raise ParseError(f"expected ]-> or ]-, found {closer[1]!r}",
                             line=closer[2])
        self.expect("(")
        target = self.parse_label_property_spec()
        self.expect(")")
        return EdgeType(source, middle_name, middle, target, directed, abstract)

    def parse_label_property_spec(self) -> LabelPropertySpec:
        label = None
        open_flag = False
        props = PropertySpec()
        if self.at(":"):
            self.next()
            label = self.parse_label_spec()
        if self.at("OPEN"):
            self.next()
            open_flag = True
        if self.at("{"):
            props = self.parse_property_spec()
        return LabelPropertySpec(label, open_flag, props)

    def parse_label_spec(self) -> LabelSpec:
        left = self.parse_label_atom()
        while self.at("|", "&", "?"):
            op = self.next()[0]
            if op == "?":
                left = LabelOp("?", (left,))
            else:
                right = self.parse_label_atom()
                left = LabelOp(op, (left, right))
        return left

    def parse_label_atom(self) -> LabelSpec:
        if self.at("("):
            self.next()
            inner = self.parse_label_spec()
            self.expect(")")
            return inner
        name = self.ident("label or type name")
        return LabelLeaf(name)

    def parse_property_spec(self) -> PropertySpec:
        self.expect("{")
        entries: list[PropertyDecl] = []
        open_flag = False
        if self.at("OPEN"):
            self.next()
            open_flag = True
        elif not self.at("}"):
            entries.append(self.parse_property())
            while self.at(","):
                self.next()
                if self.at("OPEN"):
                    self.next()
                    open_flag = True
                    break
                entries.append(self.parse_property())
        self.expect("}")
        keys = [e.key for e in entries]
        if len(set(keys)) != len(keys):
            raise ParseError(f"duplicate property keys: {keys}")
        return PropertySpec(tuple(entries), open_flag, declared=True)

    def parse_property(self) -> PropertyDecl:
        optional = False
        if self.at("OPTIONAL"):
            self.next()
            optional = True
        key = self.ident("property key")
        tok = self.peek()
        if tok[0] not in BASE_TYPES:
            raise ParseError(f"expected a base type, found {tok[1]!r}",
                             line=tok[2])
        self.next()
        return PropertyDecl(optional, key, tok[0])


def parse_schema(text: str) -> GraphType:
    """Parse a graph type document and resolve its type-name references."""
    schema = _SchemaParser(_tokenize(text)).parse_document()
    node_types = schema.node_types()

    def check_label(spec: LabelSpec | None) -> None:
        if spec is None:
            return
        if isinstance(spec, LabelOp):
            for p in spec.parts:
                check_label(p)

    for element in schema.elements:
        if isinstance(element, TypeRef) and element.name not in node_types:
            raise UnresolvedTypeName(f"undeclared type {element.name!r}")
        if isinstance(element, EdgeType):
            for endpoint in (element.source, element.target):
                for ref in _label_refs(endpoint.label, node_types):
                    if ref not in node_types:
                        raise UnresolvedTypeName(f"undeclared type {ref!r}")
    return schema


def _label_refs(spec: LabelSpec | None, node_types) -> list[str]:
    """Leaf names that resolve to declared types (the rest are labels)."""
    if spec is None:
        return []
    if isinstance(spec, LabelLeaf):
        return [spec.name] if spec.name in node_types or spec.name.endswith("Type") \
            else []
    if isinstance(spec, TypeRef):
        return [spec.name]
    out = []
    for p in spec.parts:
        out.extend(_label_refs(p, node_types))
    return out


# ---------------------------------------------------------------------------
# Translation
# ---------------------------------------------------------------------------


@dataclass
class Rule:
    description: str
    guard: L.Formula  # over x: the elements the rule speaks about
    spec: L.Formula  # over x: what they must satisfy

    def sentence(self) -> L.Formula:
        return L.Forall("x", L.Implies(self.guard, self.spec))


class _Translator:
    def __init__(self, schema: GraphType):
        self.schema = schema
        self.node_types = schema.node_types()
        self._fresh = iter(f"$p{i}" for i in range(10_000))

    def _label_matcher(self, spec: LabelSpec | None, var: str) -> L.Formula:
        """The elements a label spec speaks about."""
        if spec is None:
            return L.TRUE
        if isinstance(spec, LabelLeaf):
            if spec.name in self.node_types:
                inner = self.node_types[spec.name]
                return L.conj([
                    L.RelAtom(NODE_REL, (L.Var(var),)),
                    self._label_matcher(inner.spec.label, var),
                ])
            return L.RelAtom(LABEL_REL,
                             (L.Var(var), L.Const(label_const(spec.name))))
        if isinstance(spec, TypeRef):
            return self._label_matcher(LabelLeaf(spec.name), var)
        if spec.op == "|":
            return L.disj([self._label_matcher(p, var) for p in spec.parts])
        if spec.op == "&":
            return L.conj([self._label_matcher(p, var) for p in spec.parts])
        return L.TRUE  # optional label spec matches anything

    def _property_formula(self, props: PropertySpec, var: str) -> L.Formula:
        parts: list[L.Formula] = []
        for decl in props.entries:
            p = next(self._fresh)
            key_term = L.Const(key_const(decl.key))
            typed = L.RelAtom(BASE_TYPES[decl.base], (L.Var(p),))
            has = L.RelAtom(PROPERTY_REL, (L.Var(var), key_term, L.Var(p)))
            if decl.optional:
                parts.append(L.Forall(p, L.Implies(has, typed)))
            else:
                parts.append(L.Exists(p, L.And((has, typed))))
        return L.conj(parts)

    def _closed_keys(self, props: PropertySpec, var: str) -> L.Formula:
        """STRICT, non-OPEN: every present key is a declared one."""
        k, v = next(self._fresh), next(self._fresh)
        declared = L.disj([
            L.Eq(L.Var(k), L.Const(key_const(decl.key)))
            for decl in props.entries]) if props.entries else L.FALSE
        return L.forall_many([k, v], L.Implies(
            L.RelAtom(PROPERTY_REL, (L.Var(var), L.Var(k), L.Var(v))),
            declared))

    def _full_spec(self, lps: LabelPropertySpec, var: str) -> L.Formula:
        """Conformance to a label-property spec: label match and properties."""
        return L.conj([
            self._label_matcher(lps.label, var),
            self._property_formula(lps.props, var),
        ])

    def rules(self) -> list[Rule]:
        out: list[Rule] = []
        strict = self.schema.mode == "STRICT"
        for element in self.schema.elements:
            if isinstance(element, TypeRef):
                element = self.node_types[element.name]
            if isinstance(element, NodeType):
                if element.abstract:
                    continue
                guard = L.conj([
                    L.RelAtom(NODE_REL, (L.Var("x"),)),
                    self._label_matcher(element.spec.label, "x"),
                ])
                spec = self._property_formula(element.spec.props, "x")
                if strict and element.spec.props.declared \
                        and not element.spec.props.open and not element.spec.open:
                    spec = L.conj([spec, self._closed_keys(element.spec.props, "x")])
                out.append(Rule(
                    f"node type {element.type_name}", guard, spec))
            elif isinstance(element, EdgeType):
                if element.abstract:
                    continue
                kind = EDIR_REL if element.directed else EUNDIR_REL
                guard = L.conj([
                    L.RelAtom(kind, (L.Var("x"),)),
                    self._label_matcher(element.middle.label, "x"),
                ])
                y, z = next(self._fresh), next(self._fresh)
                ends = L.RelAtom(SRC_REL, (L.Var("x"), L.Var(y))), \
                    L.RelAtom(TGT_REL, (L.Var("x"), L.Var(z)))
                straight = L.And((self._full_spec(element.source, y),
                                  self._full_spec(element.target, z)))
                if element.directed:
                    endpoint_spec = straight
                else:
                    flipped = L.And((self._full_spec(element.source, z),
                                     self._full_spec(element.target, y)))
                    endpoint_spec = L.Or((straight, flipped))
                spec = L.conj([
                    self._property_formula(element.middle.props, "x"),
                    L.forall_many([y, z], L.Implies(L.And(ends), endpoint_spec)),
                ])
                out.append(Rule(f"edge type {element.middle_name}", guard, spec))
        if strict:
            node_matchers = [
                self._label_matcher(e.spec.label, "x")
                for e in self.schema.elements
                if isinstance(e, NodeType) and not e.abstract]
            out.append(Rule(
                "strict node coverage",
                L.RelAtom(NODE_REL, (L.Var("x"),)),
                L.disj(node_matchers) if node_matchers else L.FALSE))
            edge_matchers = [
                L.conj([
                    L.RelAtom(EDIR_REL if e.directed else EUNDIR_REL,
                              (L.Var("x"),)),
                    self._label_matcher(e.middle.label, "x")])
                for e in self.schema.elements
                if isinstance(e, EdgeType) and not e.abstract]
            out.append(Rule(
                "strict edge coverage",
                L.disj([L.RelAtom(EDIR_REL, (L.Var("x"),)),
                        L.RelAtom(EUNDIR_REL, (L.Var("x"),))]),
                L.disj(edge_matchers) if edge_matchers else L.FALSE))
        return out


def schema_to_fo(schema: GraphType) -> L.Formula:
    """One sentence: the graph conforms to the graph type."""
    rules = _Translator(schema).rules()
    if not rules:
        return L.Forall("x", L.Eq(L.Var("x"), L.Var("x")))  # tautology
    return L.conj([rule.sentence() for rule in rules])


@dataclass
class Violation:
    rule: str
    element: str

    def __str__(self) -> str:
        return f"{self.rule}: violated by {self.element}"


@dataclass
class ValidationResult:
    ok: bool
    violations: list[Violation] = field(default_factory=list)

    def report(self) -> str:
        if self.ok:
            return "conforms"
        return "\n".join(str(v) for v in self.violations)


def validate(schema: GraphType, graph) -> ValidationResult:
    """Evaluate the schema sentence on the graph's encoding; on failure,
    name the first offending element of each failed rule."""
    structure = graph if isinstance(graph, RelStructure) else encode_relational(graph)
    rules = _Translator(schema).rules()
    violations: list[Violation] = []
    for rule in rules:
        if eval_formula(rule.sentence(), structure):
            continue
        witness = _first_witness(rule, structure)
        violations.append(Violation(rule.description, witness))
    return ValidationResult(ok=not violations, violations=violations)


def _first_witness(rule: Rule, structure: RelStructure) -> str:
    ev = Evaluator(structure, EvalSettings())
    bad = L.And((rule.guard, L.Not(rule.spec)))
    for binding in ev.solve(bad, frozenset(("x",))):
        return render_value(binding["x"])
    return "<no witness>"
