"""Constant values stored in graphs and relational structures.

A value is one of seven disjoint variants: node id, edge id, string,
arbitrary-precision integer, exact rational, label constant and key
constant. Node and edge ids live in disjoint namespaces; labels and keys
are first-class constants so that meta-queries can quantify over them.

The textual forms used in formula files and table output are::

    #n:ID    node id          "text"   string
    #e:ID    edge id          42       integer
    lbl:NAME label constant   -7/3     rational (lowest terms)
    key:NAME key constant
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

NODE = "node"
EDGE = "edge"
STR = "str"
INT = "int"
RAT = "rat"
LABEL = "label"
KEY = "key"

_KINDS = (NODE, EDGE, STR, INT, RAT, LABEL, KEY)


@dataclass(frozen=True, slots=True)
class Value:
    kind: str
    data: str | int | Fraction

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown value kind {self.kind!r}")

    def is_numeric(self) -> bool:
        return self.kind in (INT, RAT)

    def as_fraction(self) -> Fraction:
        if self.kind == INT:
            return Fraction(self.data)
        if self.kind == RAT:
            return self.data  # type: ignore[return-value]
        raise TypeError(f"{render_value(self)} is not numeric")


def node_id(name: str) -> Value:
    return Value(NODE, name)


def edge_id(name: str) -> Value:
    return Value(EDGE, name)


def string(text: str) -> Value:
    return Value(STR, text)


def integer(n: int) -> Value:
    return Value(INT, int(n))


def rational(num, den=None) -> Value:
    """Exact rational; Fraction keeps it in lowest terms with q > 0."""
    frac = Fraction(num) if den is None else Fraction(num, den)
    return Value(RAT, frac)


def label(name: str) -> Value:
    return Value(LABEL, name)


def key(name: str) -> Value:
    return Value(KEY, name)


def numeric(frac: Fraction) -> Value:
    """Wrap a Fraction as Int when integral, Rat otherwise."""
    if frac.denominator == 1:
        return integer(frac.numerator)
    return Value(RAT, frac)


def render_value(v: Value) -> str:
    if v.kind == NODE:
        return f"#n:{v.data}"
    if v.kind == EDGE:
        return f"#e:{v.data}"
    if v.kind == STR:
        escaped = str(v.data).replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if v.kind == INT:
        return str(v.data)
    if v.kind == RAT:
        f: Fraction = v.data  # type: ignore[assignment]
        return f"{f.numerator}/{f.denominator}"
    if v.kind == LABEL:
        return f"lbl:{v.data}"
    return f"key:{v.data}"


def sort_key(v: Value) -> str:
    """Ordering used for deterministic output: lexicographic on rendering."""
    return render_value(v)


def parse_value(text: str) -> Value:
    """Inverse of render_value for the non-string forms; strings are handled
    by the tokenizers that own quoting."""
    from .errors import ParseError

    if text.startswith("#n:"):
        return node_id(text[3:])
    if text.startswith("#e:"):
        return edge_id(text[3:])
    if text.startswith("lbl:"):
        return label(text[4:])
    if text.startswith("key:"):
        return key(text[4:])
    if text.startswith('"') and text.endswith('"') and len(text) >= 2:
        body = text[1:-1]
        out, i = [], 0
        while i < len(body):
            if body[i] == "\\" and i + 1 < len(body):
                out.append(body[i + 1])
                i += 2
            else:
                out.append(body[i])
                i += 1
        return string("".join(out))
    if "/" in text:
        num, _, den = text.partition("/")
        try:
            return rational(int(num), int(den))
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"bad rational literal {text!r}") from exc
    try:
        return integer(int(text))
    except ValueError as exc:
        raise ParseError(f"bad value literal {text!r}") from exc
