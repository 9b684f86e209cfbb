"""Immutable runtime values, canonical ordering and literal-style rendering."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from lxlang.typesys.typesig import (
    BOOL,
    FLOAT,
    NONE,
    RATIONAL,
    DECIMAL,
    ListT,
    MapT,
    NeverT,
    NominalT,
    Prim,
    RecordT,
    StringOfT,
    TupleT,
    TypedeclT,
    TypeSig,
    UnionT,
)

NAT_MAX = 2**64 - 1
INT_MIN = -(2**63)
INT_MAX = 2**63 - 1
DEC_SCALE = 10**19
DEC_LIMIT = 2**127
NUM_RANK = {"Nat": 0, "Int": 1, "BigNat": 2, "BigInt": 3}
SUFFIX = {"Int": "i", "Nat": "n", "BigInt": "I", "BigNat": "N"}

# none is Python None and Bool is Python bool


@dataclass(frozen=True)
class IntV:
    kind: str  # Nat | Int | BigNat | BigInt
    v: int

    def __repr__(self) -> str:
        return f"{self.v}{SUFFIX[self.kind]}"


@dataclass(frozen=True)
class FloatV:
    v: float

    def __repr__(self) -> str:
        return f"{self.v!r}f"


@dataclass(frozen=True)
class DecimalV:
    scaled: int  # value * 10**19

    def __repr__(self) -> str:
        sign = "-" if self.scaled < 0 else ""
        whole, frac = divmod(abs(self.scaled), DEC_SCALE)
        frac_s = str(frac).rjust(19, "0").rstrip("0") or "0"
        return f"{sign}{whole}.{frac_s}d"


@dataclass(frozen=True)
class RationalV:
    v: Fraction

    def __repr__(self) -> str:
        return f"{self.v.numerator}/{self.v.denominator}R"


@dataclass(frozen=True)
class StrV:
    v: str
    kind: str = "String"  # String | ASCIIString


@dataclass(frozen=True)
class StringOfV:
    validator: str
    v: str


@dataclass(frozen=True)
class TypedeclV:
    name: str
    base: object
    base_type: TypeSig


@dataclass(frozen=True)
class TupleV:
    items: tuple


@dataclass(frozen=True)
class RecordV:
    fields: tuple  # ((name, value), ...) sorted by name


@dataclass(frozen=True)
class EntityV:
    name: str
    fields: tuple  # ((name, value), ...) in declaration order
    args: tuple = ()  # type arguments for Ok<T>/Err<E>

    def get(self, name: str):
        for n, v in self.fields:
            if n == name:
                return v
        raise KeyError(name)


@dataclass(frozen=True)
class ListV:
    items: tuple
    elem: TypeSig


@dataclass(frozen=True)
class MapV:
    entries: tuple  # ((key, value), ...) strictly ascending by key_order
    key: TypeSig
    value: TypeSig


def key_order(v) -> tuple:
    """Total canonical order on key-type values."""
    if v is None:
        return (0,)
    if isinstance(v, bool):
        return (1, int(v))
    if isinstance(v, IntV):
        return (2, v.v, NUM_RANK[v.kind])
    if isinstance(v, StrV):
        return (3, [ord(c) for c in v.v], 0, "")
    if isinstance(v, StringOfV):
        return (3, [ord(c) for c in v.v], 1, v.validator)
    if isinstance(v, TypedeclV):
        return (4, v.name, key_order(v.base))
    raise TypeError(f"{v!r} is not a key value")


def make_map(entries, key: TypeSig, value: TypeSig) -> MapV:
    """Build a map; later entries win on duplicate keys."""
    d: dict = {}
    for k, v in entries:
        d[k] = v
    return MapV(tuple(sorted(d.items(), key=lambda kv: key_order(kv[0]))), key, value)


def make_record(fields) -> RecordV:
    return RecordV(tuple(sorted(fields, key=lambda f: f[0])))


def value_type(v) -> TypeSig:
    """The most precise atom type of a value."""
    if v is None:
        return NONE
    if isinstance(v, bool):
        return BOOL
    if isinstance(v, IntV):
        return Prim(v.kind)
    if isinstance(v, FloatV):
        return FLOAT
    if isinstance(v, DecimalV):
        return DECIMAL
    if isinstance(v, RationalV):
        return RATIONAL
    if isinstance(v, StrV):
        return Prim(v.kind)
    if isinstance(v, StringOfV):
        return StringOfT(v.validator)
    if isinstance(v, TypedeclV):
        return TypedeclT(v.name, v.base_type)
    if isinstance(v, TupleV):
        return TupleT(tuple(value_type(i) for i in v.items))
    if isinstance(v, RecordV):
        return RecordT(tuple((n, value_type(i)) for n, i in v.fields))
    if isinstance(v, EntityV):
        return NominalT(v.name, v.args)
    if isinstance(v, ListV):
        return ListT(v.elem)
    if isinstance(v, MapV):
        return MapT(v.key, v.value)
    raise TypeError(v)


def conforms(v, t: TypeSig, universe) -> bool:
    """Does value ``v`` inhabit type ``t``?"""
    if isinstance(t, NeverT):
        return False
    if isinstance(t, UnionT):
        return any(conforms(v, m, universe) for m in t.members)
    if isinstance(t, NominalT):
        if not isinstance(v, EntityV):
            return False
        if v.name == t.name and v.args == t.args:
            return True
        return not t.args and universe is not None and t.name in universe.closure.get(v.name, ())
    if isinstance(t, TupleT):
        return isinstance(v, TupleV) and len(v.items) == len(t.items) and all(
            conforms(a, b, universe) for a, b in zip(v.items, t.items)
        )
    if isinstance(t, RecordT):
        return isinstance(v, RecordV) and [n for n, _ in v.fields] == [n for n, _ in t.fields] and all(
            conforms(a, b, universe) for (_, a), (_, b) in zip(v.fields, t.fields)
        )
    return value_type(v) == t


def render_string(s: str) -> str:
    from lxlang.frontend.render import render_string as rs

    return rs(s)


def show(v) -> str:
    """Render a value in surface-literal syntax (deterministic)."""
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (IntV, FloatV, DecimalV, RationalV)):
        return repr(v)
    if isinstance(v, StrV):
        return render_string(v.v)
    if isinstance(v, StringOfV):
        return render_string(v.v)
    if isinstance(v, TypedeclV):
        if isinstance(v.base, IntV):
            return f"{v.base.v}_{v.name}"
        if isinstance(v.base, (StrV, StringOfV)):
            return render_string(v.base.v) + v.name
        return f"{v.name}{{{show(v.base)}}}"
    if isinstance(v, TupleV):
        return "[" + ", ".join(show(i) for i in v.items) + "]"
    if isinstance(v, RecordV):
        return "{" + ", ".join(f"{n}={show(i)}" for n, i in v.fields) + "}"
    if isinstance(v, EntityV):
        head = v.name + ("<" + ", ".join(str(a) for a in v.args) + ">" if v.args else "")
        return head + "{" + ", ".join(f"{n}={show(i)}" for n, i in v.fields) + "}"
    if isinstance(v, ListV):
        return f"List<{v.elem}>{{" + ", ".join(show(i) for i in v.items) + "}"
    if isinstance(v, MapV):
        return f"Map<{v.key}, {v.value}>{{" + ", ".join(f"{show(k)} => {show(x)}" for k, x in v.entries) + "}"
    raise TypeError(v)


def decimal_from_text(text: str) -> DecimalV:
    neg = text.startswith("-")
    text = text.lstrip("-")
    whole, _, frac = text.partition(".")
    if len(frac) > 19:
        frac = frac[:19]
    scaled = int(whole or "0") * DEC_SCALE + int(frac.ljust(19, "0") or "0")
    return DecimalV(-scaled if neg else scaled)


def rational_from_text(text: str) -> RationalV:
    p, _, q = text.partition("/")
    return RationalV(Fraction(int(p), int(q)))
