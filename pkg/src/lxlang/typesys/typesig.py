"""Static type signatures.

All signatures are immutable and hashable. Unions are always normalized through
:func:`union`: flattened, deduplicated, canonically ordered and with at least two
members.
"""

from __future__ import annotations

from dataclasses import dataclass

PRIM_NAMES = (
    "None",
    "Bool",
    "Nat",
    "Int",
    "BigNat",
    "BigInt",
    "Float",
    "Decimal",
    "Rational",
    "String",
    "ASCIIString",
)
INTEGRAL = ("Nat", "Int", "BigNat", "BigInt")
NUMERIC = INTEGRAL + ("Float", "Decimal", "Rational")
UNSIGNED = ("Nat", "BigNat")


class TypeSig:
    __slots__ = ()


@dataclass(frozen=True)
class Prim(TypeSig):
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class StringOfT(TypeSig):
    validator: str

    def __str__(self) -> str:
        return f"StringOf<{self.validator}>"


@dataclass(frozen=True)
class TypedeclT(TypeSig):
    name: str
    base: TypeSig

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class TupleT(TypeSig):
    items: tuple[TypeSig, ...]

    def __str__(self) -> str:
        return "[" + ", ".join(str(t) for t in self.items) + "]"


@dataclass(frozen=True)
class RecordT(TypeSig):
    fields: tuple[tuple[str, TypeSig], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "fields", tuple(sorted(self.fields, key=lambda f: f[0])))

    def __str__(self) -> str:
        return "{" + ", ".join(f"{n}: {t}" for n, t in self.fields) + "}"

    def field_type(self, name: str) -> TypeSig | None:
        for n, t in self.fields:
            if n == name:
                return t
        return None


@dataclass(frozen=True)
class UnionT(TypeSig):
    members: tuple[TypeSig, ...]

    def __str__(self) -> str:
        return " | ".join(str(m) for m in self.members)


@dataclass(frozen=True)
class NominalT(TypeSig):
    name: str
    args: tuple[TypeSig, ...] = ()

    def __str__(self) -> str:
        if self.args:
            return f"{self.name}<" + ", ".join(str(a) for a in self.args) + ">"
        return self.name


@dataclass(frozen=True)
class ListT(TypeSig):
    elem: TypeSig

    def __str__(self) -> str:
        return f"List<{self.elem}>"


@dataclass(frozen=True)
class MapT(TypeSig):
    key: TypeSig
    value: TypeSig

    def __str__(self) -> str:
        return f"Map<{self.key}, {self.value}>"


@dataclass(frozen=True)
class NeverT(TypeSig):
    def __str__(self) -> str:
        return "Never"


NONE = Prim("None")
BOOL = Prim("Bool")
NAT = Prim("Nat")
INT = Prim("Int")
BIGNAT = Prim("BigNat")
BIGINT = Prim("BigInt")
FLOAT = Prim("Float")
DECIMAL = Prim("Decimal")
RATIONAL = Prim("Rational")
STRING = Prim("String")
ASCII = Prim("ASCIIString")
NEVER = NeverT()


def sort_key(t: TypeSig) -> str:
    return str(t)


def union(*types: TypeSig) -> TypeSig:
    flat: list[TypeSig] = []
    for t in types:
        if isinstance(t, UnionT):
            flat.extend(t.members)
        elif isinstance(t, NeverT):
            continue
        else:
            flat.append(t)
    uniq = sorted(set(flat), key=sort_key)
    if not uniq:
        return NEVER
    if len(uniq) == 1:
        return uniq[0]
    return UnionT(tuple(uniq))


def members(t: TypeSig) -> tuple[TypeSig, ...]:
    if isinstance(t, UnionT):
        return t.members
    if isinstance(t, NeverT):
        return ()
    return (t,)


def is_prim(t: TypeSig, *names: str) -> bool:
    return isinstance(t, Prim) and (not names or t.name in names)


def numeric_base(t: TypeSig) -> str | None:
    """Name of the numeric primitive behind ``t`` (looking through typedecls)."""
    if isinstance(t, TypedeclT):
        return numeric_base(t.base)
    if isinstance(t, Prim) and t.name in NUMERIC:
        return t.name
    return None


def is_key_type(t: TypeSig) -> bool:
    """True for the types on which equality is defined."""
    if isinstance(t, Prim):
        return t.name in ("None", "Bool", "String", "ASCIIString") + INTEGRAL
    if isinstance(t, StringOfT):
        return True
    if isinstance(t, TypedeclT):
        return is_key_type(t.base)
    return False


def mentions(t: TypeSig, pred) -> bool:
    if pred(t):
        return True
    if isinstance(t, TupleT):
        return any(mentions(i, pred) for i in t.items)
    if isinstance(t, RecordT):
        return any(mentions(i, pred) for _, i in t.fields)
    if isinstance(t, UnionT):
        return any(mentions(i, pred) for i in t.members)
    if isinstance(t, ListT):
        return mentions(t.elem, pred)
    if isinstance(t, MapT):
        return mentions(t.key, pred) or mentions(t.value, pred)
    if isinstance(t, TypedeclT):
        return mentions(t.base, pred)
    if isinstance(t, NominalT):
        return any(mentions(a, pred) for a in t.args)
    return False
