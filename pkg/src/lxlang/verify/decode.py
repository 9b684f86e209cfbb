"""Turn solver models of entry arguments back into runtime values."""

from __future__ import annotations

from lxlang.ir import nodes as I
from lxlang.runtime.values import (
    EntityV,
    IntV,
    ListV,
    StringOfV,
    StrV,
    TupleV,
    TypedeclV,
    make_map,
    make_record,
)
from lxlang.typesys.typesig import (
    INTEGRAL,
    ListT,
    MapT,
    NominalT,
    Prim,
    RecordT,
    StringOfT,
    TupleT,
    TypedeclT,
    TypeSig,
    union,
)
from lxlang.verify.smt import SStr, expand_lets, parse_sexprs


class ModelError(ValueError):
    """The model does not mention an argument or has an unexpected shape."""


def parse_values(model: str) -> dict[str, object]:
    """Parse a ``get-value`` answer into ``{constant: term}``."""
    out: dict[str, object] = {}
    for block in parse_sexprs(model):
        if not isinstance(block, list):
            continue
        for pair in block:
            if isinstance(pair, list) and len(pair) == 2 and isinstance(pair[0], str):
                out[pair[0]] = expand_lets(pair[1])
    return out


def seq_items(term) -> list:
    if isinstance(term, list):
        if term and term[0] == "as" and isinstance(term[1], str) and term[1] == "seq.empty":
            return []
        if term and term[0] == "seq.unit":
            return [term[1]]
        if term and term[0] == "seq.++":
            out = []
            for t in term[1:]:
                out += seq_items(t)
            return out
    if term == "seq.empty":
        return []
    raise ModelError(f"unexpected sequence term {term!r}")


def int_of(term) -> int:
    if isinstance(term, str):
        return int(term)
    if isinstance(term, list) and len(term) == 2 and term[0] == "-":
        return -int_of(term[1])
    raise ModelError(f"unexpected integer term {term!r}")


def _app(term) -> tuple[str, list]:
    if isinstance(term, str):
        return term, []
    if isinstance(term, list) and term and isinstance(term[0], str):
        if term[0] == "as" and len(term) == 3:
            return _app(term[1])
        return term[0], term[1:]
    raise ModelError(f"unexpected constructor term {term!r}")


class ModelDecoder:
    def __init__(self, program: I.IRProgram, sorts):
        self.types = program.types
        self.sorts = sorts

    def value(self, t: TypeSig, term):
        atoms = self.types.atoms(t)
        if len(atoms) > 1:
            ctor, args = _app(term)
            name = self.sorts.dts[union(*atoms)].name
            idx = int(ctor[len(name) + 1 :])
            atom = atoms[idx]
            return None if not args else self.value(atom, args[0])
        a = atoms[0]
        if isinstance(a, Prim):
            if a.name in INTEGRAL:
                return IntV(a.name, int_of(term))
            if a.name == "Bool":
                return term == "true"
            if a.name in ("String", "ASCIIString"):
                return StrV(_string(term), a.name)
            if a.name == "None":
                return None
        if isinstance(a, StringOfT):
            return StringOfV(a.validator, _string(term))
        if isinstance(a, TypedeclT):
            return TypedeclV(a.name, self.value(a.base, term), a.base)
        if isinstance(a, TupleT):
            _, args = _app(term)
            return TupleV(tuple(self.value(it, x) for it, x in zip(a.items, args)))
        if isinstance(a, RecordT):
            _, args = _app(term)
            return make_record([(n, self.value(ft, x)) for (n, ft), x in zip(a.fields, args)])
        if isinstance(a, NominalT):
            _, args = _app(term)
            fields = self.types.field_types(a)
            return EntityV(a.name, tuple((n, self.value(ft, x)) for (n, ft), x in zip(fields, args)), a.args)
        if isinstance(a, ListT):
            return ListV(tuple(self.value(a.elem, x) for x in seq_items(term)), a.elem)
        if isinstance(a, MapT):
            pairs = []
            for p in seq_items(term):
                _, (k, v) = _app(p)
                pairs.append((self.value(a.key, k), self.value(a.value, v)))
            return make_map(pairs, a.key, a.value)
        raise ModelError(f"cannot decode a value of type {a}")


def _string(term) -> str:
    if isinstance(term, SStr):
        return term.value
    raise ModelError(f"unexpected string term {term!r}")


def decode_model(program: I.IRProgram, entry: str, model: str, inputs, sorts) -> list:
    """Arguments for ``entry`` from the model of its declared input constants."""
    values = parse_values(model)
    dec = ModelDecoder(program, sorts)
    out = []
    for const, t, _ in inputs:
        if const not in values:
            raise ModelError(f"model does not mention {const}")
        out.append(dec.value(t, values[const]))
    return out


__all__ = ["decode_model", "parse_values", "ModelDecoder", "ModelError"]
