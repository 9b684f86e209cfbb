"""External data (JSON) to runtime values and back.

Decoding is bottom-up: nested entities are constructed with their invariants
checked before the enclosing value exists, regex validators are matched, and
typedecl invariants run on injection.
"""

from __future__ import annotations

import json
from fractions import Fraction

from lxlang.ir import nodes as I
from lxlang.regex import full_match
from lxlang.runtime.evaluator import (
    CheckConfig,
    Evaluator,
    Outcome,
    _outcome,
    run_validates,
)
from lxlang.runtime.ops import LxError, checked
from lxlang.runtime.values import (
    DecimalV,
    EntityV,
    FloatV,
    IntV,
    ListV,
    MapV,
    RationalV,
    RecordV,
    StringOfV,
    StrV,
    TupleV,
    TypedeclV,
    decimal_from_text,
    make_map,
    make_record,
)
from lxlang.typesys.typesig import (
    INTEGRAL,
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

TYPE_KEY = "$type"


class ExternalDataError(ValueError):
    """The document does not have the shape the target type requires."""


class Decoder:
    def __init__(self, ev: Evaluator, where: str):
        self.ev = ev
        self.types = ev.program.types
        self.where = where

    def atoms(self, t: TypeSig) -> tuple[TypeSig, ...]:
        return self.types.atoms(t)

    def decode(self, t: TypeSig, x, path: str = "$"):
        if isinstance(t, UnionT) or (isinstance(t, NominalT) and self.types.concept(t.name) is not None):
            return self.decode_union(t, x, path)
        if isinstance(t, NeverT):
            raise ExternalDataError(f"{path}: no value inhabits Never")
        if isinstance(t, Prim):
            return self.prim(t.name, x, path)
        if isinstance(t, StringOfT):
            if not isinstance(x, str):
                raise ExternalDataError(f"{path}: expected a string")
            td = self.types.typedecl(t.validator)
            if td is None or td.regex is None or not full_match(td.regex, x):
                raise LxError("regex-mismatch", f"{path}: {x!r} does not match {t.validator}",
                              site=(self.where, "ingest", "regex-mismatch", t.validator))
            return StringOfV(t.validator, x)
        if isinstance(t, TypedeclT):
            base = self.decode(t.base, x, path)
            td = self.types.typedecl(t.name)
            for k, c in enumerate(td.invariants if td else ()):
                if self.ev.cfg.enabled(c.level) and self.ev.call(c.fn, [base], None) is not True:
                    raise LxError("invariant-fail", f"{path}: {t.name} invariant {k} does not hold",
                                  site=(self.where, "ingest", "invariant-fail", c.fn))
            return TypedeclV(t.name, base, t.base)
        if isinstance(t, TupleT):
            if not isinstance(x, list) or len(x) != len(t.items):
                raise ExternalDataError(f"{path}: expected an array of {len(t.items)}")
            return TupleV(tuple(self.decode(it, v, f"{path}[{i}]") for i, (it, v) in enumerate(zip(t.items, x))))
        if isinstance(t, RecordT):
            names = [n for n, _ in t.fields]
            if not isinstance(x, dict) or sorted(x) != sorted(names):
                raise ExternalDataError(f"{path}: expected an object with fields {names}")
            return make_record([(n, self.decode(ft, x[n], f"{path}.{n}")) for n, ft in t.fields])
        if isinstance(t, ListT):
            if not isinstance(x, list):
                raise ExternalDataError(f"{path}: expected an array")
            return ListV(tuple(self.decode(t.elem, v, f"{path}[{i}]") for i, v in enumerate(x)), t.elem)
        if isinstance(t, MapT):
            if not isinstance(x, list) or not all(isinstance(p, list) and len(p) == 2 for p in x):
                raise ExternalDataError(f"{path}: expected an array of [key, value] pairs")
            pairs = [(self.decode(t.key, k, f"{path}[{i}][0]"), self.decode(t.value, v, f"{path}[{i}][1]"))
                     for i, (k, v) in enumerate(x)]
            keys = [k for k, _ in pairs]
            if len(set(keys)) != len(keys):
                raise ExternalDataError(f"{path}: duplicate map key")
            return make_map(pairs, t.key, t.value)
        if isinstance(t, NominalT):
            return self.entity(t, x, path)
        raise ExternalDataError(f"{path}: unsupported type {t}")

    def decode_union(self, t: TypeSig, x, path: str):
        atoms = self.atoms(t)
        if isinstance(x, dict) and TYPE_KEY in x:
            for a in atoms:
                if isinstance(a, NominalT) and a.name == x[TYPE_KEY]:
                    return self.decode(a, x, path)
            raise ExternalDataError(f"{path}: {x[TYPE_KEY]} is not a member of {t}")
        errors = []
        for a in atoms:
            try:
                return self.decode(a, x, path)
            except ExternalDataError as exc:
                errors.append(str(exc))
        raise ExternalDataError(f"{path}: value matches no member of {t}")

    def prim(self, name: str, x, path: str):
        if name == "None":
            if x is not None:
                raise ExternalDataError(f"{path}: expected null")
            return None
        if name == "Bool":
            if not isinstance(x, bool):
                raise ExternalDataError(f"{path}: expected a boolean")
            return x
        if name in INTEGRAL:
            if isinstance(x, bool):
                raise ExternalDataError(f"{path}: expected an integer")
            if isinstance(x, str):
                try:
                    x = int(x)
                except ValueError:
                    raise ExternalDataError(f"{path}: expected an integer string") from None
            if not isinstance(x, int):
                raise ExternalDataError(f"{path}: expected an integer")
            try:
                return checked(name, x)
            except LxError:
                raise ExternalDataError(f"{path}: {x} is out of range for {name}") from None
        if name == "Float":
            if isinstance(x, bool) or not isinstance(x, (int, float)):
                raise ExternalDataError(f"{path}: expected a number")
            return FloatV(float(x))
        if name == "Decimal":
            if isinstance(x, bool) or not isinstance(x, (int, float, str)):
                raise ExternalDataError(f"{path}: expected a decimal")
            try:
                return decimal_from_text(str(x))
            except ValueError:
                raise ExternalDataError(f"{path}: bad decimal {x!r}") from None
        if name == "Rational":
            try:
                return RationalV(Fraction(str(x)))
            except (ValueError, ZeroDivisionError):
                raise ExternalDataError(f"{path}: bad rational {x!r}") from None
        if name in ("String", "ASCIIString"):
            if not isinstance(x, str):
                raise ExternalDataError(f"{path}: expected a string")
            if name == "ASCIIString" and not x.isascii():
                raise ExternalDataError(f"{path}: expected ASCII text")
            return StrV(x, name)
        raise ExternalDataError(f"{path}: unsupported primitive {name}")

    def entity(self, t: NominalT, x, path: str):
        fields = self.types.field_types(t)
        if not isinstance(x, dict):
            raise ExternalDataError(f"{path}: expected an object for {t}")
        names = [n for n, _ in fields]
        given = sorted(k for k in x if k != TYPE_KEY)
        if given != sorted(names) or x.get(TYPE_KEY, t.name) != t.name:
            raise ExternalDataError(f"{path}: {t} needs exactly the fields {names}")
        vals = tuple((n, self.decode(ft, x[n], f"{path}.{n}")) for n, ft in fields)
        ent = self.types.entity(t.name)
        if ent is not None:
            d = dict(vals)
            for k, c in enumerate(ent.invariants):
                if self.ev.cfg.enabled(c.level) and self.ev.call(c.fn, [d[p] for p in c.params], None) is not True:
                    raise LxError("invariant-fail", f"{path}: invariant {c.fn} does not hold",
                                  site=(self.where, "ingest", "invariant-fail", c.fn))
        return EntityV(t.name, vals, t.args)


def from_json(program: I.IRProgram, t: TypeSig, data, cfg: CheckConfig | None = None, where: str = "<input>"):
    """Decode one JSON value; raises ExternalDataError or LxError."""
    ev = Evaluator(program, cfg or CheckConfig())
    return Decoder(ev, where).decode(t, data)


def to_json(v):
    """Encode a runtime value into plain JSON data."""
    if v is None or isinstance(v, bool):
        return v
    if isinstance(v, IntV):
        return str(v.v) if v.kind in ("BigNat", "BigInt") else v.v
    if isinstance(v, FloatV):
        return v.v
    if isinstance(v, DecimalV):
        return repr(v)[:-1]
    if isinstance(v, RationalV):
        return f"{v.v.numerator}/{v.v.denominator}"
    if isinstance(v, (StrV, StringOfV)):
        return v.v
    if isinstance(v, TypedeclV):
        return to_json(v.base)
    if isinstance(v, (TupleV, ListV)):
        return [to_json(i) for i in v.items]
    if isinstance(v, EntityV):
        # the tag keeps same-shaped union members apart on the way back in
        return {TYPE_KEY: v.name, **{n: to_json(i) for n, i in v.fields}}
    if isinstance(v, RecordV):
        return {n: to_json(i) for n, i in v.fields}
    if isinstance(v, MapV):
        return [[to_json(k), to_json(x)] for k, x in v.entries]
    raise TypeError(v)


def dumps(v) -> str:
    return json.dumps(to_json(v), sort_keys=False, ensure_ascii=True)


def decode_args(program: I.IRProgram, entry: str, document: str, cfg: CheckConfig | None = None):
    """Decode a JSON array of entry arguments; coded failures come back as an error Outcome."""
    fn = program.function(entry)
    data = json.loads(document)
    if not isinstance(data, list) or len(data) != len(fn.params):
        raise ExternalDataError(f"{entry} takes {len(fn.params)} arguments; pass a JSON array")
    ev = Evaluator(program, cfg or CheckConfig())
    dec = Decoder(ev, entry)

    def thunk():
        return [dec.decode(t, x, f"$[{i}]") for i, ((_, t), x) in enumerate(zip(fn.params, data))]

    return _outcome(thunk)


def validate_external(program: I.IRProgram, type_name: str, document: str,
                      cfg: CheckConfig | None = None) -> Outcome:
    """Decode ``document`` as ``type_name`` running invariants and validates."""
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ExternalDataError(f"not JSON: {exc}") from None
    ev = Evaluator(program, cfg or CheckConfig())
    where = type_name
    if program.types.typedecl(type_name) is not None:
        td = program.types.typedecl(type_name)
        t: TypeSig = StringOfT(type_name) if td.base is None else TypedeclT(type_name, td.base)
    else:
        t = NominalT(type_name)
    dec = Decoder(ev, where)

    def thunk():
        v = dec.decode(t, data)
        run_validates(ev, v, where)
        return v

    return _outcome(thunk)


__all__ = ["ExternalDataError", "from_json", "to_json", "dumps", "decode_args", "validate_external"]
