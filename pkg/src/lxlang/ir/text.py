"""Canonical textual IR (``.lxir``): indented s-expressions.

Atoms are bare tokens; string payloads are JSON-quoted. Paths are not written;
they are recomputed on parse.
"""

from __future__ import annotations

import json
from fractions import Fraction

from lxlang.ir import nodes as I
from lxlang.runtime.values import DecimalV, FloatV, IntV, RationalV, StringOfV, StrV, TypedeclV
from lxlang.typesys.typesig import (
    PRIM_NAMES,
    NEVER,
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

HEADER = "(lxir 1)"
WIDTH = 100


class IRParseError(Exception):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class Str(str):
    """A quoted string payload (as opposed to a bare atom)."""


# ---------------------------------------------------------------- encoding


def enc_type(t: TypeSig):
    if isinstance(t, Prim):
        return t.name
    if isinstance(t, NeverT):
        return "Never"
    if isinstance(t, ListT):
        return ["List", enc_type(t.elem)]
    if isinstance(t, MapT):
        return ["Map", enc_type(t.key), enc_type(t.value)]
    if isinstance(t, TupleT):
        return ["Tuple", *(enc_type(i) for i in t.items)]
    if isinstance(t, RecordT):
        return ["Record", *([n, enc_type(x)] for n, x in t.fields)]
    if isinstance(t, UnionT):
        return ["Union", *(enc_type(m) for m in t.members)]
    if isinstance(t, NominalT):
        return ["Nom", t.name, *(enc_type(a) for a in t.args)]
    if isinstance(t, StringOfT):
        return ["StringOf", t.validator]
    if isinstance(t, TypedeclT):
        return ["Typedecl", t.name, enc_type(t.base)]
    raise TypeError(t)


def enc_value(v):
    if v is None:
        return "none"
    if v is True:
        return "true"
    if v is False:
        return "false"
    if isinstance(v, IntV):
        return ["int", v.kind, str(v.v)]
    if isinstance(v, FloatV):
        return ["float", Str(repr(v.v))]
    if isinstance(v, DecimalV):
        return ["dec", str(v.scaled)]
    if isinstance(v, RationalV):
        return ["rat", str(v.v.numerator), str(v.v.denominator)]
    if isinstance(v, StrV):
        return ["str", v.kind, Str(v.v)]
    if isinstance(v, StringOfV):
        return ["strof", v.validator, Str(v.v)]
    if isinstance(v, TypedeclV):
        return ["tdv", v.name, enc_type(v.base_type), enc_value(v.base)]
    raise TypeError(f"constant {v!r} cannot be serialized")


def enc_check(c: I.Check):
    return ["check", c.level, c.fn, list(c.params)]


def enc_checks(cs) -> list:
    return ["checks", *(enc_check(c) for c in cs)]


def enc_node(n: I.Node):
    E = enc_node
    if isinstance(n, I.Const):
        return ["const", enc_type(n.ty), enc_value(n.value)]
    if isinstance(n, I.Var):
        return ["var", n.name, enc_type(n.ty)]
    if isinstance(n, I.Let):
        return ["let", n.name, E(n.bound), E(n.body)]
    if isinstance(n, I.Ite):
        return ["ite", E(n.cond), E(n.then), E(n.else_)]
    if isinstance(n, I.Call):
        return ["call", n.fn, enc_type(n.ty), *(E(a) for a in n.args)]
    if isinstance(n, I.FunctorApp):
        return ["functor", n.name, n.spec or "-", enc_type(n.ty),
                ["captures", *(E(c) for c in n.captures)], *(E(a) for a in n.args)]
    if isinstance(n, I.TupleNew):
        return ["tuple", enc_type(n.ty), *(E(a) for a in n.items)]
    if isinstance(n, I.RecordNew):
        return ["record", enc_type(n.ty), list(n.names), *(E(a) for a in n.args)]
    if isinstance(n, I.Construct):
        return ["construct", enc_type(n.entity), list(n.names), enc_checks(n.checks), *(E(a) for a in n.args)]
    if isinstance(n, I.ListNew):
        return ["list", enc_type(n.ty), *(E(a) for a in n.items)]
    if isinstance(n, I.MapNew):
        return ["map", enc_type(n.ty), *(E(a) for a in n.args)]
    if isinstance(n, I.Access):
        return ["access", n.kind, str(n.key), enc_type(n.ty), E(n.expr)]
    if isinstance(n, I.IsTest):
        return ["is", ["atoms", *(enc_type(a) for a in n.atoms)], E(n.expr)]
    if isinstance(n, I.AsCast):
        return ["cast", "safe" if n.safe else "checked", enc_type(n.target), E(n.expr)]
    if isinstance(n, I.Inject):
        return ["inject", enc_type(n.td), enc_checks(n.checks), E(n.expr)]
    if isinstance(n, I.Extract):
        return ["extract", enc_type(n.ty), E(n.expr)]
    if isinstance(n, I.Equal):
        return ["equal", "ne" if n.neg else "eq", E(n.left), E(n.right)]
    if isinstance(n, I.PrimOp):
        return ["prim", n.op, enc_type(n.ty), *(E(a) for a in n.args)]
    if isinstance(n, I.Assert):
        return ["assert", n.level, n.code, E(n.cond), E(n.body)]
    if isinstance(n, I.Fail):
        return ["fail", n.code, enc_type(n.ty)]
    raise TypeError(n)


def enc_fields(fields) -> list:
    return ["fields", *([n, enc_type(t)] for n, t in fields)]


def enc_function(f: I.IRFunction):
    return [
        "function", f.name, f.kind,
        ["params", *([p, enc_type(t)] for p, t in f.params)],
        ["result", enc_type(f.result)],
        ["recursive", "true" if f.recursive else "false"],
        ["owner", f.owner or "-"],
        ["requires", *([lv, enc_node(e)] for lv, e in f.requires)],
        ["ensures", *([lv, enc_node(e)] for lv, e in f.ensures)],
        ["body", enc_node(f.body)],
    ]


def enc_types(tt: I.TypeTable) -> list:
    out: list = []
    for e in tt.entities:
        out.append(["entity", e.name, enc_fields(e.fields), ["provides", *e.provides],
                    ["invariants", *(enc_check(c) for c in e.invariants)],
                    ["validates", *(enc_check(c) for c in e.validates)]])
    for c in tt.concepts:
        out.append(["concept", c.name, enc_fields(c.fields), ["providers", *c.providers]])
    for t in tt.typedecls:
        out.append(["typedecl", t.name, ["base", enc_type(t.base) if t.base is not None else "-"],
                    ["regex", Str(t.regex) if t.regex is not None else "-"],
                    ["invariants", *(enc_check(c) for c in t.invariants)]])
    return out


# ---------------------------------------------------------------- printing


def _atom(x) -> str:
    if isinstance(x, Str):
        return json.dumps(str(x), ensure_ascii=True)
    s = str(x)
    if not s or any(ch in s for ch in ' ()"\n\t;') :
        raise ValueError(f"bad atom {s!r}")
    return s


def _flat(x) -> str:
    if isinstance(x, list):
        return "(" + " ".join(_flat(i) for i in x) + ")"
    return _atom(x)


def _pretty(x, indent: int, out: list[str]) -> None:
    flat = _flat(x)
    pad = "  " * indent
    if not isinstance(x, list) or len(pad) + len(flat) <= WIDTH:
        out.append(pad + flat)
        return
    # keep leading atoms on the head line, nest the rest
    head = []
    i = 0
    while i < len(x) and not isinstance(x[i], list):
        head.append(_atom(x[i]))
        i += 1
    out.append(pad + "(" + " ".join(head))
    for item in x[i:]:
        _pretty(item, indent + 1, out)
    out[-1] += ")"


def serialize_ir(program: I.IRProgram) -> str:
    """Canonical text: header, type table, entries, then functions by name."""
    out: list[str] = [HEADER]
    for t in enc_types(program.types):
        _pretty(t, 0, out)
    _pretty(["entries", *program.entries], 0, out)
    for f in sorted(program.functions, key=lambda f: f.name):
        _pretty(enc_function(f), 0, out)
    return "\n".join(out) + "\n"


def serialize_node(n: I.Node) -> str:
    out: list[str] = []
    _pretty(enc_node(n), 0, out)
    return "\n".join(out)


# ---------------------------------------------------------------- reading


class _Tok:
    def __init__(self, text: str):
        self.items: list[tuple[str, object, int]] = []
        i, line, n = 0, 1, len(text)
        while i < n:
            ch = text[i]
            if ch == "\n":
                line += 1
                i += 1
            elif ch in " \t\r":
                i += 1
            elif ch == ";":
                while i < n and text[i] != "\n":
                    i += 1
            elif ch in "()":
                self.items.append((ch, ch, line))
                i += 1
            elif ch == '"':
                j = i + 1
                while j < n and text[j] != '"':
                    j += 2 if text[j] == "\\" else 1
                if j >= n:
                    raise IRParseError(line, "unterminated string")
                try:
                    self.items.append(("str", Str(json.loads(text[i:j + 1])), line))
                except json.JSONDecodeError as exc:
                    raise IRParseError(line, f"bad string literal: {exc}") from None
                i = j + 1
            else:
                j = i
                while j < n and text[j] not in ' \t\r\n()";':
                    j += 1
                self.items.append(("atom", text[i:j], line))
                i = j


def _read(text: str) -> list:
    toks = _Tok(text).items
    pos = 0

    def one():
        nonlocal pos
        if pos >= len(toks):
            raise IRParseError(toks[-1][2] if toks else 1, "unexpected end of input")
        kind, val, line = toks[pos]
        pos += 1
        if kind == "(":
            lst = _Line([], line)
            while True:
                if pos >= len(toks):
                    raise IRParseError(line, "unclosed parenthesis")
                if toks[pos][0] == ")":
                    pos += 1
                    return lst
                lst.append(one())
        if kind == ")":
            raise IRParseError(line, "unexpected ')'")
        return val

    out = []
    while pos < len(toks):
        out.append(one())
    return out


class _Line(list):
    def __init__(self, items, line: int):
        super().__init__(items)
        self.line = line


def _line(x) -> int:
    return getattr(x, "line", 0)


def _expect(x, head: str, at) -> list:
    if not isinstance(x, list) or not x or x[0] != head:
        raise IRParseError(_line(x) or _line(at), f"expected ({head} ...)")
    return x


def dec_type(x) -> TypeSig:
    if isinstance(x, str) and not isinstance(x, Str):
        if x == "Never":
            return NEVER
        if x in PRIM_NAMES:
            return Prim(x)
        raise IRParseError(0, f"unknown type atom {x}")
    if not isinstance(x, list) or not x:
        raise IRParseError(_line(x), "bad type")
    h = x[0]
    try:
        if h == "List":
            return ListT(dec_type(x[1]))
        if h == "Map":
            return MapT(dec_type(x[1]), dec_type(x[2]))
        if h == "Tuple":
            return TupleT(tuple(dec_type(i) for i in x[1:]))
        if h == "Record":
            return RecordT(tuple((f[0], dec_type(f[1])) for f in x[1:]))
        if h == "Union":
            return UnionT(tuple(dec_type(i) for i in x[1:]))
        if h == "Nom":
            return NominalT(x[1], tuple(dec_type(i) for i in x[2:]))
        if h == "StringOf":
            return StringOfT(x[1])
        if h == "Typedecl":
            return TypedeclT(x[1], dec_type(x[2]))
    except IndexError:
        raise IRParseError(_line(x), f"malformed {h} type") from None
    raise IRParseError(_line(x), f"unknown type form {h}")


def dec_value(x):
    if x == "none":
        return None
    if x == "true":
        return True
    if x == "false":
        return False
    h = x[0]
    if h == "int":
        return IntV(x[1], int(x[2]))
    if h == "float":
        return FloatV(float(x[1]))
    if h == "dec":
        return DecimalV(int(x[1]))
    if h == "rat":
        return RationalV(Fraction(int(x[1]), int(x[2])))
    if h == "str":
        return StrV(str(x[2]), x[1])
    if h == "strof":
        return StringOfV(x[1], str(x[2]))
    if h == "tdv":
        return TypedeclV(x[1], dec_value(x[3]), dec_type(x[2]))
    raise IRParseError(_line(x), f"unknown value form {h}")


def dec_check(x) -> I.Check:
    _expect(x, "check", x)
    return I.Check(x[1], x[2], tuple(x[3]))


def dec_checks(x) -> tuple[I.Check, ...]:
    _expect(x, "checks", x)
    return tuple(dec_check(c) for c in x[1:])


def dec_node(x) -> I.Node:
    if not isinstance(x, list) or not x:
        raise IRParseError(_line(x), "expected an expression")
    h = x[0]
    D = dec_node
    try:
        if h == "const":
            return I.Const(dec_value(x[2]), dec_type(x[1]))
        if h == "var":
            return I.Var(x[1], dec_type(x[2]))
        if h == "let":
            return I.Let(x[1], D(x[2]), D(x[3]))
        if h == "ite":
            return I.Ite(D(x[1]), D(x[2]), D(x[3]))
        if h == "call":
            return I.Call(x[1], tuple(D(a) for a in x[3:]), dec_type(x[2]))
        if h == "functor":
            caps = _expect(x[4], "captures", x)
            return I.FunctorApp(x[1], None if x[2] == "-" else x[2], tuple(D(c) for c in caps[1:]),
                                tuple(D(a) for a in x[5:]), dec_type(x[3]))
        if h == "tuple":
            return I.TupleNew(tuple(D(a) for a in x[2:]), dec_type(x[1]))
        if h == "record":
            return I.RecordNew(tuple(x[2]), tuple(D(a) for a in x[3:]), dec_type(x[1]))
        if h == "construct":
            return I.Construct(dec_type(x[1]), tuple(x[2]), tuple(D(a) for a in x[4:]), dec_checks(x[3]))
        if h == "list":
            return I.ListNew(tuple(D(a) for a in x[2:]), dec_type(x[1]))
        if h == "map":
            return I.MapNew(tuple(D(a) for a in x[2:]), dec_type(x[1]))
        if h == "access":
            key = int(x[2]) if x[1] == "index" else x[2]
            return I.Access(x[1], D(x[4]), key, dec_type(x[3]))
        if h == "is":
            atoms = _expect(x[1], "atoms", x)
            return I.IsTest(D(x[2]), tuple(dec_type(a) for a in atoms[1:]))
        if h == "cast":
            return I.AsCast(D(x[3]), dec_type(x[2]), x[1] == "safe")
        if h == "inject":
            return I.Inject(dec_type(x[1]), D(x[3]), dec_checks(x[2]))
        if h == "extract":
            return I.Extract(D(x[2]), dec_type(x[1]))
        if h == "equal":
            return I.Equal(D(x[2]), D(x[3]), x[1] == "ne")
        if h == "prim":
            return I.PrimOp(x[1], tuple(D(a) for a in x[3:]), dec_type(x[2]))
        if h == "assert":
            return I.Assert(x[1], D(x[3]), x[2], D(x[4]))
        if h == "fail":
            return I.Fail(x[1], dec_type(x[2]))
    except IndexError:
        raise IRParseError(_line(x), f"malformed {h} node") from None
    raise IRParseError(_line(x), f"unknown node form {h}")


def _section(x, name: str) -> list:
    for item in x:
        if isinstance(item, list) and item and item[0] == name:
            return item[1:]
    raise IRParseError(_line(x), f"missing ({name} ...)")


def dec_function(x) -> I.IRFunction:
    _expect(x, "function", x)
    owner = _section(x, "owner")[0]
    fn = I.IRFunction(
        x[1], x[2],
        tuple((p, dec_type(t)) for p, t in _section(x, "params")),
        dec_type(_section(x, "result")[0]),
        tuple((lv, dec_node(e)) for lv, e in _section(x, "requires")),
        tuple((lv, dec_node(e)) for lv, e in _section(x, "ensures")),
        dec_node(_section(x, "body")[0]),
        recursive=_section(x, "recursive")[0] == "true",
        owner=None if owner == "-" else owner,
    )
    return I.number_function(fn)


def parse_ir(text: str) -> I.IRProgram:
    """Inverse of :func:`serialize_ir`."""
    items = _read(text)
    if not items or items[0] != ["lxir", "1"]:
        raise IRParseError(1, "missing (lxir 1) header")
    ents, concepts, tds, fns = [], [], [], []
    entries: tuple[str, ...] = ()
    for x in items[1:]:
        if not isinstance(x, list) or not x:
            raise IRParseError(_line(x), "expected a top-level form")
        h = x[0]
        if h == "entity":
            ents.append(I.EntityEntry(
                x[1], tuple((n, dec_type(t)) for n, t in _section(x, "fields")),
                tuple(_section(x, "provides")),
                tuple(dec_check(c) for c in _section(x, "invariants")),
                tuple(dec_check(c) for c in _section(x, "validates")),
            ))
        elif h == "concept":
            concepts.append(I.ConceptEntry(
                x[1], tuple((n, dec_type(t)) for n, t in _section(x, "fields")), tuple(_section(x, "providers"))))
        elif h == "typedecl":
            base = _section(x, "base")[0]
            regex = _section(x, "regex")[0]
            tds.append(I.TypedeclEntry(
                x[1], None if base == "-" else dec_type(base), None if regex == "-" else str(regex),
                tuple(dec_check(c) for c in _section(x, "invariants"))))
        elif h == "entries":
            entries = tuple(x[1:])
        elif h == "function":
            fns.append(dec_function(x))
        else:
            raise IRParseError(_line(x), f"unknown top-level form {h}")
    fns.sort(key=lambda f: f.name)
    return I.IRProgram(I.TypeTable(tuple(ents), tuple(concepts), tuple(tds)), tuple(fns), entries)


# ---------------------------------------------------------------- readable rendering


def show_node(n: I.Node) -> str:
    """Compact infix rendering for diagnostics and reports."""
    S = show_node
    if isinstance(n, I.Const):
        from lxlang.runtime.values import show

        return show(n.value)
    if isinstance(n, I.Var):
        return n.name
    if isinstance(n, I.Let):
        return f"let {n.name} = {S(n.bound)} in {S(n.body)}"
    if isinstance(n, I.Ite):
        return f"if {S(n.cond)} then {S(n.then)} else {S(n.else_)}"
    if isinstance(n, I.PrimOp):
        if n.op == "neg":
            return f"-{S(n.args[0])}"
        if n.op == "not":
            return f"!{S(n.args[0])}"
        if len(n.args) == 2 and n.op not in ("concat",):
            return f"({S(n.args[0])} {n.op} {S(n.args[1])})"
        return f"{n.op}(" + ", ".join(S(a) for a in n.args) + ")"
    if isinstance(n, I.Equal):
        return f"({S(n.left)} {'!==' if n.neg else '==='} {S(n.right)})"
    if isinstance(n, I.Call):
        return f"{n.fn}(" + ", ".join(S(a) for a in n.args) + ")"
    if isinstance(n, I.FunctorApp):
        spec = f"<{n.spec}>" if n.spec else ""
        return f"{n.name}{spec}(" + ", ".join(S(a) for a in n.captures + n.args) + ")"
    if isinstance(n, I.Access):
        return f"{S(n.expr)}.{n.key}"
    if isinstance(n, I.IsTest):
        return f"{S(n.expr)}?<" + "|".join(str(a) for a in n.atoms) + ">"
    if isinstance(n, I.AsCast):
        return f"{S(n.expr)}@<{n.target}>" if not n.safe else S(n.expr)
    if isinstance(n, I.Assert):
        return f"assert[{n.level}] {S(n.cond)} else {n.code}; {S(n.body)}"
    if isinstance(n, I.Fail):
        return f"error({n.code})"
    if isinstance(n, I.Inject):
        return f"{n.td.name}{{{S(n.expr)}}}"
    if isinstance(n, I.Extract):
        return f"{S(n.expr)}.value"
    if isinstance(n, I.Construct):
        return f"{n.entity}{{" + ", ".join(f"{k}={S(a)}" for k, a in zip(n.names, n.args)) + "}"
    if isinstance(n, (I.TupleNew, I.ListNew)):
        items = n.items
        return "[" + ", ".join(S(a) for a in items) + "]"
    if isinstance(n, I.RecordNew):
        return "{" + ", ".join(f"{k}={S(a)}" for k, a in zip(n.names, n.args)) + "}"
    if isinstance(n, I.MapNew):
        a = n.args
        return "{" + ", ".join(f"{S(a[i])} => {S(a[i + 1])}" for i in range(0, len(a), 2)) + "}"
    return type(n).__name__
