"""Symbolic evaluation of an entry function into an SMT-LIB2 script.

Values are kept structural while the program is evaluated: scalars are solver
terms, tuples/records/entities hold their fields, unions hold one guarded
alternative per atom type, lists and maps hold a length term plus a bounded
number of items. Only entry arguments are solver constants (datatypes and
sequences), projected into this structure once.

Errors follow the evaluator's first-error semantics. Each potential error
becomes an *event* ``guard & !F & failing`` where ``F`` is the disjunction of
all earlier events; a site is reachable iff one of its events can be true.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import networkx as nx

from lxlang.ir import nodes as I
from lxlang.runtime.evaluator import CheckConfig
from lxlang.runtime.values import (
    INT_MAX,
    INT_MIN,
    NAT_MAX,
    EntityV,
    IntV,
    ListV,
    MapV,
    RecordV,
    StringOfV,
    StrV,
    TupleV,
    TypedeclV,
    key_order,
    value_type,
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
    union,
)
from lxlang.verify import smt as S
from lxlang.verify.smt import FALSE, TRUE, Script, Unsupported


@dataclass(frozen=True)
class SmallModelBounds:
    list_length: int = 3
    string_length: int = 16
    unroll: int = 4
    big_magnitude: int = 2**20
    map_size: int = 3

    def __post_init__(self) -> None:
        for name in ("list_length", "string_length", "unroll", "big_magnitude", "map_size"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


# ---------------------------------------------------------------- symbolic values


@dataclass
class ListSV:
    length: str
    items: list


@dataclass
class MapSV:
    length: str
    keys: list
    vals: list


@dataclass
class TupleSV:
    items: list


@dataclass
class FieldsSV:
    """Record or entity: field name to value."""

    fields: dict


@dataclass
class TdSV:
    base: object


@dataclass
class UnionSV:
    """Alternatives keyed by atom type; guards are mutually exclusive."""

    alts: dict = field(default_factory=dict)


NONE_SV = None


# ---------------------------------------------------------------- sorts


@dataclass
class Datatype:
    name: str
    ctors: list  # [(ctor, [(accessor, sort)])]
    deps: set = field(default_factory=set)


class Sorts:
    """SMT sorts for entry-argument types, declared as datatypes in dependency order."""

    def __init__(self, types: I.TypeTable):
        self.types = types
        self.dts: dict[TypeSig, Datatype] = {}
        self.order: list[TypeSig] = []
        self.count = 0
        self._recursive: set[str] | None = None

    def atoms(self, t: TypeSig) -> tuple[TypeSig, ...]:
        return self.types.atoms(t)

    def fresh(self, prefix: str) -> str:
        self.count += 1
        return f"{prefix}{self.count}"

    def sort(self, t: TypeSig) -> str:
        atoms = self.atoms(t)
        if not atoms:
            raise Unsupported("Never-typed argument")
        if len(atoms) > 1:
            return self._union(union(*atoms), atoms)
        return self._atom(atoms[0])

    def _atom(self, t: TypeSig) -> str:
        if isinstance(t, Prim):
            if t.name in INTEGRAL:
                return "Int"
            if t.name == "Bool":
                return "Bool"
            if t.name in ("String", "ASCIIString"):
                return "String"
            if t.name == "None":
                return self._dt(t, "LxNone", lambda n: [("lxnone", [])])
            raise Unsupported(f"{t.name} values")
        if isinstance(t, StringOfT):
            return "String"
        if isinstance(t, TypedeclT):
            return self.sort(t.base)
        if isinstance(t, ListT):
            return f"(Seq {self.sort(t.elem)})"
        if isinstance(t, MapT):
            key = (t.key, t.value)
            return f"(Seq {self._dt(TupleT(key), None, None, pair=True)})"
        if isinstance(t, TupleT):
            return self._dt(t, None, lambda n: [(f"mk_{n}", [(f"{n}_{i}", self.sort(x)) for i, x in enumerate(t.items)])])
        if isinstance(t, RecordT):
            return self._dt(t, None, lambda n: [(f"mk_{n}", [(f"{n}_{f}", self.sort(x)) for f, x in t.fields])])
        if isinstance(t, NominalT):
            fields = self.types.field_types(t)
            base = "E_" + _symbol(t.name)
            name = base if not t.args else None
            return self._dt(t, name, lambda n: [(f"mk_{n}", [(f"{n}_{_symbol(f)}", self.sort(x)) for f, x in fields])],
                            prefix=base + "_")
        raise Unsupported(f"{t} arguments")

    def _dt(self, key: TypeSig, name: str | None, build, prefix: str = "T", pair: bool = False) -> str:
        if pair:
            key = ("pair", key)
        if key in self.dts:
            return self.dts[key].name
        if name is None:
            name = self.fresh("P" if pair else ("R" if isinstance(key, RecordT) else prefix))
        dt = Datatype(name, [])
        self.dts[key] = dt
        if pair:
            k, v = key[1].items
            dt.ctors = [(f"mk_{name}", [(f"{name}_k", self.sort(k)), (f"{name}_v", self.sort(v))])]
        else:
            dt.ctors = build(name)
        self.order.append(key)
        return name

    def _union(self, t: TypeSig, atoms: tuple[TypeSig, ...]) -> str:
        if t in self.dts:
            return self.dts[t].name
        name = self.fresh("U")
        dt = Datatype(name, [])
        self.dts[t] = dt
        ctors = []
        for i, a in enumerate(atoms):
            if a == Prim("None"):
                ctors.append((f"{name}_{i}", []))
            else:
                ctors.append((f"{name}_{i}", [(f"{name}_{i}_v", self.sort(a))]))
        dt.ctors = ctors
        self.order.append(t)
        return name

    def union_ctor(self, t: TypeSig, atom: TypeSig) -> tuple[str, str | None]:
        atoms = self.atoms(t)
        name = self.dts[union(*atoms)].name
        i = atoms.index(atom)
        return f"{name}_{i}", (None if atom == Prim("None") else f"{name}_{i}_v")

    def entity_ctor(self, t: TypeSig) -> Datatype:
        return self.dts[t]

    def pair_dt(self, t: MapT) -> Datatype:
        return self.dts[("pair", TupleT((t.key, t.value)))]

    # -- declaration

    def graph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        names = {dt.name for dt in self.dts.values()}
        for dt in self.dts.values():
            g.add_node(dt.name)
            for _, fields in dt.ctors:
                for _, s in fields:
                    for tok in s.replace("(", " ").replace(")", " ").split():
                        if tok in names:
                            g.add_edge(dt.name, tok)
        return g

    def recursive_sorts(self) -> set[str]:
        if self._recursive is None:
            g = self.graph()
            rec: set[str] = set()
            for comp in nx.strongly_connected_components(g):
                if len(comp) > 1 or any(g.has_edge(c, c) for c in comp):
                    rec |= comp
            self._recursive = rec
        return self._recursive

    def declarations(self) -> list[str]:
        g = self.graph()
        by_name = {dt.name: dt for dt in self.dts.values()}
        first = {dt.name: i for i, dt in enumerate(self.dts[k] for k in self.order)}
        cond = nx.condensation(g)
        order = list(nx.lexicographical_topological_sort(
            cond.reverse(copy=True), key=lambda c: min(first[m] for m in cond.nodes[c]["members"])))
        out = []
        for c in order:
            members = sorted(cond.nodes[c]["members"], key=first.__getitem__)
            self._check_founded(members, by_name)
            heads = " ".join(f"({m} 0)" for m in members)
            bodies = []
            for m in members:
                ctors = []
                for cname, fields in by_name[m].ctors:
                    if fields:
                        ctors.append(f"({cname} " + " ".join(f"({a} {s})" for a, s in fields) + ")")
                    else:
                        ctors.append(f"({cname})")
                bodies.append("(" + " ".join(ctors) + ")")
            out.append(f"(declare-datatypes ({heads}) ({' '.join(bodies)}))")
        return out

    @staticmethod
    def _check_founded(members: list[str], by_name: dict) -> None:
        group = set(members)
        ok: set[str] = set()
        changed = True
        while changed:
            changed = False
            for m in members:
                if m in ok:
                    continue
                for _, fields in by_name[m].ctors:
                    if all(_founded_sort(s, group, ok) for _, s in fields):
                        ok.add(m)
                        changed = True
                        break
        if ok != group:
            raise Unsupported("recursive type without a non-recursive constructor")


def _founded_sort(s: str, group: set[str], ok: set[str]) -> bool:
    toks = s.replace("(", " ").replace(")", " ").split()
    return all(t in ok or t not in group for t in toks) and not (
        s.startswith("(Seq") and any(t in group for t in toks)
    )


def _symbol(name: str) -> str:
    return "".join(c if c.isalnum() or c in "_" else "_" for c in name)


# ---------------------------------------------------------------- the encoder


@dataclass
class Event:
    site: tuple
    term: str


class Encoder:
    """Symbolically evaluates one entry; see the module docstring."""

    def __init__(self, program: I.IRProgram, cfg: CheckConfig, bounds: SmallModelBounds):
        self.program = program
        self.types = program.types
        self.cfg = cfg
        self.bounds = bounds
        self.fns = program.index()
        self.script = Script()
        self.sorts = Sorts(self.types)
        self.F = FALSE
        self.events: list[Event] = []
        self.active: dict[str, int] = {}
        self.inputs: list[tuple[str, TypeSig, str]] = []

    # ------------------------------------------------------------ basics

    def atoms(self, t: TypeSig) -> tuple[TypeSig, ...]:
        return self.types.atoms(t)

    def define(self, sort: str, term: str) -> str:
        return self.script.define(sort, term)

    def boolean(self, term: str) -> str:
        return self.script.define("Bool", term, "b")

    def integer(self, term: str) -> str:
        return self.script.define("Int", term, "i")

    def event(self, g: str, failing: str, site: tuple) -> None:
        cond = S.and_(g, S.not_(self.F), failing)
        if cond == FALSE:
            return
        e = self.script.define("Bool", cond, "e")
        self.events.append(Event(site, e))
        self.F = self.script.define("Bool", S.or_(self.F, e), "f")

    def unreachable(self, g: str) -> None:
        self.script.assume(S.not_(S.and_(g, S.not_(self.F))))

    # ------------------------------------------------------------ structural helpers

    def dummy(self, t: TypeSig):
        atoms = self.atoms(t)
        if len(atoms) != 1:
            return UnionSV({})
        a = atoms[0]
        if isinstance(a, Prim):
            if a.name in INTEGRAL:
                return "0"
            if a.name == "Bool":
                return FALSE
            if a.name in ("String", "ASCIIString"):
                return '""'
            if a.name == "None":
                return NONE_SV
            raise Unsupported(f"{a.name} values")
        if isinstance(a, StringOfT):
            return '""'
        if isinstance(a, TypedeclT):
            return TdSV(self.dummy(a.base))
        if isinstance(a, TupleT):
            return TupleSV([self.dummy(x) for x in a.items])
        if isinstance(a, RecordT):
            return FieldsSV({n: self.dummy(x) for n, x in a.fields})
        if isinstance(a, NominalT):
            return FieldsSV({n: self.dummy(x) for n, x in self.types.field_types(a)})
        if isinstance(a, ListT):
            return ListSV("0", [])
        if isinstance(a, MapT):
            return MapSV("0", [], [])
        raise Unsupported(f"{a} values")

    def alts(self, t: TypeSig, v) -> list[tuple[TypeSig, str, object]]:
        atoms = self.atoms(t)
        if len(atoms) == 1:
            return [(atoms[0], TRUE, v)]
        return [(a, g, x) for a, (g, x) in v.alts.items()]

    def merge(self, t: TypeSig, c: str, a, b):
        """``if c then a else b`` for two values of type ``t``."""
        if c == TRUE or a is b:
            return a
        if c == FALSE:
            return b
        atoms = self.atoms(t)
        if len(atoms) != 1:
            out = {}
            for atom in atoms:
                x, y = a.alts.get(atom), b.alts.get(atom)
                if x is None and y is None:
                    continue
                if x is None:
                    out[atom] = (self.boolean(S.and_(S.not_(c), y[0])), y[1])
                elif y is None:
                    out[atom] = (self.boolean(S.and_(c, x[0])), x[1])
                else:
                    out[atom] = (self.boolean(S.ite(c, x[0], y[0])), self.merge(atom, c, x[1], y[1]))
            return UnionSV(out)
        t = atoms[0]
        if isinstance(t, Prim):
            if t.name == "None":
                return NONE_SV
            sort = {"Bool": "Bool", "String": "String", "ASCIIString": "String"}.get(t.name, "Int")
            return self.define(sort, S.ite(c, a, b))
        if isinstance(t, StringOfT):
            return self.define("String", S.ite(c, a, b))
        if isinstance(t, TypedeclT):
            return TdSV(self.merge(t.base, c, a.base, b.base))
        if isinstance(t, TupleT):
            return TupleSV([self.merge(it, c, x, y) for it, x, y in zip(t.items, a.items, b.items)])
        if isinstance(t, RecordT):
            return FieldsSV({n: self.merge(ft, c, a.fields[n], b.fields[n]) for n, ft in t.fields})
        if isinstance(t, NominalT):
            return FieldsSV({n: self.merge(ft, c, a.fields[n], b.fields[n]) for n, ft in self.types.field_types(t)})
        if isinstance(t, ListT):
            n = max(len(a.items), len(b.items))
            xs = a.items + [self.dummy(t.elem)] * (n - len(a.items))
            ys = b.items + [self.dummy(t.elem)] * (n - len(b.items))
            return ListSV(self.integer(S.ite(c, a.length, b.length)),
                          [self.merge(t.elem, c, x, y) for x, y in zip(xs, ys)])
        if isinstance(t, MapT):
            n = max(len(a.keys), len(b.keys))
            pad = lambda xs, tt: xs + [self.dummy(tt)] * (n - len(xs))  # noqa: E731
            return MapSV(self.integer(S.ite(c, a.length, b.length)),
                         [self.merge(t.key, c, x, y) for x, y in zip(pad(a.keys, t.key), pad(b.keys, t.key))],
                         [self.merge(t.value, c, x, y) for x, y in zip(pad(a.vals, t.value), pad(b.vals, t.value))])
        raise Unsupported(f"{t} values")

    def select(self, t: TypeSig, choices: list[tuple[str, object]], default=None):
        """The value of the first choice whose condition holds."""
        res = self.dummy(t) if default is None else default
        for c, v in reversed(choices):
            res = self.merge(t, c, v, res)
        return res

    def cast(self, src: TypeSig, dst: TypeSig, v) -> tuple[object, str]:
        """Reshape ``v`` from ``src`` to ``dst``; also returns the condition under which it fits."""
        sa, da = self.atoms(src), self.atoms(dst)
        if sa == da:
            return v, TRUE
        alts = self.alts(src, v)
        keep = {}
        for a, g, x in alts:
            if a in da:
                keep[a] = (g, x)
            elif isinstance(a, (TupleT, RecordT, ListT, MapT)) and any(type(d) is type(a) for d in da):
                raise Unsupported("casts between structured types with different item types")
        ok = self.boolean(S.or_(*(g for g, _ in keep.values())))
        if len(da) == 1:
            d = da[0]
            return (keep[d][1] if d in keep else self.dummy(d)), ok
        return UnionSV(keep), ok

    def is_test(self, src: TypeSig, v, atoms: tuple[TypeSig, ...]) -> str:
        targets = set(self.atoms(union(*atoms))) if atoms else set()
        out = []
        for a, g, _ in self.alts(src, v):
            if a in targets:
                out.append(g)
            elif isinstance(a, (TupleT, RecordT)) and any(type(d) is type(a) for d in targets):
                raise Unsupported("shape tests on structured types with different item types")
        return self.boolean(S.or_(*out))

    def equal(self, ta: TypeSig, a, tb: TypeSig, b) -> str:
        bs = {atom: (g, x) for atom, g, x in self.alts(tb, b)}
        out = []
        for atom, ga, xa in self.alts(ta, a):
            if atom in bs:
                gb, xb = bs[atom]
                out.append(S.and_(ga, gb, self.equal_atom(atom, xa, xb)))
        return self.boolean(S.or_(*out))

    def equal_atom(self, t: TypeSig, a, b) -> str:
        if t == Prim("None"):
            return TRUE
        if isinstance(t, TypedeclT):
            return self.equal(t.base, a.base, t.base, b.base)
        if isinstance(t, (Prim, StringOfT)):
            return S.eq(a, b)
        raise Unsupported(f"equality on {t}")

    # ------------------------------------------------------------ constants

    def const(self, v, t: TypeSig):
        vt = value_type(v)
        sv = self.value_sv(v)
        out, _ = self.cast(vt, t, sv)
        return out

    def value_sv(self, v):
        if v is None:
            return NONE_SV
        if isinstance(v, bool):
            return TRUE if v else FALSE
        if isinstance(v, IntV):
            return S.int_lit(v.v)
        if isinstance(v, (StrV, StringOfV)):
            return S.str_lit(v.v)
        if isinstance(v, TypedeclV):
            return TdSV(self.const(v.base, v.base_type))
        if isinstance(v, TupleV):
            return TupleSV([self.value_sv(x) for x in v.items])
        if isinstance(v, RecordV):
            return FieldsSV({n: self.value_sv(x) for n, x in v.fields})
        if isinstance(v, EntityV):
            ftypes = dict(self.types.field_types(NominalT(v.name, v.args)))
            return FieldsSV({n: self.const(x, ftypes[n]) for n, x in v.fields})
        if isinstance(v, ListV):
            return ListSV(str(len(v.items)), [self.const(x, v.elem) for x in v.items])
        if isinstance(v, MapV):
            return MapSV(str(len(v.entries)), [self.const(k, v.key) for k, _ in v.entries],
                         [self.const(x, v.value) for _, x in v.entries])
        raise Unsupported(f"{type(v).__name__} constants")

    # ------------------------------------------------------------ inputs

    def declare_input(self, name: str, t: TypeSig, ge: str = TRUE):
        sort = self.sorts.sort(t)
        const = f"arg_{_symbol(name)}"
        self.inputs.append((const, t, sort))
        self.script.declare(const, sort)
        return self.project(t, const, 0, ge)

    def project(self, t: TypeSig, term: str, depth: int, ge: str):
        atoms = self.atoms(t)
        b = self.bounds
        if len(atoms) > 1:
            rec = self.sorts.recursive_sorts()
            out = {}
            for a in atoms:
                ctor, acc = self.sorts.union_ctor(t, a)
                tester = f"((_ is {ctor}) {term})"
                if depth >= b.unroll and self._sort_name(a) in rec:
                    self.script.assume(S.not_(tester))
                    continue
                g = self.boolean(tester)
                inner = NONE_SV if acc is None else self.project(a, f"({acc} {term})", depth + 1, S.and_(ge, g))
                out[a] = (g, inner)
            return UnionSV(out)
        a = atoms[0]
        if isinstance(a, Prim):
            if a.name in INTEGRAL:
                lo, hi = {"Nat": (0, NAT_MAX), "Int": (INT_MIN, INT_MAX), "BigNat": (0, b.big_magnitude),
                          "BigInt": (-b.big_magnitude, b.big_magnitude)}[a.name]
                self.script.assume(f"(<= {S.int_lit(lo)} {term} {S.int_lit(hi)})")
                return term
            if a.name in ("String", "ASCIIString"):
                self.script.assume(f"(<= (str.len {term}) {b.string_length})")
                if a.name == "ASCIIString":
                    self.script.assume(f'(str.in_re {term} (re.* (re.range "\\u{{0}}" "\\u{{7f}}")))')
                return term
            if a.name == "Bool":
                return term
            if a.name == "None":
                return NONE_SV
            raise Unsupported(f"{a.name} values")
        if isinstance(a, StringOfT):
            td = self.types.typedecl(a.validator)
            if td is None or td.regex is None:
                raise Unsupported(f"validator {a.validator} without a pattern")
            self.script.assume(f"(<= (str.len {term}) {b.string_length})")
            self.script.assume(f"(str.in_re {term} {S.regex_term(td.regex)})")
            return term
        if isinstance(a, TypedeclT):
            base = self.project(a.base, term, depth, ge)
            td = self.types.typedecl(a.name)
            for c in td.invariants if td else ():
                if self.cfg.enabled(c.level):
                    self.assume_check(c.fn, [base], ge)
            return TdSV(base)
        if isinstance(a, TupleT):
            dt = self.sorts.dts[a]
            accs = dt.ctors[0][1]
            return TupleSV([self.project(it, f"({acc} {term})", depth, ge) for it, (acc, _) in zip(a.items, accs)])
        if isinstance(a, RecordT):
            dt = self.sorts.dts[a]
            accs = dt.ctors[0][1]
            return FieldsSV({n: self.project(ft, f"({acc} {term})", depth, ge)
                             for (n, ft), (acc, _) in zip(a.fields, accs)})
        if isinstance(a, NominalT):
            dt = self.sorts.dts[a]
            accs = dt.ctors[0][1]
            fields = self.types.field_types(a)
            sv = FieldsSV({n: self.project(ft, f"({acc} {term})", depth, ge)
                           for (n, ft), (acc, _) in zip(fields, accs)})
            ent = self.types.entity(a.name)
            for c in ent.invariants if ent else ():
                if self.cfg.enabled(c.level):
                    self.assume_check(c.fn, [sv.fields[p] for p in c.params], ge)
            return sv
        if isinstance(a, ListT):
            length = self.integer(f"(seq.len {term})")
            cap = b.list_length
            if depth >= b.unroll and self._sort_name(a.elem) in self.sorts.recursive_sorts():
                cap = 0
            self.script.assume(f"(<= {length} {cap})")
            items = [self.project(a.elem, f"(seq.nth {term} {i})", depth + 1, S.and_(ge, S.cmp("<", str(i), length)))
                     for i in range(cap)]
            return ListSV(length, items)
        if isinstance(a, MapT):
            if not _orderable_key(a.key):
                raise Unsupported(f"maps keyed by {a.key}")
            dt = self.sorts.pair_dt(a)
            (kacc, _), (vacc, _) = dt.ctors[0][1]
            length = self.integer(f"(seq.len {term})")
            self.script.assume(f"(<= {length} {b.map_size})")
            keys, vals = [], []
            for i in range(b.map_size):
                gi = S.and_(ge, S.cmp("<", str(i), length))
                keys.append(self.project(a.key, f"({kacc} (seq.nth {term} {i}))", depth + 1, gi))
                vals.append(self.project(a.value, f"({vacc} (seq.nth {term} {i}))", depth + 1, gi))
            for i in range(b.map_size - 1):
                self.script.assume(S.implies(S.cmp("<", str(i + 1), length),
                                             self.less(a.key, keys[i], keys[i + 1])))
            return MapSV(length, keys, vals)
        raise Unsupported(f"{a} arguments")

    def _sort_name(self, t: TypeSig) -> str:
        try:
            return self.sorts.sort(t)
        except Unsupported:
            return ""

    def less(self, t: TypeSig, a, b) -> str:
        base = t.base if isinstance(t, TypedeclT) else t
        if isinstance(base, Prim) and base.name in INTEGRAL:
            return S.cmp("<", a, b)
        if isinstance(base, Prim) and base.name == "Bool":
            return S.and_(S.not_(a), b)
        return f"(str.< {a} {b})"

    def assume_check(self, fn: str, args: list, ge: str) -> None:
        """Assume an input invariant holds without raising any error."""
        saved_f, saved_events = self.F, self.events
        self.F, self.events = FALSE, []
        try:
            r = self.call(fn, args, None, ge)
            self.script.assume(S.implies(ge, S.and_(r, S.not_(self.F))))
        finally:
            self.F, self.events = saved_f, saved_events

    # ------------------------------------------------------------ entry

    def encode_entry(self, entry: str, ingest: bool = False) -> None:
        fn = self.fns[entry]
        self.script.emit("(set-logic ALL)")
        self.script.emit("(set-option :produce-models true)")
        for p, t in fn.params:
            self.sorts.sort(t)
        decl_at = len(self.script.lines)
        args = [self.declare_input(p, t) for p, t in fn.params]
        if ingest:
            for (_, t), v in zip(fn.params, args):
                self.run_validates(t, v, entry, TRUE)
        self.call(entry, args, None, TRUE)
        self.script.lines[decl_at:decl_at] = self.sorts.declarations()

    def run_validates(self, t: TypeSig, v, where: str, g: str) -> None:
        atoms = self.atoms(t)
        if len(atoms) > 1:
            for a, (ga, x) in v.alts.items():
                self.run_validates(a, x, where, S.and_(g, ga))
            return
        a = atoms[0]
        if isinstance(a, NominalT):
            fields = self.types.field_types(a)
            for n, ft in fields:
                self.run_validates(ft, v.fields[n], where, g)
            ent = self.types.entity(a.name)
            for c in ent.validates if ent else ():
                if self.cfg.enabled(c.level):
                    r = self.call(c.fn, [v.fields[p] for p in c.params], None, g)
                    self.event(g, S.not_(r), (where, "ingest", "validate-fail", c.fn))
        elif isinstance(a, TupleT):
            for it, x in zip(a.items, v.items):
                self.run_validates(it, x, where, g)
        elif isinstance(a, RecordT):
            for n, ft in a.fields:
                self.run_validates(ft, v.fields[n], where, g)
        elif isinstance(a, ListT):
            for i, x in enumerate(v.items):
                self.run_validates(a.elem, x, where, S.and_(g, S.cmp("<", str(i), v.length)))
        elif isinstance(a, MapT):
            for i, (k, x) in enumerate(zip(v.keys, v.vals)):
                gi = S.and_(g, S.cmp("<", str(i), v.length))
                self.run_validates(a.key, k, where, gi)
                self.run_validates(a.value, x, where, gi)

    # ------------------------------------------------------------ calls

    def call(self, name: str, args: list, caller: tuple[str, str] | None, g: str):
        fn = self.fns[name]
        depth = self.active.get(name, 0)
        if depth > self.bounds.unroll or (fn.recursive and depth >= self.bounds.unroll):
            self.unreachable(g)
            return self.dummy(fn.result)
        self.active[name] = depth + 1
        try:
            env = {p: a for (p, _), a in zip(fn.params, args)}
            for k, (level, e) in enumerate(fn.requires):
                if self.cfg.enabled(level):
                    r = self.eval(e, env, name, g)
                    where = caller or (name, f"r{k}")
                    self.event(g, S.not_(r), (where[0], where[1], "precondition-fail", k))
            result = self.eval(fn.body, env, name, g)
            result, _ = self.cast(fn.body.ty, fn.result, result)
            if fn.ensures:
                env["$return"] = result
                for k, (level, e) in enumerate(fn.ensures):
                    if self.cfg.enabled(level):
                        r = self.eval(e, env, name, g)
                        self.event(g, S.not_(r), (name, f"e{k}", "postcondition-fail", k))
            return result
        finally:
            self.active[name] = depth

    def run_checks(self, checks, get, fn: str, path: str, g: str) -> None:
        for k, c in enumerate(checks):
            if not self.cfg.enabled(c.level):
                continue
            r = self.call(c.fn, [get(p) for p in c.params], None, g)
            self.event(g, S.not_(r), (fn, path, "invariant-fail", k))

    # ------------------------------------------------------------ expressions

    def eval(self, n: I.Node, env: dict, fn: str, g: str):
        m = getattr(self, "x_" + type(n).__name__)
        return m(n, env, fn, g)

    def x_Const(self, n, env, fn, g):
        return self.const(n.value, n.ty)

    def x_Var(self, n, env, fn, g):
        return env[n.name]

    def x_Let(self, n, env, fn, g):
        env[n.name] = self.eval(n.bound, env, fn, g)
        return self.eval(n.body, env, fn, g)

    def x_Ite(self, n, env, fn, g):
        c = self.eval(n.cond, env, fn, g)
        if c == TRUE:
            return self.eval(n.then, env, fn, g)
        if c == FALSE:
            return self.eval(n.else_, env, fn, g)
        a = self.eval(n.then, env, fn, self.boolean(S.and_(g, c)))
        b = self.eval(n.else_, env, fn, self.boolean(S.and_(g, S.not_(c))))
        a, _ = self.cast(n.then.ty, n.ty, a)
        b, _ = self.cast(n.else_.ty, n.ty, b)
        return self.merge(n.ty, c, a, b)

    def x_Call(self, n, env, fn, g):
        args = [self.eval(a, env, fn, g) for a in n.args]
        callee = self.fns[n.fn]
        args = [self.cast(a.ty, pt, v)[0] for a, (_, pt), v in zip(n.args, callee.params, args)]
        return self.call(n.fn, args, (fn, n.path), g)

    def x_TupleNew(self, n, env, fn, g):
        return TupleSV([self.eval(a, env, fn, g) for a in n.items])

    def x_RecordNew(self, n, env, fn, g):
        return FieldsSV({k: self.eval(a, env, fn, g) for k, a in zip(n.names, n.args)})

    def x_Construct(self, n, env, fn, g):
        ftypes = dict(self.types.field_types(n.entity))
        vals = {}
        for k, a in zip(n.names, n.args):
            vals[k] = self.cast(a.ty, ftypes.get(k, a.ty), self.eval(a, env, fn, g))[0]
        self.run_checks(n.checks, vals.__getitem__, fn, n.path, g)
        return FieldsSV(vals)

    def x_ListNew(self, n, env, fn, g):
        items = [self.cast(a.ty, n.ty.elem, self.eval(a, env, fn, g))[0] for a in n.items]
        return ListSV(str(len(items)), items)

    def x_MapNew(self, n, env, fn, g):
        vals = [self.eval(a, env, fn, g) for a in n.args]
        mt: MapT = n.ty
        entries: dict = {}
        for i in range(0, len(vals), 2):
            kn = n.args[i]
            if not isinstance(kn, I.Const):
                raise Unsupported("map literals with computed keys")
            entries[kn.value] = self.cast(n.args[i + 1].ty, mt.value, vals[i + 1])[0]
        ordered = sorted(entries.items(), key=lambda kv: key_order(kv[0]))
        return MapSV(str(len(ordered)), [self.const(k, mt.key) for k, _ in ordered], [v for _, v in ordered])

    def x_Access(self, n, env, fn, g):
        v = self.eval(n.expr, env, fn, g)
        src = n.expr.ty
        alts = self.alts(src, v)
        choices = []
        for atom, ga, x in alts:
            if n.kind == "index":
                item = x.items[n.key]
                it = atom.items[n.key]
            else:
                item = x.fields[n.key]
                it = dict(atom.fields if isinstance(atom, RecordT) else self.types.field_types(atom))[n.key]
            choices.append((ga, self.cast(it, n.ty, item)[0]))
        if len(choices) == 1:
            return choices[0][1]
        return self.select(n.ty, choices)

    def x_IsTest(self, n, env, fn, g):
        return self.is_test(n.expr.ty, self.eval(n.expr, env, fn, g), n.atoms)

    def x_AsCast(self, n, env, fn, g):
        v = self.eval(n.expr, env, fn, g)
        out, ok = self.cast(n.expr.ty, n.target, v)
        if not n.safe:
            self.event(g, S.not_(ok), (fn, n.path, "cast-fail", 0))
        return out

    def x_Inject(self, n, env, fn, g):
        v = self.eval(n.expr, env, fn, g)
        v = self.cast(n.expr.ty, n.td.base, v)[0]
        self.run_checks(n.checks, lambda _p: v, fn, n.path, g)
        return TdSV(v)

    def x_Extract(self, n, env, fn, g):
        return self.eval(n.expr, env, fn, g).base

    def x_Equal(self, n, env, fn, g):
        a = self.eval(n.left, env, fn, g)
        b = self.eval(n.right, env, fn, g)
        r = self.equal(n.left.ty, a, n.right.ty, b)
        return self.boolean(S.not_(r)) if n.neg else r

    def x_Assert(self, n, env, fn, g):
        if self.cfg.enabled(n.level):
            c = self.eval(n.cond, env, fn, g)
            self.event(g, S.not_(c), (fn, n.path, n.code, 0))
        return self.eval(n.body, env, fn, g)

    def x_Fail(self, n, env, fn, g):
        self.event(g, TRUE, (fn, n.path, n.code, 0))
        return self.dummy(n.ty)

    # ------------------------------------------------------------ primitives

    def checked(self, kind: str, x: str, g: str, site: tuple[str, str]) -> str:
        x = self.integer(x)
        f, p = site
        if kind == "Nat":
            self.event(g, S.cmp("<", x, "0"), (f, p, "nat-underflow", 0))
            self.event(g, S.cmp(">", x, str(NAT_MAX)), (f, p, "overflow", 0))
        elif kind == "Int":
            self.event(g, S.or_(S.cmp("<", x, S.int_lit(INT_MIN)), S.cmp(">", x, str(INT_MAX))), (f, p, "overflow", 0))
        elif kind == "BigNat":
            self.event(g, S.cmp("<", x, "0"), (f, p, "nat-underflow", 0))
        return x

    def x_PrimOp(self, n, env, fn, g):
        args = [self.eval(a, env, fn, g) for a in n.args]
        op = n.op
        if op == "not":
            return self.boolean(S.not_(args[0]))
        kinds = [_int_kind_or_none(a.ty) for a in n.args]
        if op == "strlen":
            return self.integer(f"(str.len {_base_term(args[0])})")
        if op == "concat":
            return self.define("String", "(str.++ " + " ".join(_base_term(a) for a in args) + ")")
        if op in ("<", "<=", ">", ">="):
            a, b = _base_term(args[0]), _base_term(args[1])
            if kinds[0] in INTEGRAL:
                return self.boolean(S.cmp(op, a, b))
            if _is_stringy(n.args[0].ty):
                if op in (">", ">="):
                    a, b, op = b, a, "<" if op == ">" else "<="
                return self.boolean(f"(str.{op} {a} {b})")
            raise Unsupported(f"comparison on {n.args[0].ty}")
        kind = kinds[0]
        if kind not in INTEGRAL:
            raise Unsupported(f"arithmetic on {n.args[0].ty}")
        site = (fn, n.path)
        if op == "neg":
            return self.checked(kind, S.sub("0", args[0]), g, site)
        if op.startswith("to"):
            return self.checked(op[2:], args[0], g, site)
        a, b = args
        if op == "+":
            return self.checked(kind, S.add(a, b), g, site)
        if op == "-":
            return self.checked(kind, S.sub(a, b), g, site)
        if op == "*":
            return self.checked(kind, f"(* {a} {b})", g, site)
        self.event(g, S.eq(b, "0"), (fn, n.path, "div-zero", 0))
        q = self.integer(trunc_div(a, b))
        if op == "/":
            return self.checked(kind, q, g, site)
        return self.checked(kind, f"(- {a} (* {b} {q}))", g, site)

    # ------------------------------------------------------------ functors

    def x_FunctorApp(self, n, env, fn, g):
        caps = [self.eval(c, env, fn, g) for c in n.captures]
        args = [self.eval(a, env, fn, g) for a in n.args]
        spec = self.fns[n.spec] if n.spec else None

        def f(gi: str, *xs):
            return self.call(n.spec, caps + list(xs), (fn, n.path), gi)

        name = n.name
        if name.startswith("map_"):
            return self.map_functor(name[4:], n, args, f, fn, g)
        if name == "zip":
            a, b = args
            k = min(len(a.items), len(b.items))
            length = self.integer(S.ite(S.cmp("<=", a.length, b.length), a.length, b.length))
            return ListSV(length, [TupleSV([a.items[i], b.items[i]]) for i in range(k)])
        lst: ListSV = args[0]
        lt: ListT = n.args[0].ty
        elem = lt.elem
        xs = lst.items
        guards = [self.boolean(S.and_(g, S.cmp("<", str(i), lst.length))) for i in range(len(xs))]
        here = (fn, n.path)
        if name == "size":
            return lst.length
        if name == "get":
            i = args[1]
            self.event(g, S.not_(S.and_(S.cmp("<=", "0", i), S.cmp("<", i, lst.length))),
                       (fn, n.path, "index-out-of-bounds", 0))
            return self.cast(elem, n.ty, self.select(elem, [(S.eq(i, str(k)), x) for k, x in enumerate(xs)]))[0]
        if name == "slice":
            i, j = args[1], args[2]
            ok = S.and_(S.cmp("<=", "0", i), S.cmp("<=", i, j), S.cmp("<=", j, lst.length))
            self.event(g, S.not_(ok), (fn, n.path, "index-out-of-bounds", 0))
            items = [self.select(elem, [(S.eq(S.add(i, str(k)), str(m)), x) for m, x in enumerate(xs)])
                     for k in range(len(xs))]
            return ListSV(self.integer(S.sub(j, i)), items)
        if name == "concat":
            other: ListSV = args[1]
            length = self.integer(S.add(lst.length, other.length))
            items = []
            for k in range(len(xs) + len(other.items)):
                choices = []
                if k < len(xs):
                    choices.append((S.cmp("<", str(k), lst.length), xs[k]))
                for j, y in enumerate(other.items):
                    if k - j >= 0:
                        choices.append((S.eq(lst.length, str(k - j)), y))
                items.append(self.select(elem, choices))
            return ListSV(length, items)
        if name == "pushBack":
            x = self.cast(n.args[1].ty, elem, args[1])[0]
            items = []
            for k in range(len(xs) + 1):
                choices = [(S.cmp("<", str(k), lst.length), xs[k])] if k < len(xs) else []
                choices.append((S.eq(lst.length, str(k)), x))
                items.append(self.select(elem, choices))
            return ListSV(self.integer(S.add(lst.length, "1")), items)
        if name == "contains":
            return self.boolean(S.or_(*(S.and_(S.cmp("<", str(i), lst.length),
                                               self.equal(elem, x, n.args[1].ty, args[1]))
                                        for i, x in enumerate(xs))))
        if name == "max":
            self.event(g, S.eq(lst.length, "0"), (fn, n.path, "empty-collection", 0))
            if not xs:
                return self.dummy(n.ty)
            best = xs[0]
            for i in range(1, len(xs)):
                c = self.boolean(S.and_(S.cmp("<", str(i), lst.length), self.greater(elem, xs[i], best)))
                best = self.merge(elem, c, xs[i], best)
            return self.cast(elem, n.ty, best)[0]
        if name == "sum":
            return self.total(_int_kind_or_none(elem), xs, guards, here)
        if name == "map":
            rt = n.ty.elem
            items = [self.cast(spec.result, rt, f(guards[i], x))[0] for i, x in enumerate(xs)]
            return ListSV(lst.length, items)
        if name in ("filter", "has", "find", "count", "allOf"):
            flags = [f(guards[i], x) for i, x in enumerate(xs)]
            valid = [self.boolean(S.and_(S.cmp("<", str(i), lst.length), fl)) for i, fl in enumerate(flags)]
            if name == "has":
                return self.boolean(S.or_(*valid))
            if name == "allOf":
                return self.boolean(S.and_(*(S.implies(S.cmp("<", str(i), lst.length), fl)
                                             for i, fl in enumerate(flags))))
            if name == "count":
                return self.integer(_count(valid))
            if name == "find":
                none = self.cast(Prim("None"), n.ty, NONE_SV)[0]
                return self.select(n.ty, [(v, self.cast(elem, n.ty, x)[0]) for v, x in zip(valid, xs)], none)
            return self.compact(elem, list(xs), valid)
        if name == "join":
            other: ListSV = args[1]
            rt = n.ty.elem
            pairs, valid = [], []
            for i, x in enumerate(xs):
                for j, y in enumerate(other.items):
                    gij = self.boolean(S.and_(guards[i], S.cmp("<", str(j), other.length)))
                    fl = f(gij, x, y)
                    valid.append(self.boolean(S.and_(S.cmp("<", str(i), lst.length),
                                                     S.cmp("<", str(j), other.length), fl)))
                    pairs.append(TupleSV([x, y]))
            return self.compact(rt, pairs, valid)
        if name == "unique":
            conds = []
            for i in range(len(xs)):
                for j in range(i + 1, len(xs)):
                    gj = self.boolean(S.and_(g, S.cmp("<", str(j), lst.length)))
                    fl = f(gj, xs[i], xs[j])
                    conds.append(S.implies(S.cmp("<", str(j), lst.length), fl))
            return self.boolean(S.and_(*conds))
        if name == "reduce":
            rt = n.ty
            acc = self.cast(n.args[1].ty, rt, args[1])[0]
            for i, x in enumerate(xs):
                r = self.cast(spec.result, rt, f(guards[i], acc, x))[0]
                acc = self.merge(rt, S.cmp("<", str(i), lst.length), r, acc)
            return acc
        if name == "sumOf":
            keys = [f(guards[i], x) for i, x in enumerate(xs)]
            return self.total(_int_kind_or_none(n.ty), keys, guards, here)
        if name == "maxArg":
            keys = [f(guards[i], x) for i, x in enumerate(xs)]
            self.event(g, S.eq(lst.length, "0"), (fn, n.path, "empty-collection", 0))
            if not xs:
                return self.dummy(n.ty)
            kt = spec.result
            best, best_key = xs[0], keys[0]
            for i in range(1, len(xs)):
                c = self.boolean(S.and_(S.cmp("<", str(i), lst.length), self.greater(kt, keys[i], best_key)))
                best = self.merge(elem, c, xs[i], best)
                best_key = self.merge(kt, c, keys[i], best_key)
            return self.cast(elem, n.ty, best)[0]
        raise Unsupported(f"functor {name}")

    def map_functor(self, name: str, n, args, f, fn: str, g: str):
        m: MapSV = args[0]
        mt: MapT = n.args[0].ty
        guards = [self.boolean(S.and_(g, S.cmp("<", str(i), m.length))) for i in range(len(m.keys))]
        if name == "size":
            return m.length
        if name in ("get", "has"):
            found = [self.boolean(S.and_(S.cmp("<", str(i), m.length), self.equal(mt.key, k, n.args[1].ty, args[1])))
                     for i, k in enumerate(m.keys)]
            if name == "has":
                return self.boolean(S.or_(*found))
            self.event(g, S.not_(S.or_(*found)), (fn, n.path, "index-out-of-bounds", 0))
            return self.cast(mt.value, n.ty, self.select(mt.value, list(zip(found, m.vals))))[0]
        if name == "map":
            rt: MapT = n.ty
            spec = self.fns[n.spec]
            vals = [self.cast(spec.result, rt.value, f(guards[i], k, v))[0]
                    for i, (k, v) in enumerate(zip(m.keys, m.vals))]
            return MapSV(m.length, list(m.keys), vals)
        if name == "filter":
            flags = [f(guards[i], k, v) for i, (k, v) in enumerate(zip(m.keys, m.vals))]
            valid = [self.boolean(S.and_(S.cmp("<", str(i), m.length), fl)) for i, fl in enumerate(flags)]
            keys = self.compact(mt.key, list(m.keys), valid)
            vals = self.compact(mt.value, list(m.vals), valid)
            return MapSV(keys.length, keys.items, vals.items)
        raise Unsupported(f"functor map_{name}")

    def compact(self, elem: TypeSig, items: list, valid: list[str]) -> ListSV:
        """Keep the items whose ``valid`` flag holds, preserving order."""
        before = ["0"]
        for v in valid:
            before.append(self.integer(S.add(before[-1], S.ite(v, "1", "0"))))
        out = []
        for j in range(len(items)):
            choices = [(S.and_(valid[k], S.eq(before[k], str(j))), items[k]) for k in range(j, len(items))]
            out.append(self.select(elem, choices))
        return ListSV(before[-1], out)

    def total(self, kind: str | None, xs: list, guards: list[str], site: tuple[str, str]) -> str:
        if kind not in INTEGRAL:
            raise Unsupported(f"sums of {kind}")
        acc = "0"
        for x, gi in zip(xs, guards):
            nxt = self.checked(kind, S.add(acc, _base_term(x)), gi, site)
            acc = self.integer(S.ite(gi, nxt, acc))
        return acc

    def greater(self, t: TypeSig, a, b) -> str:
        kind = _int_kind_or_none(t)
        if kind in INTEGRAL:
            return S.cmp(">", _base_term(a), _base_term(b))
        if _is_stringy(t):
            return f"(str.< {_base_term(b)} {_base_term(a)})"
        raise Unsupported(f"ordering on {t}")


# ---------------------------------------------------------------- small helpers


def trunc_div(a: str, b: str) -> str:
    q = f"(div (abs {a}) (abs {b}))"
    return f"(ite (= (>= {a} 0) (>= {b} 0)) {q} (- {q}))"


def _count(flags: list[str]) -> str:
    if not flags:
        return "0"
    return "(+ " + " ".join(S.ite(f, "1", "0") for f in flags) + ")" if len(flags) > 1 else S.ite(flags[0], "1", "0")


def _int_kind_or_none(t: TypeSig) -> str | None:
    if isinstance(t, TypedeclT):
        return _int_kind_or_none(t.base)
    return t.name if isinstance(t, Prim) else None


def _is_stringy(t: TypeSig) -> bool:
    if isinstance(t, TypedeclT):
        return _is_stringy(t.base)
    return isinstance(t, StringOfT) or (isinstance(t, Prim) and t.name in ("String", "ASCIIString"))


def _base_term(v) -> str:
    while isinstance(v, TdSV):
        v = v.base
    return v


def _orderable_key(t: TypeSig) -> bool:
    return isinstance(t, StringOfT) or (isinstance(t, Prim) and t.name in INTEGRAL + ("Bool", "String", "ASCIIString"))


__all__ = ["SmallModelBounds", "Encoder", "Sorts", "Event", "Unsupported"]
