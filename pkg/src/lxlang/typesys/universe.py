"""The type universe: nominal declarations, typedecls, callables and subtyping."""

from __future__ import annotations

from dataclasses import dataclass, field

import networkx as nx

from lxlang.diagnostics import CompileError, Diagnostic, SourcePos, error
from lxlang.frontend import ast as A
from lxlang.regex import RegexError, parse_regex
from lxlang.typesys.typesig import (
    BOOL,
    NEVER,
    NONE,
    PRIM_NAMES,
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
    is_key_type,
    members,
    union,
)

RESULT_ENTITIES = {"Ok": "value", "Err": "error"}


class TypeErrorAt(Exception):
    def __init__(self, pos: SourcePos | None, message: str):
        self.pos = pos
        super().__init__(message)


@dataclass
class CheckInfo:
    kind: str  # invariant | validate
    level: str
    owner: str
    index: int
    pos: SourcePos | None
    fn: str  # name of the generated boolean function
    expr: A.Expr = field(compare=False, repr=False)


@dataclass
class Callable:
    """Anything that lowers to a named IR function."""

    key: str
    kind: str  # function | method | static | const | invariant | validate | tdinvariant
    owner: str | None
    params: list[tuple[str, TypeSig]]
    result: TypeSig | None
    decl: object = field(repr=False, default=None)
    flags: frozenset[str] = frozenset()
    pos: SourcePos | None = None
    requires: list[tuple[str, A.Expr]] = field(default_factory=list, repr=False)
    ensures: list[tuple[str, A.Expr]] = field(default_factory=list, repr=False)
    body: object = field(default=None, repr=False)  # list[Stmt] or Expr
    abstract: bool = False

    @property
    def recursive(self) -> bool:
        return "recursive" in self.flags


@dataclass
class NominalInfo:
    name: str
    is_concept: bool
    provides: tuple[str, ...]
    own_fields: list[tuple[str, TypeSig]]
    pos: SourcePos | None = None
    methods: dict[str, Callable] = field(default_factory=dict)
    statics: dict[str, Callable] = field(default_factory=dict)
    consts: dict[str, Callable] = field(default_factory=dict)
    invariants: list[CheckInfo] = field(default_factory=list)
    validates: list[CheckInfo] = field(default_factory=list)
    datatype: str | None = None


@dataclass
class TypedeclInfo:
    name: str
    base: TypeSig | None  # None for regex validators
    regex: str | None
    pos: SourcePos | None = None
    invariants: list[CheckInfo] = field(default_factory=list)


def level_of(level: str | None) -> str:
    return level or "release"


class Universe:
    def __init__(self) -> None:
        self.nominals: dict[str, NominalInfo] = {}
        self.typedecls: dict[str, TypedeclInfo] = {}
        self.callables: dict[str, Callable] = {}
        self.closure: dict[str, frozenset[str]] = {}
        self.order: dict[str, tuple[str, ...]] = {}  # linearized provides, nearest first
        self.diags: list[Diagnostic] = []

    # ------------------------------------------------------------ queries

    def is_entity(self, name: str) -> bool:
        return name in RESULT_ENTITIES or (name in self.nominals and not self.nominals[name].is_concept)

    def is_concept(self, name: str) -> bool:
        return name in self.nominals and self.nominals[name].is_concept

    def entities(self) -> list[str]:
        return sorted(n for n, i in self.nominals.items() if not i.is_concept)

    def fields(self, t: NominalT) -> list[tuple[str, TypeSig]]:
        """All fields of a nominal type, inherited first."""
        if t.name in RESULT_ENTITIES:
            return [(RESULT_ENTITIES[t.name], t.args[0])]
        out: list[tuple[str, TypeSig]] = []
        seen: set[str] = set()
        for owner in reversed(self.order.get(t.name, ())):
            for n, ft in self.nominals[owner].own_fields:
                if n not in seen:
                    seen.add(n)
                    out.append((n, ft))
        for n, ft in self.nominals[t.name].own_fields:
            if n not in seen:
                seen.add(n)
                out.append((n, ft))
        return out

    def field_type(self, t: NominalT, name: str) -> TypeSig | None:
        for n, ft in self.fields(t):
            if n == name:
                return ft
        return None

    def checks(self, entity: str, kind: str = "invariant") -> list[CheckInfo]:
        """Invariants (or validates) applying to ``entity``, inherited first."""
        if entity in RESULT_ENTITIES:
            return []
        out: list[CheckInfo] = []
        for owner in list(reversed(self.order.get(entity, ()))) + [entity]:
            info = self.nominals[owner]
            out.extend(info.invariants if kind == "invariant" else info.validates)
        return out

    def lookup_method(self, type_name: str, name: str) -> Callable | None:
        if type_name not in self.nominals:
            return None
        for owner in (type_name,) + self.order.get(type_name, ()):
            m = self.nominals[owner].methods.get(name)
            if m is not None:
                return m
        return None

    def lookup_static(self, type_name: str, name: str) -> Callable | None:
        if type_name not in self.nominals:
            return None
        for owner in (type_name,) + self.order.get(type_name, ()):
            info = self.nominals[owner]
            if name in info.statics:
                return info.statics[name]
            if name in info.consts:
                return info.consts[name]
        return None

    def providers(self, concept: str) -> list[str]:
        return sorted(e for e in self.entities() if concept in self.closure.get(e, ()))

    def atoms(self, t: TypeSig) -> tuple[TypeSig, ...]:
        """Concrete runtime shapes a value of type ``t`` may take (sorted)."""
        out: set[TypeSig] = set()
        for m in members(t):
            if isinstance(m, NominalT) and self.is_concept(m.name):
                out.update(NominalT(e) for e in self.providers(m.name))
            else:
                out.add(m)
        return tuple(sorted(out, key=str))

    def subtype(self, a: TypeSig, b: TypeSig) -> bool:
        if a == b or isinstance(a, NeverT):
            return True
        if isinstance(a, UnionT):
            return all(self.subtype(m, b) for m in a.members)
        if isinstance(b, UnionT):
            if any(self.subtype(a, m) for m in b.members):
                return True
            if isinstance(a, NominalT) and self.is_concept(a.name):
                atoms = self.atoms(a)
                return bool(atoms) and all(self.subtype(x, b) for x in atoms)
            return False
        if isinstance(a, NominalT) and isinstance(b, NominalT) and not a.args and not b.args:
            return b.name in self.closure.get(a.name, ())
        return False

    def is_inhabited(self, t: TypeSig) -> bool:
        return bool(self.atoms(t))

    # ------------------------------------------------------------ flow narrowing

    def flow_narrow(self, t: TypeSig, op: A.FlowOp, lit_type: TypeSig | None = None,
                    resolve=None) -> tuple[TypeSig, TypeSig]:
        """Split ``t`` by ``op`` into (passes, fails).

        Raises :class:`TypeErrorAt` when either side is uninhabited, except for
        literal tests which never refine the failing side.
        """
        if op.kind == "eq":
            if lit_type is None or not is_key_type(lit_type):
                raise TypeErrorAt(op.pos, "literal flow test needs a key-type literal")
            if not self.subtype(lit_type, t):
                raise TypeErrorAt(op.pos, f"{t} can never equal a {lit_type} literal")
            yes, no = lit_type, t
        else:
            if op.kind == "type":
                target = resolve(op.type) if resolve else None
                sel = lambda a: self.subtype(a, target)  # noqa: E731
            elif op.kind in ("none", "some"):
                sel = lambda a: a == NONE  # noqa: E731
            elif op.kind == "ok":
                sel = lambda a: isinstance(a, NominalT) and a.name == "Ok"  # noqa: E731
            elif op.kind == "err":
                sel = lambda a: isinstance(a, NominalT) and a.name == "Err"  # noqa: E731
            else:
                sel = lambda a: isinstance(a, NominalT) and a.name in RESULT_ENTITIES  # noqa: E731
            yes, no = self.split(t, sel)
            if op.kind == "some":
                yes, no = no, yes
            if isinstance(yes, NeverT):
                raise TypeErrorAt(op.pos, f"flow test can never succeed on {t}")
            if isinstance(no, NeverT):
                raise TypeErrorAt(op.pos, f"flow test always succeeds on {t}")
        if op.neg:
            yes, no = no, yes
        return yes, no

    def split(self, t: TypeSig, sel) -> tuple[TypeSig, TypeSig]:
        yes: list[TypeSig] = []
        no: list[TypeSig] = []
        for m in members(t):
            atoms = self.atoms(m)
            hits = [a for a in atoms if sel(a)]
            if len(hits) == len(atoms):
                yes.append(m)
            elif not hits:
                no.append(m)
            else:
                yes.extend(hits)
                no.extend(a for a in atoms if not sel(a))
        return union(*yes), union(*no)


# ---------------------------------------------------------------- construction


def resolve_type(u: Universe, t: A.TypeExpr) -> TypeSig:
    if isinstance(t, A.TUnion):
        return union(*(resolve_type(u, i) for i in t.items))
    if isinstance(t, A.TTuple):
        return TupleT(tuple(resolve_type(u, i) for i in t.items))
    if isinstance(t, A.TRecord):
        names = [n for n, _ in t.fields]
        if len(set(names)) != len(names):
            raise TypeErrorAt(t.pos, "duplicate record field")
        return RecordT(tuple((n, resolve_type(u, i)) for n, i in t.fields))
    assert isinstance(t, A.TName)
    n, args = t.name, t.args

    def arity(k: int) -> None:
        if len(args) != k:
            raise TypeErrorAt(t.pos, f"{n} expects {k} type argument(s), got {len(args)}")

    if n in PRIM_NAMES:
        arity(0)
        return Prim(n)
    if n == "List":
        arity(1)
        return ListT(resolve_type(u, args[0]))
    if n == "Map":
        arity(2)
        k = resolve_type(u, args[0])
        if not is_key_type(k):
            raise TypeErrorAt(t.pos, f"map key type {k} is not a key type")
        return MapT(k, resolve_type(u, args[1]))
    if n == "StringOf":
        arity(1)
        v = args[0]
        if not isinstance(v, A.TName) or v.name not in u.typedecls or u.typedecls[v.name].regex is None:
            raise TypeErrorAt(t.pos, "StringOf expects a regex validator typedecl")
        return StringOfT(v.name)
    if n == "Result":
        arity(2)
        return union(NominalT("Ok", (resolve_type(u, args[0]),)), NominalT("Err", (resolve_type(u, args[1]),)))
    if n in RESULT_ENTITIES:
        arity(1)
        return NominalT(n, (resolve_type(u, args[0]),))
    if n in u.typedecls:
        arity(0)
        td = u.typedecls[n]
        if td.base is None:
            raise TypeErrorAt(t.pos, f"validator {n} is not a value type; use StringOf<{n}>")
        return TypedeclT(n, td.base)
    if n in u.nominals:
        arity(0)
        return NominalT(n)
    raise TypeErrorAt(t.pos, f"unknown type {n}")


def build_universe(program: A.Program) -> Universe:
    """Build the universe; raise :class:`CompileError` on any error."""
    u, diags = build_universe_with_diagnostics(program)
    if diags:
        raise CompileError(diags)
    return u


def build_universe_with_diagnostics(program: A.Program) -> tuple[Universe, list[Diagnostic]]:
    u = Universe()
    diags = u.diags
    nominal_decls: list[tuple[str, bool, list[str], list[A.Member], SourcePos | None, str | None]] = []
    taken: dict[str, SourcePos | None] = {n: None for n in PRIM_NAMES + ("List", "Map", "StringOf", "Result", "Ok", "Err")}

    def claim(name: str, pos) -> bool:
        if name in taken:
            diags.append(error(pos, f"duplicate declaration of {name}"))
            return False
        taken[name] = pos
        return True

    # pass 1: names
    for d in program.decls:
        if isinstance(d, A.TypedeclD):
            if claim(d.name, d.pos):
                if d.regex is not None:
                    try:
                        parse_regex(d.regex)
                    except RegexError as exc:
                        diags.append(error(d.pos, f"bad validator regex: {exc}"))
                u.typedecls[d.name] = TypedeclInfo(d.name, None, d.regex, d.pos)
        elif isinstance(d, (A.ConceptD, A.EntityD)):
            if claim(d.name, d.pos):
                nominal_decls.append((d.name, isinstance(d, A.ConceptD), list(d.provides), d.members, d.pos, None))
        elif isinstance(d, A.DatatypeD):
            if not d.cases:
                diags.append(error(d.pos, f"datatype {d.name} needs at least one case"))
            if claim(d.name, d.pos):
                nominal_decls.append((d.name, True, list(d.provides), list(d.using) + list(d.extra), d.pos, None))
            for c in d.cases:
                if claim(c.name, c.pos):
                    nominal_decls.append((c.name, False, [d.name], c.members, c.pos, d.name))
        elif isinstance(d, (A.FunctionD, A.ConstD)):
            if claim(d.name, d.pos):
                pass

    for name, is_concept, provides, _, pos, dt in nominal_decls:
        u.nominals[name] = NominalInfo(name, is_concept, tuple(provides), [], pos, datatype=dt)

    # provides graph
    g = nx.DiGraph()
    for name, info in u.nominals.items():
        g.add_node(name)
        for p in info.provides:
            if p not in u.nominals:
                diags.append(error(info.pos, f"{name} provides unknown concept {p}"))
            elif not u.nominals[p].is_concept:
                diags.append(error(info.pos, f"{name} provides entity {p}; entities cannot be provided"))
            else:
                g.add_edge(name, p)
    cycles = [c for c in nx.simple_cycles(g)]
    if cycles:
        for c in sorted(sorted(c) for c in cycles):
            diags.append(error(u.nominals[c[0]].pos, "cycle in provides: " + " -> ".join(c + [c[0]])))
        return u, diags
    for name in u.nominals:
        u.closure[name] = frozenset(nx.descendants(g, name))
        # nearest-first linearization, declaration order, deduplicated
        order: list[str] = []
        frontier = list(u.nominals[name].provides)
        while frontier:
            nxt: list[str] = []
            for p in frontier:
                if p in u.nominals and p not in order:
                    order.append(p)
                    nxt.extend(u.nominals[p].provides)
            frontier = nxt
        u.order[name] = tuple(order)

    # typedecl bases
    for d in program.decls:
        if isinstance(d, A.TypedeclD) and d.regex is None and d.name in u.typedecls:
            try:
                base = resolve_type(u, d.base)
            except TypeErrorAt as exc:
                diags.append(error(exc.pos or d.pos, str(exc)))
                continue
            if isinstance(base, (TypedeclT,)) or not (isinstance(base, (Prim, StringOfT))):
                diags.append(error(d.pos, f"typedecl {d.name} must wrap a primitive or StringOf type, not {base}"))
                continue
            if base == NONE:
                diags.append(error(d.pos, "typedecl of None is not allowed"))
                continue
            u.typedecls[d.name].base = base

    for d in program.decls:
        if isinstance(d, A.TypedeclD) and d.name in u.typedecls:
            td = u.typedecls[d.name]
            for i, m in enumerate(x for x in d.members):
                if isinstance(m, A.InvariantM):
                    k = len(td.invariants)
                    td.invariants.append(CheckInfo("invariant", level_of(m.level), d.name, k, m.pos, f"{d.name}$inv{k}", m.expr))
                    u.callables[f"{d.name}$inv{k}"] = Callable(
                        f"{d.name}$inv{k}", "tdinvariant", d.name, [("$value", td.base or NEVER)], BOOL,
                        decl=m, pos=m.pos, body=m.expr,
                    )
                else:
                    diags.append(error(m.pos, "typedecls may only declare invariants"))

    # members
    for name, is_concept, _, mems, pos, _ in nominal_decls:
        info = u.nominals[name]
        seen: set[str] = set()
        for m in mems:
            mname = getattr(m, "name", None)
            if mname is not None:
                if mname in seen:
                    diags.append(error(m.pos, f"duplicate member {mname} in {name}"))
                    continue
                seen.add(mname)
            try:
                add_member(u, info, m)
            except TypeErrorAt as exc:
                diags.append(error(exc.pos or m.pos, str(exc)))

    # inherited field clashes and abstract completeness
    for name, info in u.nominals.items():
        names: dict[str, str] = {}
        for owner in list(reversed(u.order.get(name, ()))) + [name]:
            for fname, _ in u.nominals[owner].own_fields:
                if fname in names and names[fname] != owner:
                    diags.append(error(info.pos, f"field {fname} of {name} declared in both {names[fname]} and {owner}"))
                names[fname] = owner
        if not info.is_concept:
            for owner in u.order.get(name, ()):
                for mname, m in u.nominals[owner].methods.items():
                    impl = u.lookup_method(name, mname)
                    if impl is None or impl.abstract:
                        diags.append(error(info.pos, f"{name} does not implement abstract method {owner}::{mname}"))
            for mname, m in info.methods.items():
                if m.abstract:
                    diags.append(error(m.pos, f"entity {name} declares abstract method {mname}"))
        for mname, m in info.methods.items():
            inherited = [o for o in u.order.get(name, ()) if mname in u.nominals[o].methods]
            if inherited and "override" not in m.flags:
                diags.append(error(m.pos, f"{name}::{mname} overrides {inherited[0]}::{mname} without `override`"))
            if not inherited and "override" in m.flags:
                diags.append(error(m.pos, f"{name}::{mname} is marked override but overrides nothing"))

    # top-level functions and consts
    for d in program.decls:
        if isinstance(d, A.FunctionD) and d.name not in u.callables:
            try:
                params, result = sig_types(u, d.sig)
            except TypeErrorAt as exc:
                diags.append(error(exc.pos or d.pos, str(exc)))
                continue
            u.callables[d.name] = Callable(
                d.name, "function", None, params, result, decl=d, flags=d.flags, pos=d.pos,
                requires=[(level_of(lv), e) for lv, e in d.sig.requires],
                ensures=[(level_of(lv), e) for lv, e in d.sig.ensures], body=d.body,
            )
        elif isinstance(d, A.ConstD):
            try:
                ty = resolve_type(u, d.type) if d.type is not None else None
            except TypeErrorAt as exc:
                diags.append(error(exc.pos or d.pos, str(exc)))
                continue
            u.callables[d.name] = Callable(d.name, "const", None, [], ty, decl=d, pos=d.pos, body=d.expr)
    return u, diags


def sig_types(u: Universe, sig: A.Signature) -> tuple[list[tuple[str, TypeSig]], TypeSig | None]:
    names = [p.name for p in sig.params]
    if len(set(names)) != len(names):
        raise TypeErrorAt(sig.params[0].pos, "duplicate parameter name")
    params = [(p.name, resolve_type(u, p.type)) for p in sig.params]
    result = resolve_type(u, sig.result) if sig.result is not None else None
    return params, result


def add_member(u: Universe, info: NominalInfo, m: A.Member) -> None:
    name = info.name
    if isinstance(m, A.FieldM):
        info.own_fields.append((m.name, resolve_type(u, m.type)))
    elif isinstance(m, A.InvariantM):
        k = len(info.invariants)
        key = f"{name}$inv{k}"
        info.invariants.append(CheckInfo("invariant", level_of(m.level), name, k, m.pos, key, m.expr))
        u.callables[key] = Callable(key, "invariant", name, [], BOOL, decl=m, pos=m.pos, body=m.expr)
    elif isinstance(m, A.ValidateM):
        k = len(info.validates)
        key = f"{name}$val{k}"
        info.validates.append(CheckInfo("validate", level_of(m.level), name, k, m.pos, key, m.expr))
        u.callables[key] = Callable(key, "validate", name, [], BOOL, decl=m, pos=m.pos, body=m.expr)
    elif isinstance(m, A.ConstM):
        key = f"{name}::{m.name}"
        ty = resolve_type(u, m.type) if m.type is not None else None
        c = Callable(key, "const", name, [], ty, decl=m, pos=m.pos, body=m.expr)
        info.consts[m.name] = c
        u.callables[key] = c
    elif isinstance(m, A.MethodM):
        if "ref" in m.flags and info.is_concept:
            raise TypeErrorAt(m.pos, "ref methods must be declared on entities")
        params, result = sig_types(u, m.sig)
        key = f"{name}::{m.name}"
        c = Callable(
            key, "method", name, [("this", NominalT(name))] + params, result, decl=m, flags=m.flags, pos=m.pos,
            requires=[(level_of(lv), e) for lv, e in m.sig.requires],
            ensures=[(level_of(lv), e) for lv, e in m.sig.ensures],
            body=m.body, abstract=m.body is None,
        )
        if c.abstract and result is None:
            raise TypeErrorAt(m.pos, "abstract methods need a declared result type")
        info.methods[m.name] = c
        u.callables[key] = c
    elif isinstance(m, A.FunctionM):
        params, result = sig_types(u, m.sig)
        if result is None:
            raise TypeErrorAt(m.pos, "functions need a declared result type")
        key = f"{name}::{m.name}"
        c = Callable(
            key, "static", name, params, result, decl=m, flags=m.flags, pos=m.pos,
            requires=[(level_of(lv), e) for lv, e in m.sig.requires],
            ensures=[(level_of(lv), e) for lv, e in m.sig.ensures], body=m.body,
        )
        info.statics[m.name] = c
        u.callables[key] = c
    else:
        raise TypeErrorAt(m.pos, f"unsupported member {type(m).__name__}")


def regex_of(u: Universe, t: TypeSig) -> str | None:
    """Validator regex governing a string type, if any."""
    if isinstance(t, TypedeclT):
        return regex_of(u, t.base)
    if isinstance(t, StringOfT):
        return u.typedecls[t.validator].regex
    return None
