"""Core IR: a loop-free, first-order, let-bound expression language.

Nodes are immutable. ``path`` is the pre-order location of a node inside its
function (assigned by :func:`number_paths`) and is ignored by equality, so two
programs that differ only in layout bookkeeping compare equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Any, Iterator

from lxlang.typesys.typesig import BOOL, NominalT, TypedeclT, TypeSig

ARITH_OPS = ("+", "-", "*", "/", "%", "neg")
COMPARE_OPS = ("<", "<=", ">", ">=")
CONVERSION_OPS = ("toNat", "toInt", "toBigNat", "toBigInt")
OTHER_OPS = ("not", "strlen", "concat")
PRIM_OPS = ARITH_OPS + COMPARE_OPS + CONVERSION_OPS + OTHER_OPS


def _path():
    return field(default="", compare=False, repr=False, kw_only=True)


class Node:
    """Base class; subclasses list child fields in ``KIDS`` (``*`` marks a tuple of nodes)."""

    KIDS: tuple[str, ...] = ()
    path: str

    def children(self) -> tuple[Node, ...]:
        out: list[Node] = []
        for k in self.KIDS:
            if k.endswith("*"):
                out.extend(getattr(self, k[:-1]))
            else:
                out.append(getattr(self, k))
        return tuple(out)

    def rebuild(self, kids: list[Node] | tuple[Node, ...], **extra) -> Node:
        kids = list(kids)
        upd: dict[str, Any] = {}
        for k in self.KIDS:
            if k.endswith("*"):
                n = len(getattr(self, k[:-1]))
                upd[k[:-1]] = tuple(kids[:n])
                kids = kids[n:]
            else:
                upd[k] = kids.pop(0)
        upd.update(extra)
        return replace(self, **upd)


@dataclass(frozen=True)
class Const(Node):
    value: Any
    ty: TypeSig
    path: str = _path()


@dataclass(frozen=True)
class Var(Node):
    name: str
    ty: TypeSig
    path: str = _path()


@dataclass(frozen=True)
class Let(Node):
    name: str
    bound: Node
    body: Node
    path: str = _path()
    KIDS = ("bound", "body")

    @property
    def ty(self) -> TypeSig:
        return self.body.ty


@dataclass(frozen=True)
class Ite(Node):
    cond: Node
    then: Node
    else_: Node
    path: str = _path()
    KIDS = ("cond", "then", "else_")

    @property
    def ty(self) -> TypeSig:
        return self.then.ty


@dataclass(frozen=True)
class Call(Node):
    fn: str
    args: tuple[Node, ...]
    ty: TypeSig
    path: str = _path()
    KIDS = ("args*",)


@dataclass(frozen=True)
class FunctorApp(Node):
    """Collection functor ``name`` specialized by top-level function ``spec``."""

    name: str
    spec: str | None
    captures: tuple[Node, ...]
    args: tuple[Node, ...]
    ty: TypeSig
    path: str = _path()
    KIDS = ("captures*", "args*")


@dataclass(frozen=True)
class TupleNew(Node):
    items: tuple[Node, ...]
    ty: TypeSig
    path: str = _path()
    KIDS = ("items*",)


@dataclass(frozen=True)
class RecordNew(Node):
    names: tuple[str, ...]  # evaluation (written) order
    args: tuple[Node, ...]
    ty: TypeSig
    path: str = _path()
    KIDS = ("args*",)


@dataclass(frozen=True)
class Check:
    """One invariant applied at construction: level, predicate function, its field parameters."""

    level: str
    fn: str
    params: tuple[str, ...]


@dataclass(frozen=True)
class Construct(Node):
    entity: NominalT
    names: tuple[str, ...]  # declaration order
    args: tuple[Node, ...]
    checks: tuple[Check, ...]
    path: str = _path()
    KIDS = ("args*",)

    @property
    def ty(self) -> TypeSig:
        return self.entity


@dataclass(frozen=True)
class ListNew(Node):
    items: tuple[Node, ...]
    ty: TypeSig
    path: str = _path()
    KIDS = ("items*",)


@dataclass(frozen=True)
class MapNew(Node):
    args: tuple[Node, ...]  # k0, v0, k1, v1, ...
    ty: TypeSig
    path: str = _path()
    KIDS = ("args*",)


@dataclass(frozen=True)
class Access(Node):
    kind: str  # index | field
    expr: Node
    key: int | str
    ty: TypeSig
    path: str = _path()
    KIDS = ("expr",)


@dataclass(frozen=True)
class IsTest(Node):
    """Does the value's runtime shape belong to one of ``atoms``?"""

    expr: Node
    atoms: tuple[TypeSig, ...]
    path: str = _path()
    KIDS = ("expr",)

    @property
    def ty(self) -> TypeSig:
        return BOOL


@dataclass(frozen=True)
class AsCast(Node):
    """Change the static type; ``safe`` casts are statically known to succeed."""

    expr: Node
    target: TypeSig
    safe: bool
    path: str = _path()
    KIDS = ("expr",)

    @property
    def ty(self) -> TypeSig:
        return self.target


@dataclass(frozen=True)
class Inject(Node):
    td: TypedeclT
    expr: Node
    checks: tuple[Check, ...]
    path: str = _path()
    KIDS = ("expr",)

    @property
    def ty(self) -> TypeSig:
        return self.td


@dataclass(frozen=True)
class Extract(Node):
    expr: Node
    ty: TypeSig
    path: str = _path()
    KIDS = ("expr",)


@dataclass(frozen=True)
class Equal(Node):
    left: Node
    right: Node
    neg: bool
    path: str = _path()
    KIDS = ("left", "right")

    @property
    def ty(self) -> TypeSig:
        return BOOL


@dataclass(frozen=True)
class PrimOp(Node):
    op: str
    args: tuple[Node, ...]
    ty: TypeSig
    path: str = _path()
    KIDS = ("args*",)


@dataclass(frozen=True)
class Assert(Node):
    """Evaluate ``cond`` (if ``level`` is enabled); fail with ``code`` unless it holds, else ``body``."""

    level: str
    cond: Node
    code: str
    body: Node
    path: str = _path()
    KIDS = ("cond", "body")

    @property
    def ty(self) -> TypeSig:
        return self.body.ty


@dataclass(frozen=True)
class Fail(Node):
    code: str
    ty: TypeSig
    path: str = _path()


NODE_TYPES = (
    Const, Var, Let, Ite, Call, FunctorApp, TupleNew, RecordNew, Construct, ListNew, MapNew,
    Access, IsTest, AsCast, Inject, Extract, Equal, PrimOp, Assert, Fail,
)


@dataclass(frozen=True)
class IRFunction:
    name: str
    kind: str  # function | method | static | const | lambda | cont | invariant | validate | tdinvariant
    params: tuple[tuple[str, TypeSig], ...]
    result: TypeSig
    requires: tuple[tuple[str, Node], ...]
    ensures: tuple[tuple[str, Node], ...]
    body: Node
    recursive: bool = False
    owner: str | None = None  # for lambdas/continuations: the function whose sites they serve

    def roots(self) -> Iterator[tuple[str, Node]]:
        for k, (_, e) in enumerate(self.requires):
            yield f"r{k}", e
        for k, (_, e) in enumerate(self.ensures):
            yield f"e{k}", e
        yield "b", self.body


@dataclass(frozen=True)
class EntityEntry:
    name: str
    fields: tuple[tuple[str, TypeSig], ...]
    provides: tuple[str, ...]  # transitive closure, sorted
    invariants: tuple[Check, ...]
    validates: tuple[Check, ...]


@dataclass(frozen=True)
class ConceptEntry:
    name: str
    fields: tuple[tuple[str, TypeSig], ...]
    providers: tuple[str, ...]


@dataclass(frozen=True)
class TypedeclEntry:
    name: str
    base: TypeSig | None
    regex: str | None
    invariants: tuple[Check, ...]


@dataclass(frozen=True)
class TypeTable:
    entities: tuple[EntityEntry, ...] = ()
    concepts: tuple[ConceptEntry, ...] = ()
    typedecls: tuple[TypedeclEntry, ...] = ()

    def entity(self, name: str) -> EntityEntry | None:
        for e in self.entities:
            if e.name == name:
                return e
        return None

    def concept(self, name: str) -> ConceptEntry | None:
        for c in self.concepts:
            if c.name == name:
                return c
        return None

    def typedecl(self, name: str) -> TypedeclEntry | None:
        for t in self.typedecls:
            if t.name == name:
                return t
        return None

    def field_types(self, t: NominalT) -> tuple[tuple[str, TypeSig], ...]:
        if t.name == "Ok":
            return (("value", t.args[0]),)
        if t.name == "Err":
            return (("error", t.args[0]),)
        e = self.entity(t.name)
        if e is not None:
            return e.fields
        c = self.concept(t.name)
        return c.fields if c is not None else ()

    def atoms(self, t: TypeSig) -> tuple[TypeSig, ...]:
        from lxlang.typesys.typesig import members

        out: set[TypeSig] = set()
        for m in members(t):
            c = self.concept(m.name) if isinstance(m, NominalT) else None
            if c is not None:
                out.update(NominalT(p) for p in c.providers)
            else:
                out.add(m)
        return tuple(sorted(out, key=str))


@dataclass(frozen=True)
class IRProgram:
    types: TypeTable
    functions: tuple[IRFunction, ...]  # sorted by name
    entries: tuple[str, ...]
    universe: Any = field(default=None, compare=False, repr=False)

    def function(self, name: str) -> IRFunction:
        return self.index()[name]

    def index(self) -> dict[str, IRFunction]:
        idx = self.__dict__.get("_idx")
        if idx is None:
            idx = {f.name: f for f in self.functions}
            object.__setattr__(self, "_idx", idx)
        return idx

    def has(self, name: str) -> bool:
        return name in self.index()


def walk(node: Node) -> Iterator[Node]:
    """Pre-order traversal."""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(n.children()))


def number_paths(node: Node, prefix: str) -> Node:
    """Assign pre-order paths: the root gets ``prefix`` and child i of path p gets ``p.i``."""
    kids = [number_paths(c, f"{prefix}.{i}") for i, c in enumerate(node.children())]
    if kids:
        return node.rebuild(kids, path=prefix)
    return replace(node, path=prefix)


def number_function(fn: IRFunction) -> IRFunction:
    return replace(
        fn,
        requires=tuple((lv, number_paths(e, f"r{k}")) for k, (lv, e) in enumerate(fn.requires)),
        ensures=tuple((lv, number_paths(e, f"e{k}")) for k, (lv, e) in enumerate(fn.ensures)),
        body=number_paths(fn.body, "b"),
    )


def size(node: Node) -> int:
    return sum(1 for _ in walk(node))


def free_vars(node: Node) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Let):
        return free_vars(node.bound) | (free_vars(node.body) - {node.name})
    out: set[str] = set()
    for c in node.children():
        out |= free_vars(c)
    return out


def node_fields(node: Node) -> list[str]:
    return [f.name for f in fields(node) if f.name != "path"]
