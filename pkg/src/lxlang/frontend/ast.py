"""Surface syntax tree.

Positions and checker annotations (``ty``, ``res``) are excluded from equality so
that two parses of equivalent text compare equal regardless of layout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from lxlang.diagnostics import SourcePos

LEVELS = ("spec", "debug", "test", "release", "safety")


def _pos():
    return field(default=None, compare=False, repr=False, kw_only=True)


def _ann():
    return field(default=None, compare=False, repr=False, kw_only=True)


# ---------------------------------------------------------------- type syntax


@dataclass
class TypeExpr:
    pos: SourcePos | None = _pos()


@dataclass
class TName(TypeExpr):
    name: str
    args: list[TypeExpr] = field(default_factory=list)


@dataclass
class TTuple(TypeExpr):
    items: list[TypeExpr]


@dataclass
class TRecord(TypeExpr):
    fields: list[tuple[str, TypeExpr]]


@dataclass
class TUnion(TypeExpr):
    items: list[TypeExpr]


# ---------------------------------------------------------------- flow ops


@dataclass
class FlowOp:
    """``!``? followed by a special (none/some/ok/err/result), ``<T>`` or ``[lit]``."""

    kind: str  # none | some | ok | err | result | type | eq
    neg: bool = False
    type: TypeExpr | None = None
    lit: Expr | None = None
    pos: SourcePos | None = _pos()


# ---------------------------------------------------------------- expressions


@dataclass
class Expr:
    pos: SourcePos | None = _pos()
    ty: Any = _ann()
    res: Any = _ann()


@dataclass
class Lit(Expr):
    # kind: none | bool | Nat | Int | BigNat | BigInt | Float | Decimal | Rational | String | untyped
    kind: str
    value: Any


@dataclass
class TypedLit(Expr):
    """``"40502"Zipcode`` or ``10_Celsius``."""

    text: str
    type_name: str
    is_string: bool


@dataclass
class Name(Expr):
    name: str


@dataclass
class Binder(Expr):
    """``$`` (name ""), ``$f`` or ``$return``."""

    name: str


@dataclass
class This(Expr):
    pass


@dataclass
class Elided(Expr):
    """``...`` placeholder appearing in abbreviated listings."""


@dataclass
class TupleE(Expr):
    items: list[Expr]


@dataclass
class RecordE(Expr):
    fields: list[tuple[str, Expr]]


@dataclass
class ConstructE(Expr):
    """``T{...}``: entity, typedecl, ``List<T>{...}``, ``Ok<T>{...}``."""

    type: TypeExpr
    args: list[tuple[str | None, Expr]]


@dataclass
class MapE(Expr):
    type: TypeExpr
    entries: list[tuple[Expr, Expr]]


@dataclass
class BulkE(Expr):
    target: Expr
    updates: list[tuple[str, Expr]]


@dataclass
class Access(Expr):
    target: Expr
    name: str


@dataclass
class IndexE(Expr):
    target: Expr
    index: int


@dataclass
class Unary(Expr):
    op: str
    operand: Expr


@dataclass
class Binary(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass
class CallE(Expr):
    name: str
    targs: list[TypeExpr]
    args: list[Expr]
    recursive: bool = False


@dataclass
class StaticCall(Expr):
    owner: TypeExpr
    name: str
    targs: list[TypeExpr]
    args: list[Expr] | None  # None for a constant reference ``T::c``
    recursive: bool = False


@dataclass
class MethodCall(Expr):
    receiver: Expr
    name: str
    targs: list[TypeExpr]
    args: list[Expr]
    recursive: bool = False
    ref: bool = False


@dataclass
class Lambda(Expr):
    kind: str  # pred | fn
    params: list[tuple[str, TypeExpr | None]]
    body: Expr


@dataclass
class FlowTest(Expr):
    target: Expr
    op: FlowOp


@dataclass
class FlowCast(Expr):
    target: Expr
    op: FlowOp


@dataclass
class FlowReturn(Expr):
    """``e ?? F`` (kind "??") or ``e @@ F`` (kind "@@")."""

    target: Expr
    op: FlowOp
    kind: str


@dataclass
class IfE(Expr):
    cond: Expr
    then: Expr
    else_: Expr


# Internal forms produced by desugaring; never produced by the parser.


@dataclass
class LetE(Expr):
    name: str
    bound: Expr
    body: Expr


@dataclass
class LamRef(Expr):
    """A lifted lambda: the generated function plus its captured arguments."""

    fn: str
    captures: list[Expr]
    kind: str = "fn"


@dataclass
class IsE(Expr):
    """Runtime shape test against the atoms of ``target`` (a TypeSig)."""

    expr: Expr
    target: Any


@dataclass
class CastE(Expr):
    expr: Expr
    target: Any
    safe: bool


@dataclass
class FailE(Expr):
    code: str


# ---------------------------------------------------------------- statements


@dataclass
class Stmt:
    pos: SourcePos | None = _pos()


@dataclass
class LetS(Stmt):
    name: str
    type: TypeExpr | None
    expr: Expr
    tyv: Any = _ann()


@dataclass
class VarS(Stmt):
    name: str
    type: TypeExpr | None
    expr: Expr | None
    tyv: Any = _ann()


@dataclass
class AssignS(Stmt):
    name: str
    expr: Expr


@dataclass
class IfS(Stmt):
    # each branch: (flow op or None, condition, block)
    branches: list[tuple[FlowOp | None, Expr, list[Stmt]]]
    else_: list[Stmt] | None
    joins: Any = _ann()


@dataclass
class Pattern:
    kind: str  # type | lit | wild
    type: TypeExpr | None = None
    lit: Expr | None = None
    pos: SourcePos | None = _pos()


@dataclass
class MatchS(Stmt):
    subject: Expr
    arms: list[tuple[Pattern, list[Stmt]]]


@dataclass
class ReturnS(Stmt):
    expr: Expr | None


@dataclass
class AssertS(Stmt):
    level: str | None
    expr: Expr


@dataclass
class NarrowS(Stmt):
    """Statement forms ``x@F;`` (kind "@") and ``x@@F;`` (kind "@@")."""

    target: Expr
    op: FlowOp
    kind: str


@dataclass
class ExprS(Stmt):
    expr: Expr


@dataclass
class BlockS(Stmt):
    body: list[Stmt]


@dataclass
class DeferS(Stmt):
    pass


@dataclass
class ElidedS(Stmt):
    pass


@dataclass
class RebindS(Stmt):
    """Internal: rebinding of an existing variable to a narrowed value."""

    name: str
    expr: Expr
    tyv: Any = _ann()


# ---------------------------------------------------------------- declarations


@dataclass
class Param:
    name: str
    type: TypeExpr
    pos: SourcePos | None = _pos()


@dataclass
class Example:
    args: list[Expr]
    result: Expr
    pos: SourcePos | None = _pos()


@dataclass
class Signature:
    params: list[Param]
    result: TypeExpr | None
    requires: list[tuple[str | None, Expr]] = field(default_factory=list)
    ensures: list[tuple[str | None, Expr]] = field(default_factory=list)
    examples: list[Example] = field(default_factory=list)


@dataclass
class Member:
    pos: SourcePos | None = _pos()


@dataclass
class FieldM(Member):
    name: str
    type: TypeExpr
    keyword: bool = True


@dataclass
class ConstM(Member):
    name: str
    type: TypeExpr | None
    expr: Expr


@dataclass
class MethodM(Member):
    name: str
    sig: Signature
    body: list[Stmt] | None  # None for abstract methods
    flags: frozenset[str] = frozenset()  # abstract | override | recursive | ref


@dataclass
class FunctionM(Member):
    name: str
    sig: Signature
    body: list[Stmt]
    flags: frozenset[str] = frozenset()


@dataclass
class InvariantM(Member):
    level: str | None
    expr: Expr


@dataclass
class ValidateM(Member):
    level: str | None
    expr: Expr


@dataclass
class Decl:
    pos: SourcePos | None = _pos()


@dataclass
class TypedeclD(Decl):
    name: str
    regex: str | None
    base: TypeExpr | None
    members: list[Member] = field(default_factory=list)


@dataclass
class ConceptD(Decl):
    name: str
    provides: list[str]
    members: list[Member]


@dataclass
class EntityD(Decl):
    name: str
    provides: list[str]
    members: list[Member]


@dataclass
class CaseD:
    name: str
    members: list[Member]
    pos: SourcePos | None = _pos()


@dataclass
class DatatypeD(Decl):
    name: str
    provides: list[str]
    using: list[Member]
    cases: list[CaseD]
    extra: list[Member]


@dataclass
class FunctionD(Decl):
    name: str
    sig: Signature
    body: list[Stmt]
    flags: frozenset[str] = frozenset()


@dataclass
class ConstD(Decl):
    name: str
    type: TypeExpr | None
    expr: Expr


@dataclass
class Program:
    decls: list[Decl]
    file: str = field(default="<input>", compare=False)

    def kinds(self) -> list[str]:
        return [d.__class__.__name__ for d in self.decls]
