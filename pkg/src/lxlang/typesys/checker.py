"""Type checking, lambda restrictions and recursion annotations.

Checking annotates the surface tree in place:

* every expression gets ``ty`` (its :class:`TypeSig`) and, where needed, ``res``
  (how a name or call resolved);
* ``$`` binders get a unique per-callable id in ``res`` so later passes never
  have to redo scoping;
* constructor arguments are normalized to named, field-ordered form.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import networkx as nx

from lxlang.diagnostics import CompileError, Diagnostic, SourcePos, error, warning
from lxlang.frontend import ast as A
from lxlang.regex import full_match
from lxlang.typesys.typesig import (
    BOOL,
    INTEGRAL,
    NAT,
    NEVER,
    NONE,
    NUMERIC,
    STRING,
    UNSIGNED,
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
    is_prim,
    members,
    numeric_base,
    union,
)
from lxlang.typesys.universe import (
    RESULT_ENTITIES,
    Callable,
    TypeErrorAt,
    Universe,
    build_universe_with_diagnostics,
    regex_of,
    resolve_type,
)

LIT_PRIMS = {"Int", "Nat", "BigInt", "BigNat", "Float", "Decimal", "Rational", "String"}
CONVERSIONS = {"toInt": "Int", "toNat": "Nat", "toBigInt": "BigInt", "toBigNat": "BigNat"}
LIST_FUNCTORS = (
    "size", "get", "slice", "concat", "map", "filter", "join", "has", "find", "count", "sum",
    "reduce", "allOf", "unique", "sumOf", "maxArg", "max", "pushBack", "contains", "zip",
)
MAP_FUNCTORS = ("size", "get", "has", "map", "filter")


@dataclass(frozen=True)
class Var:
    ty: TypeSig
    mutable: bool
    assigned: bool = True


@dataclass
class Ctx:
    callable: Callable
    result: TypeSig | None
    returns: list[TypeSig] = field(default_factory=list)
    binders: list[tuple[str, str, TypeSig]] = field(default_factory=list)  # (surface name, id, type)
    counter: int = 0
    edges: list[tuple[str, A.Expr]] = field(default_factory=list)
    in_lambda: int = 0

    def fresh_binder(self, name: str, ty: TypeSig) -> str:
        self.counter += 1
        bid = f"${name or 'b'}{self.counter}"
        return bid


class Fail(Exception):
    """Abort checking the current statement (diagnostic already recorded)."""


@dataclass
class CheckedProgram:
    program: A.Program
    universe: Universe
    diagnostics: list[Diagnostic]
    call_edges: dict[str, list[tuple[str, A.Expr]]] = field(default_factory=dict)

    @property
    def errors(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.is_error]


def is_untyped(e: A.Expr) -> bool:
    if isinstance(e, A.Lit) and e.kind == "untyped":
        return True
    return isinstance(e, A.Unary) and e.op == "-" and is_untyped(e.operand)


def numeric_expected(t: TypeSig | None) -> TypeSig | None:
    if t is None:
        return None
    nums = [m for m in members(t) if isinstance(m, Prim) and m.name in NUMERIC]
    return nums[0] if len(nums) == 1 else None


def contains_defer(stmts) -> bool:
    return any(isinstance(s, A.DeferS) for s in stmts or [])


class Checker:
    def __init__(self, universe: Universe):
        self.u = universe
        self.diags: list[Diagnostic] = []
        self.edges: dict[str, list[tuple[str, A.Expr]]] = {}

    # ------------------------------------------------------------ helpers

    def err(self, pos: SourcePos | None, msg: str) -> None:
        self.diags.append(error(pos, msg))

    def fail(self, pos: SourcePos | None, msg: str):
        self.err(pos, msg)
        raise Fail()

    def resolve(self, t: A.TypeExpr) -> TypeSig:
        try:
            return resolve_type(self.u, t)
        except TypeErrorAt as exc:
            self.fail(exc.pos or t.pos, str(exc))

    def expect_type(self, e: A.Expr, got: TypeSig, want: TypeSig, what: str = "expression") -> None:
        if not self.u.subtype(got, want):
            self.fail(e.pos, f"{what} is {got}, expected {want}")

    # ------------------------------------------------------------ program

    def run(self, program: A.Program) -> None:
        u = self.u
        # infer result types of methods declared without one
        pending = [c for c in u.callables.values() if c.kind == "method" and c.result is None and not c.abstract]
        for c in sorted(pending, key=lambda c: c.key):
            self.check_callable(c, infer=True)
        for key in sorted(u.callables):
            c = u.callables[key]
            if c in pending:
                continue
            self.check_callable(c)
        self.check_recursion()

    def callable_env(self, c: Callable) -> dict[str, Var]:
        env: dict[str, Var] = {}
        if c.kind in ("invariant", "validate"):
            owner = self.u.nominals[c.owner]
            fields = self.u.fields(NominalT(c.owner)) if not owner.is_concept else self.concept_fields(c.owner)
            c.params = list(fields)
        for n, t in c.params:
            env[n] = Var(t, False)
        return env

    def concept_fields(self, name: str) -> list[tuple[str, TypeSig]]:
        return self.u.fields(NominalT(name))

    def check_callable(self, c: Callable, infer: bool = False) -> None:
        if c.abstract:
            return
        env = self.callable_env(c)
        ctx = Ctx(c, None if infer else c.result)
        self.edges.setdefault(c.key, [])
        try:
            if c.kind in ("invariant", "validate", "tdinvariant"):
                if c.kind == "tdinvariant":
                    ctx.binders.append(("value", "$value", c.params[0][1]))
                t = self.check_expr(c.body, env, ctx, BOOL)
                self.expect_type(c.body, t, BOOL, f"{c.kind} condition")
                return
            if c.kind == "const":
                t = self.check_expr(c.body, env, ctx, c.result)
                if c.result is None:
                    c.result = t
                else:
                    self.expect_type(c.body, t, c.result, "constant")
                return
            for _, e in c.requires:
                self.expect_type(e, self.check_expr(e, env, ctx, BOOL), BOOL, "requires clause")
        except Fail:
            pass
        finally:
            self.edges[c.key].extend(ctx.edges)
            ctx.edges.clear()
        body = c.body or []
        errors_before = sum(1 for d in self.diags if d.is_error)
        try:
            falls = self.check_block(body, dict(env), ctx)
            # a statement that failed to check is not evidence of a missing return
            if sum(1 for d in self.diags if d.is_error) > errors_before:
                falls = False
            if falls and not contains_defer(body):
                if infer or c.result is None:
                    ctx.returns.append(NONE)
                elif c.result != NONE:
                    self.err(c.pos, f"{c.key} may finish without returning a value")
        except Fail:
            pass
        if infer:
            c.result = union(*ctx.returns) if ctx.returns else NONE
        try:
            for _, e in c.ensures:
                ctx.binders.append(("return", "$return", c.result))
                self.expect_type(e, self.check_expr(e, env, ctx, BOOL), BOOL, "ensures clause")
                ctx.binders.pop()
        except Fail:
            pass
        decl = c.decl
        sig = getattr(decl, "sig", None)
        if sig is not None:
            for ex in sig.examples:
                self.check_example(c, ex, ctx)
        self.edges[c.key].extend(ctx.edges)

    def check_example(self, c: Callable, ex: A.Example, ctx: Ctx) -> None:
        params = [p for p in c.params if p[0] != "this"]
        if len(ex.args) != len(params):
            self.err(ex.pos, f"example has {len(ex.args)} arguments, {c.key} takes {len(params)}")
            return
        try:
            for a, (_, pt) in zip(ex.args, params):
                self.check_literal_value(a, pt)
                self.expect_type(a, self.check_expr(a, {}, ctx, pt), pt, "example argument")
            self.check_literal_value(ex.result, c.result)
            self.expect_type(ex.result, self.check_expr(ex.result, {}, ctx, c.result), c.result, "example result")
        except Fail:
            pass

    def check_literal_value(self, e: A.Expr, t: TypeSig) -> None:
        ok = (A.Lit, A.TypedLit, A.TupleE, A.RecordE, A.ConstructE, A.MapE, A.Unary)
        if not isinstance(e, ok):
            self.fail(e.pos, "examples must be literal values")
        sub: list[A.Expr] = []
        if isinstance(e, A.TupleE):
            sub = e.items
        elif isinstance(e, A.RecordE):
            sub = [v for _, v in e.fields]
        elif isinstance(e, A.ConstructE):
            sub = [v for _, v in e.args]
        elif isinstance(e, A.MapE):
            sub = [x for kv in e.entries for x in kv]
        elif isinstance(e, A.Unary) and not isinstance(e.operand, A.Lit):
            self.fail(e.pos, "examples must be literal values")
        for s in sub:
            self.check_literal_value(s, t)

    # ------------------------------------------------------------ statements

    def check_block(self, stmts: list[A.Stmt], env: dict[str, Var], ctx: Ctx) -> bool:
        """Check a block; return True if control may fall off its end."""
        falls = True
        for s in stmts:
            if not falls:
                self.err(s.pos, "unreachable statement")
                break
            try:
                falls = self.check_stmt(s, env, ctx)
            except Fail:
                falls = True
        return falls

    def declare(self, env: dict[str, Var], name: str, var: Var, pos) -> None:
        if name in env:
            self.fail(pos, f"{name} is already declared in this scope")
        if name == "this" or name.startswith("$"):
            self.fail(pos, f"{name} cannot be declared")
        env[name] = var

    def check_rhs(self, e: A.Expr, env, ctx: Ctx, expected: TypeSig | None, where: str) -> TypeSig:
        if isinstance(e, A.Lambda):
            self.fail(e.pos, f"lambda {where}")
        if isinstance(e, A.FlowReturn):
            return self.check_flow_return(e, env, ctx)
        if isinstance(e, A.MethodCall) and e.ref:
            return self.check_method_call(e, env, ctx, expected, ref_ok=True)
        return self.check_expr(e, env, ctx, expected)

    def check_stmt(self, s: A.Stmt, env: dict[str, Var], ctx: Ctx) -> bool:
        if isinstance(s, A.LetS):
            want = self.resolve(s.type) if s.type is not None else None
            t = self.check_rhs(s.expr, env, ctx, want, "stored in local")
            if want is not None:
                self.expect_type(s.expr, t, want, f"initializer of {s.name}")
                t = want
            if isinstance(t, NeverT):
                self.fail(s.pos, f"{s.name} has no possible value")
            s.tyv = t
            self.declare(env, s.name, Var(t, False), s.pos)
            return True
        if isinstance(s, A.VarS):
            want = self.resolve(s.type) if s.type is not None else None
            if s.expr is None:
                if want is None:
                    self.fail(s.pos, f"var {s.name} needs a type or an initializer")
                s.tyv = want
                self.declare(env, s.name, Var(want, True, assigned=False), s.pos)
                return True
            t = self.check_rhs(s.expr, env, ctx, want, "stored in local")
            if want is not None:
                self.expect_type(s.expr, t, want, f"initializer of {s.name}")
                t = want
            s.tyv = t
            self.declare(env, s.name, Var(t, True), s.pos)
            return True
        if isinstance(s, A.AssignS):
            v = env.get(s.name)
            if v is None:
                self.fail(s.pos, f"unknown variable {s.name}")
            if not v.mutable:
                self.fail(s.pos, f"{s.name} is let-bound and cannot be reassigned")
            t = self.check_rhs(s.expr, env, ctx, v.ty, "stored in local")
            self.expect_type(s.expr, t, v.ty, f"assignment to {s.name}")
            env[s.name] = replace(v, assigned=True)
            return True
        if isinstance(s, A.ExprS):
            e = s.expr
            if isinstance(e, A.Lambda):
                self.fail(e.pos, "lambda not allowed here")
            if isinstance(e, A.BulkE) and isinstance(e.target, A.This):
                if "ref" not in ctx.callable.flags:
                    self.fail(e.pos, "bulk update of `this` is only meaningful inside a ref method")
                self.check_expr(e, env, ctx, None)
                return True
            self.check_rhs(e, env, ctx, None, "not allowed here")
            return True
        if isinstance(s, A.ReturnS):
            if s.expr is None:
                t = NONE
            else:
                if isinstance(s.expr, A.Lambda):
                    self.fail(s.expr.pos, "lambda returned")
                t = self.check_expr(s.expr, env, ctx, ctx.result)
            if ctx.result is None:
                ctx.returns.append(t)
            else:
                self.expect_type(s.expr or A.Lit("none", None, pos=s.pos), t, ctx.result, "returned value")
            return False
        if isinstance(s, A.AssertS):
            self.expect_type(s.expr, self.check_expr(s.expr, env, ctx, BOOL), BOOL, "assertion")
            return True
        if isinstance(s, A.BlockS):
            inner = dict(env)
            falls = self.check_block(s.body, inner, ctx)
            self.merge_assigned(env, [inner] if falls else [])
            return falls
        if isinstance(s, A.IfS):
            return self.check_if(s, env, ctx)
        if isinstance(s, A.MatchS):
            return self.check_match(s, env, ctx)
        if isinstance(s, A.NarrowS):
            return self.check_narrow(s, env, ctx)
        if isinstance(s, A.DeferS):
            return False
        if isinstance(s, A.ElidedS):
            self.fail(s.pos, "elided code cannot be compiled")
        self.fail(s.pos, f"unsupported statement {type(s).__name__}")

    def merge_assigned(self, env: dict[str, Var], branches: list[dict[str, Var]]) -> None:
        for name, v in list(env.items()):
            if v.assigned or not branches:
                continue
            if all(b[name].assigned for b in branches):
                env[name] = replace(v, assigned=True)

    def check_if(self, s: A.IfS, env: dict[str, Var], ctx: Ctx) -> bool:
        info = []
        exits: list[dict[str, Var]] = []
        any_falls = False
        for flow, cond, body in s.branches:
            benv = dict(env)
            if flow is None:
                self.expect_type(cond, self.check_expr(cond, env, ctx, BOOL), BOOL, "condition")
                falls = self.check_block(body, benv, ctx)
                info.append(None)
            else:
                t = self.check_expr(cond, env, ctx, None)
                yes, no = self.narrow(t, flow, env, ctx)
                bid_yes = ctx.fresh_binder("", yes)
                ctx.binders.append(("", bid_yes, yes))
                try:
                    falls = self.check_block(body, benv, ctx)
                finally:
                    ctx.binders.pop()
                info.append((yes, no, bid_yes))
            if falls:
                any_falls = True
                exits.append(benv)
        if s.else_ is not None:
            benv = dict(env)
            last = info[-1] if len(s.branches) == 1 else None
            if last is not None:
                _, no, _ = last
                bid_no = ctx.fresh_binder("", no)
                ctx.binders.append(("", bid_no, no))
                try:
                    falls = self.check_block(s.else_, benv, ctx)
                finally:
                    ctx.binders.pop()
                info.append(("else", no, bid_no))
            else:
                falls = self.check_block(s.else_, benv, ctx)
            if falls:
                any_falls = True
                exits.append(benv)
        else:
            any_falls = True
            exits.append(dict(env))
        s.flowinfo = info
        self.merge_assigned(env, exits)
        return any_falls

    def check_match(self, s: A.MatchS, env: dict[str, Var], ctx: Ctx) -> bool:
        st = self.check_expr(s.subject, env, ctx, None)
        remaining = st
        info = []
        exits: list[dict[str, Var]] = []
        any_falls = False
        for i, (pat, body) in enumerate(s.arms):
            if isinstance(remaining, NeverT):
                self.fail(pat.pos, "match arm can never be reached")
            if pat.kind == "wild":
                yes = remaining
                remaining = NEVER
            elif pat.kind == "lit":
                lt = self.check_expr(pat.lit, env, ctx, numeric_expected(remaining))
                if not is_key_type(lt) or not self.u.subtype(lt, remaining):
                    self.fail(pat.pos, f"literal pattern of type {lt} cannot match {remaining}")
                yes = lt
            else:
                target = self.resolve(pat.type)
                yes, no = self.u.split(remaining, lambda a, tt=target: self.u.subtype(a, tt))
                if isinstance(yes, NeverT):
                    self.fail(pat.pos, f"pattern {target} can never match {remaining}")
                remaining = no
            bid = ctx.fresh_binder("", yes)
            ctx.binders.append(("", bid, yes))
            benv = dict(env)
            try:
                falls = self.check_block(body, benv, ctx)
            finally:
                ctx.binders.pop()
            info.append((yes, bid))
            if falls:
                any_falls = True
                exits.append(benv)
        if not isinstance(remaining, NeverT):
            self.fail(s.pos, f"match is not exhaustive: {remaining} unhandled")
        s.arminfo = info
        s.subject_ty = st
        self.merge_assigned(env, exits)
        return any_falls

    def check_narrow(self, s: A.NarrowS, env: dict[str, Var], ctx: Ctx) -> bool:
        if not isinstance(s.target, A.Name) or s.target.name not in env:
            self.fail(s.pos, "narrowing statements apply to local variables")
        t = self.check_expr(s.target, env, ctx, None)
        yes, no = self.narrow(t, s.op, env, ctx)
        if s.kind == "@@" and ctx.result is not None and not self.u.subtype(no, ctx.result):
            self.fail(s.pos, f"early return of {no} does not fit result type {ctx.result}")
        if s.kind == "@@" and ctx.result is None:
            ctx.returns.append(no)
        s.info = (yes, no)
        v = env[s.target.name]
        env[s.target.name] = replace(v, ty=yes)
        return True

    def check_flow_return(self, e: A.FlowReturn, env, ctx: Ctx) -> TypeSig:
        t = self.check_expr(e.target, env, ctx, None)
        yes, no = self.narrow(t, e.op, env, ctx)
        if ctx.result is None:
            ctx.returns.append(no)
        elif not self.u.subtype(no, ctx.result):
            self.fail(e.pos, f"early return of {no} does not fit result type {ctx.result}")
        e.res = (yes, no)
        e.ty = yes
        return yes

    def narrow(self, t: TypeSig, op: A.FlowOp, env, ctx: Ctx) -> tuple[TypeSig, TypeSig]:
        lit_t = None
        if op.kind == "eq":
            lit_t = self.check_expr(op.lit, env, ctx, numeric_expected(t))
        try:
            return self.u.flow_narrow(t, op, lit_t, self.resolve)
        except TypeErrorAt as exc:
            self.fail(exc.pos or op.pos, str(exc))

    # ------------------------------------------------------------ expressions

    def check_expr(self, e: A.Expr, env: dict[str, Var], ctx: Ctx, expected: TypeSig | None) -> TypeSig:
        t = self._expr(e, env, ctx, expected)
        e.ty = t
        return t

    def _expr(self, e: A.Expr, env, ctx: Ctx, expected):
        u = self.u
        if isinstance(e, A.Lit):
            if e.kind == "none":
                return NONE
            if e.kind == "bool":
                return BOOL
            if e.kind == "untyped":
                want = numeric_expected(expected)
                if want is None:
                    self.fail(e.pos, f"numeric literal {e.value} needs a type suffix here")
                is_frac = "." in str(e.value)
                if is_frac and want.name in INTEGRAL:
                    self.fail(e.pos, f"fractional literal {e.value} used as {want}")
                if want.name == "Rational":
                    self.fail(e.pos, "rational literals need the form p/qR")
                e.kind = want.name
                e.value = str(e.value) if want.name in ("Float", "Decimal") else int(e.value)
                return want
            return Prim(e.kind)
        if isinstance(e, A.TypedLit):
            td = u.typedecls.get(e.type_name)
            if td is None or td.base is None:
                self.fail(e.pos, f"{e.type_name} is not a typedecl")
            base = td.base
            if e.is_string:
                if not (base == STRING or isinstance(base, StringOfT) or base == Prim("ASCIIString")):
                    self.fail(e.pos, f"{e.type_name} does not wrap a string type")
                rx = regex_of(u, base)
                if rx is not None and not full_match(rx, e.text):
                    self.fail(e.pos, f"literal {e.text!r} does not match validator of {e.type_name}")
            else:
                if numeric_base(base) is None:
                    self.fail(e.pos, f"{e.type_name} does not wrap a numeric type")
                if "." in e.text and numeric_base(base) in INTEGRAL:
                    self.fail(e.pos, f"fractional literal for integral typedecl {e.type_name}")
            return TypedeclT(e.type_name, base)
        if isinstance(e, A.Name):
            v = env.get(e.name)
            if v is not None:
                if not v.assigned:
                    self.fail(e.pos, f"{e.name} may be read before it is assigned")
                e.res = ("local", e.name)
                return v.ty
            c = u.callables.get(e.name)
            if c is not None and c.kind == "const":
                self.const_type(c, e.pos)
                e.res = ("const", c.key)
                ctx.edges.append((c.key, e))
                return c.result
            self.fail(e.pos, f"unknown name {e.name}")
        if isinstance(e, A.Binder):
            for name, bid, bt in reversed(ctx.binders):
                if name == e.name:
                    e.res = bid
                    return bt
            self.fail(e.pos, f"${e.name} is not bound here")
        if isinstance(e, A.This):
            v = env.get("this")
            if v is None:
                self.fail(e.pos, "`this` outside a method")
            e.res = ("local", "this")
            return v.ty
        if isinstance(e, A.Elided):
            self.fail(e.pos, "elided code cannot be compiled")
        if isinstance(e, A.TupleE):
            exp = expected if isinstance(expected, TupleT) and len(expected.items) == len(e.items) else None
            return TupleT(tuple(
                self.check_expr(it, env, ctx, exp.items[i] if exp else None) for i, it in enumerate(e.items)
            ))
        if isinstance(e, A.RecordE):
            names = [n for n, _ in e.fields]
            if len(set(names)) != len(names):
                self.fail(e.pos, "duplicate record field")
            exp = expected if isinstance(expected, RecordT) else None
            return RecordT(tuple(
                (n, self.check_expr(v, env, ctx, exp.field_type(n) if exp else None)) for n, v in e.fields
            ))
        if isinstance(e, A.ConstructE):
            return self.check_construct(e, env, ctx, expected)
        if isinstance(e, A.MapE):
            return self.check_map_lit(e, env, ctx, expected)
        if isinstance(e, A.BulkE):
            return self.check_bulk(e, env, ctx)
        if isinstance(e, A.Access):
            t = self.check_expr(e.target, env, ctx, None)
            if isinstance(t, RecordT):
                ft = t.field_type(e.name)
            elif isinstance(t, NominalT):
                ft = u.field_type(t, e.name)
            else:
                ft = None
            if ft is None:
                self.fail(e.pos, f"{t} has no field {e.name}")
            return ft
        if isinstance(e, A.IndexE):
            t = self.check_expr(e.target, env, ctx, None)
            if not isinstance(t, TupleT) or e.index >= len(t.items):
                self.fail(e.pos, f"{t} has no component {e.index}")
            return t.items[e.index]
        if isinstance(e, A.Unary):
            if e.op == "!":
                self.expect_type(e.operand, self.check_expr(e.operand, env, ctx, BOOL), BOOL, "operand of !")
                return BOOL
            t = self.check_expr(e.operand, env, ctx, numeric_expected(expected))
            nb = numeric_base(t)
            if nb is None:
                self.fail(e.pos, f"unary minus on {t}")
            if nb in UNSIGNED:
                self.fail(e.pos, f"unary minus on unsigned type {t}")
            return t
        if isinstance(e, A.Binary):
            return self.check_binary(e, env, ctx, expected)
        if isinstance(e, A.CallE):
            c = u.callables.get(e.name)
            if c is None or c.kind != "function":
                self.fail(e.pos, f"unknown function {e.name}")
            if e.targs:
                self.fail(e.pos, f"{e.name} takes no type arguments")
            self.check_args(e, e.args, c.params, env, ctx)
            e.res = ("call", c.key)
            ctx.edges.append((c.key, e))
            return self.result_of(c, e.pos)
        if isinstance(e, A.StaticCall):
            return self.check_static_call(e, env, ctx, expected)
        if isinstance(e, A.MethodCall):
            return self.check_method_call(e, env, ctx, expected)
        if isinstance(e, A.Lambda):
            self.fail(e.pos, "lambda passed to a non-functor call" if ctx.in_lambda >= 0 else "lambda not allowed here")
        if isinstance(e, A.FlowTest):
            t = self.check_expr(e.target, env, ctx, None)
            e.res = self.narrow(t, e.op, env, ctx)
            return BOOL
        if isinstance(e, A.FlowCast):
            t = self.check_expr(e.target, env, ctx, None)
            e.res = self.narrow(t, e.op, env, ctx)
            return e.res[0]
        if isinstance(e, A.FlowReturn):
            self.fail(e.pos, f"`{e.kind}` is only allowed as the whole right-hand side of a statement")
        if isinstance(e, A.IfE):
            self.expect_type(e.cond, self.check_expr(e.cond, env, ctx, BOOL), BOOL, "condition")
            a = self.check_expr(e.then, env, ctx, expected)
            b = self.check_expr(e.else_, env, ctx, expected)
            return union(a, b)
        self.fail(e.pos, f"unsupported expression {type(e).__name__}")

    def const_type(self, c: Callable, pos) -> None:
        if c.result is None:
            env: dict[str, Var] = {}
            ctx = Ctx(c, None)
            c.result = self.check_expr(c.body, env, ctx, None)

    def result_of(self, c: Callable, pos) -> TypeSig:
        if c.result is None:
            self.fail(pos, f"result type of {c.key} is not known yet; declare it")
        return c.result

    def check_args(self, call: A.Expr, args: list[A.Expr], params, env, ctx: Ctx) -> None:
        params = [p for p in params if p[0] != "this"]
        if len(args) != len(params):
            self.fail(call.pos, f"expected {len(params)} argument(s), got {len(args)}")
        for a, (pn, pt) in zip(args, params):
            if isinstance(a, A.Lambda):
                self.fail(a.pos, "lambda passed to a non-functor call")
            at = self.check_expr(a, env, ctx, pt)
            if not self.u.subtype(at, pt):
                self.fail(a.pos, f"argument is {at}, expected {pt}")

    # ------------------------------------------------------------ operators

    def check_operands(self, e: A.Binary, env, ctx, expected):
        if is_untyped(e.left) and not is_untyped(e.right):
            rt = self.check_expr(e.right, env, ctx, expected)
            lt = self.check_expr(e.left, env, ctx, rt)
        else:
            lt = self.check_expr(e.left, env, ctx, expected)
            rt = self.check_expr(e.right, env, ctx, lt)
        return lt, rt

    def check_binary(self, e: A.Binary, env, ctx: Ctx, expected):
        op = e.op
        if op in ("&&", "||", "==>"):
            for side in (e.left, e.right):
                self.expect_type(side, self.check_expr(side, env, ctx, BOOL), BOOL, f"operand of {op}")
            return BOOL
        if op in ("==", "!=", "===", "!=="):
            neg = op in ("!=", "!==")
            for a, b in ((e.left, e.right), (e.right, e.left)):
                if isinstance(b, A.Lit) and b.kind == "none" and not (isinstance(a, A.Lit) and a.kind == "none"):
                    t = self.check_expr(a, env, ctx, None)
                    self.check_expr(b, env, ctx, None)
                    if NONE not in members(t) or t == NONE:
                        self.fail(e.pos, f"comparing {t} with none is always {'true' if neg == (NONE not in members(t)) else 'false'}")
                    e.res = ("nonetest", neg, a is e.left)
                    return BOOL
            lt, rt = self.check_operands(e, env, ctx, None)
            for t, side in ((lt, e.left), (rt, e.right)):
                if not is_key_type(t):
                    self.fail(side.pos, f"equality is not defined on {t} (not a key type)")
            if lt != rt:
                self.fail(e.pos, f"cannot compare {lt} with {rt}")
            e.res = ("eq", neg)
            return BOOL
        if op in ("<", "<=", ">", ">="):
            lt, rt = self.check_operands(e, env, ctx, None)
            if lt != rt or numeric_base(lt) is None:
                self.fail(e.pos, f"cannot order {lt} and {rt}")
            if numeric_base(lt) == "Float" and False:
                pass
            return BOOL
        lt, rt = self.check_operands(e, env, ctx, numeric_expected(expected) if not isinstance(expected, TypedeclT) else None)
        if lt != rt:
            self.fail(e.pos, f"arithmetic on mismatched types {lt} and {rt}")
        nb = numeric_base(lt)
        if nb is None:
            self.fail(e.pos, f"arithmetic on non-numeric type {lt}")
        if op == "%" and nb not in INTEGRAL:
            self.fail(e.pos, f"% needs an integral type, not {lt}")
        return lt

    # ------------------------------------------------------------ constructors

    def check_construct(self, e: A.ConstructE, env, ctx: Ctx, expected):
        u = self.u
        tn = e.type
        assert isinstance(tn, A.TName)
        if tn.name == "List":
            if tn.args:
                et = self.resolve(tn.args[0])
            elif isinstance(expected, ListT):
                et = expected.elem
            else:
                et = None
            if any(n is not None for n, _ in e.args):
                self.fail(e.pos, "list literals take positional elements")
            items = [v for _, v in e.args]
            if et is None:
                if not items:
                    self.fail(e.pos, "empty list literal needs List<T>")
                et = self.check_expr(items[0], env, ctx, None)
            for it in items:
                if isinstance(it, A.Lambda):
                    self.fail(it.pos, "lambda not allowed here")
                self.expect_type(it, self.check_expr(it, env, ctx, et), et, "list element")
            e.res = ("list",)
            return ListT(et)
        if tn.name in u.typedecls:
            td = u.typedecls[tn.name]
            if td.base is None:
                self.fail(e.pos, f"{tn.name} is a validator, not a value type")
            if len(e.args) != 1 or e.args[0][0] is not None:
                self.fail(e.pos, f"{tn.name}{{...}} takes exactly one value")
            v = e.args[0][1]
            self.expect_type(v, self.check_expr(v, env, ctx, td.base), td.base, f"value for {tn.name}")
            e.res = ("typedecl", tn.name)
            return TypedeclT(tn.name, td.base)
        if tn.name in RESULT_ENTITIES:
            if tn.args:
                t = self.resolve(tn)
            else:
                cands = [m for m in members(expected) if isinstance(m, NominalT) and m.name == tn.name] if expected else []
                if len(cands) != 1:
                    self.fail(e.pos, f"{tn.name}{{...}} needs a type argument here")
                t = cands[0]
        else:
            t = self.resolve(tn)
        if not isinstance(t, NominalT):
            self.fail(e.pos, f"cannot construct {t}")
        if u.is_concept(t.name):
            self.fail(e.pos, f"concept {t.name} cannot be constructed")
        fields = u.fields(t)
        by_name: dict[str, A.Expr] = {}
        positional = 0
        named_seen = False
        for n, v in e.args:
            if n is None:
                if named_seen:
                    self.fail(v.pos, "positional arguments must precede named ones")
                if positional >= len(fields):
                    self.fail(v.pos, f"too many values for {t}")
                by_name[fields[positional][0]] = v
                positional += 1
            else:
                named_seen = True
                if n in by_name:
                    self.fail(v.pos, f"field {n} given twice")
                if u.field_type(t, n) is None:
                    self.fail(v.pos, f"{t} has no field {n}")
                by_name[n] = v
        missing = [f for f, _ in fields if f not in by_name]
        if missing:
            self.fail(e.pos, f"{t} constructor is missing field(s) {', '.join(missing)}")
        # evaluation stays in written order; fields are matched by name
        ordered_written: list[tuple[str, A.Expr]] = []
        for i, (n, v) in enumerate(e.args):
            name = n if n is not None else fields[i][0]
            ordered_written.append((name, v))
        for name, v in ordered_written:
            ft = u.field_type(t, name)
            if isinstance(v, A.Lambda):
                self.fail(v.pos, "lambda not allowed here")
            self.expect_type(v, self.check_expr(v, env, ctx, ft), ft, f"field {name}")
        e.args = ordered_written
        e.res = ("entity", t)
        return t

    def check_map_lit(self, e: A.MapE, env, ctx, expected):
        tn = e.type
        if tn.args:
            mt = self.resolve(tn)
        elif isinstance(expected, MapT):
            mt = expected
        else:
            if not e.entries:
                self.fail(e.pos, "empty map literal needs Map<K, V>")
            k0 = self.check_expr(e.entries[0][0], env, ctx, None)
            v0 = self.check_expr(e.entries[0][1], env, ctx, None)
            mt = MapT(k0, v0)
        if not is_key_type(mt.key):
            self.fail(e.pos, f"map key type {mt.key} is not a key type")
        for k, v in e.entries:
            self.expect_type(k, self.check_expr(k, env, ctx, mt.key), mt.key, "map key")
            self.expect_type(v, self.check_expr(v, env, ctx, mt.value), mt.value, "map value")
        return mt

    def check_bulk(self, e: A.BulkE, env, ctx: Ctx):
        t = self.check_expr(e.target, env, ctx, None)
        if not isinstance(t, NominalT) or not self.u.is_entity(t.name):
            self.fail(e.pos, f"bulk update needs an entity value, not {t}")
        names = [n for n, _ in e.updates]
        if len(set(names)) != len(names):
            self.fail(e.pos, "field updated twice")
        binders = []
        for n, _ in e.updates:
            ft = self.u.field_type(t, n)
            if ft is None:
                self.fail(e.pos, f"{t} has no field {n}")
        for n, ft in self.u.fields(t):
            bid = ctx.fresh_binder(n, ft)
            binders.append((n, bid, ft))
        ctx.binders.extend(binders)
        try:
            for n, v in e.updates:
                ft = self.u.field_type(t, n)
                if isinstance(v, A.Lambda):
                    self.fail(v.pos, "lambda not allowed here")
                self.expect_type(v, self.check_expr(v, env, ctx, ft), ft, f"field {n}")
        finally:
            del ctx.binders[len(ctx.binders) - len(binders):]
        e.res = tuple((n, bid) for n, bid, _ in binders)
        return t

    # ------------------------------------------------------------ calls

    def check_static_call(self, e: A.StaticCall, env, ctx: Ctx, expected):
        u = self.u
        owner = e.owner
        on = owner.name if isinstance(owner, A.TName) else None
        if on == "String" and e.name == "concat":
            if e.args is None or len(e.args) < 1:
                self.fail(e.pos, "String::concat takes one or more strings")
            for a in e.args:
                self.expect_type(a, self.check_expr(a, env, ctx, STRING), STRING, "String::concat argument")
            e.res = ("builtin", "String::concat")
            return STRING
        if on == "List" and e.name == "zip":
            if len(e.targs) != 2 or e.args is None or len(e.args) != 2:
                self.fail(e.pos, "List::zip<A, B>(l1, l2) takes two type arguments and two lists")
            a, b = (self.resolve(t) for t in e.targs)
            self.expect_type(e.args[0], self.check_expr(e.args[0], env, ctx, ListT(a)), ListT(a), "first list")
            self.expect_type(e.args[1], self.check_expr(e.args[1], env, ctx, ListT(b)), ListT(b), "second list")
            e.res = ("functor", "zip")
            return ListT(TupleT((a, b)))
        if on is None or on not in u.nominals:
            self.fail(e.pos, f"unknown type {on}")
        c = u.lookup_static(on, e.name)
        if c is None:
            self.fail(e.pos, f"{on} has no function or constant {e.name}")
        if c.kind == "const":
            if e.args is not None:
                self.fail(e.pos, f"{c.key} is a constant")
            self.const_type(c, e.pos)
            e.res = ("const", c.key)
            ctx.edges.append((c.key, e))
            return c.result
        if e.args is None:
            self.fail(e.pos, f"{c.key} is a function; call it")
        self.check_args(e, e.args, c.params, env, ctx)
        e.res = ("call", c.key)
        ctx.edges.append((c.key, e))
        return c.result

    def check_lambda(self, lam: A.Expr, ptypes: list[TypeSig], env, ctx: Ctx, want: TypeSig | None, pred: bool):
        if not isinstance(lam, A.Lambda):
            self.fail(lam.pos, "expected a lambda argument")
        if pred and lam.kind != "pred":
            self.fail(lam.pos, "this functor takes a `pred` lambda")
        if not pred and lam.kind != "fn":
            self.fail(lam.pos, "this functor takes an `fn` lambda")
        if len(lam.params) != len(ptypes):
            self.fail(lam.pos, f"lambda takes {len(ptypes)} parameter(s)")
        inner = {n: replace(v, mutable=False) for n, v in env.items()}
        for (pn, pty), t in zip(lam.params, ptypes):
            if pty is not None:
                declared = self.resolve(pty)
                if declared != t:
                    self.fail(lam.pos, f"lambda parameter {pn} is {t}, not {declared}")
            if pn in inner:
                self.fail(lam.pos, f"lambda parameter {pn} shadows a local")
            inner[pn] = Var(t, False)
        ctx.in_lambda += 1
        try:
            bt = self.check_expr(lam.body, inner, ctx, BOOL if pred else want)
        finally:
            ctx.in_lambda -= 1
        if pred:
            self.expect_type(lam.body, bt, BOOL, "pred lambda body")
            bt = BOOL
        elif want is not None:
            self.expect_type(lam.body, bt, want, "lambda body")
            bt = want
        lam.ty = bt
        lam.res = list(ptypes)
        return bt

    def check_method_call(self, e: A.MethodCall, env, ctx: Ctx, expected, ref_ok: bool = False):
        u = self.u
        rt = self.check_expr(e.receiver, env, ctx, None)
        name = e.name
        if isinstance(rt, ListT):
            return self.check_list_functor(e, rt, env, ctx, expected)
        if isinstance(rt, MapT):
            return self.check_map_functor(e, rt, env, ctx, expected)
        if name in CONVERSIONS and isinstance(rt, Prim) and rt.name in INTEGRAL:
            if e.args or e.targs:
                self.fail(e.pos, f"{name}() takes no arguments")
            e.res = ("conv", CONVERSIONS[name])
            return Prim(CONVERSIONS[name])
        if name == "value" and isinstance(rt, TypedeclT):
            if e.args or e.targs:
                self.fail(e.pos, "value() takes no arguments")
            e.res = ("extract",)
            return rt.base
        if isinstance(rt, (Prim, StringOfT)) and name == "size" and (rt == STRING or isinstance(rt, StringOfT)):
            e.res = ("builtin", "strlen")
            return NAT
        if not isinstance(rt, NominalT) or rt.name in RESULT_ENTITIES:
            self.fail(e.pos, f"{rt} has no method {name}")
        if e.targs:
            self.fail(e.pos, "methods take no type arguments")
        m = u.lookup_method(rt.name, name)
        if m is None:
            self.fail(e.pos, f"{rt} has no method {name}")
        is_ref = "ref" in m.flags
        if e.ref and not is_ref:
            self.fail(e.pos, f"{m.key} is not a ref method")
        if is_ref and not e.ref:
            self.fail(e.pos, f"call to ref method {m.key} must be tagged `ref`")
        if e.ref:
            if not ref_ok:
                self.fail(e.pos, "ref calls must be whole statements")
            if not isinstance(e.receiver, A.Name) or e.receiver.name not in env or not env[e.receiver.name].mutable:
                self.fail(e.pos, "receiver of a ref call must be a `var` local")
        self.check_args(e, e.args, m.params, env, ctx)
        targets: list[tuple[str, str]] = []
        if u.is_concept(rt.name):
            for atom in u.providers(rt.name):
                impl = u.lookup_method(atom, name)
                targets.append((atom, impl.key))
            keys = {k for _, k in targets}
            if len(keys) == 1 and not m.abstract and keys == {m.key}:
                e.res = ("method", m.key)
            else:
                e.res = ("dispatch", tuple(targets))
        else:
            e.res = ("method", m.key)
        callees = {m.key} | {k for _, k in targets}
        for k in sorted(callees):
            if not u.callables[k].abstract:
                ctx.edges.append((k, e))
        result = self.result_of(m, e.pos)
        for _, k in targets:
            impl = u.callables[k]
            if impl.result is not None and not u.subtype(impl.result, result):
                self.fail(e.pos, f"{k} returns {impl.result}, not {result}")
        return result

    def targ(self, e: A.MethodCall, idx: int = 0) -> TypeSig | None:
        if len(e.targs) > idx:
            return self.resolve(e.targs[idx])
        return None

    def check_list_functor(self, e: A.MethodCall, lt: ListT, env, ctx: Ctx, expected):
        name, args, T = e.name, e.args, lt.elem
        if name not in LIST_FUNCTORS or name == "zip":
            self.fail(e.pos, f"List has no operation {name}")
        e.res = ("functor", name)

        def arity(n: int) -> None:
            if len(args) != n:
                self.fail(e.pos, f"{name} takes {n} argument(s)")

        def value_arg(i: int, t: TypeSig, what: str) -> None:
            a = args[i]
            if isinstance(a, A.Lambda):
                self.fail(a.pos, "lambda passed to a non-functor argument")
            self.expect_type(a, self.check_expr(a, env, ctx, t), t, what)

        if name in ("size", "sum", "max"):
            arity(0)
            if name == "size":
                return NAT
            if not is_prim(T, *NUMERIC):
                self.fail(e.pos, f"{name} needs primitive numeric elements, not {T}")
            return T
        if name == "get":
            arity(1)
            value_arg(0, NAT, "index")
            return T
        if name == "slice":
            arity(2)
            value_arg(0, NAT, "start index")
            value_arg(1, NAT, "end index")
            return lt
        if name == "concat":
            arity(1)
            value_arg(0, lt, "list")
            return lt
        if name == "pushBack":
            arity(1)
            value_arg(0, T, "element")
            return lt
        if name == "contains":
            arity(1)
            if not is_key_type(T):
                self.fail(e.pos, f"contains needs key-type elements, not {T}")
            value_arg(0, T, "element")
            return BOOL
        if name in ("filter", "has", "find", "count", "allOf"):
            arity(1)
            self.check_lambda(args[0], [T], env, ctx, None, pred=True)
            return {"filter": lt, "has": BOOL, "find": union(T, NONE), "count": NAT, "allOf": BOOL}[name]
        if name == "unique":
            arity(1)
            self.check_lambda(args[0], [T, T], env, ctx, None, pred=True)
            return BOOL
        if name == "map":
            arity(1)
            want = self.targ(e)
            bt = self.check_lambda(args[0], [T], env, ctx, want, pred=False)
            return ListT(bt)
        if name in ("sumOf", "maxArg"):
            arity(1)
            want = self.targ(e)
            bt = self.check_lambda(args[0], [T], env, ctx, want, pred=False)
            if not is_prim(bt, *NUMERIC):
                self.fail(e.pos, f"{name} needs a primitive numeric key, not {bt}")
            return bt if name == "sumOf" else T
        if name == "join":
            arity(2)
            t2 = self.check_expr(args[0], env, ctx, None)
            if not isinstance(t2, ListT):
                self.fail(args[0].pos, f"join needs a list, not {t2}")
            self.check_lambda(args[1], [T, t2.elem], env, ctx, None, pred=True)
            return ListT(TupleT((T, t2.elem)))
        if name == "reduce":
            arity(2)
            acc = self.targ(e)
            if acc is None:
                self.fail(e.pos, "reduce<A>(init, fn(acc, x)) needs its accumulator type")
            value_arg(0, acc, "initial accumulator")
            self.check_lambda(args[1], [acc, T], env, ctx, acc, pred=False)
            return acc
        self.fail(e.pos, f"List has no operation {name}")

    def check_map_functor(self, e: A.MethodCall, mt: MapT, env, ctx: Ctx, expected):
        name, args = e.name, e.args
        if name not in MAP_FUNCTORS:
            self.fail(e.pos, f"Map has no operation {name}")
        e.res = ("functor", "map_" + name)
        if name == "size":
            if args:
                self.fail(e.pos, "size takes no arguments")
            return NAT
        if name in ("get", "has"):
            if len(args) != 1:
                self.fail(e.pos, f"{name} takes one key")
            self.expect_type(args[0], self.check_expr(args[0], env, ctx, mt.key), mt.key, "key")
            return mt.value if name == "get" else BOOL
        if len(args) != 1:
            self.fail(e.pos, f"{name} takes one lambda")
        if name == "filter":
            self.check_lambda(args[0], [mt.key, mt.value], env, ctx, None, pred=True)
            return mt
        bt = self.check_lambda(args[0], [mt.key, mt.value], env, ctx, self.targ(e), pred=False)
        return MapT(mt.key, bt)

    # ------------------------------------------------------------ recursion

    def check_recursion(self) -> None:
        g = nx.DiGraph()
        for caller, edges in self.edges.items():
            g.add_node(caller)
            for callee, _ in edges:
                g.add_edge(caller, callee)
        comp_of: dict[str, int] = {}
        for i, comp in enumerate(nx.strongly_connected_components(g)):
            for n in comp:
                comp_of[n] = i
        for caller in sorted(self.edges):
            for callee, node in self.edges[caller]:
                cyclic = comp_of.get(caller) == comp_of.get(callee) and (caller != callee or g.has_edge(caller, caller))
                tagged = bool(getattr(node, "recursive", False))
                if cyclic:
                    for k in dict.fromkeys((caller, callee)):
                        c = self.u.callables.get(k)
                        if c is not None and not c.recursive:
                            self.err(node.pos, f"{k} is part of a call cycle and must be declared `recursive`")
                    if not tagged:
                        self.err(node.pos, f"call from {caller} to {callee} closes a cycle and must be tagged [recursive]")
                elif tagged:
                    self.diags.append(warning(node.pos, f"[recursive] on call to {callee}, which is not in a cycle"))
        for k, c in sorted(self.u.callables.items()):
            if c.recursive and not any(
                comp_of.get(k) == comp_of.get(callee) and (k != callee or g.has_edge(k, k))
                for callee, _ in self.edges.get(k, [])
            ):
                self.diags.append(warning(c.pos, f"{k} is declared recursive but is not part of a call cycle"))


def typecheck_program(program: A.Program, universe: Universe | None = None) -> CheckedProgram:
    """Build the universe (if needed) and type-check; diagnostics are collected, not raised."""
    diags: list[Diagnostic] = []
    if universe is None:
        universe, diags = build_universe_with_diagnostics(program)
        if diags:
            return CheckedProgram(program, universe, diags)
    ch = Checker(universe)
    ch.run(program)
    return CheckedProgram(program, universe, diags + ch.diags, ch.edges)


def check_program(program: A.Program) -> CheckedProgram:
    """Type-check and raise :class:`CompileError` on any error diagnostic."""
    cp = typecheck_program(program)
    if cp.errors:
        raise CompileError(cp.errors)
    return cp


def check_lambda_restrictions(program: A.Program) -> list[Diagnostic]:
    """Diagnostics about lambdas used outside functor-argument position."""
    cp = typecheck_program(program)
    return [d for d in cp.diagnostics if "lambda" in d.message]


def check_recursion_annotations(program: A.Program) -> list[Diagnostic]:
    cp = typecheck_program(program)
    return [d for d in cp.diagnostics if "recursive" in d.message or "cycle" in d.message]
