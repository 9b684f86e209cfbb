"""Big-step interpreter over the typed surface tree.

This is an independent semantics used to cross-check lowering: it never looks
at the IR, keeps mutable variables in scoped environments, and runs statements
directly. Outcomes carry only the error code since sites are an IR notion.
"""

from __future__ import annotations

from dataclasses import dataclass

from lxlang.frontend import ast as A
from lxlang.runtime.evaluator import CheckConfig, run_deep
from lxlang.runtime.functors import run_functor
from lxlang.runtime.ops import LxError, arith, compare, convert, negate
from lxlang.runtime.values import (
    EntityV,
    IntV,
    ListV,
    StringOfV,
    StrV,
    TupleV,
    TypedeclV,
    conforms,
    make_map,
    make_record,
    show,
)
from lxlang.lowering.treeify import literal_value
from lxlang.typesys.checker import CheckedProgram
from lxlang.typesys.typesig import NONE, NominalT, StringOfT, TypedeclT, numeric_base
from lxlang.typesys.universe import Callable, level_of


@dataclass(frozen=True)
class SurfaceOutcome:
    value: object = None
    code: str | None = None

    def serialize(self) -> str:
        return f"error {self.code}" if self.code else "ok " + show(self.value)


class _Return(Exception):
    def __init__(self, value):
        self.value = value


class SurfaceInterpreter:
    def __init__(self, cp: CheckedProgram, cfg: CheckConfig | None = None):
        self.u = cp.universe
        self.cfg = cfg or CheckConfig()
        self.depth = 0

    # ------------------------------------------------------------ callables

    def call(self, c: Callable, args: list, this_var: list | None = None):
        """Run a callable; for ref methods ``this_var`` is a one-slot box updated on return."""
        if c.kind == "const":
            return self.expr(c.body, {}, {})
        self.depth += 1
        try:
            if self.depth > self.cfg.budget:
                raise LxError("recursion-budget-exceeded")
            env = {p: a for (p, _), a in zip(c.params, args)}
            for level, e in c.requires:
                if self.cfg.enabled(level) and self.expr(e, dict(env), {}) is not True:
                    raise LxError("precondition-fail")
            frame = dict(env)
            try:
                self.block(c.body or [], frame, {})
                result = None
            except _Return as r:
                result = r.value
            if this_var is not None:
                this_var[0] = frame["this"]
            for level, e in c.ensures:
                if self.cfg.enabled(level) and self.expr(e, dict(env), {"$return": result}) is not True:
                    raise LxError("postcondition-fail")
            return result
        finally:
            self.depth -= 1

    def check(self, c: Callable, env: dict, binders: dict) -> bool:
        return self.expr(c.body, env, binders) is True

    def construct(self, t: NominalT, vals: dict):
        fields = self.u.fields(t)
        ordered = tuple((n, vals[n]) for n, _ in fields)
        for ci in self.u.checks(t.name, "invariant"):
            if not self.cfg.enabled(ci.level):
                continue
            c = self.u.callables[ci.fn]
            if not self.check(c, {p: vals[p] for p, _ in c.params}, {}):
                raise LxError("invariant-fail")
        return EntityV(t.name, ordered, t.args)

    def inject(self, td: TypedeclT, base):
        info = self.u.typedecls[td.name]
        for ci in info.invariants:
            if self.cfg.enabled(ci.level) and not self.check(self.u.callables[ci.fn], {}, {"$value": base}):
                raise LxError("invariant-fail")
        return TypedeclV(td.name, base, td.base)

    # ------------------------------------------------------------ statements

    def block(self, stmts: list[A.Stmt], env: dict, binders: dict) -> None:
        inner = dict(env)
        try:
            for s in stmts:
                self.stmt(s, inner, binders)
        finally:
            for k in env:
                env[k] = inner[k]

    def rhs(self, e: A.Expr, env: dict, binders: dict):
        if isinstance(e, A.FlowReturn):
            v = self.expr(e.target, env, binders)
            if not self.flow(v, e.op, e.res[0], env, binders):
                raise _Return(v)
            return v
        return self.expr(e, env, binders)

    def stmt(self, s: A.Stmt, env: dict, binders: dict) -> None:
        if isinstance(s, (A.LetS, A.VarS)):
            env[s.name] = None if s.expr is None else self.rhs_ref(s.expr, env, binders)
        elif isinstance(s, A.AssignS):
            env[s.name] = self.rhs_ref(s.expr, env, binders)
        elif isinstance(s, A.ExprS):
            e = s.expr
            if isinstance(e, A.BulkE) and isinstance(e.target, A.This):
                env["this"] = self.expr(e, env, binders)
            else:
                self.rhs_ref(e, env, binders)
        elif isinstance(s, A.ReturnS):
            raise _Return(None if s.expr is None else self.expr(s.expr, env, binders))
        elif isinstance(s, A.AssertS):
            if self.cfg.enabled(level_of(s.level)) and self.expr(s.expr, env, binders) is not True:
                raise LxError("assert-fail")
        elif isinstance(s, A.BlockS):
            self.block(s.body, env, binders)
        elif isinstance(s, A.IfS):
            self.if_stmt(s, env, binders)
        elif isinstance(s, A.MatchS):
            v = self.expr(s.subject, env, binders)
            for (pat, body), (yes, bid) in zip(s.arms, s.arminfo):
                if pat.kind == "wild":
                    hit = True
                elif pat.kind == "lit":
                    lit = self.expr(pat.lit, env, binders)
                    hit = conforms(v, pat.lit.ty, self.u) and v == lit
                else:
                    hit = conforms(v, yes, self.u)
                if hit:
                    self.block(body, env, {**binders, bid: v})
                    return
            raise AssertionError("non-exhaustive match reached")
        elif isinstance(s, A.NarrowS):
            v = env[s.target.name]
            yes, _ = s.info
            if not self.flow(v, s.op, yes, env, binders):
                if s.kind == "@":
                    raise LxError("cast-fail")
                raise _Return(v)
        elif isinstance(s, A.DeferS):
            raise NotImplementedError("deferred body")
        else:
            raise AssertionError(f"unexpected statement {type(s).__name__}")

    def rhs_ref(self, e: A.Expr, env: dict, binders: dict):
        if isinstance(e, A.MethodCall) and e.ref:
            c = self.u.callables[e.res[1]]
            box = [env[e.receiver.name]]
            args = [self.expr(a, env, binders) for a in e.args]
            r = self.call(c, [box[0]] + args, this_var=box)
            env[e.receiver.name] = box[0]
            return r
        return self.rhs(e, env, binders)

    def if_stmt(self, s: A.IfS, env: dict, binders: dict) -> None:
        info = s.flowinfo or [None] * len(s.branches)
        for i, (flow, cond, body) in enumerate(s.branches):
            if flow is None:
                if self.expr(cond, env, binders) is True:
                    self.block(body, env, binders)
                    return
                continue
            v = self.expr(cond, env, binders)
            yes, no, bid = info[i]
            if self.flow(v, flow, yes, env, binders):
                self.block(body, env, {**binders, bid: v})
                return
            if s.else_ is not None and len(info) > len(s.branches):
                _, _, bid_no = info[len(s.branches)]
                self.block(s.else_, env, {**binders, bid_no: v})
                return
        if s.else_ is not None:
            self.block(s.else_, env, binders)

    def flow(self, v, op: A.FlowOp, yes, env, binders) -> bool:
        if op.kind == "eq":
            lit = self.expr(op.lit, env, binders)
            hit = conforms(v, op.lit.ty, self.u) and v == lit
            return hit != op.neg
        return conforms(v, yes, self.u)

    # ------------------------------------------------------------ expressions

    def expr(self, e: A.Expr, env: dict, binders: dict):
        m = getattr(self, "e_" + type(e).__name__)
        return m(e, env, binders)

    def e_Lit(self, e, env, b):
        return literal_value(e.kind, e.value)

    def e_TypedLit(self, e: A.TypedLit, env, b):
        td: TypedeclT = e.ty
        if e.is_string:
            base = StringOfV(td.base.validator, e.text) if isinstance(td.base, StringOfT) else StrV(e.text, td.base.name)
        else:
            base = literal_value(numeric_base(td.base), e.text)
        return self.inject(td, base)

    def e_Name(self, e: A.Name, env, b):
        if e.res[0] == "const":
            return self.call(self.u.callables[e.res[1]], [])
        return env[e.name]

    def e_Binder(self, e: A.Binder, env, b):
        return b[e.res]

    def e_This(self, e, env, b):
        return env["this"]

    def e_TupleE(self, e, env, b):
        return TupleV(tuple(self.expr(i, env, b) for i in e.items))

    def e_RecordE(self, e, env, b):
        return make_record([(n, self.expr(v, env, b)) for n, v in e.fields])

    def e_ConstructE(self, e: A.ConstructE, env, b):
        kind = e.res[0]
        vals = [(n, self.expr(v, env, b)) for n, v in e.args]
        if kind == "list":
            return ListV(tuple(v for _, v in vals), e.ty.elem)
        if kind == "typedecl":
            return self.inject(e.ty, vals[0][1])
        return self.construct(e.res[1], dict(vals))

    def e_MapE(self, e: A.MapE, env, b):
        pairs = []
        for k, v in e.entries:
            kv = self.expr(k, env, b)
            pairs.append((kv, self.expr(v, env, b)))
        return make_map(pairs, e.ty.key, e.ty.value)

    def e_BulkE(self, e: A.BulkE, env, b):
        src: EntityV = self.expr(e.target, env, b)
        cur = dict(src.fields)
        inner = {**b, **{bid: cur[f] for f, bid in e.res}}
        upd = {n: self.expr(v, env, inner) for n, v in e.updates}
        return self.construct(e.ty, {**cur, **upd})

    def e_Access(self, e: A.Access, env, b):
        v = self.expr(e.target, env, b)
        if isinstance(v, EntityV):
            return v.get(e.name)
        return dict(v.fields)[e.name]

    def e_IndexE(self, e, env, b):
        return self.expr(e.target, env, b).items[e.index]

    def e_Unary(self, e: A.Unary, env, b):
        v = self.expr(e.operand, env, b)
        if e.op == "!":
            return not v
        if isinstance(e.ty, TypedeclT):
            return self.inject(e.ty, negate(v.base))
        return negate(v)

    def e_Binary(self, e: A.Binary, env, b):
        op = e.op
        if op == "&&":
            return self.expr(e.left, env, b) is True and self.expr(e.right, env, b) is True
        if op == "||":
            return self.expr(e.left, env, b) is True or self.expr(e.right, env, b) is True
        if op == "==>":
            return self.expr(e.left, env, b) is not True or self.expr(e.right, env, b) is True
        if e.res is not None and e.res[0] == "nonetest":
            _, neg, left = e.res
            subject = e.left if left else e.right
            l = self.expr(e.left, env, b)
            r = self.expr(e.right, env, b)
            v = l if left else r
            del subject
            return (v is None) != neg
        l = self.expr(e.left, env, b)
        r = self.expr(e.right, env, b)
        if e.res is not None and e.res[0] == "eq":
            return (l == r) != e.res[1]
        if op in ("<", "<=", ">", ">="):
            return compare(op, _base(l), _base(r))
        if isinstance(e.ty, TypedeclT):
            return self.inject(e.ty, arith(op, l.base, r.base))
        return arith(op, l, r)

    def e_IfE(self, e: A.IfE, env, b):
        return self.expr(e.then if self.expr(e.cond, env, b) is True else e.else_, env, b)

    def e_FlowTest(self, e: A.FlowTest, env, b):
        v = self.expr(e.target, env, b)
        return self.flow(v, e.op, e.res[0], env, b)

    def e_FlowCast(self, e: A.FlowCast, env, b):
        v = self.expr(e.target, env, b)
        if not self.flow(v, e.op, e.res[0], env, b):
            raise LxError("cast-fail")
        return v

    def e_CallE(self, e: A.CallE, env, b):
        c = self.u.callables[e.res[1]]
        return self.call(c, [self.expr(a, env, b) for a in e.args])

    def e_StaticCall(self, e: A.StaticCall, env, b):
        kind, what = e.res
        if kind == "const":
            return self.call(self.u.callables[what], [])
        args = [self.expr(a, env, b) for a in e.args]
        if kind == "call":
            return self.call(self.u.callables[what], args)
        if kind == "builtin":
            return StrV("".join(a.v for a in args))
        return run_functor("zip", args, None, e.ty)

    def e_MethodCall(self, e: A.MethodCall, env, b):
        kind = e.res[0]
        recv = self.expr(e.receiver, env, b)
        if kind == "conv":
            return convert(e.res[1], recv)
        if kind == "extract":
            return recv.base
        if kind == "builtin":
            return IntV("Nat", len(recv.v))
        if kind in ("method", "dispatch"):
            args = [self.expr(a, env, b) for a in e.args]
            if kind == "method":
                key = e.res[1]
            else:
                key = dict(e.res[1])[recv.name]
            return self.call(self.u.callables[key], [recv] + args)
        name = e.res[1]
        fn = None
        rest = []
        for a in e.args:
            if isinstance(a, A.Lambda):
                fn = self.closure(a, env, b)
            else:
                rest.append(self.expr(a, env, b))
        return run_functor(name, [recv] + rest, fn, e.ty)

    def closure(self, lam: A.Lambda, env, b):
        names = [p for p, _ in lam.params]

        def f(*xs):
            return self.expr(lam.body, {**env, **dict(zip(names, xs))}, b)

        return f


def _base(v):
    while isinstance(v, TypedeclV):
        v = v.base
    return v


def run_surface(cp: CheckedProgram, entry: str, args: list, cfg: CheckConfig | None = None) -> SurfaceOutcome:
    """Evaluate ``entry`` directly on the surface tree."""
    interp = SurfaceInterpreter(cp, cfg)
    c = cp.universe.callables[entry]

    def thunk():
        return interp.call(c, list(args))

    try:
        return SurfaceOutcome(value=run_deep(thunk))
    except LxError as exc:
        return SurfaceOutcome(code=exc.code)


__all__ = ["SurfaceInterpreter", "SurfaceOutcome", "run_surface", "NONE"]
