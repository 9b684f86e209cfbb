"""Single-assignment conversion and treeification into IR expressions."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Callable as Fn

from lxlang.frontend import ast as A
from lxlang.ir import nodes as I
from lxlang.lowering.desugar import Fresh, mk_name, ref_result, rewrite
from lxlang.runtime.ops import LxError, negate
from lxlang.runtime.values import (
    FloatV,
    IntV,
    StringOfV,
    StrV,
    TypedeclV,
    decimal_from_text,
    rational_from_text,
)
from lxlang.typesys.typesig import (
    BOOL,
    INTEGRAL,
    NAT,
    NONE,
    STRING,
    ListT,
    MapT,
    NominalT,
    Prim,
    StringOfT,
    TupleT,
    TypedeclT,
    TypeSig,
    numeric_base,
)
from lxlang.typesys.universe import Universe, level_of

DUPLICATE_LIMIT = 8


# ---------------------------------------------------------------- single assignment


class _Dsa:
    def __init__(self, params: list[tuple[str, TypeSig]]):
        self.counts: dict[str, int] = {}
        self.start: dict[str, tuple[str | None, TypeSig]] = {}
        for p, t in params:
            self.counts[p] = 1
            self.start[p] = (p, t)

    def fresh(self, base: str) -> str:
        k = self.counts.get(base, 0)
        self.counts[base] = k + 1
        return base if k == 0 else f"{base}.{k}"

    def rename(self, x, env):
        def fn(e):
            if isinstance(e, A.Name) and e.res and e.res[0] == "local" and e.name in env:
                ver = env[e.name][0]
                assert ver is not None, f"{e.name} read before assignment"
                if ver != e.name:
                    e.name = ver
                    e.res = ("local", ver)
            return e

        return rewrite(x, fn)

    def block(self, stmts: list[A.Stmt], env: dict) -> tuple[list[A.Stmt], dict, bool]:
        out: list[A.Stmt] = []
        for s in stmts:
            if isinstance(s, (A.LetS, A.VarS)):
                if s.expr is None:
                    env[s.name] = (None, s.tyv)
                    continue
                e = self.rename(s.expr, env)
                v = self.fresh(s.name)
                out.append(_let(v, e, s.tyv, s.pos))
                env[s.name] = (v, s.tyv)
            elif isinstance(s, (A.AssignS, A.RebindS)):
                e = self.rename(s.expr, env)
                ty = s.tyv if isinstance(s, A.RebindS) else env[s.name][1]
                v = self.fresh(s.name)
                out.append(_let(v, e, ty, s.pos))
                env[s.name] = (v, ty)
            elif isinstance(s, (A.ExprS, A.AssertS)):
                s = copy.copy(s)
                s.expr = self.rename(s.expr, env)
                out.append(s)
            elif isinstance(s, A.ReturnS):
                s = copy.copy(s)
                if s.expr is not None:
                    s.expr = self.rename(s.expr, env)
                out.append(s)
                return out, env, False
            elif isinstance(s, A.BlockS):
                b_out, b_env, falls = self.block(s.body, dict(env))
                out.extend(b_out)
                env = {n: b_env[n] for n in env}
                if not falls:
                    return out, env, False
            elif isinstance(s, A.IfS):
                assert len(s.branches) == 1 and s.branches[0][0] is None, "flow ifs must be desugared first"
                _, cond, tb = s.branches[0]
                cond = self.rename(cond, env)
                t_out, t_env, t_falls = self.block(tb, dict(env))
                e_out, e_env, e_falls = self.block(s.else_ or [], dict(env))
                joins: list[tuple[str, TypeSig, str, str]] = []
                new_env = dict(env)
                if t_falls and e_falls:
                    for n in env:
                        tv, ev = t_env[n][0], e_env[n][0]
                        if tv != ev and tv is not None and ev is not None:
                            xj = self.fresh(n)
                            ty = env[n][1]
                            joins.append((xj, ty, tv, ev))
                            new_env[n] = (xj, ty)
                elif t_falls:
                    new_env = {n: t_env[n] for n in env}
                elif e_falls:
                    new_env = {n: e_env[n] for n in env}
                ifs = A.IfS([(None, cond, t_out)], e_out, pos=s.pos)
                ifs.joins = joins
                ifs.falls = (t_falls, e_falls)
                out.append(ifs)
                env = new_env
                if not (t_falls or e_falls):
                    return out, env, False
            else:
                raise AssertionError(f"unexpected statement {type(s).__name__} after desugaring")
        return out, env, True


def _let(name: str, e: A.Expr, ty: TypeSig, pos) -> A.LetS:
    s = A.LetS(name, None, e, pos=pos)
    s.tyv = ty
    return s


def to_dsa(stmts: list[A.Stmt], params: list[tuple[str, TypeSig]]) -> list[A.Stmt]:
    """Give every assignment a fresh versioned name; ifs record their join bindings."""
    d = _Dsa(params)
    out, _, falls = d.block(stmts, dict(d.start))
    if falls:
        out.append(A.ReturnS(A.Lit("none", None)))
        out[-1].expr.ty = NONE
    return out


def has_return(stmts) -> bool:
    for s in stmts:
        if isinstance(s, A.ReturnS):
            return True
        if isinstance(s, A.IfS) and (has_return(s.branches[0][2]) or has_return(s.else_ or [])):
            return True
    return False


# ---------------------------------------------------------------- treeification


def coerce(n: I.Node, target: TypeSig) -> I.Node:
    if n.ty == target:
        return n
    if isinstance(n, I.Fail):
        return I.Fail(n.code, target)
    return I.AsCast(n, target, True)


@dataclass
class Treeifier:
    """Turns DSA statements and desugared expressions of one callable into IR."""

    root: str
    result: TypeSig
    u: Universe
    fresh: Fresh
    types: dict[str, TypeSig] = field(default_factory=dict)
    conts: list[I.IRFunction] = field(default_factory=list)
    recursive: bool = False

    # ------------------------------------------------------------ statements

    def seq(self, stmts: list[A.Stmt], i: int, tail: Fn[[], I.Node] | None) -> I.Node:
        if i == len(stmts):
            assert tail is not None, "block falls off without a continuation"
            return tail()
        s = stmts[i]
        if isinstance(s, A.LetS):
            b = coerce(self.expr(s.expr), s.tyv)
            self.types[s.name] = s.tyv
            return I.Let(s.name, b, self.seq(stmts, i + 1, tail))
        if isinstance(s, A.ExprS):
            return I.Let(self.fresh("%u"), self.expr(s.expr), self.seq(stmts, i + 1, tail))
        if isinstance(s, A.AssertS):
            return I.Assert(level_of(s.level), self.expr(s.expr), "assert-fail", self.seq(stmts, i + 1, tail))
        if isinstance(s, A.ReturnS):
            e = s.expr if s.expr is not None else _none_lit()
            return coerce(self.expr(e), self.result)
        if isinstance(s, A.IfS):
            return self.if_stmt(s, stmts[i + 1:], tail)
        raise AssertionError(f"unexpected statement {type(s).__name__}")

    def if_stmt(self, s: A.IfS, rest: list[A.Stmt], tail) -> I.Node:
        _, cond, tb = s.branches[0]
        eb = s.else_ or []
        c = self.expr(cond)
        joins = s.joins
        if not has_return(tb) and not has_return(eb):
            def pack(b: int):
                def f() -> I.Node:
                    vals = [coerce(I.Var(j[2 + b], self.types[j[2 + b]]), j[1]) for j in joins]
                    if not vals:
                        return I.Const(None, NONE)
                    if len(vals) == 1:
                        return vals[0]
                    return I.TupleNew(tuple(vals), TupleT(tuple(j[1] for j in joins)))
                return f

            ite = I.Ite(c, self.seq(tb, 0, pack(0)), self.seq(eb, 0, pack(1)))
            for xj, ty, _, _ in joins:
                self.types[xj] = ty
            after = self.seq(rest, 0, tail)
            if not joins:
                return I.Let(self.fresh("%u"), ite, after)
            if len(joins) == 1:
                return I.Let(joins[0][0], ite, after)
            jt = self.fresh("%j")
            body = after
            for k in reversed(range(len(joins))):
                xj, ty, _, _ = joins[k]
                body = I.Let(xj, I.Access("index", I.Var(jt, ite.ty), k, ty), body)
            return I.Let(jt, ite, body)
        t_falls, e_falls = s.falls
        tails: list = [None, None]
        if t_falls and e_falls:
            for xj, ty, _, _ in joins:
                self.types[xj] = ty
            rest_ir = self.seq(rest, 0, tail)
            if I.size(rest_ir) <= DUPLICATE_LIMIT:
                for b in (0, 1):
                    tails[b] = self._dup_tail(rest_ir, joins, b)
            else:
                kname = f"{self.root}$k{len(self.conts) + 1}"
                fv = sorted(I.free_vars(rest_ir))
                params = tuple((v, self.types[v]) for v in fv)
                self.conts.append(I.IRFunction(kname, "cont", params, self.result, (), (), rest_ir,
                                               recursive=self.recursive, owner=self.root))
                for b in (0, 1):
                    tails[b] = self._call_tail(kname, fv, joins, b)
        elif t_falls or e_falls:
            rest_ir = self.seq(rest, 0, tail)
            tails[0 if t_falls else 1] = lambda: rest_ir
        return I.Ite(c, self.seq(tb, 0, tails[0]), self.seq(eb, 0, tails[1]))

    def _dup_tail(self, rest_ir: I.Node, joins, b: int):
        def f() -> I.Node:
            body = rest_ir
            for xj, ty, tv, ev in reversed(joins):
                ver = (tv, ev)[b]
                body = I.Let(xj, coerce(I.Var(ver, self.types[ver]), ty), body)
            return body
        return f

    def _call_tail(self, kname: str, fv: list[str], joins, b: int):
        jmap = {xj: (ty, (tv, ev)[b]) for xj, ty, tv, ev in joins}

        def f() -> I.Node:
            args = []
            for v in fv:
                if v in jmap:
                    ty, ver = jmap[v]
                    args.append(coerce(I.Var(ver, self.types[ver]), ty))
                else:
                    args.append(I.Var(v, self.types[v]))
            return I.Call(kname, tuple(args), self.result)
        return f

    # ------------------------------------------------------------ expressions

    def expr(self, e: A.Expr) -> I.Node:
        m = getattr(self, "x_" + type(e).__name__, None)
        if m is None:
            raise AssertionError(f"cannot lower {type(e).__name__}")
        return m(e)

    def x_Lit(self, e: A.Lit) -> I.Node:
        return I.Const(literal_value(e.kind, e.value), e.ty)

    def x_TypedLit(self, e: A.TypedLit) -> I.Node:
        td: TypedeclT = e.ty
        base = td.base
        if e.is_string:
            if isinstance(base, StringOfT):
                bv = StringOfV(base.validator, e.text)
            else:
                bv = StrV(e.text, base.name)
        else:
            bv = literal_value(numeric_base(base), e.text)
        checks = self.td_checks(td.name)
        if checks:
            return I.Inject(td, I.Const(bv, base), checks)
        return I.Const(TypedeclV(td.name, bv, base), td)

    def x_Name(self, e: A.Name) -> I.Node:
        kind = e.res[0]
        if kind == "const":
            return I.Call(e.res[1], (), e.ty)
        return I.Var(e.name, self.types.get(e.name, e.ty))

    def x_IsE(self, e: A.IsE) -> I.Node:
        return I.IsTest(self.expr(e.expr), self.u.atoms(e.target))

    def x_CastE(self, e: A.CastE) -> I.Node:
        inner = self.expr(e.expr)
        if inner.ty == e.target:
            return inner
        return I.AsCast(inner, e.target, e.safe)

    def x_FailE(self, e: A.FailE) -> I.Node:
        return I.Fail(e.code, e.ty)

    def x_LetE(self, e: A.LetE) -> I.Node:
        b = self.expr(e.bound)
        self.types[e.name] = b.ty
        return I.Let(e.name, b, self.expr(e.body))

    def x_TupleE(self, e: A.TupleE) -> I.Node:
        ty: TupleT = e.ty
        return I.TupleNew(tuple(coerce(self.expr(x), t) for x, t in zip(e.items, ty.items)), ty)

    def x_RecordE(self, e: A.RecordE) -> I.Node:
        ty = e.ty
        return I.RecordNew(
            tuple(n for n, _ in e.fields),
            tuple(coerce(self.expr(v), ty.field_type(n)) for n, v in e.fields),
            ty,
        )

    def x_MapE(self, e: A.MapE) -> I.Node:
        mt: MapT = e.ty
        args: list[I.Node] = []
        for k, v in e.entries:
            args.append(coerce(self.expr(k), mt.key))
            args.append(coerce(self.expr(v), mt.value))
        return I.MapNew(tuple(args), mt)

    def x_ConstructE(self, e: A.ConstructE) -> I.Node:
        kind = e.res[0]
        if kind == "list":
            lt: ListT = e.ty
            return I.ListNew(tuple(coerce(self.expr(v), lt.elem) for _, v in e.args), lt)
        if kind == "typedecl":
            td: TypedeclT = e.ty
            return I.Inject(td, coerce(self.expr(e.args[0][1]), td.base), self.td_checks(td.name))
        ent: NominalT = e.res[1]
        fields = self.u.fields(ent)
        order = [n for n, _ in fields]
        written = [n for n, _ in e.args]
        lowered = {n: coerce(self.expr(v), self.u.field_type(ent, n)) for n, v in e.args}
        lets: list[tuple[str, I.Node]] = []
        if written != order:
            # keep written evaluation order, then assemble in declaration order
            for n in written:
                if not _trivial(lowered[n]):
                    t = self.fresh()
                    self.types[t] = lowered[n].ty
                    lets.append((t, lowered[n]))
                    lowered[n] = I.Var(t, lowered[n].ty)
        node: I.Node = I.Construct(ent, tuple(order), tuple(lowered[n] for n in order), self.entity_checks(ent))
        for t, b in reversed(lets):
            node = I.Let(t, b, node)
        return node

    def x_Access(self, e: A.Access) -> I.Node:
        return I.Access("field", self.expr(e.target), e.name, e.ty)

    def x_IndexE(self, e: A.IndexE) -> I.Node:
        return I.Access("index", self.expr(e.target), e.index, e.ty)

    def x_Unary(self, e: A.Unary) -> I.Node:
        x = self.expr(e.operand)
        if e.op == "!":
            return I.PrimOp("not", (x,), BOOL)
        return self.arith("neg", (x,), e.ty)

    def x_Binary(self, e: A.Binary) -> I.Node:
        op = e.op
        if op in ("&&", "||", "==>"):
            l, r = self.expr(e.left), self.expr(e.right)
            t, f = I.Const(True, BOOL), I.Const(False, BOOL)
            if op == "&&":
                return I.Ite(l, r, f)
            if op == "||":
                return I.Ite(l, t, r)
            return I.Ite(l, r, t)
        res = e.res
        if res is not None and res[0] == "nonetest":
            _, neg, left_is_subject = res
            subj = self.expr(e.left if left_is_subject else e.right)
            test: I.Node = I.IsTest(subj, (NONE,))
            return I.PrimOp("not", (test,), BOOL) if neg else test
        l, r = self.expr(e.left), self.expr(e.right)
        if res is not None and res[0] == "eq":
            return I.Equal(l, r, res[1])
        if op in ("<", "<=", ">", ">="):
            return I.PrimOp(op, (_unwrap(l), _unwrap(r)), BOOL)
        return self.arith(op, (l, r), e.ty)

    def arith(self, op: str, args: tuple[I.Node, ...], ty: TypeSig) -> I.Node:
        if isinstance(ty, TypedeclT):
            inner = self.arith(op, tuple(I.Extract(a, ty.base) for a in args), ty.base)
            return I.Inject(ty, inner, self.td_checks(ty.name))
        return I.PrimOp(op, args, ty)

    def x_IfE(self, e: A.IfE) -> I.Node:
        return I.Ite(self.expr(e.cond), coerce(self.expr(e.then), e.ty), coerce(self.expr(e.else_), e.ty))

    def x_CallE(self, e: A.CallE) -> I.Node:
        return self.call(e.res[1], e.args, e.ty)

    def x_StaticCall(self, e: A.StaticCall) -> I.Node:
        kind, what = e.res
        if kind == "const":
            return I.Call(what, (), e.ty)
        if kind == "call":
            return self.call(what, e.args, e.ty)
        if kind == "builtin":
            return I.PrimOp("concat", tuple(coerce(self.expr(a), STRING) for a in e.args), STRING)
        lt: ListT = e.ty
        a_t, b_t = lt.elem.items
        return I.FunctorApp("zip", None, (), (coerce(self.expr(e.args[0]), ListT(a_t)),
                                              coerce(self.expr(e.args[1]), ListT(b_t))), lt)

    def call(self, key: str, args: list[A.Expr], ty: TypeSig, recv: I.Node | None = None) -> I.Node:
        c = self.u.callables[key]
        params = c.params
        lowered = []
        if recv is not None:
            lowered.append(coerce(recv, params[0][1]))
            params = params[1:]
        lowered += [coerce(self.expr(a), pt) for a, (_, pt) in zip(args, params)]
        result = ref_result(c) if "ref" in c.flags else c.result
        return coerce(I.Call(key, tuple(lowered), result), ty)

    def x_MethodCall(self, e: A.MethodCall) -> I.Node:
        kind = e.res[0]
        if kind == "method":
            return self.call(e.res[1], e.args, e.ty, recv=self.expr(e.receiver))
        if kind == "dispatch":
            return self.dispatch(e)
        recv = self.expr(e.receiver)
        if kind == "conv":
            return I.PrimOp("to" + e.res[1], (recv,), e.ty)
        if kind == "extract":
            return I.Extract(recv, e.ty)
        if kind == "builtin":
            return I.PrimOp("strlen", (recv,), NAT)
        return self.functor(e, recv)

    def functor(self, e: A.MethodCall, recv: I.Node) -> I.Node:
        name = e.res[1]
        spec = None
        caps: tuple[I.Node, ...] = ()
        args: list[I.Node] = [recv]
        rt = recv.ty
        for a in e.args:
            if isinstance(a, A.LamRef):
                spec = a.fn
                caps = tuple(self.expr(c) for c in a.captures)
                continue
            x = self.expr(a)
            if name in ("pushBack", "contains"):
                x = coerce(x, rt.elem)
            elif name == "reduce":
                x = coerce(x, e.ty)
            elif name in ("map_get", "map_has"):
                x = coerce(x, rt.key)
            elif name in ("concat",):
                x = coerce(x, rt)
            elif name in ("get", "slice"):
                x = coerce(x, NAT)
            args.append(x)
        return I.FunctorApp(name, spec, caps, tuple(args), e.ty)

    def dispatch(self, e: A.MethodCall) -> I.Node:
        recv = self.expr(e.receiver)
        r = self.fresh()
        self.types[r] = recv.ty
        arg_nodes = [self.expr(a) for a in e.args]
        lets: list[tuple[str, I.Node]] = [(r, recv)]
        arg_vars: list[I.Node] = []
        for a in arg_nodes:
            if _trivial(a):
                arg_vars.append(a)
            else:
                t = self.fresh()
                self.types[t] = a.ty
                lets.append((t, a))
                arg_vars.append(I.Var(t, a.ty))
        groups: dict[str, list[TypeSig]] = {}
        for atom, key in e.res[1]:
            groups.setdefault(key, []).append(NominalT(atom))
        arms = []
        for key, atoms in groups.items():
            c = self.u.callables[key]
            this_t = c.params[0][1]
            cargs = [I.AsCast(I.Var(r, recv.ty), this_t, True) if recv.ty != this_t else I.Var(r, recv.ty)]
            cargs += [coerce(a, pt) for a, (_, pt) in zip(arg_vars, c.params[1:])]
            arms.append((tuple(atoms), coerce(I.Call(key, tuple(cargs), c.result), e.ty)))
        node = arms[-1][1]
        for atoms, call in reversed(arms[:-1]):
            node = I.Ite(I.IsTest(I.Var(r, recv.ty), atoms), call, node)
        for name, b in reversed(lets):
            node = I.Let(name, b, node)
        return node

    # ------------------------------------------------------------ checks

    def entity_checks(self, ent: NominalT) -> tuple[I.Check, ...]:
        if ent.args:
            return ()
        out = []
        for ci in self.u.checks(ent.name, "invariant"):
            params = tuple(p for p, _ in self.u.callables[ci.fn].params)
            out.append(I.Check(ci.level, ci.fn, params))
        return tuple(out)

    def td_checks(self, name: str) -> tuple[I.Check, ...]:
        td = self.u.typedecls[name]
        return tuple(I.Check(ci.level, ci.fn, ("$value",)) for ci in td.invariants)


def _trivial(n: I.Node) -> bool:
    return isinstance(n, (I.Var, I.Const))


def _unwrap(n: I.Node) -> I.Node:
    while isinstance(n.ty, TypedeclT):
        n = I.Extract(n, n.ty.base)
    return n


def _none_lit() -> A.Lit:
    lit = A.Lit("none", None)
    lit.ty = NONE
    return lit


def literal_value(kind: str, value):
    if kind == "none":
        return None
    if kind == "bool":
        return bool(value)
    if kind in INTEGRAL:
        return IntV(kind, int(value))
    if kind == "Float":
        return FloatV(float(value))
    if kind == "Decimal":
        return decimal_from_text(str(value))
    if kind == "Rational":
        return rational_from_text(str(value))
    if kind in ("String", "ASCIIString"):
        return StrV(value, kind)
    raise ValueError(f"unknown literal kind {kind}")


# ---------------------------------------------------------------- IR cleanup


def simplify(n: I.Node) -> I.Node:
    """``let v = e in v`` becomes ``e``; negated numeric literals become constants."""
    kids = [simplify(c) for c in n.children()]
    if kids:
        n = n.rebuild(kids)
    if isinstance(n, I.Let) and isinstance(n.body, I.Var) and n.body.name == n.name:
        return n.bound
    if isinstance(n, I.PrimOp) and n.op == "neg" and isinstance(n.args[0], I.Const):
        try:
            return I.Const(negate(n.args[0].value), n.ty)
        except (LxError, TypeError):
            return n
    return n


def uniquify(fn: I.IRFunction) -> I.IRFunction:
    """Alpha-rename let bindings so every name is bound once per function."""
    seen: set[str] = {p for p, _ in fn.params} | {"$return"}
    counter = [0]

    def go(n: I.Node, ren: dict[str, str]) -> I.Node:
        if isinstance(n, I.Var):
            new = ren.get(n.name)
            return I.Var(new, n.ty) if new else n
        if isinstance(n, I.Let):
            b = go(n.bound, ren)
            name = n.name
            if name in seen:
                counter[0] += 1
                name = f"{n.name}~{counter[0]}"
                while name in seen:
                    counter[0] += 1
                    name = f"{n.name}~{counter[0]}"
                ren = {**ren, n.name: name}
            seen.add(name)
            return I.Let(name, b, go(n.body, ren))
        kids = [go(c, ren) for c in n.children()]
        return n.rebuild(kids) if kids else n

    from dataclasses import replace

    return replace(
        fn,
        requires=tuple((lv, go(e, {})) for lv, e in fn.requires),
        ensures=tuple((lv, go(e, {})) for lv, e in fn.ensures),
        body=go(fn.body, {}),
    )


__all__ = ["to_dsa", "Treeifier", "simplify", "uniquify", "coerce", "literal_value", "mk_name"]
