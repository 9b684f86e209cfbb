"""Surface-to-surface desugaring passes over the typed tree.

After these passes a callable body uses only: let/var/assign/rebind, plain
boolean ``if``, return, assert and expression statements; expressions contain no
flow-return operators, bulk updates, binders or lambda literals. Generated names
start with ``%`` (temporaries) or keep the checker's ``$`` binder ids, so they can
never collide with source identifiers.
"""

from __future__ import annotations

import copy
import dataclasses
from dataclasses import dataclass, field
from typing import Callable as Fn, Iterator

from lxlang.frontend import ast as A
from lxlang.typesys.typesig import BOOL, NONE, NominalT, TupleT, TypeSig
from lxlang.typesys.universe import Callable, Universe

SKIP_FIELDS = {"pos", "ty", "res", "tyv", "joins"}
TREE = (A.Expr, A.Stmt, A.FlowOp, A.Pattern)


class Fresh:
    """Per-callable fresh-name supply."""

    def __init__(self) -> None:
        self.n = 0

    def __call__(self, prefix: str = "%t") -> str:
        self.n += 1
        return f"{prefix}{self.n}"


@dataclass
class Lifted:
    """A lambda literal turned into a top-level function."""

    name: str
    params: list[tuple[str, TypeSig]]
    result: TypeSig
    body: A.Expr
    owner: str


@dataclass
class LiftRegistry:
    owner: str
    lifted: list[Lifted] = field(default_factory=list)

    def next_name(self) -> str:
        return f"{self.owner}$lam{len(self.lifted) + 1}"


# ---------------------------------------------------------------- tree utilities


def typed(e: A.Expr, ty: TypeSig, res=None) -> A.Expr:
    e.ty = ty
    e.res = res
    return e


def mk_name(n: str, ty: TypeSig) -> A.Name:
    return typed(A.Name(n), ty, ("local", n))


def mk_not(e: A.Expr) -> A.Expr:
    return typed(A.Unary("!", e, pos=e.pos), BOOL)


def mk_let(name: str, expr: A.Expr, pos=None) -> A.LetS:
    s = A.LetS(name, None, expr, pos=pos)
    s.tyv = expr.ty
    return s


def rewrite(x, fn: Fn):
    """Rebuild a tree bottom-up, replacing each node with ``fn(node)``."""
    if isinstance(x, list):
        return [rewrite(i, fn) for i in x]
    if isinstance(x, tuple):
        return tuple(rewrite(i, fn) for i in x)
    if isinstance(x, TREE):
        new = copy.copy(x)
        for f in dataclasses.fields(x):
            if f.name in SKIP_FIELDS:
                continue
            v = getattr(x, f.name)
            if isinstance(v, (list, tuple) + TREE):
                setattr(new, f.name, rewrite(v, fn))
        return fn(new)
    return x


def nodes(x) -> Iterator:
    """All tree nodes (expressions, statements, flow ops) in pre-order."""
    if isinstance(x, (list, tuple)):
        for i in x:
            yield from nodes(i)
    elif isinstance(x, TREE):
        yield x
        for f in dataclasses.fields(x):
            if f.name in SKIP_FIELDS:
                continue
            v = getattr(x, f.name)
            if isinstance(v, (list, tuple) + TREE):
                yield from nodes(v)


def uses(name: str, x) -> bool:
    return any(isinstance(n, A.Name) and n.name == name for n in nodes(x))


def free_locals(e) -> dict[str, TypeSig]:
    """Local names read by ``e`` and not bound inside it, with their types."""
    out: dict[str, TypeSig] = {}

    def go(x, bound: frozenset[str]) -> None:
        if isinstance(x, (list, tuple)):
            for i in x:
                go(i, bound)
            return
        if isinstance(x, A.Name):
            if x.res and x.res[0] == "local" and x.name not in bound and x.name not in out:
                out[x.name] = x.ty
            return
        if isinstance(x, A.LetE):
            go(x.bound, bound)
            go(x.body, bound | {x.name})
            return
        if isinstance(x, TREE):
            for f in dataclasses.fields(x):
                if f.name in SKIP_FIELDS:
                    continue
                v = getattr(x, f.name)
                if isinstance(v, (list, tuple) + TREE):
                    go(v, bound)

    go(e, frozenset())
    return out


def map_blocks(stmts: list[A.Stmt], fn: Fn[[A.Stmt], list[A.Stmt]]) -> list[A.Stmt]:
    """Apply a statement-to-statements rewrite to every statement, innermost blocks first."""
    out: list[A.Stmt] = []
    for s in stmts:
        s = copy.copy(s)
        if isinstance(s, A.IfS):
            s.branches = [(fl, c, map_blocks(b, fn)) for fl, c, b in s.branches]
            if s.else_ is not None:
                s.else_ = map_blocks(s.else_, fn)
        elif isinstance(s, A.MatchS):
            s.arms = [(p, map_blocks(b, fn)) for p, b in s.arms]
        elif isinstance(s, A.BlockS):
            s.body = map_blocks(s.body, fn)
        out.extend(fn(s))
    return out


def falls_through(stmts: list[A.Stmt]) -> bool:
    for s in stmts:
        if isinstance(s, A.ReturnS):
            return False
        if isinstance(s, A.BlockS) and not falls_through(s.body):
            return False
        if isinstance(s, A.IfS) and s.else_ is not None:
            if not any(falls_through(b) for _, _, b in s.branches) and not falls_through(s.else_):
                return False
        if isinstance(s, A.MatchS) and not any(falls_through(b) for _, b in s.arms):
            return False
    return True


# ---------------------------------------------------------------- binders and `this`


def resolve_binders(x):
    """Replace ``$`` binders and ``this`` with plain local names."""

    def fn(e):
        if isinstance(e, A.Binder):
            return mk_name(e.res, e.ty)
        if isinstance(e, A.This):
            return mk_name("this", e.ty)
        return e

    return rewrite(x, fn)


# ---------------------------------------------------------------- ref methods


def ref_result(c: Callable) -> TypeSig:
    return TupleT((NominalT(c.owner), c.result if c.result is not None else NONE))


def is_ref_call(e) -> bool:
    return isinstance(e, A.MethodCall) and e.ref


def desugar_ref_calls(stmts: list[A.Stmt], u: Universe, fresh: Fresh) -> list[A.Stmt]:
    """``let id = ref r.m(..)`` becomes ``let %t = r.m(..); r = %t.0; let id = %t.1``."""

    def fn(s: A.Stmt) -> list[A.Stmt]:
        rhs = getattr(s, "expr", None)
        if not isinstance(s, (A.LetS, A.VarS, A.AssignS, A.ExprS)) or not is_ref_call(rhs):
            return [s]
        m = u.callables[rhs.res[1]]
        tup = ref_result(m)
        call = copy.copy(rhs)
        call.ref = False
        call.ty = tup
        t = fresh()
        recv = rhs.receiver.name
        out: list[A.Stmt] = [
            mk_let(t, call, s.pos),
            A.AssignS(recv, typed(A.IndexE(mk_name(t, tup), 0), tup.items[0]), pos=s.pos),
        ]
        if isinstance(s, A.ExprS):
            return out
        s = copy.copy(s)
        s.expr = typed(A.IndexE(mk_name(t, tup), 1), tup.items[1])
        return out + [s]

    return map_blocks(stmts, fn)


def desugar_ref_method(c: Callable, body: list[A.Stmt]) -> list[A.Stmt]:
    """Thread the receiver of a ref method through ``%self`` and return ``[%self, result]``."""
    ent = NominalT(c.owner)
    tup = ref_result(c)
    self_name = "%self"

    def this_to_self(e):
        if isinstance(e, A.Name) and e.name == "this":
            return mk_name(self_name, ent)
        return e

    body = rewrite(body, this_to_self)

    def fn(s: A.Stmt) -> list[A.Stmt]:
        if isinstance(s, A.ExprS) and isinstance(s.expr, A.BulkE):
            return [A.AssignS(self_name, s.expr, pos=s.pos)]
        if isinstance(s, A.ReturnS):
            val = s.expr if s.expr is not None else typed(A.Lit("none", None, pos=s.pos), NONE)
            return [A.ReturnS(typed(A.TupleE([mk_name(self_name, ent), val], pos=s.pos), tup), pos=s.pos)]
        return [s]

    body = map_blocks(body, fn)
    start = A.VarS(self_name, None, mk_name("this", ent), pos=c.pos)
    start.tyv = ent
    body = [start] + body
    if falls_through(body):
        none = typed(A.Lit("none", None), NONE)
        body.append(A.ReturnS(typed(A.TupleE([mk_name(self_name, ent), none]), tup)))
    return body


def ref_ensures(c: Callable, e: A.Expr) -> A.Expr:
    tup = ref_result(c)

    def fn(x):
        if isinstance(x, A.Name) and x.name == "$return":
            return typed(A.IndexE(mk_name("$return", tup), 1), tup.items[1])
        return x

    return rewrite(e, fn)


def desugar_ref_methods(c: Callable, body: list[A.Stmt], u: Universe, fresh: Fresh) -> list[A.Stmt]:
    """Both halves of ref desugaring for one callable body."""
    body = desugar_ref_calls(body, u, fresh)
    if "ref" in c.flags:
        body = desugar_ref_method(c, body)
    return body


# ---------------------------------------------------------------- flow operators


def flow_test(x: A.Name, op: A.FlowOp, yes: TypeSig) -> A.Expr:
    """Boolean test for ``x ? op``; ``x`` must be a name (it may be read twice)."""
    if op.kind == "eq":
        lit = op.lit
        lt = lit.ty
        subject = x if x.ty == lt else typed(A.CastE(x, lt, True), lt)
        t: A.Expr = typed(A.Binary("==", subject, lit, pos=op.pos), BOOL, ("eq", False))
        if x.ty != lt:
            t = typed(A.Binary("&&", typed(A.IsE(x, lt), BOOL), t, pos=op.pos), BOOL)
        return mk_not(t) if op.neg else t
    return typed(A.IsE(x, yes, pos=op.pos), BOOL)


def flow_cast(x: A.Name, op: A.FlowOp, yes: TypeSig) -> A.Expr:
    if op.kind == "eq":
        return typed(
            A.IfE(flow_test(x, op, yes), typed(A.CastE(x, yes, True), yes), typed(A.FailE("cast-fail", pos=op.pos), yes)),
            yes,
        )
    return typed(A.CastE(x, yes, False, pos=op.pos), yes)


def as_name(e: A.Expr, fresh: Fresh, pre: list[A.Stmt]) -> A.Name:
    if isinstance(e, A.Name) and e.res and e.res[0] == "local":
        return e
    t = fresh()
    pre.append(mk_let(t, e, e.pos))
    return mk_name(t, e.ty)


def flow_exprs(x, fresh: Fresh):
    """Expression-level flow tests and casts."""

    def fn(e):
        if isinstance(e, (A.FlowTest, A.FlowCast)):
            yes, _ = e.res
            tgt = e.target
            if isinstance(tgt, A.Name) and tgt.res and tgt.res[0] == "local":
                n, wrap = tgt, None
            else:
                wrap = fresh()
                n = mk_name(wrap, tgt.ty)
            body = flow_test(n, e.op, yes) if isinstance(e, A.FlowTest) else flow_cast(n, e.op, yes)
            if wrap is None:
                return body
            return typed(A.LetE(wrap, tgt, body, pos=e.pos), body.ty)
        return e

    return rewrite(x, fn)


def early_exit(subject: A.Name, op: A.FlowOp, yes: TypeSig, no: TypeSig, pos) -> A.IfS:
    ret = A.ReturnS(typed(A.CastE(subject, no, True), no), pos=pos)
    return A.IfS([(None, mk_not(flow_test(subject, op, yes)), [ret])], None, pos=pos)


def desugar_flow_ops(stmts: list[A.Stmt], fresh: Fresh) -> list[A.Stmt]:
    """Remove ``??``/``@@``, narrowing statements, flow-ifs and match."""
    stmts = flow_exprs(stmts, fresh)
    return _flow_block(stmts, fresh)


def _flow_block(stmts: list[A.Stmt], fresh: Fresh) -> list[A.Stmt]:
    out: list[A.Stmt] = []
    for s in stmts:
        out.extend(_flow_stmt(s, fresh))
    return out


def _flow_stmt(s: A.Stmt, fresh: Fresh) -> list[A.Stmt]:
    if isinstance(s, (A.LetS, A.VarS, A.AssignS, A.ExprS)) and isinstance(getattr(s, "expr", None), A.FlowReturn):
        fr = s.expr
        yes, no = fr.res
        pre: list[A.Stmt] = []
        subj = as_name(fr.target, fresh, pre)
        pre.append(early_exit(subj, fr.op, yes, no, fr.pos))
        if isinstance(s, A.ExprS):
            return pre
        s = copy.copy(s)
        s.expr = typed(A.CastE(subj, yes, True), yes)
        return pre + [s]
    if isinstance(s, A.NarrowS):
        yes, no = s.info
        x = s.target
        if s.kind == "@":
            r = A.RebindS(x.name, flow_cast(x, s.op, yes), pos=s.pos)
            r.tyv = yes
            return [r]
        r = A.RebindS(x.name, typed(A.CastE(x, yes, True), yes), pos=s.pos)
        r.tyv = yes
        return [early_exit(x, s.op, yes, no, s.pos), r]
    if isinstance(s, A.IfS):
        return _flow_if(s.branches, s.else_, list(s.flowinfo or [None] * len(s.branches)), s.pos, fresh)
    if isinstance(s, A.MatchS):
        return _flow_match(s, fresh)
    if isinstance(s, A.BlockS):
        return [A.BlockS(_flow_block(s.body, fresh), pos=s.pos)]
    return [s]


def _flow_if(branches, else_, info, pos, fresh: Fresh) -> list[A.Stmt]:
    (flow, cond, body), bi = branches[0], info[0]
    body = _flow_block(body, fresh)
    else_info = info[len(branches)] if len(info) > len(branches) else None
    if len(branches) > 1:
        rest: list[A.Stmt] | None = _flow_if(branches[1:], else_, info[1:], pos, fresh)
    else:
        rest = _flow_block(else_, fresh) if else_ is not None else None
    if flow is None:
        return [A.IfS([(None, cond, body)], rest, pos=pos)]
    yes, no, bid = bi
    pre: list[A.Stmt] = []
    subj = as_name(cond, fresh, pre)
    if uses(bid, body):
        body = [mk_let(bid, typed(A.CastE(subj, yes, True), yes))] + body
    if else_info is not None and rest is not None:
        _, no2, bid_no = else_info
        if uses(bid_no, rest):
            rest = [mk_let(bid_no, typed(A.CastE(subj, no2, True), no2))] + rest
    return pre + [A.IfS([(None, flow_test(subj, flow, yes), body)], rest, pos=pos)]


def _flow_match(s: A.MatchS, fresh: Fresh) -> list[A.Stmt]:
    pre: list[A.Stmt] = []
    subj = as_name(s.subject, fresh, pre)

    def chain(i: int) -> list[A.Stmt]:
        pat, body = s.arms[i]
        yes, bid = s.arminfo[i]
        body = _flow_block(body, fresh)
        if uses(bid, body):
            body = [mk_let(bid, typed(A.CastE(subj, yes, True), yes))] + body
        if i == len(s.arms) - 1:
            return [A.BlockS(body, pos=pat.pos)]
        if pat.kind == "lit":
            cond = flow_test(subj, A.FlowOp("eq", lit=pat.lit, pos=pat.pos), yes)
        else:
            cond = typed(A.IsE(subj, yes, pos=pat.pos), BOOL)
        return [A.IfS([(None, cond, body)], chain(i + 1), pos=pat.pos)]

    return pre + chain(0)


# ---------------------------------------------------------------- bulk operations


def desugar_bulk_ops(x, u: Universe, fresh: Fresh):
    """``e.{f = v}`` becomes an atomic constructor over one evaluation of ``e``."""

    def fn(e):
        if not isinstance(e, A.BulkE):
            return e
        ent: NominalT = e.ty
        tgt = e.target
        if isinstance(tgt, A.Name) and tgt.res and tgt.res[0] == "local":
            src, wrap = tgt, None
        else:
            wrap = fresh()
            src = mk_name(wrap, ent)
        updated = {n for n, _ in e.updates}
        args: list[tuple[str, A.Expr]] = list(e.updates)
        for fname, fty in u.fields(ent):
            if fname not in updated:
                args.append((fname, typed(A.Access(src, fname), fty)))
        body: A.Expr = typed(A.ConstructE(A.TName(ent.name), args, pos=e.pos), ent, ("entity", ent))
        for fname, bid in reversed(e.res):
            if uses(bid, [v for _, v in e.updates]):
                fty = u.field_type(ent, fname)
                body = typed(A.LetE(bid, typed(A.Access(src, fname), fty), body), ent)
        if wrap is not None:
            body = typed(A.LetE(wrap, tgt, body, pos=e.pos), ent)
        return body

    return rewrite(x, fn)


# ---------------------------------------------------------------- lambdas


def defunctionalize_lambdas(x, reg: LiftRegistry):
    """Lift every lambda to a top-level function taking its captures first."""

    def fn(e):
        if not isinstance(e, A.Lambda):
            return e
        pnames = [p for p, _ in e.params]
        free = {n: t for n, t in free_locals(e.body).items() if n not in pnames}
        caps = sorted(free)
        name = reg.next_name()
        params = [(c, free[c]) for c in caps] + list(zip(pnames, e.res))
        reg.lifted.append(Lifted(name, params, e.ty, e.body, reg.owner))
        ref = A.LamRef(name, [mk_name(c, free[c]) for c in caps], e.kind, pos=e.pos)
        return typed(ref, e.ty)

    return rewrite(x, fn)


# ---------------------------------------------------------------- whole callables


def desugar_body(c: Callable, u: Universe, fresh: Fresh, reg: LiftRegistry) -> list[A.Stmt]:
    body = copy.deepcopy(c.body or [])
    body = resolve_binders(body)
    body = desugar_ref_methods(c, body, u, fresh)
    body = desugar_flow_ops(body, fresh)
    body = desugar_bulk_ops(body, u, fresh)
    return defunctionalize_lambdas(body, reg)


def desugar_expr(e: A.Expr, u: Universe, fresh: Fresh, reg: LiftRegistry) -> A.Expr:
    e = resolve_binders(copy.deepcopy(e))
    e = flow_exprs(e, fresh)
    e = desugar_bulk_ops(e, u, fresh)
    return defunctionalize_lambdas(e, reg)
