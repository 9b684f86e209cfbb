"""Lowering from the typed surface tree to the core IR."""

from __future__ import annotations

from lxlang.diagnostics import CompileError, error
from lxlang.frontend import ast as A
from lxlang.ir import nodes as I
from lxlang.lowering.desugar import (
    Fresh,
    LiftRegistry,
    defunctionalize_lambdas,
    desugar_body,
    desugar_bulk_ops,
    desugar_expr,
    desugar_flow_ops,
    desugar_ref_methods,
    ref_ensures,
    ref_result,
)
from lxlang.lowering.treeify import Treeifier, simplify, to_dsa, uniquify
from lxlang.typesys.checker import CheckedProgram, contains_defer
from lxlang.typesys.typesig import NONE, NominalT
from lxlang.typesys.universe import Callable, Universe

ENTRY_KINDS = ("function", "method", "static")


def treeify(stmts: list[A.Stmt], t: Treeifier) -> I.Node:
    """Turn a DSA statement list into one IR expression."""
    return t.seq(stmts, 0, None)


def _finish(fn: I.IRFunction) -> I.IRFunction:
    from dataclasses import replace

    fn = replace(
        fn,
        requires=tuple((lv, simplify(e)) for lv, e in fn.requires),
        ensures=tuple((lv, simplify(e)) for lv, e in fn.ensures),
        body=simplify(fn.body),
    )
    return I.number_function(uniquify(fn))


def lower_callable(c: Callable, u: Universe) -> list[I.IRFunction]:
    """Lower one callable plus the lambdas and continuations it spawns."""
    fresh = Fresh()
    reg = LiftRegistry(c.key)
    is_ref = "ref" in c.flags
    result = ref_result(c) if is_ref else (c.result if c.result is not None else NONE)
    params = tuple(c.params)
    t = Treeifier(c.key, result, u, fresh, types=dict(params), recursive=c.recursive)
    out: list[I.IRFunction] = []
    if c.kind in ENTRY_KINDS:
        if contains_defer(c.body):
            raise CompileError([error(c.pos, f"{c.key} has a deferred body; splice an implementation first")])
        body_stmts = desugar_body(c, u, fresh, reg)
        body = treeify(to_dsa(body_stmts, list(params)), t)
        reqs = tuple((lv, t.expr(desugar_expr(e, u, fresh, reg))) for lv, e in c.requires)
        ens_list = []
        for lv, e in c.ensures:
            e2 = desugar_expr(e, u, fresh, reg)
            if is_ref:
                e2 = ref_ensures(c, e2)
            t.types["$return"] = result
            ens_list.append((lv, t.expr(e2)))
        fn = I.IRFunction(c.key, c.kind, params, result, reqs, tuple(ens_list), body,
                          recursive=c.recursive, owner=None)
    else:
        if c.kind == "tdinvariant":
            params = (("$value", c.params[0][1]),)
            t.types.update(params)
        body = t.expr(desugar_expr(c.body, u, fresh, reg))
        fn = I.IRFunction(c.key, c.kind, params, result, (), (), body)
    out.append(_finish(fn))
    for k in t.conts:
        out.append(_finish(k))
    for lam in reg.lifted:
        lt = Treeifier(c.key, lam.result, u, fresh, types=dict(lam.params), recursive=c.recursive)
        lbody = lt.expr(lam.body)
        out.append(_finish(I.IRFunction(lam.name, "lambda", tuple(lam.params), lam.result, (), (),
                                        I.AsCast(lbody, lam.result, True) if lbody.ty != lam.result else lbody,
                                        recursive=c.recursive, owner=lam.owner)))
        out.extend(_finish(k) for k in lt.conts)
    return out


def build_type_table(u: Universe) -> I.TypeTable:
    ents = []
    concepts = []
    for name in sorted(u.nominals):
        info = u.nominals[name]
        fields = tuple(u.fields(NominalT(name)))
        if info.is_concept:
            concepts.append(I.ConceptEntry(name, fields, tuple(u.providers(name))))
            continue
        def checks(kind: str) -> tuple[I.Check, ...]:
            return tuple(
                I.Check(ci.level, ci.fn, tuple(p for p, _ in u.callables[ci.fn].params))
                for ci in u.checks(name, kind)
            )
        ents.append(I.EntityEntry(name, fields, tuple(sorted(u.closure.get(name, ()))),
                                  checks("invariant"), checks("validate")))
    tds = []
    for name in sorted(u.typedecls):
        td = u.typedecls[name]
        tds.append(I.TypedeclEntry(name, td.base, td.regex,
                                   tuple(I.Check(ci.level, ci.fn, ("$value",)) for ci in td.invariants)))
    return I.TypeTable(tuple(ents), tuple(concepts), tuple(tds))


def lower_program(cp: CheckedProgram) -> I.IRProgram:
    """Lower a successfully checked program."""
    if cp.errors:
        raise CompileError(cp.errors)
    u = cp.universe
    fns: list[I.IRFunction] = []
    for key in sorted(u.callables):
        c = u.callables[key]
        if c.abstract:
            continue
        fns.extend(lower_callable(c, u))
    fns.sort(key=lambda f: f.name)
    entries = tuple(sorted(k for k, c in u.callables.items() if c.kind in ENTRY_KINDS and not c.abstract))
    return I.IRProgram(build_type_table(u), tuple(fns), entries, universe=u)


def compile_source(source: str, file: str = "<input>") -> I.IRProgram:
    """Parse, check and lower source text."""
    from lxlang.frontend.parser import parse_source
    from lxlang.typesys.checker import check_program

    return lower_program(check_program(parse_source(source, file)))


__all__ = [
    "lower_program",
    "compile_source",
    "build_type_table",
    "desugar_flow_ops",
    "desugar_bulk_ops",
    "desugar_ref_methods",
    "defunctionalize_lambdas",
    "to_dsa",
    "treeify",
]
