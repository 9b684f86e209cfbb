"""Reference evaluator for IR programs.

Every evaluation yields exactly one :class:`Outcome`. Errors carry the site
``(function, path, code, sub)`` of the node that raised them; the verifier uses
the same keys, which is what lets a witness be confirmed by re-running it.
"""

from __future__ import annotations

import sys
import threading
from dataclasses import dataclass, field
from typing import Callable as Fn

from lxlang.ir import nodes as I
from lxlang.regex import full_match
from lxlang.runtime.functors import run_functor
from lxlang.runtime.ops import LxError, arith, compare, convert, negate
from lxlang.runtime.values import (
    EntityV,
    IntV,
    ListV,
    StrV,
    TupleV,
    TypedeclV,
    conforms,
    make_map,
    make_record,
    show,
)
from lxlang.typesys.typesig import MapT, NominalT, TypeSig

LEVEL_ORDER = ("release", "test", "debug", "spec")
DEFAULT_BUDGET = 10_000
STACK_BYTES = 512 * 1024 * 1024


@dataclass(frozen=True)
class CheckConfig:
    """Enabled check levels; ``safety`` checks always run."""

    levels: frozenset[str] = frozenset({"release"})
    budget: int = DEFAULT_BUDGET

    def enabled(self, level: str) -> bool:
        return level == "safety" or level in self.levels

    @classmethod
    def at(cls, level: str, budget: int = DEFAULT_BUDGET) -> CheckConfig:
        """``level`` plus every level below it (release < test < debug < spec)."""
        k = LEVEL_ORDER.index(level)
        return cls(frozenset(LEVEL_ORDER[: k + 1]), budget)


@dataclass(frozen=True)
class ErrorInfo:
    code: str
    fn: str
    path: str
    sub: object = 0
    message: str = ""

    @property
    def site(self) -> tuple:
        return (self.fn, self.path, self.code, self.sub)

    def serialize(self) -> str:
        return f"error {self.code} at {self.fn}@{self.path}#{self.sub}: {self.message}"


@dataclass(frozen=True)
class Outcome:
    value: object = None
    error: ErrorInfo | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def serialize(self) -> str:
        if self.error is not None:
            return self.error.serialize()
        return "ok " + show(self.value)


class TypeView:
    """Subtype closure derived from the IR type table (what ``conforms`` needs)."""

    def __init__(self, types: I.TypeTable):
        self.closure = {e.name: frozenset(e.provides) for e in types.entities}


def conforms_to(v, t: TypeSig, view: TypeView) -> bool:
    return conforms(v, t, view)


# ---------------------------------------------------------------- deep recursion


_deep = threading.local()


def run_deep(fn: Fn, *args):
    """Run ``fn`` on a thread with a large stack so budgeted recursion cannot overflow."""
    if getattr(_deep, "active", False):
        return fn(*args)
    box: dict = {}

    def target() -> None:
        _deep.active = True
        try:
            box["r"] = fn(*args)
        except BaseException as exc:  # re-raised on the caller's thread
            box["e"] = exc

    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 1_000_000))
    old_size = threading.stack_size()
    threading.stack_size(STACK_BYTES)
    try:
        t = threading.Thread(target=target)
        t.start()
    finally:
        threading.stack_size(old_size)
    t.join()
    if "e" in box:
        raise box["e"]
    return box["r"]


# ---------------------------------------------------------------- evaluator


@dataclass
class Evaluator:
    program: I.IRProgram
    cfg: CheckConfig = field(default_factory=CheckConfig)
    depth: int = 0

    def __post_init__(self) -> None:
        self.fns = self.program.index()
        self.view = TypeView(self.program.types)

    # ------------------------------------------------------------ calls

    def call(self, name: str, args: list, caller: tuple[str, str] | None) -> object:
        """Call ``name``; requires failures are reported at ``caller`` when given."""
        fn = self.fns[name]
        self.depth += 1
        try:
            if self.depth > self.cfg.budget:
                where = caller or (name, "b")
                raise LxError("recursion-budget-exceeded", f"call depth exceeds {self.cfg.budget}",
                              site=(where[0], where[1], "recursion-budget-exceeded", 0))
            env = {p: a for (p, _), a in zip(fn.params, args)}
            for k, (level, e) in enumerate(fn.requires):
                if self.cfg.enabled(level) and self.eval(e, env, name) is not True:
                    where = caller or (name, f"r{k}")
                    raise LxError("precondition-fail", f"requires #{k} of {name}",
                                  site=(where[0], where[1], "precondition-fail", k))
            result = self.eval(fn.body, env, name)
            if fn.ensures:
                env["$return"] = result
                for k, (level, e) in enumerate(fn.ensures):
                    if self.cfg.enabled(level) and self.eval(e, env, name) is not True:
                        raise LxError("postcondition-fail", f"ensures #{k} of {name}",
                                      site=(name, f"e{k}", "postcondition-fail", k))
            return result
        finally:
            self.depth -= 1

    def run_checks(self, checks, env_of: Fn[[str], object], fn: str, path: str) -> None:
        for k, c in enumerate(checks):
            if not self.cfg.enabled(c.level):
                continue
            args = [env_of(p) for p in c.params]
            if self.call(c.fn, args, None) is not True:
                raise LxError("invariant-fail", f"invariant {c.fn} does not hold",
                              site=(fn, path, "invariant-fail", k))

    # ------------------------------------------------------------ expressions

    def eval(self, n: I.Node, env: dict, fn: str):
        try:
            return self._eval(n, env, fn)
        except LxError as exc:
            if exc.site is None:
                exc.site = (fn, n.path, exc.code, 0)
            raise

    def _eval(self, n: I.Node, env: dict, fn: str):
        ev = self.eval
        t = type(n)
        if t is I.Var:
            return env[n.name]
        if t is I.Const:
            return n.value
        if t is I.Let:
            env[n.name] = ev(n.bound, env, fn)
            return ev(n.body, env, fn)
        if t is I.Ite:
            return ev(n.then if ev(n.cond, env, fn) is True else n.else_, env, fn)
        if t is I.Call:
            args = [ev(a, env, fn) for a in n.args]
            return self.call(n.fn, args, (fn, n.path))
        if t is I.PrimOp:
            return self.prim(n, [ev(a, env, fn) for a in n.args])
        if t is I.Equal:
            return (ev(n.left, env, fn) == ev(n.right, env, fn)) != n.neg
        if t is I.Access:
            v = ev(n.expr, env, fn)
            if n.kind == "index":
                return v.items[n.key]
            if isinstance(v, EntityV):
                return v.get(n.key)
            for name, x in v.fields:
                if name == n.key:
                    return x
            raise KeyError(n.key)
        if t is I.IsTest:
            v = ev(n.expr, env, fn)
            return any(conforms(v, a, self.view) for a in n.atoms)
        if t is I.AsCast:
            v = ev(n.expr, env, fn)
            if not n.safe and not conforms(v, n.target, self.view):
                raise LxError("cast-fail", f"{show(v)} is not a {n.target}", site=(fn, n.path, "cast-fail", 0))
            return v
        if t is I.Construct:
            vals = [ev(a, env, fn) for a in n.args]
            fields = tuple(zip(n.names, vals))
            d = dict(fields)
            self.run_checks(n.checks, d.__getitem__, fn, n.path)
            return EntityV(n.entity.name, fields, n.entity.args)
        if t is I.Inject:
            v = ev(n.expr, env, fn)
            self.run_checks(n.checks, lambda _p: v, fn, n.path)
            return TypedeclV(n.td.name, v, n.td.base)
        if t is I.Extract:
            return ev(n.expr, env, fn).base
        if t is I.FunctorApp:
            caps = [ev(c, env, fn) for c in n.captures]
            args = [ev(a, env, fn) for a in n.args]
            f = None
            if n.spec is not None:
                spec, site = n.spec, (fn, n.path)
                f = lambda *xs: self.call(spec, caps + list(xs), site)  # noqa: E731
            try:
                return run_functor(n.name, args, f, n.ty)
            except LxError as exc:
                if exc.site is None:
                    exc.site = (fn, n.path, exc.code, 0)
                raise
        if t is I.TupleNew:
            return TupleV(tuple(ev(a, env, fn) for a in n.items))
        if t is I.RecordNew:
            return make_record([(k, ev(a, env, fn)) for k, a in zip(n.names, n.args)])
        if t is I.ListNew:
            return ListV(tuple(ev(a, env, fn) for a in n.items), n.ty.elem)
        if t is I.MapNew:
            vals = [ev(a, env, fn) for a in n.args]
            mt: MapT = n.ty
            return make_map([(vals[i], vals[i + 1]) for i in range(0, len(vals), 2)], mt.key, mt.value)
        if t is I.Assert:
            if self.cfg.enabled(n.level) and ev(n.cond, env, fn) is not True:
                raise LxError(n.code, "assertion does not hold", site=(fn, n.path, n.code, 0))
            return ev(n.body, env, fn)
        if t is I.Fail:
            raise LxError(n.code, "explicit failure", site=(fn, n.path, n.code, 0))
        raise TypeError(f"cannot evaluate {t.__name__}")

    def prim(self, n: I.PrimOp, a: list):
        op = n.op
        if op in ("+", "-", "*", "/", "%"):
            return arith(op, a[0], a[1])
        if op in ("<", "<=", ">", ">="):
            return compare(op, a[0], a[1])
        if op == "neg":
            return negate(a[0])
        if op == "not":
            return not a[0]
        if op.startswith("to"):
            return convert(op[2:], a[0])
        if op == "strlen":
            return IntV("Nat", len(a[0].v))
        if op == "concat":
            return StrV("".join(x.v for x in a), "String")
        raise TypeError(f"unknown primitive {op}")


# ---------------------------------------------------------------- public entry points


def _outcome(thunk: Fn[[], object]) -> Outcome:
    try:
        return Outcome(value=run_deep(thunk))
    except LxError as exc:
        fn, path, code, sub = exc.site if exc.site is not None else ("", "", exc.code, 0)
        return Outcome(error=ErrorInfo(code, fn, path, sub, exc.message))


def evaluate(program: I.IRProgram, entry: str, args: list, cfg: CheckConfig | None = None,
             ingest: bool = False) -> Outcome:
    """Call ``entry`` with ``args``; with ``ingest`` the validates of entity arguments run first."""
    ev = Evaluator(program, cfg or CheckConfig())

    def thunk():
        if ingest:
            fn = program.function(entry)
            for (_, _), v in zip(fn.params, args):
                run_validates(ev, v, entry)
        return ev.call(entry, list(args), None)

    return _outcome(thunk)


def run_validates(ev: Evaluator, v, where: str) -> None:
    """Run ``validate`` members of every entity inside ``v``, innermost first."""
    for child in _children(v):
        run_validates(ev, child, where)
    if isinstance(v, EntityV):
        ent = ev.program.types.entity(v.name)
        if ent is None:
            return
        d = dict(v.fields)
        for c in ent.validates:
            if not ev.cfg.enabled(c.level):
                continue
            if ev.call(c.fn, [d[p] for p in c.params], None) is not True:
                raise LxError("validate-fail", f"validate {c.fn} does not hold",
                              site=(where, "ingest", "validate-fail", c.fn))


def _children(v):
    if isinstance(v, EntityV):
        return [x for _, x in v.fields]
    if isinstance(v, (TupleV, ListV)):
        return list(v.items)
    if hasattr(v, "entries"):
        return [x for kv in v.entries for x in kv]
    if hasattr(v, "fields") and not isinstance(v, EntityV):
        return [x for _, x in v.fields]
    return []


def construct_checked(program: I.IRProgram, type_name: str, fields: dict, cfg: CheckConfig | None = None,
                      args: tuple = ()) -> Outcome:
    """Build an entity value, running its enabled invariants inherited-first."""
    ev = Evaluator(program, cfg or CheckConfig())
    ent = program.types.entity(type_name)
    names = [n for n, _ in program.types.field_types(NominalT(type_name, args))]

    def thunk():
        vals = tuple((n, fields[n]) for n in names)
        checks = ent.invariants if ent is not None else ()
        ev.run_checks(checks, fields.__getitem__, type_name, "construct")
        return EntityV(type_name, vals, args)

    return _outcome(thunk)


def eval_functor(name: str, spec: Fn | None, captures: list, containers: list, result_type: TypeSig) -> Outcome:
    """Apply one catalog functor; ``spec`` is a host callable taking captures then elements."""
    f = None
    if spec is not None:
        f = lambda *xs: spec(*captures, *xs)  # noqa: E731

    def thunk():
        try:
            return run_functor(name, containers, f, result_type)
        except LxError as exc:
            if exc.site is None:
                exc.site = ("<functor>", name, exc.code, 0)
            raise

    return _outcome(thunk)


def eval_string_validator(program_or_regex, validator: str | None, s: str) -> bool:
    """Anchored match of ``s`` against a validator typedecl (or a raw pattern)."""
    if isinstance(program_or_regex, str):
        return full_match(program_or_regex, s)
    td = program_or_regex.types.typedecl(validator)
    if td is None or td.regex is None:
        raise KeyError(f"{validator} is not a regex validator")
    return full_match(td.regex, s)


__all__ = [
    "CheckConfig",
    "ErrorInfo",
    "Outcome",
    "Evaluator",
    "evaluate",
    "construct_checked",
    "eval_functor",
    "eval_string_validator",
    "run_validates",
    "run_deep",
]
