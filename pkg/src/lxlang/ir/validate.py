"""Structural well-formedness checks for IR programs."""

from __future__ import annotations

from dataclasses import dataclass

import networkx as nx

from lxlang.ir import nodes as I
from lxlang.runtime.functors import CATALOG
from lxlang.typesys.typesig import is_key_type, members

LEVELS = ("spec", "debug", "test", "release", "safety")


@dataclass(frozen=True)
class Violation:
    fn: str
    path: str
    rule: str
    message: str

    def __str__(self) -> str:
        return f"{self.fn}@{self.path}: [{self.rule}] {self.message}"


def _key_operand(t) -> bool:
    ms = members(t)
    return bool(ms) and all(is_key_type(m) for m in ms)


def validate_function(fn: I.IRFunction, program: I.IRProgram) -> list[Violation]:
    out: list[Violation] = []
    params = [p for p, _ in fn.params]

    def bad(path: str, rule: str, msg: str) -> None:
        out.append(Violation(fn.name, path, rule, msg))

    if len(set(params)) != len(params):
        bad("", "duplicate-binding", "duplicate parameter names")
    bound: set[str] = set(params)
    for root, expr in fn.roots():
        allowed = set(params) | ({"$return"} if root.startswith("e") else set())
        for v in sorted(I.free_vars(expr) - allowed):
            bad(root, "free-variable", f"{v} is not bound")
        for n in I.walk(expr):
            if isinstance(n, I.Let):
                if n.name in bound:
                    bad(n.path, "duplicate-binding", f"let {n.name} is bound more than once")
                bound.add(n.name)
            elif isinstance(n, I.Call):
                if not program.has(n.fn):
                    bad(n.path, "unresolved-name", f"call to unknown function {n.fn}")
                elif len(program.function(n.fn).params) != len(n.args):
                    bad(n.path, "arity", f"{n.fn} expects {len(program.function(n.fn).params)} arguments")
            elif isinstance(n, I.FunctorApp):
                if n.name not in CATALOG:
                    bad(n.path, "functor-catalog", f"{n.name} is not a catalog functor")
                if n.spec is not None and not program.has(n.spec):
                    bad(n.path, "unresolved-name", f"unknown specialization {n.spec}")
            elif isinstance(n, I.Equal):
                for side in (n.left, n.right):
                    if not _key_operand(side.ty):
                        bad(n.path, "key-type", f"equality on non-key type {side.ty}")
            elif isinstance(n, I.PrimOp):
                if n.op not in I.PRIM_OPS:
                    bad(n.path, "unknown-op", f"unknown primitive {n.op}")
            elif isinstance(n, I.Assert):
                if n.level not in LEVELS:
                    bad(n.path, "level", f"unknown level {n.level}")
            if isinstance(n, (I.Construct, I.Inject)):
                for c in n.checks:
                    if not program.has(c.fn):
                        bad(n.path, "unresolved-name", f"unknown check function {c.fn}")
    return out


def validate_ir(program: I.IRProgram) -> list[Violation]:
    """All violations, or an empty list when the program is well formed."""
    out: list[Violation] = []
    names = [f.name for f in program.functions]
    if len(set(names)) != len(names):
        out.append(Violation("", "", "duplicate-function", "function names are not unique"))
    for e in program.entries:
        if not program.has(e):
            out.append(Violation(e, "", "unresolved-name", "entry point does not exist"))
    g = nx.DiGraph()
    for f in program.functions:
        out.extend(validate_function(f, program))
        g.add_node(f.name)
        for _, expr in f.roots():
            for n in I.walk(expr):
                if isinstance(n, I.Call):
                    g.add_edge(f.name, n.fn)
                elif isinstance(n, I.FunctorApp) and n.spec:
                    g.add_edge(f.name, n.spec)
    for comp in nx.strongly_connected_components(g):
        cyclic = len(comp) > 1 or any(g.has_edge(c, c) for c in comp)
        if not cyclic:
            continue
        for name in sorted(comp):
            if program.has(name) and not program.function(name).recursive:
                out.append(Violation(name, "", "recursion", "part of a call cycle but not marked recursive"))
    return sorted(out, key=lambda v: (v.fn, v.path, v.rule, v.message))


__all__ = ["Violation", "validate_ir", "validate_function"]
