"""Error-site enumeration over lowered programs."""

from __future__ import annotations

from dataclasses import dataclass

from lxlang.ir import nodes as I
from lxlang.runtime.evaluator import CheckConfig
from lxlang.runtime.functors import functor_error_codes
from lxlang.typesys.typesig import ListT, NominalT, Prim, TypedeclT, TypeSig

SELF_ENTRY_KINDS = ("function", "method", "static", "const", "invariant", "validate", "tdinvariant")


@dataclass(frozen=True)
class ErrorSite:
    """One place where evaluation can stop with ``code``.

    ``key`` matches :attr:`lxlang.runtime.evaluator.ErrorInfo.site`, so a
    witness is confirmed by comparing the evaluator's error against it.
    ``entry`` is the function whose arguments the verifier makes symbolic.
    """

    id: int
    function: str
    path: str
    code: str
    sub: object
    entry: str

    @property
    def key(self) -> tuple:
        return (self.function, self.path, self.code, self.sub)

    @property
    def position(self) -> str:
        return f"{self.function}@{self.path}"

    def describe(self) -> str:
        sub = f"#{self.sub}" if self.sub not in (0, None) else ""
        return f"{self.function}@{self.path} {self.code}{sub}"


def entry_of(program: I.IRProgram, name: str) -> str:
    """The function whose call exposes the sites of ``name``."""
    seen = set()
    fn = program.function(name)
    while fn.kind not in SELF_ENTRY_KINDS and fn.owner and fn.owner not in seen and program.has(fn.owner):
        seen.add(fn.name)
        fn = program.function(fn.owner)
    return fn.name


def _int_kind(t: TypeSig) -> str | None:
    if isinstance(t, TypedeclT):
        return _int_kind(t.base)
    return t.name if isinstance(t, Prim) else None


def prim_codes(op: str, arg_types: list[TypeSig], result: TypeSig) -> tuple[str, ...]:
    """Error codes a primitive can raise, given operand kinds."""
    kind = _int_kind(arg_types[0]) if arg_types else None
    if op in ("+", "*"):
        return {"Nat": ("overflow",), "Int": ("overflow",), "Decimal": ("overflow",)}.get(kind, ())
    if op == "-":
        return {"Nat": ("nat-underflow",), "Int": ("overflow",), "BigNat": ("nat-underflow",),
                "Decimal": ("overflow",)}.get(kind, ())
    if op == "/":
        if kind == "Int":
            return ("div-zero", "overflow")
        if kind == "Decimal":
            return ("div-zero", "overflow")
        return ("div-zero",) if kind in ("Nat", "BigNat", "BigInt", "Float", "Rational") else ()
    if op == "%":
        return ("div-zero",) if kind in ("Nat", "Int", "BigNat", "BigInt") else ()
    if op == "neg":
        return {"Nat": ("nat-underflow",), "Int": ("overflow",), "BigNat": ("nat-underflow",)}.get(kind, ())
    if op.startswith("to"):
        target = op[2:]
        codes = []
        if target in ("Nat", "BigNat") and kind in ("Int", "BigInt"):
            codes.append("nat-underflow")
        if target == "Nat" and kind in ("BigNat", "BigInt"):
            codes.append("overflow")
        if target == "Int" and kind in ("Nat", "BigNat", "BigInt"):
            codes.append("overflow")
        return tuple(codes)
    return ()


def node_sites(n: I.Node, program: I.IRProgram, cfg: CheckConfig) -> list[tuple[str, object]]:
    """``(code, sub)`` pairs the node itself can raise, in evaluation order."""
    out: list[tuple[str, object]] = []
    if isinstance(n, I.Call):
        callee = program.function(n.fn)
        out += [("precondition-fail", k) for k, (lv, _) in enumerate(callee.requires) if cfg.enabled(lv)]
    elif isinstance(n, I.FunctorApp):
        if n.spec is not None:
            spec = program.function(n.spec)
            out += [("precondition-fail", k) for k, (lv, _) in enumerate(spec.requires) if cfg.enabled(lv)]
        elem = None
        if n.name == "sum" and n.args and isinstance(n.args[0].ty, ListT):
            elem = _int_kind(n.args[0].ty.elem)
        elif n.name == "sumOf":
            elem = _int_kind(n.ty)
        out += [(c, 0) for c in functor_error_codes(n.name, elem)]
    elif isinstance(n, (I.Construct, I.Inject)):
        out += [("invariant-fail", k) for k, c in enumerate(n.checks) if cfg.enabled(c.level)]
    elif isinstance(n, I.AsCast) and not n.safe:
        out.append(("cast-fail", 0))
    elif isinstance(n, I.Assert) and cfg.enabled(n.level):
        out.append((n.code, 0))
    elif isinstance(n, I.Fail):
        out.append((n.code, 0))
    elif isinstance(n, I.PrimOp):
        out += [(c, 0) for c in prim_codes(n.op, [a.ty for a in n.args], n.ty)]
    return out


def validate_checks(program: I.IRProgram, t: TypeSig, cfg: CheckConfig, seen: set | None = None) -> list[str]:
    """Names of enabled validate functions reachable inside values of ``t``."""
    from lxlang.typesys.typesig import MapT, RecordT, TupleT, UnionT

    seen = set() if seen is None else seen
    out: list[str] = []
    if isinstance(t, UnionT):
        for m in program.types.atoms(t):
            out += validate_checks(program, m, cfg, seen)
    elif isinstance(t, NominalT):
        if t in seen:
            return out
        seen.add(t)
        atoms = program.types.atoms(t)
        if atoms != (t,):
            for m in atoms:
                out += validate_checks(program, m, cfg, seen)
            return out
        for _, ft in program.types.field_types(t):
            out += validate_checks(program, ft, cfg, seen)
        ent = program.types.entity(t.name)
        if ent is not None:
            out += [c.fn for c in ent.validates if cfg.enabled(c.level)]
    elif isinstance(t, ListT):
        out += validate_checks(program, t.elem, cfg, seen)
    elif isinstance(t, MapT):
        out += validate_checks(program, t.key, cfg, seen) + validate_checks(program, t.value, cfg, seen)
    elif isinstance(t, TupleT):
        for i in t.items:
            out += validate_checks(program, i, cfg, seen)
    elif isinstance(t, RecordT):
        for _, i in t.fields:
            out += validate_checks(program, i, cfg, seen)
    return out


def enumerate_error_sites(program: I.IRProgram, cfg: CheckConfig | None = None,
                          ingest: frozenset[str] | set[str] = frozenset()) -> list[ErrorSite]:
    """Every site whose level is enabled, ordered by function name then evaluation position.

    The entry's own ``requires`` are assumptions rather than sites. Functions
    in ``ingest`` also get one site per validate reachable from their params.
    """
    cfg = cfg or CheckConfig()
    raw: list[tuple[str, str, str, object]] = []
    for fn in sorted(program.functions, key=lambda f: f.name):
        if fn.name in ingest:
            names: list[str] = []
            for _, t in fn.params:
                for v in validate_checks(program, t, cfg):
                    if v not in names:
                        names.append(v)
            raw += [(fn.name, "ingest", "validate-fail", v) for v in names]
        roots = [(f"r{k}", lv, e) for k, (lv, e) in enumerate(fn.requires)]
        roots.append(("b", "safety", fn.body))
        roots += [(f"e{k}", lv, e) for k, (lv, e) in enumerate(fn.ensures)]
        for root, level, expr in roots:
            if not cfg.enabled(level):
                continue
            for n in I.walk(expr):
                raw += [(fn.name, n.path, code, sub) for code, sub in node_sites(n, program, cfg)]
            if root.startswith("e"):
                raw.append((fn.name, root, "postcondition-fail", int(root[1:])))
    out = []
    for i, (f, path, code, sub) in enumerate(raw):
        out.append(ErrorSite(i, f, path, code, sub, entry_of(program, f)))
    return out


__all__ = ["ErrorSite", "enumerate_error_sites", "entry_of", "node_sites", "prim_codes", "validate_checks"]
