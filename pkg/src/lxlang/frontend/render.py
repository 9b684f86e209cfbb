"""Pretty-printer for the surface tree.

The output re-parses to a structurally identical tree: compound subexpressions
are parenthesized, so layout and precedence never matter.
"""

from __future__ import annotations

import json

from lxlang.frontend import ast as A

IND = "    "
SUFFIX = {"Int": "i", "Nat": "n", "BigInt": "I", "BigNat": "N", "Float": "f", "Decimal": "d"}


def render(program: A.Program) -> str:
    return "\n".join(render_decl(d) for d in program.decls)


def render_type(t: A.TypeExpr) -> str:
    if isinstance(t, A.TName):
        if t.args:
            return f"{t.name}<" + ", ".join(render_type(a) for a in t.args) + ">"
        return t.name
    if isinstance(t, A.TTuple):
        return "[" + ", ".join(render_type(i) for i in t.items) + "]"
    if isinstance(t, A.TRecord):
        return "{" + ", ".join(f"{n}: {render_type(i)}" for n, i in t.fields) + "}"
    if isinstance(t, A.TUnion):
        return "(" + " | ".join(render_type(i) for i in t.items) + ")"
    raise TypeError(t)


def render_string(s: str) -> str:
    out = []
    for ch in s:
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        elif ch == "\r":
            out.append("\\r")
        elif ord(ch) < 32 or ord(ch) == 127:
            out.append("\\u{%x}" % ord(ch))
        else:
            out.append(ch)
    return '"' + "".join(out) + '"'


def render_flow(op: A.FlowOp) -> str:
    head = "!" if op.neg else ""
    if op.kind == "type":
        return f"{head}<{render_type(op.type)}>"
    if op.kind == "eq":
        return f"{head}[{render_expr(op.lit)}]"
    return head + op.kind


def render_lit(e: A.Lit) -> str:
    if e.kind == "none":
        return "none"
    if e.kind == "bool":
        return "true" if e.value else "false"
    if e.kind == "String":
        return render_string(e.value)
    if e.kind == "Rational":
        return f"{e.value}R"
    if e.kind == "untyped":
        return str(e.value)
    return f"{e.value}{SUFFIX[e.kind]}"


def atomic(e: A.Expr) -> str:
    """Render ``e`` so it can sit in any operand or postfix position."""
    s = render_expr(e)
    if isinstance(e, (A.Binary, A.Unary, A.IfE, A.Lambda)):
        return f"({s})"
    return s


def args_text(args: list[A.Expr]) -> str:
    return "(" + ", ".join(render_expr(a) for a in args) + ")"


def targs_text(targs: list[A.TypeExpr]) -> str:
    return "<" + ", ".join(render_type(t) for t in targs) + ">" if targs else ""


def render_expr(e: A.Expr) -> str:
    if isinstance(e, A.Lit):
        return render_lit(e)
    if isinstance(e, A.TypedLit):
        if e.is_string:
            return render_string(e.text) + e.type_name
        return f"{e.text}_{e.type_name}"
    if isinstance(e, A.Name):
        return e.name
    if isinstance(e, A.Binder):
        return "$" + e.name
    if isinstance(e, A.This):
        return "this"
    if isinstance(e, A.Elided):
        return "..."
    if isinstance(e, A.TupleE):
        return "[" + ", ".join(render_expr(i) for i in e.items) + "]"
    if isinstance(e, A.RecordE):
        return "{" + ", ".join(f"{n}={render_expr(v)}" for n, v in e.fields) + "}"
    if isinstance(e, A.ConstructE):
        parts = [(f"{n}={render_expr(v)}" if n else render_expr(v)) for n, v in e.args]
        return render_type(e.type) + "{" + ", ".join(parts) + "}"
    if isinstance(e, A.MapE):
        parts = [f"{render_expr(k)} => {render_expr(v)}" for k, v in e.entries]
        return render_type(e.type) + "{" + ", ".join(parts) + "}"
    if isinstance(e, A.BulkE):
        return atomic(e.target) + ".{" + ", ".join(f"{n}={render_expr(v)}" for n, v in e.updates) + "}"
    if isinstance(e, A.Access):
        return f"{atomic(e.target)}.{e.name}"
    if isinstance(e, A.IndexE):
        return f"{atomic(e.target)}.{e.index}"
    if isinstance(e, A.Unary):
        return f"{e.op}{atomic(e.operand)}"
    if isinstance(e, A.Binary):
        return f"{atomic(e.left)} {e.op} {atomic(e.right)}"
    if isinstance(e, A.CallE):
        rec = "[recursive]" if e.recursive else ""
        return f"{e.name}{targs_text(e.targs)}{rec}{args_text(e.args)}"
    if isinstance(e, A.StaticCall):
        rec = "[recursive]" if e.recursive else ""
        tail = args_text(e.args) if e.args is not None else ""
        return f"{render_type(e.owner)}::{e.name}{targs_text(e.targs)}{rec}{tail}"
    if isinstance(e, A.MethodCall):
        rec = "[recursive]" if e.recursive else ""
        head = "ref " if e.ref else ""
        return f"{head}{atomic(e.receiver)}.{e.name}{targs_text(e.targs)}{rec}{args_text(e.args)}"
    if isinstance(e, A.Lambda):
        ps = ", ".join(n + (f": {render_type(t)}" if t is not None else "") for n, t in e.params)
        return f"{e.kind}({ps}) => {atomic(e.body)}"
    if isinstance(e, A.FlowTest):
        return f"{atomic(e.target)}?{render_flow(e.op)}"
    if isinstance(e, A.FlowCast):
        return f"{atomic(e.target)}@{render_flow(e.op)}"
    if isinstance(e, A.FlowReturn):
        return f"{atomic(e.target)} {e.kind} {render_flow(e.op)}"
    if isinstance(e, A.IfE):
        return f"if {atomic(e.cond)} then {atomic(e.then)} else {atomic(e.else_)}"
    raise TypeError(f"cannot render {type(e).__name__}")


def level_text(level: str | None) -> str:
    return f"{level} " if level else ""


def render_block(stmts: list[A.Stmt], depth: int) -> str:
    if not stmts:
        return "{\n" + IND * depth + "}"
    inner = "\n".join(render_stmt(s, depth + 1) for s in stmts)
    return "{\n" + inner + "\n" + IND * depth + "}"


def render_stmt(s: A.Stmt, depth: int) -> str:
    pad = IND * depth
    if isinstance(s, A.LetS):
        ty = f": {render_type(s.type)}" if s.type is not None else ""
        return f"{pad}let {s.name}{ty} = {render_expr(s.expr)};"
    if isinstance(s, A.VarS):
        ty = f": {render_type(s.type)}" if s.type is not None else ""
        init = f" = {render_expr(s.expr)}" if s.expr is not None else ""
        return f"{pad}var {s.name}{ty}{init};"
    if isinstance(s, A.AssignS):
        return f"{pad}{s.name} = {render_expr(s.expr)};"
    if isinstance(s, A.IfS):
        parts = []
        for i, (flow, cond, body) in enumerate(s.branches):
            kw = "if" if i == 0 else "elif"
            fl = f"{render_flow(flow)} " if flow is not None else ""
            parts.append(f"{kw} {fl}({render_expr(cond)}) {render_block(body, depth)}")
        if s.else_ is not None:
            parts.append(f"else {render_block(s.else_, depth)}")
        return pad + " ".join(parts)
    if isinstance(s, A.MatchS):
        arms = []
        for pat, body in s.arms:
            arms.append(f"{IND * (depth + 1)}| {render_pattern(pat)} => {render_block(body, depth + 1)}")
        return f"{pad}match ({render_expr(s.subject)}) {{\n" + "\n".join(arms) + f"\n{pad}}}"
    if isinstance(s, A.ReturnS):
        return f"{pad}return;" if s.expr is None else f"{pad}return {render_expr(s.expr)};"
    if isinstance(s, A.AssertS):
        return f"{pad}assert {level_text(s.level)}{render_expr(s.expr)};"
    if isinstance(s, A.NarrowS):
        return f"{pad}{atomic(s.target)}{s.kind}{render_flow(s.op)};"
    if isinstance(s, A.ExprS):
        return f"{pad}{render_expr(s.expr)};"
    if isinstance(s, A.BlockS):
        return pad + render_block(s.body, depth)
    if isinstance(s, A.DeferS):
        return f"{pad}defer;"
    if isinstance(s, A.ElidedS):
        return f"{pad}...;"
    raise TypeError(f"cannot render {type(s).__name__}")


def render_pattern(p: A.Pattern) -> str:
    if p.kind == "wild":
        return "_"
    if p.kind == "lit":
        return render_expr(p.lit)
    t = p.type
    # a bare union in a pattern would swallow the arm separator
    return render_type(t)


def render_sig(sig: A.Signature, depth: int) -> str:
    ps = ", ".join(f"{p.name}: {render_type(p.type)}" for p in sig.params)
    out = f"({ps})"
    if sig.result is not None:
        out += f": {render_type(sig.result)}"
    pad = "\n" + IND * (depth + 1)
    for lvl, e in sig.requires:
        out += f"{pad}requires {level_text(lvl)}{render_expr(e)};"
    for lvl, e in sig.ensures:
        out += f"{pad}ensures {level_text(lvl)}{render_expr(e)};"
    if sig.examples:
        exs = ", ".join(
            "[" + ", ".join(render_expr(a) for a in ex.args) + "] => " + render_expr(ex.result)
            for ex in sig.examples
        )
        out += f"{pad}examples [{exs}];"
    return out


def render_member(m: A.Member, depth: int) -> str:
    pad = IND * depth
    if isinstance(m, A.FieldM):
        kw = "field " if m.keyword else ""
        return f"{pad}{kw}{m.name}: {render_type(m.type)};"
    if isinstance(m, A.ConstM):
        ty = f": {render_type(m.type)}" if m.type is not None else ""
        return f"{pad}const {m.name}{ty} = {render_expr(m.expr)};"
    if isinstance(m, A.InvariantM):
        return f"{pad}invariant {level_text(m.level)}{render_expr(m.expr)};"
    if isinstance(m, A.ValidateM):
        return f"{pad}validate {level_text(m.level)}{render_expr(m.expr)};"
    flags = " ".join(f for f in ("abstract", "override", "recursive") if f in m.flags)
    flags = flags + " " if flags else ""
    if isinstance(m, A.MethodM):
        ref = "ref " if "ref" in m.flags else ""
        head = f"{pad}{flags}method {ref}{m.name}{render_sig(m.sig, depth)}"
        if m.body is None:
            return head + ";"
        return head + " " + render_block(m.body, depth)
    if isinstance(m, A.FunctionM):
        return f"{pad}{flags}function {m.name}{render_sig(m.sig, depth)} " + render_block(m.body, depth)
    raise TypeError(m)


def render_members(members: list[A.Member], depth: int) -> str:
    if not members:
        return "{}"
    return "{\n" + "\n".join(render_member(m, depth + 1) for m in members) + "\n" + IND * depth + "}"


def provides_text(p: list[str]) -> str:
    return " provides " + ", ".join(p) if p else ""


def render_decl(d: A.Decl) -> str:
    if isinstance(d, A.TypedeclD):
        if d.regex is not None:
            return f"typedecl {d.name} = /{d.regex}/;"
        tail = f" & {render_members(d.members, 0)}" if d.members else ""
        return f"typedecl {d.name} = {render_type(d.base)}{tail};"
    if isinstance(d, A.ConceptD):
        return f"concept {d.name}{provides_text(d.provides)} {render_members(d.members, 0)}"
    if isinstance(d, A.EntityD):
        return f"entity {d.name}{provides_text(d.provides)} {render_members(d.members, 0)}"
    if isinstance(d, A.DatatypeD):
        out = f"datatype {d.name}{provides_text(d.provides)}"
        if d.using:
            out += f" using {render_members(d.using, 0)}"
        cases = "\n| ".join(f"{c.name} {render_members(c.members, 0)}" for c in d.cases)
        out += f" of\n{cases}"
        if d.extra:
            out += f"\n& {render_members(d.extra, 0)}"
        return out + ";"
    if isinstance(d, A.FunctionD):
        rec = "recursive " if "recursive" in d.flags else ""
        return f"{rec}function {d.name}{render_sig(d.sig, 0)} " + render_block(d.body, 0)
    if isinstance(d, A.ConstD):
        ty = f": {render_type(d.type)}" if d.type is not None else ""
        return f"const {d.name}{ty} = {render_expr(d.expr)};"
    raise TypeError(d)


def dump_json(program: A.Program) -> str:
    """Stable JSON of the declaration kinds and names (used by ``check --json``)."""
    return json.dumps([[type(d).__name__, getattr(d, "name", "")] for d in program.decls])
