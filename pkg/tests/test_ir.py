from __future__ import annotations

from dataclasses import replace
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import FIXTURES
from lxlang.ir import nodes as I
from lxlang.ir.text import IRParseError, parse_ir, serialize_ir, serialize_node
from lxlang.ir.validate import validate_ir
from lxlang.lowering import compile_source
from lxlang.runtime.values import IntV
from lxlang.typesys.typesig import BOOL, INT

CORPUS = sorted(
    list((FIXTURES / "programs").glob("*.lx"))
    + list((FIXTURES / "seeded").glob("*.lx"))
    + list((FIXTURES / "exhaustible").glob("*.lx"))
    + [FIXTURES / "listings" / "abs.lx"]
)

ABS_IR = """(lxir 1)
(entries abs)
(function abs function
  (params (x Int))
  (result Int)
  (recursive false)
  (owner -)
  (requires)
  (ensures)
  (body
    (let y
      (var x Int)
      (ite (prim < Bool (var y Int) (const Int (int Int 0))) (prim neg Int (var y Int)) (var y Int)))))
"""


def _compile(path: Path):
    return compile_source(path.read_text(encoding="utf-8"), str(path))


def test_abs_text_is_frozen():
    assert serialize_ir(_compile(FIXTURES / "listings" / "abs.lx")) == ABS_IR


@pytest.mark.parametrize("path", CORPUS, ids=lambda p: p.name)
def test_text_roundtrip_and_validity(path: Path):
    prog = _compile(path)
    text = serialize_ir(prog)
    back = parse_ir(text)
    assert back == prog
    assert serialize_ir(back) == text
    assert validate_ir(prog) == []


def test_parse_error_names_line():
    with pytest.raises(IRParseError) as exc:
        parse_ir("(lxir 1)\n(entries abs)\n(function abs function\n  (params (x Int)")
    assert exc.value.line >= 1


def test_wrong_version_rejected():
    with pytest.raises(IRParseError):
        parse_ir("(lxir 99)\n(entries)\n")


def _abs():
    return parse_ir(ABS_IR)


def test_validator_flags_free_variable():
    prog = _abs()
    fn = prog.function("abs")
    broken = replace(fn, body=I.number_paths(I.Var("z", INT), "b"))
    rules = {v.rule for v in validate_ir(replace(prog, functions=(broken,)))}
    assert "free-variable" in rules


def test_validator_flags_rebinding_and_unknown_call():
    prog = _abs()
    fn = prog.function("abs")
    body = I.Let("y", I.Var("x", INT), I.Let("y", I.Call("nowhere", (), INT), I.Var("y", INT)))
    broken = replace(fn, body=I.number_paths(body, "b"))
    rules = {v.rule for v in validate_ir(replace(prog, functions=(broken,)))}
    assert {"duplicate-binding", "unresolved-name"} <= rules


def test_validator_flags_non_key_equality():
    prog = compile_source("function f(xs: List<Int>): Int { return xs.size().toInt(); }", "t.lx")
    fn = prog.function("f")
    xs = I.Var("xs", fn.params[0][1])
    body = I.Ite(I.Equal(xs, xs, False), I.Const(IntV("Int", 1), INT), I.Const(IntV("Int", 0), INT))
    broken = replace(fn, body=I.number_paths(body, "b"))
    assert "key-type" in {v.rule for v in validate_ir(replace(prog, functions=(broken,)))}


# random integer expression trees survive the node text format
leaf = st.one_of(
    st.integers(-(2**63), 2**63 - 1).map(lambda n: I.Const(IntV("Int", n), INT)),
    st.sampled_from(["a", "b"]).map(lambda v: I.Var(v, INT)),
)


def grow(kids):
    return st.one_of(
        st.tuples(st.sampled_from(["+", "-", "*", "/", "%"]), kids, kids).map(lambda t: I.PrimOp(t[0], (t[1], t[2]), INT)),
        st.tuples(kids, kids, kids).map(
            lambda t: I.Ite(I.PrimOp("<", (t[0], t[1]), BOOL), t[1], t[2])),
        st.tuples(kids, kids).map(lambda t: I.Let("c", t[0], t[1])),
    )


trees = st.recursive(leaf, grow, max_leaves=10)


@given(trees)
def test_node_roundtrip(tree):
    prog = _abs()
    fn = replace(prog.function("abs"), params=(("x", INT), ("a", INT), ("b", INT)),
                 body=I.number_paths(tree, "b"))
    p2 = replace(prog, functions=(fn,))
    back = parse_ir(serialize_ir(p2))
    assert back.function("abs").body == tree
    assert serialize_node(back.function("abs").body) == serialize_node(tree)
