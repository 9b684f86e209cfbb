from __future__ import annotations

import itertools
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import FIXTURES, enumerate_inputs, read_header
from lxlang.diagnostics import CompileError
from lxlang.frontend.parser import parse_source
from lxlang.ir import nodes as I
from lxlang.lowering import compile_source, lower_program
from lxlang.runtime.evaluator import CheckConfig, evaluate
from lxlang.runtime.refinterp import run_surface
from lxlang.runtime.values import IntV
from lxlang.typesys.checker import check_program
from lxlang.typesys.typesig import BOOL, INT

CORPUS = sorted(
    list((FIXTURES / "programs").glob("*.lx"))
    + list((FIXTURES / "seeded").glob("*.lx"))
    + list((FIXTURES / "exhaustible").glob("*.lx"))
)


def test_lambda_free_ir():
    prog = compile_source(
        "function f(xs: List<Int>, k: Int): List<Int> { return xs.filter(pred(x) => x > k); }", "t.lx"
    )
    names = [f.name for f in prog.functions]
    assert any(f.kind == "lambda" for f in prog.functions), names
    for f in prog.functions:
        for n in I.walk(f.body):
            assert type(n).__name__ != "Lambda"
    app = next(n for n in I.walk(prog.function("f").body) if isinstance(n, I.FunctorApp))
    assert app.spec in names
    # the captured k is passed explicitly
    assert [c.name for c in app.captures if isinstance(c, I.Var)] == ["k"]


def test_assignment_becomes_single_let():
    body = compile_source((FIXTURES / "listings" / "abs.lx").read_text(), "abs.lx").function("abs").body
    y0 = I.Var("y", INT)
    expected = I.Let(
        "y",
        I.Var("x", INT),
        I.Ite(
            I.PrimOp("<", (y0, I.Const(IntV("Int", 0), INT)), BOOL),
            I.PrimOp("neg", (y0,), INT),
            y0,
        ),
    )
    assert body == expected


def test_paths_are_preorder_numbered():
    body = compile_source((FIXTURES / "listings" / "abs.lx").read_text(), "abs.lx").function("abs").body
    assert [n.path for n in I.walk(body)] == ["b", "b.0", "b.1", "b.1.0", "b.1.0.0", "b.1.0.1", "b.1.1", "b.1.1.0", "b.1.2"]


def test_defer_is_rejected_at_lowering():
    cp = check_program(parse_source("function f(x: Int): Int { defer; }", "t.lx"))
    assert cp.errors == []
    with pytest.raises(CompileError, match="deferred body"):
        lower_program(cp)


def _is_ref(cp, entry: str) -> bool:
    c = cp.universe.callables.get(entry)
    return c is not None and "ref" in c.flags


def _same(surface, outcome) -> bool:
    code = outcome.error.code if outcome.error else None
    if surface.code != code:
        return False
    return code is not None or surface.value == outcome.value


@pytest.mark.parametrize("path", CORPUS, ids=lambda p: p.name)
def test_surface_and_ir_agree_on_bounded_inputs(path: Path):
    cp = check_program(parse_source(path.read_text(encoding="utf-8"), str(path)))
    ir = lower_program(cp)
    cfg = CheckConfig.at(read_header(path).level)
    for entry in ir.entries:
        if _is_ref(cp, entry):
            continue
        try:
            inputs = list(itertools.islice(enumerate_inputs(ir, entry, cfg=cfg), 200))
        except ValueError:
            continue
        for args in inputs:
            s = run_surface(cp, entry, list(args), cfg)
            o = evaluate(ir, entry, list(args), cfg)
            assert _same(s, o), (entry, args, s, o)


@pytest.fixture(scope="module")
def arith():
    src = """
function mix(a: Int, b: Int, c: Nat): Int {
    var acc = a;
    if (b > 0i) {
        acc = acc * b;
    }
    elif (b < -3i) {
        acc = acc - b;
    }
    else {
        acc = acc / (b - 1i);
    }
    let d = c.toInt();
    assert acc != 13i;
    return acc % (d + 1i);
}
"""
    cp = check_program(parse_source(src, "mix.lx"))
    return cp, lower_program(cp)


bounded = st.one_of(st.integers(-50, 50), st.integers(-(2**63), 2**63 - 1))


@settings(max_examples=300, deadline=None)
@given(a=bounded, b=bounded, c=st.integers(0, 2**64 - 1))
def test_surface_and_ir_agree_on_arithmetic(arith, a, b, c):
    cp, ir = arith
    args = [IntV("Int", a), IntV("Int", b), IntV("Nat", c)]
    cfg = CheckConfig.at("test")
    assert _same(run_surface(cp, "mix", args, cfg), evaluate(ir, "mix", args, cfg))
