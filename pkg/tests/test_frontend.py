from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lxlang.diagnostics import CompileError, SourcePos
from lxlang.frontend import ast as A
from lxlang.frontend.lexer import tokenize
from lxlang.frontend.parser import parse_expression, parse_source
from lxlang.frontend.render import render, render_expr

FIXTURES = Path(__file__).parent / "fixtures"
ALL_SOURCES = sorted(FIXTURES.rglob("*.lx"))


def kinds(src: str) -> list[tuple[str, str]]:
    return [(t.kind, t.text) for t in tokenize(src)]


def test_numeric_literal_suffixes():
    assert kinds("1n 2I 3N 4i 1.5f 2.0d 1/2R") == [
        ("num", "1n"), ("num", "2I"), ("num", "3N"), ("num", "4i"),
        ("num", "1.5f"), ("num", "2.0d"), ("num", "1/2R"),
    ]


def test_typed_literals_and_binders():
    assert kinds('10_Celsius "x"Zip $x $return') == [
        ("tnum", "10_Celsius"), ("tstr", '"x"Zip'), ("binder", "$x"), ("binder", "$return"),
    ]


def test_multi_char_operators():
    assert [t for _, t in kinds("==> !== ?? && ||")] == ["==>", "!==", "??", "&&", "||"]


def test_unterminated_string_is_positioned():
    with pytest.raises(CompileError) as exc:
        tokenize('"abc')
    assert exc.value.diagnostics[0].pos == SourcePos("<input>", 1, 1)


def test_parse_error_reports_line_and_column():
    with pytest.raises(CompileError) as exc:
        parse_source("function f(x: Int): Int { return x + ; }", "t.lx")
    d = exc.value.diagnostics[0]
    assert (d.pos.line, d.pos.column) == (1, 38)
    assert "expected expression" in d.message


def test_operator_precedence():
    assert render_expr(parse_expression("a + b * c")) == "a + (b * c)"
    assert render_expr(parse_expression("(a + b) * c")) == "(a + b) * c"


def test_function_signature_parts():
    prog = parse_source(
        "function f(x: Int): Int requires x > 0i; ensures $return > 0i; { return x; }", "t.lx"
    )
    (f,) = prog.decls
    assert isinstance(f, A.FunctionD)
    assert f.name == "f"
    assert len(f.sig.requires) == 1 and len(f.sig.ensures) == 1


def test_defer_statement_parses():
    prog = parse_source("function f(x: Int): Int { defer; }", "t.lx")
    assert isinstance(prog.decls[0].body[0], A.DeferS)


@pytest.mark.parametrize("path", ALL_SOURCES, ids=lambda p: p.name)
def test_render_is_a_fixpoint(path: Path):
    once = render(parse_source(path.read_text(encoding="utf-8"), str(path)))
    assert render(parse_source(once, "rendered")) == once


# random arithmetic/boolean expressions survive render -> parse -> render
names = st.sampled_from(["a", "b", "c"])
ints = st.integers(0, 999).map(lambda n: f"{n}i")
leaf = st.one_of(names, ints)


def combine(children):
    return st.one_of(
        st.tuples(children, st.sampled_from(["+", "-", "*", "/", "%"]), children).map(lambda t: f"({t[0]} {t[1]} {t[2]})"),
        st.tuples(children, st.sampled_from(["<", "<=", "==", "!="]), children).map(lambda t: f"({t[0]} {t[1]} {t[2]})"),
        children.map(lambda c: f"-({c})"),
    )


exprs = st.recursive(leaf, combine, max_leaves=12)


@settings(max_examples=200, deadline=None)
@given(exprs)
def test_expression_render_roundtrip(text: str):
    once = render_expr(parse_expression(text))
    assert render_expr(parse_expression(once)) == once
