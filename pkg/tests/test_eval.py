from __future__ import annotations

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import FIXTURES
from lxlang.lowering import compile_source
from lxlang.runtime.evaluator import CheckConfig, evaluate
from lxlang.runtime.external import ExternalDataError, decode_args, to_json
from lxlang.runtime.ops import LxError, arith, trunc_div, trunc_mod
from lxlang.runtime.values import IntV

INT_MIN, INT_MAX, NAT_MAX = -(2**63), 2**63 - 1, 2**64 - 1


def load(name: str):
    path = FIXTURES / "programs" / name
    return compile_source(path.read_text(encoding="utf-8"), str(path))


def run(prog, entry: str, args_json: str, level: str = "test", ingest: bool = False) -> str:
    cfg = CheckConfig.at(level)
    decoded = decode_args(prog, entry, args_json, cfg)
    if decoded.error is not None:
        return decoded.serialize()
    return evaluate(prog, entry, decoded.value, cfg, ingest=ingest).serialize()


@pytest.mark.parametrize(
    "entry, args, out",
    [
        ("bar", "[0]", "ok none"),
        ("bar", "[5]", "ok 9n"),
        ("bar", "[-3]", "ok -3i"),
        ("orZero", "[null]", "ok 0n"),
        ("orZero", "[4]", "ok 14n"),
        ("isFive", "[5]", "ok true"),
        ("isFive", "[null]", "ok false"),
    ],
)
def test_flow_operators(entry, args, out):
    assert run(load("flow.lx"), entry, args) == out


def test_flow_cast_failure_site():
    assert run(load("flow.lx"), "narrowOrFail", "[null]").startswith("error cast-fail at narrowOrFail@b.0#0")


def test_ref_method_threads_receiver():
    assert run(load("counter.lx"), "twoIds", "[]") == "ok [0n, 1n, 2n]"


def test_bulk_update():
    prog = load("bulk.lx")
    assert run(prog, "update", "[]") == "ok Baz{f=3i, g=2i, h=false}"
    assert run(prog, "bump", '[{"f": 1, "g": 2, "h": true}]') == "ok Baz{f=4i, g=2i, h=true}"


def test_concept_dispatch():
    assert run(load("greetings.lx"), "greet", '[{"name": "bob"}]') == 'ok "hello bob"'


def test_typedecl_literals():
    prog = load("zipcode.lx")
    assert run(prog, "check", "[]") == "ok false"
    assert run(prog, "warm", "[]") == "ok Celsius{11.0f}"


def test_validates_only_at_ingest():
    path = FIXTURES / "seeded" / "s08_validate_ingest.lx"
    prog = compile_source(path.read_text(encoding="utf-8"), str(path))
    doc = '[{"limit": 1, "spent": 2}]'
    assert run(prog, "total", doc) == "ok 3n"
    assert run(prog, "total", doc, ingest=True).startswith("error validate-fail at total@ingest#Budget$val0")


def test_check_levels_gate_assertions():
    path = FIXTURES / "seeded" / "s33_spec_level_assert.lx"
    prog = compile_source(path.read_text(encoding="utf-8"), str(path))
    assert run(prog, "debugOnly", "[60]", level="test") == "ok 60n"
    assert run(prog, "debugOnly", "[60]", level="spec").startswith("error assert-fail")


def test_recursion_budget():
    path = FIXTURES / "seeded" / "s28_recursive_underflow.lx"
    prog = compile_source(path.read_text(encoding="utf-8"), str(path))
    assert run(prog, "countdown", "[5, 0]").startswith("error recursion-budget-exceeded")
    assert run(prog, "countdown", "[6, 2]") == "ok 0n"
    assert run(prog, "countdown", "[5, 2]").startswith("error nat-underflow")


def test_input_invariant_checked_on_decode():
    prog = load("trading.lx")
    doc = json.dumps([
        {"available": "-1", "startAvailable": "0", "orders": []},
        {"id": "a_1", "quantity": "1"},
    ])
    assert run(prog, "process", doc).startswith("error invariant-fail at process@ingest")


def test_regex_mismatch_on_decode():
    prog = load("trading.lx")
    doc = json.dumps([
        {"available": "1", "startAvailable": "1", "orders": []},
        {"id": "BAD", "quantity": "1"},
    ])
    assert run(prog, "process", doc).startswith("error regex-mismatch")


@pytest.mark.parametrize("doc", ["[1]", "{}", '["x", {}]', "[[], {}]"])
def test_shape_errors_raise(doc):
    with pytest.raises(ExternalDataError):
        decode_args(load("trading.lx"), "process", doc)


# ---------------------------------------------------------------- arithmetic


def _trunc_div(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


ints = st.integers(INT_MIN, INT_MAX)


@given(ints, ints)
def test_int_arith_matches_checked_oracle(a, b):
    for op, exact in (("+", a + b), ("-", a - b), ("*", a * b)):
        if INT_MIN <= exact <= INT_MAX:
            assert arith(op, IntV("Int", a), IntV("Int", b)) == IntV("Int", exact)
        else:
            with pytest.raises(LxError) as exc:
                arith(op, IntV("Int", a), IntV("Int", b))
            assert exc.value.code == "overflow"


@given(ints, ints.filter(lambda b: b != 0))
def test_division_truncates_toward_zero(a, b):
    q = _trunc_div(a, b)
    assert trunc_div(a, b) == q
    assert trunc_mod(a, b) == a - b * q
    if INT_MIN <= q <= INT_MAX:
        assert arith("/", IntV("Int", a), IntV("Int", b)) == IntV("Int", q)


@given(ints)
def test_division_by_zero(a):
    for op in ("/", "%"):
        with pytest.raises(LxError) as exc:
            arith(op, IntV("Int", a), IntV("Int", 0))
        assert exc.value.code == "div-zero"


@given(st.integers(0, NAT_MAX), st.integers(0, NAT_MAX))
def test_nat_subtraction(a, b):
    if a >= b:
        assert arith("-", IntV("Nat", a), IntV("Nat", b)) == IntV("Nat", a - b)
    else:
        with pytest.raises(LxError) as exc:
            arith("-", IntV("Nat", a), IntV("Nat", b))
        assert exc.value.code == "nat-underflow"


@given(st.integers(-(10**40), 10**40), st.integers(-(10**40), 10**40))
def test_bigint_is_unbounded(a, b):
    assert arith("*", IntV("BigInt", a), IntV("BigInt", b)) == IntV("BigInt", a * b)


# ---------------------------------------------------------------- JSON boundary


def test_json_roundtrip_of_entity_arguments():
    prog = load("trading.lx")
    doc = [
        {"available": "3", "startAvailable": "5", "orders": [{"id": "a_1", "quantity": "2"}]},
        {"id": "b_2", "quantity": "1"},
    ]
    cfg = CheckConfig.at("test")
    args = decode_args(prog, "process", json.dumps(doc), cfg).value
    again = decode_args(prog, "process", json.dumps([to_json(a) for a in args]), cfg).value
    assert again == args
    assert to_json(args[1]) == {"$type": "SaleOrder", "id": "b_2", "quantity": "1"}


@given(st.lists(st.one_of(st.none(), st.integers(INT_MIN, INT_MAX)), max_size=5))
def test_json_roundtrip_optional_list(xs):
    prog = compile_source("function f(xs: List<Int?>): Nat { return xs.size(); }", "t.lx")
    cfg = CheckConfig.at("test")
    args = decode_args(prog, "f", json.dumps([xs]), cfg).value
    assert to_json(args[0]) == xs
