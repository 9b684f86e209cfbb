from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lxlang.frontend.parser import parse_source
from lxlang.typesys.checker import check_program, typecheck_program
from lxlang.typesys.typesig import (
    BOOL,
    INT,
    NAT,
    NEVER,
    NONE,
    STRING,
    ListT,
    NominalT,
    TupleT,
    UnionT,
    members,
    union,
)


def messages(src: str) -> list[str]:
    return [d.message for d in typecheck_program(parse_source(src, "t.lx")).diagnostics if d.is_error]


@pytest.mark.parametrize(
    "src, fragment",
    [
        ("function f(x: Int): Nat { return x; }", "returned value is Int, expected Nat"),
        ("function f(x: Int, y: Nat): Int { return x + y; }", "mismatched types Int and Nat"),
        ("function f(): Int { return g(); }", "unknown function g"),
        ("function f(x: Int | None): Int { match(x) { Int => return $; } }", "not exhaustive"),
        ("function f(): Int { let g = fn(x) => x; return 1i; }", "lambda stored in local"),
        ("function f(x: List<Int>, y: List<Int>): Bool { return x == y; }", "not a key type"),
        ("function f(x: List<String>): String { return x.sum(); }", "numeric elements"),
        ("function f(x: Int): Int { if (x > 0i) { return 1i; } }", "may finish without returning"),
    ],
)
def test_rejections(src: str, fragment: str):
    msgs = messages(src)
    assert any(fragment in m for m in msgs), msgs


def test_no_implicit_numeric_coercion_in_flow():
    # Int? must be narrowed before arithmetic
    assert messages("function f(x: Int?): Int { return x + 1i; }") == [
        "arithmetic on mismatched types Int | None and Int"
    ]


def test_failed_statement_does_not_cascade():
    assert len(messages("function f(x: Int?): Int { return x + 1i; }")) == 1


def test_recursion_needs_both_annotations():
    untagged_call = "recursive function f(n: Nat): Nat { if (n == 0n) { return 0n; } return f(n - 1n); }"
    undeclared = "function f(n: Nat): Nat { if (n == 0n) { return 0n; } return f[recursive](n - 1n); }"
    assert any("[recursive]" in m for m in messages(untagged_call))
    assert messages(undeclared) == ["f is part of a call cycle and must be declared `recursive`"]


def test_accepts_narrowed_optional():
    assert messages("function f(x: Int?): Int { if (x == none) { return 0i; } return x@<Int> + 1i; }") == []


def test_entity_is_subtype_of_its_concept():
    cp = check_program(parse_source(
        "concept C { field a: Int; } entity E provides C { } function f(e: E): C { return e; }", "t.lx"))
    u = cp.universe
    assert u.subtype(NominalT("E"), NominalT("C"))
    assert not u.subtype(NominalT("C"), NominalT("E"))
    assert u.atoms(NominalT("C")) == (NominalT("E"),)


# ---------------------------------------------------------------- union algebra

atoms = st.sampled_from([BOOL, INT, NAT, NONE, STRING, NominalT("E"), ListT(INT), TupleT((INT, BOOL))])
types = st.lists(atoms, min_size=0, max_size=4).map(lambda xs: union(*xs))


@given(types, types)
def test_union_commutes(a, b):
    assert union(a, b) == union(b, a)


@given(types, types, types)
def test_union_associates(a, b, c):
    assert union(union(a, b), c) == union(a, union(b, c))


@given(types)
def test_union_idempotent_and_never_is_unit(a):
    assert union(a, a) == a
    assert union(a, NEVER) == a


@given(types)
def test_union_is_flat_and_sorted(a):
    if isinstance(a, UnionT):
        assert all(not isinstance(m, UnionT) for m in a.members)
        assert list(a.members) == sorted(set(a.members), key=str)
        assert len(a.members) >= 2


@pytest.fixture(scope="module")
def universe():
    cp = check_program(parse_source(
        "concept C { field a: Int; } entity E provides C { } function f(e: E): C { return e; }", "t.lx"))
    return cp.universe


@settings(max_examples=100)
@given(a=types, b=types, c=types)
def test_subtype_is_a_preorder(universe, a, b, c):
    assert universe.subtype(a, a)
    if universe.subtype(a, b) and universe.subtype(b, c):
        assert universe.subtype(a, c)


@given(a=types, b=types)
def test_union_is_an_upper_bound(universe, a, b):
    j = union(a, b)
    assert universe.subtype(a, j) and universe.subtype(b, j)
    assert set(members(j)) == set(members(a)) | set(members(b))


def test_verbatim_itree_listing_only_differs_by_the_nil_spelling():
    from helpers import FIXTURES

    verbatim = (FIXTURES / "listings" / "itree_verbatim.lx").read_text(encoding="utf-8")
    assert any("unknown type Nill" in m for m in messages(verbatim))
    assert messages(verbatim.replace("Nill", "Nil")) == []
