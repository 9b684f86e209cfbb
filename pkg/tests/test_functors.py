from __future__ import annotations

import itertools
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from functor_oracles import LIST_ORACLES, MAP_ORACLES, expected
from helpers import FIXTURES
from lxlang.lowering import compile_source
from lxlang.runtime.evaluator import CheckConfig, evaluate
from lxlang.runtime.external import decode_args, to_json
from lxlang.runtime.functors import CATALOG, functor_error_codes

ELEMS = (-1, 0, 1)
LISTS = [list(p) for n in range(6) for p in itertools.product(ELEMS, repeat=n)]
KEYS = (0, 1, 2)
MAPS = [
    dict(zip(ks, vs))
    for n in range(4)
    for ks in itertools.combinations(KEYS, n)
    for vs in itertools.product(ELEMS, repeat=n)
]


@pytest.fixture(scope="module")
def program():
    path = FIXTURES / "programs" / "functors.lx"
    return compile_source(path.read_text(encoding="utf-8"), str(path))


def observe(program, entry: str, arg) -> tuple:
    cfg = CheckConfig.at("test")
    args = decode_args(program, entry, json.dumps([arg]), cfg).value
    out = evaluate(program, entry, args, cfg)
    if out.error is not None:
        return ("error", out.error.code)
    return ("ok", to_json(out.value))


def test_domain_sizes():
    assert len(LISTS) == 364
    assert len(MAPS) == 64


@pytest.mark.parametrize("entry", sorted(LIST_ORACLES))
def test_list_functor_matches_oracle_exhaustively(program, entry):
    oracle = LIST_ORACLES[entry]
    for xs in LISTS:
        assert observe(program, entry, xs) == expected(oracle, xs), xs


@pytest.mark.parametrize("entry", sorted(MAP_ORACLES))
def test_map_functor_matches_oracle_exhaustively(program, entry):
    oracle = MAP_ORACLES[entry]
    for m in MAPS:
        doc = [[k, v] for k, v in sorted(m.items())]
        assert observe(program, entry, doc) == expected(oracle, m), m


def test_every_catalog_functor_is_exercised(program):
    used = set()
    for f in program.functions:
        from lxlang.ir import nodes as I

        used |= {n.name for n in I.walk(f.body) if isinstance(n, I.FunctorApp)}
    assert used == set(CATALOG)


def test_error_codes_table():
    assert functor_error_codes("get", "Int") == ("index-out-of-bounds",)
    assert functor_error_codes("maxArg", "Int") == ("empty-collection",)
    assert functor_error_codes("sum", "Int") == ("overflow",)
    assert functor_error_codes("sum", "BigInt") == ()
    assert functor_error_codes("filter", "Int") == ()


wide = st.lists(st.integers(-(2**62), 2**62), max_size=6)


@given(wide)
def test_sum_overflow_matches_unbounded_sum(program, xs):
    total = sum(xs)
    want = ("ok", total) if -(2**63) <= total < 2**63 else ("error", "overflow")
    # partial sums may leave the range even when the total does not
    acc, fails = 0, False
    for x in xs:
        acc += x
        fails |= not (-(2**63) <= acc < 2**63)
    if fails:
        want = ("error", "overflow")
    assert observe(program, "fSum", xs) == want


@given(wide)
def test_filter_then_count_agree(program, xs):
    kept = observe(program, "fFilter", xs)[1]
    assert len(kept) == len([x for x in xs if x != 0])
