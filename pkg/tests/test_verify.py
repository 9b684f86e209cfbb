from __future__ import annotations

import os
import stat
import subprocess

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import requires_solver
from helpers import FIXTURES
from lxlang.lowering import compile_source
from lxlang.regex import full_match
from lxlang.runtime.evaluator import CheckConfig
from lxlang.runtime.values import IntV
from lxlang.verify import (
    NO_WITNESS,
    UNSUPPORTED,
    WITNESS,
    Counterexample,
    SmallModelBounds,
    confirm_witness,
    encode_site,
    enumerate_error_sites,
    verify_program,
)
from lxlang.verify import smt as S
from lxlang.verify.decode import parse_values, seq_items
from lxlang.verify.solver import SolverNotFound, find_solver, invoke_solver


def load(*parts: str):
    path = FIXTURES.joinpath(*parts)
    return compile_source(path.read_text(encoding="utf-8"), str(path))


# ---------------------------------------------------------------- SMT text


@given(st.integers())
def test_int_literal_roundtrip(n):
    assert S.int_value(S.int_lit(n)) == n


@given(st.text(alphabet=st.characters(max_codepoint=0x2FFFF, exclude_categories=("Cs",)), max_size=12))
def test_string_literal_roundtrip(s):
    lit = S.str_lit(s)
    assert S.unescape_str(lit[1:-1].replace('""', '"')) == s
    assert S.parse_sexprs(lit)[0].value == s
    assert all(32 <= ord(c) < 127 for c in lit)


def test_folding_constructors():
    assert S.and_("true", "x") == "x"
    assert S.and_("x", "false") == "false"
    assert S.or_() == "false"
    assert S.not_("false") == "true"
    assert S.ite("true", "a", "b") == "a"
    assert S.add("1", "2") == "3"


def test_model_parsing():
    vals = parse_values('((x (- 3)) (s "a""b") (l (seq.++ (seq.unit 1) (seq.unit 2))))')
    assert vals["x"] == ["-", "3"]
    assert vals["s"].value == 'a"b'
    assert seq_items(vals["l"]) == ["1", "2"]
    assert seq_items(["as", "seq.empty", ["Seq", "Int"]]) == []


PATTERNS = ["[a-c]x*", "(ab|c)+", "a?b{2,3}", "[^a]b", "[a-z]+_[0-9]+", "x{0,2}y?"]
SAMPLES = ["", "a", "b", "ab", "abb", "abbb", "bb", "cx", "axxx", "cc", "abc", "q_1", "zz_09", "xy", "xxy", "db"]


@requires_solver
@pytest.mark.parametrize("pattern", PATTERNS)
def test_regex_encoding_agrees_with_matcher(pattern):
    term = S.regex_term(pattern)
    lines = []
    for s in SAMPLES:
        lines += ["(push)", f"(assert (str.in_re {S.str_lit(s)} {term}))", "(check-sat)", "(pop)"]
    out = subprocess.run([find_solver(), "-in", "-smt2"], input="\n".join(lines), capture_output=True,
                         text=True, timeout=60).stdout.split()
    assert out == ["sat" if full_match(pattern, s) else "unsat" for s in SAMPLES]


# ---------------------------------------------------------------- sites


def test_abs_has_one_overflow_site():
    sites = enumerate_error_sites(load("listings", "abs.lx"))
    assert [(s.function, s.path, s.code) for s in sites] == [("abs", "b.1.1", "overflow")]
    assert sites[0].position == "abs@b.1.1"


def test_trading_sites_and_ingest():
    prog = load("programs", "trading.lx")
    cfg = CheckConfig.at("test")
    plain = enumerate_error_sites(prog, cfg)
    assert [s.code for s in plain] == ["invariant-fail", "invariant-fail", "cast-fail", "postcondition-fail"]
    ingest = enumerate_error_sites(prog, cfg, frozenset({"process"}))
    extra = [s for s in ingest if s.code == "validate-fail"]
    assert [(s.path, s.sub) for s in extra] == [("ingest", "SaleInfo$val0"), ("ingest", "SaleInfo$val1")]


def test_site_ids_are_dense_and_ordered():
    for path in sorted((FIXTURES / "seeded").glob("*.lx")):
        prog = compile_source(path.read_text(encoding="utf-8"), str(path))
        sites = enumerate_error_sites(prog, CheckConfig.at("spec"))
        assert [s.id for s in sites] == list(range(len(sites)))
        assert len({s.key for s in sites}) == len(sites)


def test_lambda_sites_belong_to_owner():
    prog = load("seeded", "s26_reduce_overflow.lx")
    (site,) = enumerate_error_sites(prog)
    assert site.function.startswith("product$")
    assert site.entry == "product"


# ---------------------------------------------------------------- solving


@requires_solver
def test_script_shape():
    prog = load("listings", "abs.lx")
    site = enumerate_error_sites(prog)[0]
    text = encode_site(prog, site)
    assert text.startswith("; site 0:")
    assert "(check-sat)" in text and "(get-value (arg_x))" in text
    assert invoke_solver(text).status == "sat"


@requires_solver
def test_abs_witness_is_int_min():
    ((site, verdict),) = verify_program(load("listings", "abs.lx"))
    assert verdict.kind == WITNESS
    assert verdict.counterexample.args == (IntV("Int", -(2**63)),)


@requires_solver
def test_unsupported_feature_is_reported():
    prog = compile_source("function f(x: Float): Float { assert x > 1.0f; return x; }", "t.lx")
    ((_, verdict),) = verify_program(prog)
    assert verdict.kind == UNSUPPORTED
    assert verdict.feature == "Float values"


@requires_solver
def test_bounds_limit_witnesses():
    prog = load("seeded", "s15_index_get.lx")
    ((_, v3),) = verify_program(prog)
    assert v3.kind == WITNESS
    ((_, v0),) = verify_program(prog, SmallModelBounds(list_length=0))
    assert v0.kind == WITNESS  # the empty list still misses index 2
    prog = compile_source("function f(xs: List<Int>): Int { assert xs.size() < 3n; return 0i; }", "t.lx")
    ((_, short),) = verify_program(prog, SmallModelBounds(list_length=2))
    assert short.kind == NO_WITNESS
    ((_, full),) = verify_program(prog, SmallModelBounds(list_length=3))
    assert full.kind == WITNESS


@requires_solver
def test_parallel_matches_sequential(tmp_path):
    prog = load("programs", "trading.lx")
    seq = verify_program(prog, cfg=CheckConfig.at("test"), ingest={"process"})
    par = verify_program(prog, cfg=CheckConfig.at("test"), ingest={"process"}, jobs=4, dump_dir=str(tmp_path))
    assert [(s.id, v.describe()) for s, v in seq] == [(s.id, v.describe()) for s, v in par]
    assert sorted(os.listdir(tmp_path)) == [f"site_{s.id}.smt2" for s, _ in seq]


def test_confirmation_rejects_a_wrong_witness():
    prog = load("listings", "abs.lx")
    site = enumerate_error_sites(prog)[0]
    good = Counterexample("abs", (IntV("Int", -(2**63)),), site.id)
    bad = Counterexample("abs", (IntV("Int", -5),), site.id)
    assert confirm_witness(prog, good, site).confirmed
    assert not confirm_witness(prog, bad, site).confirmed


# ---------------------------------------------------------------- solver process


def _fake_solver(tmp_path, body: str) -> str:
    p = tmp_path / "fake-solver"
    p.write_text("#!/bin/sh\n" + body + "\n")
    p.chmod(p.stat().st_mode | stat.S_IEXEC)
    return str(p)


def test_missing_solver(monkeypatch):
    monkeypatch.delenv("LX_SOLVER", raising=False)
    with pytest.raises(SolverNotFound):
        find_solver("/nonexistent/solver")


def test_solver_timeout(tmp_path):
    slow = _fake_solver(tmp_path, "sleep 5")
    assert invoke_solver("(check-sat)", timeout=0.2, solver=slow).status == "timeout"


def test_solver_garbage_is_an_error(tmp_path):
    junk = _fake_solver(tmp_path, "echo hello")
    assert invoke_solver("(check-sat)", solver=junk).status == "error"


@requires_solver
def test_solver_env_override(tmp_path, monkeypatch):
    unsat = _fake_solver(tmp_path, "cat > /dev/null; echo unsat")
    monkeypatch.setenv("LX_SOLVER", unsat)
    ((_, v),) = verify_program(load("listings", "abs.lx"))
    assert v.kind == NO_WITNESS


@requires_solver
@settings(max_examples=15, deadline=None)
@given(st.integers(-20, 20), st.integers(-20, 20))
def test_witness_iff_concrete_failure_exists(lo, hi):
    # assert fails for some x in [lo, hi] exactly when the range is non-empty
    src = f"function f(x: Int): Int requires x >= {lo}i && x <= {hi}i; {{ assert x < {lo}i; return x; }}"
    src = src.replace("-", "- ").replace("- ", "-")
    prog = compile_source(src, "t.lx")
    ((_, v),) = verify_program(prog)
    assert (v.kind == WITNESS) == (lo <= hi)
    if v.kind == WITNESS:
        assert v.counterexample.args == (IntV("Int", lo),)
