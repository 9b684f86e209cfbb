from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import requires_solver
from helpers import FIXTURES
from lxlang.harness import (
    CandidateReport,
    ExampleResult,
    HoleError,
    find_hole,
    rank_candidates,
    rank_source,
    splice_candidate,
    splice_text,
    split_candidates,
)
from lxlang.verify import NO_WITNESS, WITNESS

SPEC = (FIXTURES / "listings" / "maxpair_spec.lx").read_text(encoding="utf-8")
CANDIDATES = (FIXTURES / "listings" / "maxpair_candidates.txt").read_text(encoding="utf-8")


def test_find_hole():
    hole = find_hole(SPEC, "maxpair.lx")
    assert (hole.function, hole.n_ensures, hole.n_examples) == ("maxPair", 2, 1)
    assert SPEC.split("\n")[hole.line - 1][hole.column - 1 :].startswith("defer")


@pytest.mark.parametrize(
    "src",
    [
        "function f(x: Int): Int { return x; }",
        "function f(x: Int): Int { defer; } function g(x: Int): Int { defer; }",
    ],
)
def test_hole_count_must_be_one(src):
    with pytest.raises(HoleError):
        find_hole(src)


def test_splice_replaces_only_the_hole():
    hole = find_hole(SPEC)
    text = splice_text(hole, "return [1i, 2i];")
    assert "defer" not in text
    assert text.replace("return [1i, 2i];", "defer;") == SPEC


def test_split_candidates():
    parts = split_candidates(CANDIDATES)
    assert len(parts) == 2
    assert parts[0] == "return [x.max(), y.max()];"
    assert split_candidates("a\n---\n\n---\nb\n") == ["a", "b"]


def test_bad_candidates_are_classified():
    hole = find_hole(SPEC)
    assert splice_candidate(hole, "return [x.max(), ;").status == "parse-error"
    assert splice_candidate(hole, "return x.max();").status == "type-error"
    assert splice_candidate(hole, "return [x.max(), y.max()];").status == "ok"


@requires_solver
def test_maxpair_ranking():
    reports = rank_source(SPEC, split_candidates(CANDIDATES), "maxpair.lx")
    first, second = reports
    assert (first.index, first.rank) == (2, 1)
    assert first.all_examples_pass and first.ensures_clean
    assert [v for _, v in first.ensures_verdicts] == [NO_WITNESS, NO_WITNESS]
    assert (second.index, second.examples_passed) == (1, 0)
    assert second.examples[0].outcome == "ok [3i, 5i]"
    assert second.ensures_verdicts == []


@requires_solver
def test_parallel_ranking_is_identical():
    cands = split_candidates(CANDIDATES) + ["return [x.max(), ;", "return [x.get(0n), y.get(0n)];"]
    a = [r.to_json() for r in rank_source(SPEC, cands, "m.lx")]
    b = [r.to_json() for r in rank_source(SPEC, cands, "m.lx", jobs=3)]
    assert a == b
    assert [r["status"] for r in a][-1] == "parse-error"


def _report(index, status, passed, ensures):
    r = CandidateReport(index, status)
    if status == "ok":
        r.examples = [ExampleResult(i, ok, "", "", True) for i, ok in enumerate(passed)]
        r.ensures_verdicts = [("e", v) for v in ensures]
    return r


reports = st.builds(
    _report,
    st.integers(1, 50),
    st.sampled_from(["ok", "parse-error", "type-error"]),
    st.lists(st.booleans(), max_size=3),
    st.lists(st.sampled_from([NO_WITNESS, WITNESS]), max_size=2),
)


@given(st.lists(reports, max_size=8, unique_by=lambda r: r.index))
def test_ranking_respects_the_criteria_order(rs):
    ranked = rank_candidates(rs)
    assert [r.rank for r in ranked] == list(range(1, len(rs) + 1))
    for a, b in zip(ranked, ranked[1:]):
        if a.compiles != b.compiles:
            assert a.compiles
        elif a.examples_passed != b.examples_passed:
            assert a.examples_passed > b.examples_passed
        elif a.ensures_clean != b.ensures_clean:
            assert a.ensures_clean
        else:
            assert a.index < b.index
