"""Seeded-error and exhaustible fixtures against the verifier."""

from __future__ import annotations

from pathlib import Path

import pytest

from conftest import requires_solver
from helpers import FIXTURES, enumerate_inputs, reachable_sites, read_header
from lxlang.lowering import compile_source
from lxlang.runtime.evaluator import CheckConfig, evaluate
from lxlang.verify import TIMEOUT, UNSUPPORTED, WITNESS, verify_program

SEEDED = sorted((FIXTURES / "seeded").glob("*.lx"))
EXHAUSTIBLE = sorted((FIXTURES / "exhaustible").glob("*.lx"))


def _verify(path: Path):
    h = read_header(path)
    prog = compile_source(path.read_text(encoding="utf-8"), str(path))
    cfg = CheckConfig.at(h.level)
    return h, prog, cfg, verify_program(prog, cfg=cfg, ingest=h.ingest)


def test_corpus_sizes():
    assert len(SEEDED) >= 30
    assert len(EXHAUSTIBLE) == 10


@requires_solver
@pytest.mark.parametrize("path", SEEDED, ids=lambda p: p.stem)
def test_seeded_error_is_found_and_confirmed(path: Path):
    h, prog, cfg, results = _verify(path)
    hits = [(s, v) for s, v in results if s.code == h.code and h.function in (s.function, s.entry)]
    assert any(v.kind == WITNESS for _, v in hits), [(s.describe(), v.describe()) for s, v in results]
    for s, v in results:
        assert v.kind not in (TIMEOUT, UNSUPPORTED), (s.describe(), v.describe(), v.detail)
        if v.kind == WITNESS:
            cx = v.counterexample
            out = evaluate(prog, cx.entry, list(cx.args), cfg, ingest=cx.ingest)
            assert out.error is not None and out.error.site == s.key


@requires_solver
@pytest.mark.parametrize("path", EXHAUSTIBLE, ids=lambda p: p.stem)
def test_exhaustible_verdicts_match_enumeration(path: Path):
    h, prog, cfg, results = _verify(path)
    assert sum(1 for _ in enumerate_inputs(prog, h.entry, cfg=cfg)) > 0
    reached = reachable_sites(prog, h.entry, cfg)
    assert reached <= {s.key for s, _ in results}
    for s, v in results:
        assert v.kind == WITNESS if s.key in reached else v.kind != WITNESS, s.describe()
        assert v.kind not in (TIMEOUT, UNSUPPORTED)
