from __future__ import annotations

import shutil
import sys
from pathlib import Path

import pytest

TESTS = Path(__file__).parent
FIXTURES = TESTS / "fixtures"
sys.path.insert(0, str(TESTS))

from lxlang.lowering import compile_source  # noqa: E402


def fixture_path(*parts: str) -> Path:
    return FIXTURES.joinpath(*parts)


def compile_fixture(*parts: str):
    p = fixture_path(*parts)
    return compile_source(p.read_text(encoding="utf-8"), str(p))


requires_solver = pytest.mark.skipif(shutil.which("z3") is None, reason="z3 not on PATH")


@pytest.fixture
def compile_text():
    def go(text: str, name: str = "<test>"):
        return compile_source(text, name)

    return go
