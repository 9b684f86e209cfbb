"""Run ir/run/verify over every fixture in one process and print all output.

Usage: python determinism_driver.py JOBS
"""

from __future__ import annotations

import contextlib
import io
import itertools
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from helpers import FIXTURES, enumerate_inputs, read_header  # noqa: E402
from lxlang.cli import main  # noqa: E402
from lxlang.lowering import compile_source  # noqa: E402
from lxlang.runtime.evaluator import CheckConfig  # noqa: E402
from lxlang.runtime.external import to_json  # noqa: E402


def corpus() -> list[Path]:
    return sorted(p for d in ("programs", "seeded", "exhaustible") for p in (FIXTURES / d).glob("*.lx"))


def invoke(argv: list[str], extra: tuple[str, ...] = ()) -> str:
    """Run one command; ``extra`` flags are left out of the echoed command line."""
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf), contextlib.redirect_stderr(buf):
        code = main([*argv, *extra])
    return f"$ lx {' '.join(argv)}\n{buf.getvalue()}exit {code}\n"


def sample_args(path: Path, entry: str, level: str) -> str | None:
    prog = compile_source(path.read_text(encoding="utf-8"), str(path))
    try:
        first = list(itertools.islice(enumerate_inputs(prog, entry, cfg=CheckConfig.at(level)), 3))
    except ValueError:
        return None
    return json.dumps([to_json(a) for a in first[-1]]) if first else None


def run_all(jobs: str) -> str:
    out = []
    for path in corpus():
        h = read_header(path)
        rel = str(path.relative_to(FIXTURES.parent.parent))
        out.append(invoke(["ir", rel]))
        ingest = [a for e in sorted(h.ingest) for a in ("--ingest", e)]
        out.append(invoke(["verify", rel, "--level", h.level, *ingest], ("--jobs", jobs)))
        prog = compile_source(path.read_text(encoding="utf-8"), str(path))
        for entry in prog.entries:
            args = sample_args(path, entry, h.level)
            if args is not None:
                out.append(invoke(["run", rel, "--level", h.level, "--entry", entry, "--args", args]))
    return "".join(out)


if __name__ == "__main__":
    sys.stdout.write(run_all(sys.argv[1]))
