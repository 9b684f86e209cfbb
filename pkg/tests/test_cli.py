from __future__ import annotations

import json
import subprocess
import sys

import pytest

from conftest import requires_solver
from helpers import FIXTURES
from lxlang.cli import build_parser, config_from_args, main

ABS = str(FIXTURES / "listings" / "abs.lx")
TRADING = str(FIXTURES / "programs" / "trading.lx")


def lx(*args: str, stdin: str | None = None) -> subprocess.CompletedProcess:
    return subprocess.run([sys.executable, "-m", "lxlang", *args], capture_output=True, text=True,
                          input=stdin, timeout=300)


def test_config_defaults():
    cfg = config_from_args(build_parser().parse_args(["verify", ABS]))
    assert (cfg.level, cfg.timeout, cfg.jobs) == ("test", 10.0, 1)
    assert (cfg.bounds.list_length, cfg.bounds.string_length, cfg.bounds.map_size, cfg.bounds.unroll) == (3, 16, 3, 4)


def test_check(capsys):
    assert main(["check", str(FIXTURES / "programs" / "itree.lx")]) == 0
    assert main(["check", str(FIXTURES / "listings" / "maxpair_spec.lx")]) == 0


def test_check_reports_errors(tmp_path, capsys):
    bad = tmp_path / "bad.lx"
    bad.write_text("function f(): Int { let g = fn(x) => x; return 1i; }")
    assert main(["check", str(bad)]) == 1
    assert "lambda stored in local" in capsys.readouterr().err


def test_run_text_and_json(capsys):
    assert main(["run", ABS, "--entry", "abs", "--args", "[-5]"]) == 0
    assert capsys.readouterr().out == "ok 5i\n"
    assert main(["run", ABS, "--entry", "abs", "--args", f"[{-(2**63)}]", "--json"]) == 2
    out = json.loads(capsys.readouterr().out)
    assert out["ok"] is False and out["error"]["code"] == "overflow"


def test_run_bad_arguments(capsys):
    assert main(["run", ABS, "--entry", "abs", "--args", '["x"]']) == 1
    assert main(["run", ABS, "--entry", "nope"]) == 1


def test_ir_to_file(tmp_path, capsys):
    out = tmp_path / "abs.ir"
    assert main(["ir", ABS, "-o", str(out)]) == 0
    assert out.read_text().startswith("(lxir 1)\n(entries abs)\n")


def test_ir_from_stdin():
    res = lx("ir", "-", stdin="")
    assert (res.returncode, res.stdout) == (0, "(lxir 1)\n(entries)\n")


@requires_solver
def test_verify_exit_codes_and_dump(tmp_path, capsys):
    assert main(["verify", TRADING, "--dump-smt", str(tmp_path)]) == 3
    text = capsys.readouterr().out
    assert text.splitlines()[-1] == (
        "summary: sites=4, witness=1, no-witness-within-bounds=3, solver-timeout=0, unsupported=0"
    )
    assert len(list(tmp_path.glob("site_*.smt2"))) == 4
    assert main(["verify", str(FIXTURES / "programs" / "trading_fixed.lx")]) == 0


@requires_solver
def test_verify_json(capsys):
    assert main(["verify", TRADING, "--json", "--ingest", "process"]) == 3
    doc = json.loads(capsys.readouterr().out)
    codes = [s["code"] for s in doc["sites"] if s["verdict"] == "witness"]
    assert sorted(codes) == ["postcondition-fail", "validate-fail", "validate-fail"]


def test_missing_solver_exit_code(capsys):
    assert main(["verify", ABS, "--solver", "/nonexistent/z3"]) == 4


@requires_solver
def test_rank(capsys):
    assert main([
        "rank", "--spec", str(FIXTURES / "listings" / "maxpair_spec.lx"),
        "--candidates", str(FIXTURES / "listings" / "maxpair_candidates.txt"),
    ]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("rank 1: candidate 2 status=ok examples=1/1")
    assert lines[1].startswith("rank 2: candidate 1 status=ok examples=0/1")


def test_unreadable_file_is_environment_error(capsys):
    assert main(["verify", "/nonexistent/file.lx"]) == 4


@pytest.mark.parametrize("argv", [[], ["frobnicate"], ["run", ABS]])
def test_usage_errors(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2
