"""Command-line entry point: ``lx check|run|ir|verify|rank``.

Exit codes: 0 success, 1 compile/static error, 2 runtime error outcome,
3 the verifier confirmed at least one witness, 4 environment failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

from lxlang.diagnostics import CompileError
from lxlang.frontend import ast as A
from lxlang.frontend.parser import parse_source
from lxlang.ir.text import serialize_ir
from lxlang.lowering import lower_program
from lxlang.runtime.evaluator import LEVEL_ORDER, CheckConfig, evaluate
from lxlang.runtime.external import ExternalDataError, decode_args, to_json
from lxlang.typesys.checker import check_program, typecheck_program
from lxlang.verify import WITNESS, SmallModelBounds, verdict_json, verify_program
from lxlang.verify.solver import SOLVER_ENV, SolverNotFound, find_solver

EXIT_OK, EXIT_COMPILE, EXIT_RUNTIME, EXIT_WITNESS, EXIT_ENV = 0, 1, 2, 3, 4
DEFAULT_LEVEL = "test"


@dataclass
class CliConfig:
    subcommand: str
    files: list[str] = field(default_factory=list)
    level: str = DEFAULT_LEVEL
    bounds: SmallModelBounds = field(default_factory=SmallModelBounds)
    solver: str | None = None
    timeout: float = 10.0
    jobs: int = 1
    json: bool = False
    dump_smt: str | None = None
    emit_ir: str | None = None

    @property
    def check_config(self) -> CheckConfig:
        return CheckConfig.at(self.level)


def config_from_args(ns: argparse.Namespace) -> CliConfig:
    bounds = SmallModelBounds(
        list_length=getattr(ns, "list_bound", 3),
        string_length=getattr(ns, "string_bound", 16),
        unroll=getattr(ns, "unroll", 4),
        map_size=getattr(ns, "map_bound", 3),
    )
    return CliConfig(
        subcommand=ns.command,
        files=list(getattr(ns, "files", []) or []),
        level=ns.level,
        bounds=bounds,
        solver=getattr(ns, "solver", None),
        timeout=getattr(ns, "timeout", 10.0),
        jobs=getattr(ns, "jobs", 1),
        json=ns.json,
        dump_smt=getattr(ns, "dump_smt", None),
        emit_ir=getattr(ns, "emit_ir", None),
    )


# ---------------------------------------------------------------- loading


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def parse_files(files: list[str]) -> A.Program:
    decls: list[A.Decl] = []
    errors = []
    for f in files:
        try:
            decls.extend(parse_source(_read(f), f).decls)
        except CompileError as exc:
            errors.extend(exc.diagnostics)
    if errors:
        raise CompileError(errors)
    return A.Program(decls, files[0] if len(files) == 1 else "<files>")


def compile_files(files: list[str]):
    return lower_program(check_program(parse_files(files)))


def _report_compile_error(exc: CompileError) -> int:
    for d in exc.diagnostics:
        print(d, file=sys.stderr)
    return EXIT_COMPILE


def _emit_ir(program, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(serialize_ir(program))


# ---------------------------------------------------------------- commands


def cmd_check(cfg: CliConfig) -> int:
    try:
        prog = parse_files(cfg.files)
    except CompileError as exc:
        return _report_compile_error(exc)
    cp = typecheck_program(prog)
    for d in cp.diagnostics:
        print(d, file=sys.stderr)
    if cp.errors:
        return EXIT_COMPILE
    try:
        lower_program(cp)
    except CompileError as exc:
        # a deferred body is still a checked program
        if not all("deferred body" in d.message for d in exc.diagnostics):
            return _report_compile_error(exc)
    if cfg.json:
        print(json.dumps({"ok": True, "diagnostics": [str(d) for d in cp.diagnostics]}))
    return EXIT_OK


def cmd_run(cfg: CliConfig, entry: str, args_json: str, ingest: bool) -> int:
    try:
        program = compile_files(cfg.files)
    except CompileError as exc:
        return _report_compile_error(exc)
    _emit_ir(program, cfg.emit_ir)
    if not program.has(entry):
        print(f"error: no function named {entry}", file=sys.stderr)
        return EXIT_COMPILE
    try:
        decoded = decode_args(program, entry, args_json, cfg.check_config)
    except (ExternalDataError, json.JSONDecodeError) as exc:
        print(f"error: bad arguments: {exc}", file=sys.stderr)
        return EXIT_COMPILE
    outcome = decoded if decoded.error is not None else evaluate(
        program, entry, decoded.value, cfg.check_config, ingest=ingest)
    if cfg.json:
        d: dict = {"ok": outcome.ok}
        if outcome.ok:
            d["value"] = to_json(outcome.value)
        else:
            e = outcome.error
            d["error"] = {"code": e.code, "function": e.fn, "path": e.path, "sub": e.sub, "message": e.message}
        print(json.dumps(d, sort_keys=True))
    else:
        print(outcome.serialize())
    return EXIT_OK if outcome.ok else EXIT_RUNTIME


def cmd_ir(cfg: CliConfig, output: str | None) -> int:
    try:
        program = compile_files(cfg.files)
    except CompileError as exc:
        return _report_compile_error(exc)
    text = serialize_ir(program)
    target = output or cfg.emit_ir
    if target:
        _emit_ir(program, target)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _summary(results) -> dict:
    counts = {"sites": len(results), "witness": 0, "no-witness-within-bounds": 0, "solver-timeout": 0,
              "unsupported": 0}
    for _, v in results:
        counts[v.kind] += 1
    return counts


def cmd_verify(cfg: CliConfig, ingest: list[str]) -> int:
    try:
        program = compile_files(cfg.files)
    except CompileError as exc:
        return _report_compile_error(exc)
    _emit_ir(program, cfg.emit_ir)
    try:
        find_solver(cfg.solver)
        results = verify_program(program, cfg.bounds, cfg.check_config, cfg.timeout, cfg.solver, cfg.jobs,
                                 frozenset(ingest), cfg.dump_smt)
    except SolverNotFound as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENV
    summary = _summary(results)
    if cfg.json:
        print(json.dumps({"sites": [verdict_json(s, v) for s, v in results], "summary": summary}, sort_keys=True))
    else:
        for s, v in results:
            line = f"site {s.id} {s.describe()} [entry {s.entry}]: {v.describe()}"
            if v.kind == WITNESS:
                line += " args=" + json.dumps(v.counterexample.to_json())
            print(line)
        print("summary: " + ", ".join(f"{k}={summary[k]}" for k in summary))
    return EXIT_WITNESS if summary["witness"] else EXIT_OK


def cmd_rank(cfg: CliConfig, spec: str, candidates: str) -> int:
    from lxlang.harness import HoleError, rank_source, split_candidates

    try:
        find_solver(cfg.solver)
    except SolverNotFound as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENV
    try:
        reports = rank_source(_read(spec), split_candidates(_read(candidates)), spec, cfg.check_config,
                              cfg.bounds, cfg.timeout, cfg.solver, cfg.jobs)
    except CompileError as exc:
        return _report_compile_error(exc)
    except HoleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPILE
    if cfg.json:
        print(json.dumps([r.to_json() for r in reports], sort_keys=True))
    else:
        for r in reports:
            ens = ", ".join(v for _, v in r.ensures_verdicts) or "-"
            print(f"rank {r.rank}: candidate {r.index} status={r.status} "
                  f"examples={r.examples_passed}/{len(r.examples)} ensures={ens}")
            for d in r.diagnostics:
                print(f"  {d}")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--level", choices=list(reversed(LEVEL_ORDER)), default=DEFAULT_LEVEL,
                        help="enable checks up to this level (default: %(default)s)")
    common.add_argument("--json", action="store_true", help="machine-readable output")

    solving = argparse.ArgumentParser(add_help=False)
    solving.add_argument("--list-bound", type=int, default=3, help="max list length (default: %(default)s)")
    solving.add_argument("--string-bound", type=int, default=16, help="max string length (default: %(default)s)")
    solving.add_argument("--map-bound", type=int, default=3, help="max map size (default: %(default)s)")
    solving.add_argument("--unroll", type=int, default=4, help="recursion unrolling depth (default: %(default)s)")
    solving.add_argument("--solver", default=None, help=f"SMT solver binary (default: ${SOLVER_ENV} or z3)")
    solving.add_argument("--timeout", type=float, default=10.0, help="seconds per query (default: %(default)s)")
    solving.add_argument("--jobs", type=int, default=1, help="parallel solver processes (default: %(default)s)")

    p = argparse.ArgumentParser(prog="lx", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", parents=[common], help="parse and type-check")
    c.add_argument("files", nargs="+")

    r = sub.add_parser("run", parents=[common], help="evaluate an entry point")
    r.add_argument("files", nargs="+")
    r.add_argument("--entry", required=True)
    r.add_argument("--args", default="[]", help="JSON array of arguments")
    r.add_argument("--ingest", action="store_true", help="run validates on the arguments first")
    r.add_argument("--emit-ir", default=None)

    i = sub.add_parser("ir", parents=[common], help="print the lowered IR")
    i.add_argument("files", nargs="+")
    i.add_argument("-o", "--output", default=None)
    i.add_argument("--emit-ir", default=None)

    v = sub.add_parser("verify", parents=[common, solving], help="small-model verification")
    v.add_argument("files", nargs="+")
    v.add_argument("--dump-smt", default=None, metavar="DIR")
    v.add_argument("--emit-ir", default=None)
    v.add_argument("--ingest", action="append", default=[], metavar="ENTRY",
                   help="treat ENTRY as an ingestion boundary (validates apply)")

    k = sub.add_parser("rank", parents=[common, solving], help="screen and rank candidate bodies")
    k.add_argument("--spec", required=True)
    k.add_argument("--candidates", required=True)
    return p


def main(argv: list[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    cfg = config_from_args(ns)
    try:
        if ns.command == "check":
            return cmd_check(cfg)
        if ns.command == "run":
            return cmd_run(cfg, ns.entry, ns.args, ns.ingest)
        if ns.command == "ir":
            return cmd_ir(cfg, ns.output)
        if ns.command == "verify":
            return cmd_verify(cfg, ns.ingest)
        return cmd_rank(cfg, ns.spec, ns.candidates)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENV


if __name__ == "__main__":
    sys.exit(main())
