"""Candidate screening for a ``defer`` hole: splice, run examples, verify ensures, rank."""

from __future__ import annotations

from dataclasses import dataclass, field

from lxlang.diagnostics import CompileError, Diagnostic
from lxlang.frontend import ast as A
from lxlang.frontend.parser import parse_source
from lxlang.ir import nodes as I
from lxlang.lowering import lower_program
from lxlang.runtime.evaluator import CheckConfig, Outcome, evaluate
from lxlang.runtime.ops import LxError
from lxlang.runtime.refinterp import SurfaceInterpreter
from lxlang.runtime.values import show
from lxlang.typesys.checker import check_program
from lxlang.verify import NO_WITNESS, SmallModelBounds, verify_program
from lxlang.verify.sites import enumerate_error_sites

DELIMITER = "---"


class HoleError(ValueError):
    """The specification does not contain exactly one usable ``defer`` hole."""


@dataclass(frozen=True)
class HoleSpec:
    source: str
    file: str
    function: str
    line: int
    column: int
    n_ensures: int
    n_examples: int


@dataclass(frozen=True)
class ExampleResult:
    index: int
    passed: bool
    outcome: str
    expected: str
    ensures_ok: bool


@dataclass
class CandidateReport:
    index: int
    status: str  # ok | parse-error | type-error
    diagnostics: list[str] = field(default_factory=list)
    examples: list[ExampleResult] = field(default_factory=list)
    ensures_verdicts: list[tuple[str, str]] = field(default_factory=list)
    rank: int | None = None

    @property
    def compiles(self) -> bool:
        return self.status == "ok"

    @property
    def examples_passed(self) -> int:
        return sum(1 for e in self.examples if e.passed)

    @property
    def all_examples_pass(self) -> bool:
        return self.compiles and all(e.passed for e in self.examples)

    @property
    def ensures_clean(self) -> bool:
        return bool(self.ensures_verdicts) and all(v == NO_WITNESS for _, v in self.ensures_verdicts)

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "rank": self.rank,
            "status": self.status,
            "diagnostics": list(self.diagnostics),
            "examples": [
                {"index": e.index, "passed": e.passed, "outcome": e.outcome, "expected": e.expected,
                 "ensures_ok": e.ensures_ok}
                for e in self.examples
            ],
            "ensures_verdicts": [{"site": s, "verdict": v} for s, v in self.ensures_verdicts],
        }


# ---------------------------------------------------------------- holes


def _deferred(stmts) -> A.DeferS | None:
    for s in stmts or []:
        if isinstance(s, A.DeferS):
            return s
    return None


def _callables(prog: A.Program):
    for d in prog.decls:
        if isinstance(d, A.FunctionD):
            yield d.name, d
        for m in list(getattr(d, "members", []) or []) + list(getattr(d, "using", []) or []) + list(
            getattr(d, "extra", []) or []
        ):
            if isinstance(m, (A.MethodM, A.FunctionM)):
                yield f"{d.name}::{m.name}", m
        for case in getattr(d, "cases", []) or []:
            for m in getattr(case, "members", []) or []:
                if isinstance(m, (A.MethodM, A.FunctionM)):
                    yield f"{case.name}::{m.name}", m


def find_hole(source: str, file: str = "<spec>") -> HoleSpec:
    """Locate the single ``defer;`` statement in ``source``."""
    prog = parse_source(source, file)
    holes = []
    for key, decl in _callables(prog):
        d = _deferred(getattr(decl, "body", None))
        if d is not None:
            holes.append((key, decl, d))
    if len(holes) != 1:
        raise HoleError(f"expected exactly one defer hole, found {len(holes)}")
    key, decl, d = holes[0]
    sig = decl.sig
    return HoleSpec(source, file, key, d.pos.line, d.pos.column, len(sig.ensures), len(sig.examples))


def splice_text(hole: HoleSpec, body: str) -> str:
    lines = hole.source.split("\n")
    offset = sum(len(ln) + 1 for ln in lines[: hole.line - 1]) + hole.column - 1
    src = hole.source
    if not src.startswith("defer", offset):
        raise HoleError("hole position does not point at defer")
    end = src.index(";", offset) + 1
    return src[:offset] + body.strip() + src[end:]


@dataclass
class Spliced:
    program: I.IRProgram | None
    checked: object | None
    status: str
    diagnostics: list[Diagnostic]


def splice_candidate(hole: HoleSpec, body: str) -> Spliced:
    """Parse, check and lower the specification with ``body`` in place of the hole."""
    text = splice_text(hole, body)
    try:
        prog = parse_source(text, hole.file)
    except CompileError as exc:
        return Spliced(None, None, "parse-error", exc.errors)
    try:
        cp = check_program(prog)
        ir = lower_program(cp)
    except CompileError as exc:
        return Spliced(None, None, "type-error", exc.errors)
    return Spliced(ir, cp, "ok", [])


# ---------------------------------------------------------------- screening


def _examples(cp, function: str) -> list[A.Example]:
    c = cp.universe.callables[function]
    return list(getattr(c.decl, "sig").examples)


def run_examples(spliced: Spliced, hole: HoleSpec, cfg: CheckConfig | None = None) -> list[ExampleResult]:
    """Evaluate every example through the candidate and compare structurally."""
    cfg = cfg or CheckConfig.at("spec")
    cp = spliced.checked
    interp = SurfaceInterpreter(cp, cfg)
    out = []
    for i, ex in enumerate(_examples(cp, hole.function)):
        try:
            args = [interp.expr(a, {}, {}) for a in ex.args]
            expected = interp.expr(ex.result, {}, {})
        except LxError as exc:
            out.append(ExampleResult(i, False, f"error {exc.code}", "?", False))
            continue
        outcome: Outcome = evaluate(spliced.program, hole.function, args, cfg)
        ensures_ok = outcome.error is None or outcome.error.code != "postcondition-fail"
        passed = outcome.ok and outcome.value == expected
        out.append(ExampleResult(i, passed, outcome.serialize(), show(expected), ensures_ok))
    return out


def check_ensures(spliced: Spliced, hole: HoleSpec, cfg: CheckConfig | None = None,
                  bounds: SmallModelBounds | None = None, timeout: float = 10.0,
                  solver: str | None = None) -> list[tuple[str, str]]:
    """Small-model verdict for each ensures site of the hole function."""
    cfg = cfg or CheckConfig.at("spec")
    sites = [s for s in enumerate_error_sites(spliced.program, cfg)
             if s.function == hole.function and s.code == "postcondition-fail"]
    results = verify_program(spliced.program, bounds, cfg, timeout, solver, sites=sites)
    return [(s.describe(), v.kind) for s, v in results]


def evaluate_candidate(hole: HoleSpec, index: int, body: str, cfg: CheckConfig | None = None,
                       bounds: SmallModelBounds | None = None, timeout: float = 10.0,
                       solver: str | None = None) -> CandidateReport:
    spliced = splice_candidate(hole, body)
    rep = CandidateReport(index, spliced.status, [str(d) for d in spliced.diagnostics])
    if not rep.compiles:
        return rep
    rep.examples = run_examples(spliced, hole, cfg)
    if rep.all_examples_pass:
        rep.ensures_verdicts = check_ensures(spliced, hole, cfg, bounds, timeout, solver)
    return rep


def rank_key(r: CandidateReport) -> tuple:
    return (not r.compiles, -r.examples_passed, not r.ensures_clean, r.index)


def rank_candidates(reports: list[CandidateReport]) -> list[CandidateReport]:
    """Best first: compiles, then examples passed, then clean ensures, then supplied order."""
    ordered = sorted(reports, key=rank_key)
    for k, r in enumerate(ordered, start=1):
        r.rank = k
    return ordered


def split_candidates(text: str) -> list[str]:
    blocks: list[list[str]] = [[]]
    for line in text.split("\n"):
        if line.strip() == DELIMITER:
            blocks.append([])
        else:
            blocks[-1].append(line)
    return [b for b in ("\n".join(x).strip() for x in blocks) if b]


def rank_source(spec_source: str, candidates: list[str], file: str = "<spec>", cfg: CheckConfig | None = None,
                bounds: SmallModelBounds | None = None, timeout: float = 10.0, solver: str | None = None,
                jobs: int = 1) -> list[CandidateReport]:
    hole = find_hole(spec_source, file)

    def one(i: int) -> CandidateReport:
        return evaluate_candidate(hole, i + 1, candidates[i], cfg, bounds, timeout, solver)

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(one, range(len(candidates))))
    else:
        reports = [one(i) for i in range(len(candidates))]
    return rank_candidates(reports)


__all__ = [
    "HoleSpec",
    "HoleError",
    "CandidateReport",
    "ExampleResult",
    "find_hole",
    "splice_candidate",
    "run_examples",
    "check_ensures",
    "evaluate_candidate",
    "rank_candidates",
    "rank_key",
    "split_candidates",
    "rank_source",
]
