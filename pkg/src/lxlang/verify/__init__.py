"""Small-model verification: enumerate error sites, solve per-site queries, confirm witnesses."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from lxlang.ir import nodes as I
from lxlang.runtime.evaluator import CheckConfig, Outcome, evaluate
from lxlang.runtime.external import to_json
from lxlang.runtime.values import show
from lxlang.verify import smt as S
from lxlang.verify.decode import ModelError, decode_model
from lxlang.verify.encoder import Encoder, SmallModelBounds
from lxlang.verify.sites import ErrorSite, entry_of, enumerate_error_sites
from lxlang.verify.smt import Unsupported
from lxlang.verify.solver import SolverNotFound, SolverResult, find_solver, invoke_solver

WITNESS = "witness"
NO_WITNESS = "no-witness-within-bounds"
TIMEOUT = "solver-timeout"
UNSUPPORTED = "unsupported"


@dataclass(frozen=True)
class Counterexample:
    entry: str
    args: tuple
    site: int
    ingest: bool = False

    def to_json(self) -> list:
        return [to_json(a) for a in self.args]

    def describe(self) -> str:
        return f"{self.entry}(" + ", ".join(show(a) for a in self.args) + ")"


@dataclass(frozen=True)
class SiteVerdict:
    kind: str
    counterexample: Counterexample | None = None
    feature: str | None = None
    detail: str = ""

    def describe(self) -> str:
        if self.kind == WITNESS:
            return f"witness {self.counterexample.describe()}"
        if self.kind == UNSUPPORTED:
            return f"unsupported({self.feature})"
        return self.kind


@dataclass(frozen=True)
class Confirmation:
    confirmed: bool
    outcome: Outcome


@dataclass
class EntryEncoding:
    """A symbolically evaluated entry shared by all of its sites."""

    entry: str
    encoder: Encoder | None = None
    unsupported: str | None = None
    occurrences: dict = field(default_factory=dict)

    def script(self, site: ErrorSite) -> str:
        enc = self.encoder
        target = S.or_(*self.occurrences.get(site.key, []))
        lines = [f"; site {site.id}: {site.describe()} via {self.entry}", *enc.script.lines,
                 f"(assert {target})", "(check-sat)"]
        if enc.inputs:
            lines.append("(get-value (" + " ".join(c for c, _, _ in enc.inputs) + "))")
        return "\n".join(lines) + "\n"


def encode_entry(program: I.IRProgram, entry: str, cfg: CheckConfig, bounds: SmallModelBounds,
                 ingest: bool = False) -> EntryEncoding:
    out = EntryEncoding(entry)
    enc = Encoder(program, cfg, bounds)
    try:
        enc.encode_entry(entry, ingest)
    except Unsupported as exc:
        out.unsupported = exc.feature
        return out
    except RecursionError:
        out.unsupported = "encoding depth"
        return out
    out.encoder = enc
    for ev in enc.events:
        out.occurrences.setdefault(ev.site, []).append(ev.term)
    return out


def encode_site(program: I.IRProgram, site: ErrorSite, bounds: SmallModelBounds | None = None,
                cfg: CheckConfig | None = None, ingest: bool = False) -> str:
    """Solver script asking for entry arguments that make ``site`` the first error raised."""
    enc = encode_entry(program, site.entry, cfg or CheckConfig(), bounds or SmallModelBounds(), ingest)
    if enc.unsupported is not None:
        raise Unsupported(enc.unsupported)
    return enc.script(site)


def confirm_witness(program: I.IRProgram, cx: Counterexample, site: ErrorSite,
                    cfg: CheckConfig | None = None) -> Confirmation:
    """Re-run the witness concretely; it counts only if it stops at exactly ``site``."""
    outcome = evaluate(program, cx.entry, list(cx.args), cfg or CheckConfig(), ingest=cx.ingest)
    ok = outcome.error is not None and outcome.error.site == site.key
    return Confirmation(ok, outcome)


def _judge(program: I.IRProgram, site: ErrorSite, enc: EntryEncoding, res: SolverResult,
           cfg: CheckConfig, ingest: bool) -> SiteVerdict:
    if res.status == "unsat":
        return SiteVerdict(NO_WITNESS)
    if res.status in ("timeout", "unknown"):
        return SiteVerdict(TIMEOUT, detail=res.diagnostics)
    if res.status == "error":
        return SiteVerdict(TIMEOUT, detail="solver error: " + res.diagnostics[:500])
    try:
        args = decode_model(program, site.entry, res.model, enc.encoder.inputs, enc.encoder.sorts)
    except (ModelError, ValueError, IndexError) as exc:
        return SiteVerdict(UNSUPPORTED, feature="model decoding", detail=str(exc))
    cx = Counterexample(site.entry, tuple(args), site.id, ingest)
    conf = confirm_witness(program, cx, site, cfg)
    if not conf.confirmed:
        return SiteVerdict(UNSUPPORTED, feature="unconfirmed witness",
                           detail=f"{cx.describe()} gives {conf.outcome.serialize()}")
    return SiteVerdict(WITNESS, counterexample=cx)


def verify_program(program: I.IRProgram, bounds: SmallModelBounds | None = None, cfg: CheckConfig | None = None,
                   timeout: float = 10.0, solver: str | None = None, jobs: int = 1,
                   ingest: frozenset[str] | set[str] = frozenset(), dump_dir: str | None = None,
                   sites: list[ErrorSite] | None = None) -> list[tuple[ErrorSite, SiteVerdict]]:
    """A verdict for every enumerated site, in site-id order."""
    bounds = bounds or SmallModelBounds()
    cfg = cfg or CheckConfig()
    ingest = frozenset(ingest)
    all_sites = enumerate_error_sites(program, cfg, ingest) if sites is None else sites
    if not all_sites:
        return []
    binary = find_solver(solver)
    encodings: dict[str, EntryEncoding] = {}
    for s in all_sites:
        if s.entry not in encodings:
            encodings[s.entry] = encode_entry(program, s.entry, cfg, bounds, s.entry in ingest)
    scripts: dict[int, str] = {}
    for s in all_sites:
        enc = encodings[s.entry]
        if enc.unsupported is None:
            scripts[s.id] = enc.script(s)
    if dump_dir is not None:
        os.makedirs(dump_dir, exist_ok=True)
        for sid, text in scripts.items():
            with open(os.path.join(dump_dir, f"site_{sid}.smt2"), "w", encoding="utf-8") as fh:
                fh.write(text)

    def solve(sid: int) -> SolverResult:
        return invoke_solver(scripts[sid], timeout, binary)

    ids = sorted(scripts)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = dict(zip(ids, pool.map(solve, ids)))
    else:
        results = {sid: solve(sid) for sid in ids}
    out = []
    for s in all_sites:
        enc = encodings[s.entry]
        if enc.unsupported is not None:
            out.append((s, SiteVerdict(UNSUPPORTED, feature=enc.unsupported)))
        else:
            out.append((s, _judge(program, s, enc, results[s.id], cfg, s.entry in ingest)))
    return out


def verdict_json(site: ErrorSite, verdict: SiteVerdict) -> dict:
    d = {"id": site.id, "function": site.function, "path": site.path, "code": site.code,
         "sub": site.sub, "entry": site.entry, "position": site.position, "verdict": verdict.kind}
    if verdict.kind == WITNESS:
        d["witness"] = verdict.counterexample.to_json()
    if verdict.feature is not None:
        d["feature"] = verdict.feature
    return d


__all__ = [
    "ErrorSite",
    "SmallModelBounds",
    "SiteVerdict",
    "Counterexample",
    "Confirmation",
    "SolverNotFound",
    "Unsupported",
    "enumerate_error_sites",
    "encode_site",
    "encode_entry",
    "invoke_solver",
    "decode_model",
    "confirm_witness",
    "verify_program",
    "verdict_json",
    "entry_of",
    "WITNESS",
    "NO_WITNESS",
    "TIMEOUT",
    "UNSUPPORTED",
]
