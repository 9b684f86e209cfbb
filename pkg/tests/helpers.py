"""Shared oracles for the test suite: bounded input enumeration and fixture headers."""

from __future__ import annotations

import itertools
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from lxlang.ir import nodes as I
from lxlang.runtime.evaluator import CheckConfig, evaluate
from lxlang.runtime.external import decode_args
from lxlang.typesys.typesig import ListT, MapT, NominalT, Prim, RecordT, StringOfT, TupleT, TypedeclT, TypeSig

FIXTURES = Path(__file__).parent / "fixtures"


@dataclass
class Header:
    code: str | None = None
    function: str | None = None
    entry: str | None = None
    level: str = "test"
    ingest: set[str] = field(default_factory=set)


def read_header(path: Path) -> Header:
    h = Header()
    for line in path.read_text(encoding="utf-8").splitlines():
        m = re.match(r"//\s*(expect|entry|level|ingest):\s*(.*)", line)
        if not m:
            continue
        key, val = m.groups()
        if key == "expect":
            h.code, h.function = val.split()
        elif key == "entry":
            h.entry = val.strip()
        elif key == "level":
            h.level = val.strip()
        else:
            h.ingest.add(val.strip())
    return h


@dataclass(frozen=True)
class Domain:
    """Finite stand-ins for the solver's bounded input space."""

    list_length: int = 3
    map_size: int = 3
    ints: tuple[int, ...] = tuple(range(-4, 8))
    alphabet: str = "ab"
    string_length: int = 2
    max_values: int = 20_000


def json_domain(program: I.IRProgram, t: TypeSig, dom: Domain, stack: tuple = ()) -> list:
    """Every JSON document of type ``t`` inside ``dom``; invalid ones are filtered by decoding later."""
    out: list = []
    for a in program.types.atoms(t):
        if a in stack:
            raise ValueError(f"recursive type {a} has no finite domain")
        out.extend(_atom_domain(program, a, dom, stack + (a,)))
    return out


def _atom_domain(program: I.IRProgram, a: TypeSig, dom: Domain, stack: tuple) -> list:
    if isinstance(a, Prim):
        if a.name == "Bool":
            return [False, True]
        if a.name == "None":
            return [None]
        if a.name in ("Int", "Nat"):
            return [i for i in dom.ints if a.name == "Int" or i >= 0]
        if a.name in ("BigInt", "BigNat"):
            return [str(i) for i in dom.ints if a.name == "BigInt" or i >= 0]
        if a.name in ("String", "ASCIIString"):
            return _strings(dom)
        raise ValueError(f"no finite domain for {a}")
    if isinstance(a, TypedeclT):
        return json_domain(program, a.base, dom, stack)
    if isinstance(a, StringOfT):
        return _strings(dom)
    if isinstance(a, TupleT):
        return [list(p) for p in _product(dom, [json_domain(program, x, dom, stack) for x in a.items])]
    if isinstance(a, (RecordT, NominalT)):
        fields = a.fields if isinstance(a, RecordT) else program.types.field_types(a)
        names = [n for n, _ in fields]
        return [dict(zip(names, p)) for p in _product(dom, [json_domain(program, ft, dom, stack) for _, ft in fields])]
    if isinstance(a, ListT):
        elems = json_domain(program, a.elem, dom, stack)
        _guard(dom, sum(len(elems) ** n for n in range(dom.list_length + 1)))
        return [list(p) for n in range(dom.list_length + 1) for p in itertools.product(elems, repeat=n)]
    if isinstance(a, MapT):
        keys = json_domain(program, a.key, dom, stack)
        vals = json_domain(program, a.value, dom, stack)
        _guard(dom, sum(math.comb(len(keys), n) * len(vals) ** n for n in range(min(dom.map_size, len(keys)) + 1)))
        out = []
        for n in range(min(dom.map_size, len(keys)) + 1):
            for ks in itertools.combinations(keys, n):
                for vs in itertools.product(vals, repeat=n):
                    out.append([[k, v] for k, v in zip(ks, vs)])
        return out
    raise ValueError(f"no finite domain for {a}")


def _guard(dom: Domain, count: int) -> None:
    if count > dom.max_values:
        raise ValueError(f"domain of {count} values is too large to enumerate")


def _product(dom: Domain, parts: list[list]):
    _guard(dom, math.prod(len(p) for p in parts))
    return itertools.product(*parts)


def _strings(dom: Domain) -> list[str]:
    return ["".join(p) for n in range(dom.string_length + 1) for p in itertools.product(dom.alphabet, repeat=n)]


def enumerate_inputs(program: I.IRProgram, entry: str, dom: Domain | None = None,
                     cfg: CheckConfig | None = None):
    """Decoded argument lists for every well-formed input; ill-formed documents are skipped."""
    dom = dom or Domain()
    fn = program.function(entry)
    for combo in itertools.product(*(json_domain(program, t, dom) for _, t in fn.params)):
        decoded = decode_args(program, entry, json.dumps(list(combo)), cfg)
        if decoded.error is None:
            yield decoded.value


def reachable_sites(program: I.IRProgram, entry: str, cfg: CheckConfig, dom: Domain | None = None,
                    ingest: bool = False) -> set[tuple]:
    """Site keys raised as the first error by some input in the domain."""
    out = set()
    for args in enumerate_inputs(program, entry, dom, cfg):
        o = evaluate(program, entry, list(args), cfg, ingest=ingest)
        if o.error is not None:
            out.add(o.error.site)
    return out
