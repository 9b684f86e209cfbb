"""SMT-LIB2 text helpers: script builder, folding term constructors, literals, model parsing."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from lxlang import regex as rx

# z3's default string alphabet stops here; larger code points cannot appear in models
MAX_SOLVER_CHAR = 0x2FFFF

_INT_RE = re.compile(r"^-?\d+$")
_NEG_RE = re.compile(r"^\(- (\d+)\)$")


class Unsupported(Exception):
    """The site needs a feature the encoder does not model."""

    def __init__(self, feature: str):
        super().__init__(feature)
        self.feature = feature


# ---------------------------------------------------------------- literals


def int_lit(n: int) -> str:
    return str(n) if n >= 0 else f"(- {-n})"


def int_value(term: str) -> int | None:
    """The integer a literal term denotes, or None for non-literals."""
    if _INT_RE.match(term):
        return int(term)
    m = _NEG_RE.match(term)
    return -int(m.group(1)) if m else None


def str_lit(s: str) -> str:
    out = []
    for ch in s:
        c = ord(ch)
        if ch == '"':
            out.append('""')
        elif 0x20 <= c < 0x7F and ch != "\\":
            out.append(ch)
        else:
            out.append("\\u{%x}" % c)
    return '"' + "".join(out) + '"'


def unescape_str(body: str) -> str:
    """Decode the inside of a solver string literal (``""`` already collapsed)."""
    out = []
    i = 0
    while i < len(body):
        if body.startswith("\\u{", i):
            j = body.index("}", i)
            out.append(chr(int(body[i + 3 : j], 16)))
            i = j + 1
        elif body.startswith("\\u", i) and re.match(r"[0-9a-fA-F]{4}", body[i + 2 : i + 6]):
            out.append(chr(int(body[i + 2 : i + 6], 16)))
            i += 6
        else:
            out.append(body[i])
            i += 1
    return "".join(out)


# ---------------------------------------------------------------- folding constructors

TRUE, FALSE = "true", "false"


def not_(a: str) -> str:
    if a == TRUE:
        return FALSE
    if a == FALSE:
        return TRUE
    if a.startswith("(not ") and a.endswith(")"):
        inner = a[5:-1]
        if _balanced(inner):
            return inner
    return f"(not {a})"


def _balanced(s: str) -> bool:
    depth = 0
    in_str = False
    for ch in s:
        if ch == '"':
            in_str = not in_str
        elif not in_str:
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
                if depth < 0:
                    return False
            elif ch == " " and depth == 0:
                return False
    return depth == 0


def and_(*xs: str) -> str:
    items = []
    for x in xs:
        if x == FALSE:
            return FALSE
        if x != TRUE and x not in items:
            items.append(x)
    if not items:
        return TRUE
    if len(items) == 1:
        return items[0]
    return "(and " + " ".join(items) + ")"


def or_(*xs: str) -> str:
    items = []
    for x in xs:
        if x == TRUE:
            return TRUE
        if x != FALSE and x not in items:
            items.append(x)
    if not items:
        return FALSE
    if len(items) == 1:
        return items[0]
    return "(or " + " ".join(items) + ")"


def implies(a: str, b: str) -> str:
    return or_(not_(a), b)


def ite(c: str, a: str, b: str) -> str:
    if c == TRUE or a == b:
        return a
    if c == FALSE:
        return b
    if a == TRUE and b == FALSE:
        return c
    if a == FALSE and b == TRUE:
        return not_(c)
    return f"(ite {c} {a} {b})"


def eq(a: str, b: str) -> str:
    if a == b:
        return TRUE
    x, y = int_value(a), int_value(b)
    if x is not None and y is not None:
        return TRUE if x == y else FALSE
    if a in (TRUE, FALSE) and b in (TRUE, FALSE):
        return FALSE
    return f"(= {a} {b})"


def cmp(op: str, a: str, b: str) -> str:
    x, y = int_value(a), int_value(b)
    if x is not None and y is not None:
        return TRUE if {"<": x < y, "<=": x <= y, ">": x > y, ">=": x >= y}[op] else FALSE
    return f"({op} {a} {b})"


def add(a: str, b: str) -> str:
    x, y = int_value(a), int_value(b)
    if x is not None and y is not None:
        return int_lit(x + y)
    if y == 0:
        return a
    if x == 0:
        return b
    return f"(+ {a} {b})"


def sub(a: str, b: str) -> str:
    x, y = int_value(a), int_value(b)
    if x is not None and y is not None:
        return int_lit(x - y)
    if y == 0:
        return a
    return f"(- {a} {b})"


# ---------------------------------------------------------------- script


@dataclass
class Script:
    """Append-only script; non-atomic terms are named with ``define-fun``."""

    lines: list[str] = field(default_factory=list)
    count: int = 0

    def emit(self, line: str) -> None:
        self.lines.append(line)

    def define(self, sort: str, term: str, hint: str = "t") -> str:
        if _atomic(term):
            return term
        self.count += 1
        name = f"{hint}{self.count}"
        self.lines.append(f"(define-fun {name} () {sort} {term})")
        return name

    def declare(self, name: str, sort: str) -> str:
        self.lines.append(f"(declare-const {name} {sort})")
        return name

    def assume(self, term: str) -> None:
        if term != TRUE:
            self.lines.append(f"(assert {term})")

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


def _atomic(term: str) -> bool:
    return not term.startswith("(") or int_value(term) is not None


# ---------------------------------------------------------------- regex


def regex_term(pattern: str) -> str:
    """Translate a validator pattern into a solver regular expression."""
    return _re(rx.parse_regex(pattern))


def _char(c: int) -> str:
    return str_lit(chr(c))


def _re(node) -> str:
    if isinstance(node, rx.CharSet):
        parts = []
        for lo, hi in node.positive_ranges():
            if lo > MAX_SOLVER_CHAR:
                continue
            hi = min(hi, MAX_SOLVER_CHAR)
            parts.append(f"(str.to_re {_char(lo)})" if lo == hi else f"(re.range {_char(lo)} {_char(hi)})")
        if not parts:
            return "re.none"
        return parts[0] if len(parts) == 1 else "(re.union " + " ".join(parts) + ")"
    if isinstance(node, rx.Seq):
        items = [_re(i) for i in node.items]
        if not items:
            return '(str.to_re "")'
        return items[0] if len(items) == 1 else "(re.++ " + " ".join(items) + ")"
    if isinstance(node, rx.Alt):
        opts = [_re(o) for o in node.options]
        return opts[0] if len(opts) == 1 else "(re.union " + " ".join(opts) + ")"
    if isinstance(node, rx.Repeat):
        inner = _re(node.node)
        if node.max is None:
            if node.min == 0:
                return f"(re.* {inner})"
            return f"(re.++ ((_ re.loop {node.min} {node.min}) {inner}) (re.* {inner}))"
        return f"((_ re.loop {node.min} {node.max}) {inner})"
    raise Unsupported(f"regex node {type(node).__name__}")


# ---------------------------------------------------------------- s-expressions


@dataclass(frozen=True)
class SStr:
    """A string literal inside a parsed s-expression."""

    value: str


def parse_sexprs(text: str) -> list:
    """Parse solver output into nested lists of symbols and :class:`SStr`."""
    tokens = _tokens(text)
    out = []
    pos = 0
    while pos < len(tokens):
        node, pos = _read(tokens, pos)
        out.append(node)
    return out


def _tokens(text: str) -> list:
    toks: list = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif ch in "()":
            toks.append(ch)
            i += 1
        elif ch == '"':
            j = i + 1
            buf = []
            while True:
                if j >= n:
                    raise ValueError("unterminated string in solver output")
                if text[j] == '"':
                    if j + 1 < n and text[j + 1] == '"':
                        buf.append('"')
                        j += 2
                        continue
                    break
                buf.append(text[j])
                j += 1
            toks.append(SStr(unescape_str("".join(buf))))
            i = j + 1
        elif ch == "|":
            j = text.index("|", i + 1)
            toks.append(text[i + 1 : j])
            i = j + 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in '()";':
                j += 1
            toks.append(text[i:j])
            i = j
    return toks


def _read(toks: list, pos: int):
    tok = toks[pos]
    if tok == "(":
        items = []
        pos += 1
        while toks[pos] != ")":
            item, pos = _read(toks, pos)
            items.append(item)
        return items, pos + 1
    if tok == ")":
        raise ValueError("unbalanced parenthesis in solver output")
    return tok, pos + 1


def expand_lets(term, env: dict | None = None):
    """Substitute ``let`` bindings away."""
    env = env or {}
    if isinstance(term, str):
        return env.get(term, term)
    if isinstance(term, list):
        if term and term[0] == "let":
            inner = dict(env)
            for name, val in term[1]:
                inner[name] = expand_lets(val, env)
            return expand_lets(term[2], inner)
        return [expand_lets(t, env) for t in term]
    return term


__all__ = [
    "Unsupported",
    "Script",
    "SStr",
    "int_lit",
    "int_value",
    "str_lit",
    "unescape_str",
    "not_",
    "and_",
    "or_",
    "implies",
    "ite",
    "eq",
    "cmp",
    "add",
    "sub",
    "regex_term",
    "parse_sexprs",
    "expand_lets",
]
