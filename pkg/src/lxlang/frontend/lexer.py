"""Tokenizer for ``.lx`` source text."""

from __future__ import annotations

import re
from dataclasses import dataclass

from lxlang.diagnostics import CompileError, Diagnostic, SourcePos, error

KEYWORDS = frozenset(
    {
        "typedecl", "concept", "entity", "datatype", "using", "of", "provides",
        "function", "method", "const", "field", "invariant", "validate",
        "abstract", "override", "recursive", "ref", "let", "var", "if", "elif",
        "else", "then", "match", "return", "assert", "requires", "ensures",
        "examples", "defer", "true", "false", "none", "pred", "fn", "this",
    }
)

# longest first
PUNCT = [
    "...", "==>", "===", "!==", "::", "??", "@@", "==", "!=", "<=", ">=", "&&",
    "||", "=>", "(", ")", "{", "}", "[", "]", ",", ";", ":", ".", "?", "@",
    "!", "=", "<", ">", "+", "-", "*", "/", "%", "|", "&",
]

NUM_SUFFIX = {"i": "Int", "n": "Nat", "I": "BigInt", "N": "BigNat", "f": "Float", "d": "Decimal"}

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_RATIONAL = re.compile(r"(\d+)/(\d+)R")
_NUMBER = re.compile(r"\d+(?:\.\d+)?")


@dataclass(frozen=True)
class Token:
    kind: str  # ident | kw | punct | num | tnum | str | tstr | binder | regex | eof
    text: str
    pos: SourcePos
    # num: (suffix-kind or "untyped", digits); tstr/tnum: (payload, type name)
    value: object = None

    def __repr__(self) -> str:
        return f"Token({self.kind}, {self.text!r})"


class Lexer:
    def __init__(self, source: str, file: str = "<input>"):
        self.src = source
        self.file = file
        self.i = 0
        self.line = 1
        self.col = 1
        self.tokens: list[Token] = []
        self.diags: list[Diagnostic] = []

    def pos(self) -> SourcePos:
        return SourcePos(self.file, self.line, self.col)

    def advance(self, n: int) -> str:
        text = self.src[self.i : self.i + n]
        for ch in text:
            if ch == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
        self.i += n
        return text

    def peek(self, k: int = 0) -> str:
        j = self.i + k
        return self.src[j] if j < len(self.src) else ""

    def emit(self, kind: str, text: str, pos: SourcePos, value: object = None) -> None:
        self.tokens.append(Token(kind, text, pos, value))

    def run(self) -> list[Token]:
        while self.i < len(self.src):
            ch = self.peek()
            if ch in " \t\r\n﻿":
                self.advance(1)
                continue
            if ch == "/" and self.peek(1) == "/":
                while self.i < len(self.src) and self.peek() != "\n":
                    self.advance(1)
                continue
            if ch == "/" and self.peek(1) == "*":
                start = self.pos()
                end = self.src.find("*/", self.i + 2)
                if end < 0:
                    self.diags.append(error(start, "unterminated block comment"))
                    self.advance(len(self.src) - self.i)
                    break
                self.advance(end + 2 - self.i)
                continue
            start = self.pos()
            if ch == '"':
                self.lex_string(start)
            elif ch == "/" and self.regex_allowed():
                self.lex_regex(start)
            elif ch.isdigit():
                self.lex_number(start)
            elif ch == "$":
                m = _IDENT.match(self.src, self.i + 1)
                name = m.group(0) if m else ""
                self.advance(1 + len(name))
                self.emit("binder", "$" + name, start, name)
            elif _IDENT.match(ch):
                name = _IDENT.match(self.src, self.i).group(0)
                self.advance(len(name))
                self.emit("kw" if name in KEYWORDS else "ident", name, start)
            else:
                for p in PUNCT:
                    if self.src.startswith(p, self.i):
                        self.advance(len(p))
                        self.emit("punct", p, start)
                        break
                else:
                    self.diags.append(error(start, f"unknown character {ch!r}"))
                    self.advance(1)
        return self.tokens

    def regex_allowed(self) -> bool:
        # a regex literal only ever follows `=` in a typedecl
        return bool(self.tokens) and self.tokens[-1].text == "=" and self.tokens[-1].kind == "punct"

    def lex_string(self, start: SourcePos) -> None:
        j = self.i + 1
        out: list[str] = []
        while True:
            if j >= len(self.src) or self.src[j] == "\n":
                self.diags.append(error(start, "unterminated string literal"))
                self.advance(j - self.i)
                return
            c = self.src[j]
            if c == '"':
                break
            if c == "\\":
                nxt = self.src[j + 1 : j + 2]
                if nxt == "u" and self.src[j + 2 : j + 3] == "{":
                    close = self.src.find("}", j)
                    try:
                        out.append(chr(int(self.src[j + 3 : close], 16)))
                    except ValueError:
                        self.diags.append(error(start, "malformed unicode escape"))
                    j = close + 1
                    continue
                out.append({"n": "\n", "t": "\t", "r": "\r", '"': '"', "\\": "\\"}.get(nxt, nxt))
                j += 2
                continue
            out.append(c)
            j += 1
        text = self.src[self.i : j + 1]
        self.advance(j + 1 - self.i)
        m = _IDENT.match(self.src, self.i)
        if m:
            self.advance(len(m.group(0)))
            self.emit("tstr", text + m.group(0), start, ("".join(out), m.group(0)))
        else:
            self.emit("str", text, start, "".join(out))

    def lex_regex(self, start: SourcePos) -> None:
        j = self.i + 1
        in_class = False
        while j < len(self.src) and self.src[j] != "\n":
            c = self.src[j]
            if c == "\\":
                j += 2
                continue
            if c == "[":
                in_class = True
            elif c == "]":
                in_class = False
            elif c == "/" and not in_class:
                body = self.src[self.i + 1 : j]
                self.advance(j + 1 - self.i)
                self.emit("regex", "/" + body + "/", start, body)
                return
            j += 1
        self.diags.append(error(start, "unterminated regex literal"))
        self.advance(j - self.i)

    def lex_number(self, start: SourcePos) -> None:
        after_dot = bool(self.tokens) and self.tokens[-1].text == "." and self.tokens[-1].kind == "punct"
        if after_dot:
            # tuple index: digits only, `v.0.1` must not become a float
            m = re.compile(r"\d+").match(self.src, self.i)
            digits = m.group(0)
            self.advance(len(digits))
            self.emit("num", digits, start, ("untyped", digits))
            return
        m = _RATIONAL.match(self.src, self.i)
        if m and not _IDENT.match(self.peek(len(m.group(0)))):
            self.advance(len(m.group(0)))
            self.emit("num", m.group(0), start, ("Rational", f"{m.group(1)}/{m.group(2)}"))
            return
        digits = _NUMBER.match(self.src, self.i).group(0)
        self.advance(len(digits))
        nxt = self.peek()
        if nxt == "_":
            m = _IDENT.match(self.src, self.i + 1)
            if not m or not m.group(0)[0].isalpha():
                self.diags.append(error(start, f"malformed numeric suffix after {digits}"))
                self.advance(1)
                return
            self.advance(1 + len(m.group(0)))
            self.emit("tnum", digits + "_" + m.group(0), start, (digits, m.group(0)))
            return
        m = _IDENT.match(self.src, self.i)
        if m:
            suffix = m.group(0)
            self.advance(len(suffix))
            kind = NUM_SUFFIX.get(suffix)
            if kind is None or ("." in digits and kind not in ("Float", "Decimal")):
                self.diags.append(error(start, f"malformed numeric suffix {suffix!r}"))
                return
            self.emit("num", digits + suffix, start, (kind, digits))
            return
        self.emit("num", digits, start, ("untyped", digits))


def tokenize(source: str, file: str = "<input>", *, raise_on_error: bool = True) -> list[Token]:
    """Tokenize ``source`` into a token list (no end marker; empty input gives ``[]``)."""
    lx = Lexer(source, file)
    toks = lx.run()
    if lx.diags and raise_on_error:
        raise CompileError(lx.diags)
    return toks


def tokenize_with_diagnostics(source: str, file: str = "<input>") -> tuple[list[Token], list[Diagnostic]]:
    lx = Lexer(source, file)
    toks = lx.run()
    return toks, lx.diags
