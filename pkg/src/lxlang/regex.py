"""Minimal regex dialect for string validators.

Supports literals, escapes, ``.``, classes with ranges and negation, ``?``,
``*``, ``+``, ``{m}``, ``{m,}``, ``{m,n}``, alternation and grouping. The same
tree drives concrete matching here and the solver encoding in the verifier.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

MAX_CODEPOINT = 0x10FFFF


class RegexError(ValueError):
    pass


@dataclass(frozen=True)
class CharSet:
    ranges: tuple[tuple[int, int], ...]
    negated: bool = False

    def contains(self, ch: str) -> bool:
        c = ord(ch)
        hit = any(lo <= c <= hi for lo, hi in self.ranges)
        return hit != self.negated

    def positive_ranges(self) -> tuple[tuple[int, int], ...]:
        """The accepted code points as sorted, disjoint ranges."""
        merged: list[list[int]] = []
        for lo, hi in sorted(self.ranges):
            if merged and lo <= merged[-1][1] + 1:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        if not self.negated:
            return tuple((a, b) for a, b in merged)
        out: list[tuple[int, int]] = []
        nxt = 0
        for lo, hi in merged:
            if lo > nxt:
                out.append((nxt, lo - 1))
            nxt = hi + 1
        if nxt <= MAX_CODEPOINT:
            out.append((nxt, MAX_CODEPOINT))
        return tuple(out)


@dataclass(frozen=True)
class Seq:
    items: tuple[object, ...]


@dataclass(frozen=True)
class Alt:
    options: tuple[object, ...]


@dataclass(frozen=True)
class Repeat:
    node: object
    min: int
    max: int | None


DIGIT = ((ord("0"), ord("9")),)
WORD = ((ord("0"), ord("9")), (ord("A"), ord("Z")), (ord("_"), ord("_")), (ord("a"), ord("z")))
SPACE = ((9, 13), (32, 32))
CLASS_ESCAPES = {"d": DIGIT, "w": WORD, "s": SPACE}
CHAR_ESCAPES = {"n": "\n", "t": "\t", "r": "\r"}


class _Parser:
    def __init__(self, text: str):
        self.s = text
        self.i = 0

    def peek(self) -> str:
        return self.s[self.i] if self.i < len(self.s) else ""

    def take(self) -> str:
        ch = self.peek()
        if not ch:
            raise RegexError("unexpected end of pattern")
        self.i += 1
        return ch

    def parse(self):
        node = self.alt()
        if self.i != len(self.s):
            raise RegexError(f"unexpected {self.peek()!r} at offset {self.i}")
        return node

    def alt(self):
        opts = [self.seq()]
        while self.peek() == "|":
            self.i += 1
            opts.append(self.seq())
        return opts[0] if len(opts) == 1 else Alt(tuple(opts))

    def seq(self):
        items = []
        while self.peek() and self.peek() not in "|)":
            items.append(self.postfix())
        return items[0] if len(items) == 1 else Seq(tuple(items))

    def postfix(self):
        node = self.atom()
        while True:
            ch = self.peek()
            if ch == "?":
                self.i += 1
                node = Repeat(node, 0, 1)
            elif ch == "*":
                self.i += 1
                node = Repeat(node, 0, None)
            elif ch == "+":
                self.i += 1
                node = Repeat(node, 1, None)
            elif ch == "{":
                self.i += 1
                lo = self.number()
                hi: int | None = lo
                if self.peek() == ",":
                    self.i += 1
                    hi = self.number() if self.peek() != "}" else None
                if self.take() != "}":
                    raise RegexError("malformed repetition")
                if hi is not None and hi < lo:
                    raise RegexError("repetition bounds out of order")
                node = Repeat(node, lo, hi)
            else:
                return node

    def number(self) -> int:
        start = self.i
        while self.peek().isdigit():
            self.i += 1
        if start == self.i:
            raise RegexError("expected a number in repetition")
        return int(self.s[start : self.i])

    def atom(self):
        ch = self.take()
        if ch == "(":
            node = self.alt()
            if self.take() != ")":
                raise RegexError("unbalanced parenthesis")
            return node
        if ch == ")":
            raise RegexError("unbalanced parenthesis")
        if ch == "[":
            return self.char_class()
        if ch == ".":
            return CharSet((), negated=True)
        if ch == "\\":
            e = self.take()
            if e in CLASS_ESCAPES:
                return CharSet(CLASS_ESCAPES[e])
            c = CHAR_ESCAPES.get(e, e)
            return CharSet(((ord(c), ord(c)),))
        if ch in "*+?{":
            raise RegexError(f"nothing to repeat at offset {self.i - 1}")
        return CharSet(((ord(ch), ord(ch)),))

    def class_char(self) -> str:
        ch = self.take()
        if ch == "\\":
            e = self.take()
            return CHAR_ESCAPES.get(e, e)
        return ch

    def char_class(self) -> CharSet:
        negated = False
        if self.peek() == "^":
            negated = True
            self.i += 1
        ranges: list[tuple[int, int]] = []
        first = True
        while first or self.peek() != "]":
            first = False
            if not self.peek():
                raise RegexError("unterminated character class")
            if self.peek() == "\\" and self.s[self.i + 1 : self.i + 2] in CLASS_ESCAPES:
                self.i += 1
                ranges.extend(CLASS_ESCAPES[self.take()])
                continue
            lo = self.class_char()
            if self.peek() == "-" and self.s[self.i + 1 : self.i + 2] not in ("]", ""):
                self.i += 1
                hi = self.class_char()
                if ord(hi) < ord(lo):
                    raise RegexError("character range out of order")
                ranges.append((ord(lo), ord(hi)))
            else:
                ranges.append((ord(lo), ord(lo)))
        self.i += 1
        return CharSet(tuple(ranges), negated)


@lru_cache(maxsize=256)
def parse_regex(text: str):
    return _Parser(text).parse()


def _ends(node, s: str, starts: frozenset[int]) -> frozenset[int]:
    if not starts:
        return starts
    if isinstance(node, CharSet):
        return frozenset(i + 1 for i in starts if i < len(s) and node.contains(s[i]))
    if isinstance(node, Seq):
        cur = starts
        for it in node.items:
            cur = _ends(it, s, cur)
        return cur
    if isinstance(node, Alt):
        out: set[int] = set()
        for o in node.options:
            out |= _ends(o, s, starts)
        return frozenset(out)
    if isinstance(node, Repeat):
        cur = starts
        for _ in range(node.min):
            cur = _ends(node.node, s, cur)
        acc = set(cur)
        k = node.min
        while cur and (node.max is None or k < node.max):
            cur = _ends(node.node, s, cur) - acc
            acc |= cur
            k += 1
        return frozenset(acc)
    raise TypeError(node)


def full_match(pattern: str, s: str) -> bool:
    """Anchored match of the whole string."""
    return len(s) in _ends(parse_regex(pattern), s, frozenset({0}))
