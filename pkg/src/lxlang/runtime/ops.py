"""Checked primitive operations shared by both evaluators."""

from __future__ import annotations

from fractions import Fraction

from lxlang.runtime.values import (
    DEC_LIMIT,
    DEC_SCALE,
    INT_MAX,
    INT_MIN,
    NAT_MAX,
    DecimalV,
    FloatV,
    IntV,
    RationalV,
    StrV,
)

ERROR_CODES = (
    "assert-fail",
    "precondition-fail",
    "postcondition-fail",
    "invariant-fail",
    "validate-fail",
    "overflow",
    "nat-underflow",
    "div-zero",
    "cast-fail",
    "index-out-of-bounds",
    "empty-collection",
    "regex-mismatch",
    "recursion-budget-exceeded",
)


class LxError(Exception):
    """A coded runtime error; ``site`` is filled in by the evaluator that raised it."""

    def __init__(self, code: str, message: str = "", site: tuple | None = None, pos=None):
        assert code in ERROR_CODES, code
        self.code = code
        self.message = message or code
        self.site = site
        self.pos = pos
        super().__init__(f"{code}: {self.message}")


def checked(kind: str, v: int) -> IntV:
    if kind == "Nat":
        if v < 0:
            raise LxError("nat-underflow", f"Nat result {v} is negative")
        if v > NAT_MAX:
            raise LxError("overflow", f"Nat result {v} exceeds 2^64-1")
    elif kind == "Int":
        if v < INT_MIN or v > INT_MAX:
            raise LxError("overflow", f"Int result {v} outside 64-bit range")
    elif kind == "BigNat" and v < 0:
        raise LxError("nat-underflow", f"BigNat result {v} is negative")
    return IntV(kind, v)


def trunc_div(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def trunc_mod(a: int, b: int) -> int:
    return a - b * trunc_div(a, b)


def dec_checked(scaled: int) -> DecimalV:
    if not -DEC_LIMIT < scaled < DEC_LIMIT:
        raise LxError("overflow", "Decimal result outside 128-bit range")
    return DecimalV(scaled)


def arith(op: str, a, b):
    """Binary arithmetic on two same-kind numeric values."""
    if isinstance(a, IntV):
        x, y = a.v, b.v
        if op == "+":
            return checked(a.kind, x + y)
        if op == "-":
            return checked(a.kind, x - y)
        if op == "*":
            return checked(a.kind, x * y)
        if y == 0:
            raise LxError("div-zero", f"{op} by zero")
        if op == "/":
            return checked(a.kind, trunc_div(x, y))
        return checked(a.kind, trunc_mod(x, y))
    if isinstance(a, FloatV):
        x, y = a.v, b.v
        if op == "/":
            if y == 0.0:
                raise LxError("div-zero", "/ by zero")
            return FloatV(x / y)
        return FloatV({"+": x + y, "-": x - y, "*": x * y}[op])
    if isinstance(a, DecimalV):
        x, y = a.scaled, b.scaled
        if op == "+":
            return dec_checked(x + y)
        if op == "-":
            return dec_checked(x - y)
        if op == "*":
            return dec_checked(trunc_div(x * y, DEC_SCALE))
        if y == 0:
            raise LxError("div-zero", "/ by zero")
        return dec_checked(trunc_div(x * DEC_SCALE, y))
    if isinstance(a, RationalV):
        x, y = a.v, b.v
        if op == "/":
            if y == 0:
                raise LxError("div-zero", "/ by zero")
            return RationalV(x / y)
        return RationalV({"+": x + y, "-": x - y, "*": x * y}[op])
    raise TypeError(f"arith on {a!r}")


def negate(a):
    if isinstance(a, IntV):
        return checked(a.kind, -a.v)
    if isinstance(a, FloatV):
        return FloatV(-a.v)
    if isinstance(a, DecimalV):
        return DecimalV(-a.scaled)
    if isinstance(a, RationalV):
        return RationalV(-a.v)
    raise TypeError(a)


def num_key(a):
    if isinstance(a, IntV):
        return a.v
    if isinstance(a, FloatV):
        return a.v
    if isinstance(a, DecimalV):
        return Fraction(a.scaled, DEC_SCALE)
    if isinstance(a, RationalV):
        return a.v
    if isinstance(a, StrV):
        return a.v
    raise TypeError(a)


def compare(op: str, a, b) -> bool:
    x, y = num_key(a), num_key(b)
    return {"<": x < y, "<=": x <= y, ">": x > y, ">=": x >= y}[op]


def convert(target: str, a: IntV) -> IntV:
    return checked(target, a.v)


def zero_of(kind_value):
    """Additive identity with the same kind as the example value or type name."""
    if isinstance(kind_value, str):
        if kind_value in ("Nat", "Int", "BigNat", "BigInt"):
            return IntV(kind_value, 0)
        if kind_value == "Float":
            return FloatV(0.0)
        if kind_value == "Decimal":
            return DecimalV(0)
        if kind_value == "Rational":
            return RationalV(Fraction(0))
    raise TypeError(kind_value)
