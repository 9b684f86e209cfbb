"""Collection functor semantics.

Lambdas arrive as plain Python callables over runtime values. Every functor
evaluates its specialization on all elements in ascending index (or key) order
before combining results, so the first error raised is always the one at the
lowest index.
"""

from __future__ import annotations

from typing import Callable

from lxlang.runtime.ops import LxError, arith, compare, zero_of
from lxlang.runtime.values import IntV, ListV, MapV, TupleV
from lxlang.typesys.typesig import ListT, MapT, TypeSig

LIST_OPS = (
    "size", "get", "slice", "concat", "map", "filter", "join", "has", "find", "count", "sum",
    "reduce", "allOf", "unique", "sumOf", "maxArg", "max", "pushBack", "contains", "zip",
)
MAP_OPS = ("map_size", "map_get", "map_has", "map_map", "map_filter")
CATALOG = LIST_OPS + MAP_OPS


def nat(n: int) -> IntV:
    return IntV("Nat", n)


def total(kind: str, values) -> object:
    acc = zero_of(kind)
    for v in values:
        acc = arith("+", acc, v)
    return acc


def kind_name(t: TypeSig) -> str:
    return str(t)


def run_functor(name: str, args: list, f: Callable | None, result_type: TypeSig):
    """Apply functor ``name`` to container/value ``args`` with specialization ``f``."""
    if name.startswith("map_"):
        return run_map(name[4:], args, f, result_type)
    if name == "zip":
        a, b = args
        n = min(len(a.items), len(b.items))
        return ListV(tuple(TupleV((a.items[i], b.items[i])) for i in range(n)), result_type.elem)
    lst: ListV = args[0]
    xs = lst.items
    if name == "size":
        return nat(len(xs))
    if name == "get":
        i = args[1].v
        if not 0 <= i < len(xs):
            raise LxError("index-out-of-bounds", f"get({i}) on a list of size {len(xs)}")
        return xs[i]
    if name == "slice":
        i, j = args[1].v, args[2].v
        if not 0 <= i <= j <= len(xs):
            raise LxError("index-out-of-bounds", f"slice({i}, {j}) on a list of size {len(xs)}")
        return ListV(xs[i:j], lst.elem)
    if name == "concat":
        return ListV(xs + args[1].items, lst.elem)
    if name == "pushBack":
        return ListV(xs + (args[1],), lst.elem)
    if name == "contains":
        return any(x == args[1] for x in xs)
    if name == "max":
        if not xs:
            raise LxError("empty-collection", "max of an empty list")
        best = xs[0]
        for x in xs[1:]:
            if compare(">", x, best):
                best = x
        return best
    if name == "sum":
        return total(kind_name(lst.elem), xs)
    if name == "map":
        return ListV(tuple(f(x) for x in xs), result_type.elem)
    if name in ("filter", "has", "find", "count", "allOf"):
        flags = [f(x) for x in xs]
        if name == "filter":
            return ListV(tuple(x for x, ok in zip(xs, flags) if ok), lst.elem)
        if name == "has":
            return any(flags)
        if name == "allOf":
            return all(flags)
        if name == "count":
            return nat(sum(1 for ok in flags if ok))
        for x, ok in zip(xs, flags):
            if ok:
                return x
        return None
    if name == "join":
        ys = args[1].items
        out = []
        for x in xs:
            for y in ys:
                if f(x, y):
                    out.append(TupleV((x, y)))
        return ListV(tuple(out), result_type.elem)
    if name == "unique":
        flags = [f(xs[i], xs[j]) for i in range(len(xs)) for j in range(i + 1, len(xs))]
        return all(flags)
    if name == "reduce":
        acc = args[1]
        for x in xs:
            acc = f(acc, x)
        return acc
    if name == "sumOf":
        keys = [f(x) for x in xs]
        return total(kind_name(result_type), keys)
    if name == "maxArg":
        keys = [f(x) for x in xs]
        if not xs:
            raise LxError("empty-collection", "maxArg of an empty list")
        best = 0
        for i in range(1, len(xs)):
            if compare(">", keys[i], keys[best]):
                best = i
        return xs[best]
    raise ValueError(f"unknown functor {name}")


def run_map(name: str, args: list, f: Callable | None, result_type: TypeSig):
    m: MapV = args[0]
    if name == "size":
        return nat(len(m.entries))
    if name in ("get", "has"):
        for k, v in m.entries:
            if k == args[1]:
                return v if name == "get" else True
        if name == "has":
            return False
        raise LxError("index-out-of-bounds", "map get of a missing key")
    if name == "map":
        assert isinstance(result_type, MapT)
        return MapV(tuple((k, f(k, v)) for k, v in m.entries), m.key, result_type.value)
    if name == "filter":
        flags = [f(k, v) for k, v in m.entries]
        return MapV(tuple(kv for kv, ok in zip(m.entries, flags) if ok), m.key, m.value)
    raise ValueError(f"unknown map functor {name}")


def functor_error_codes(name: str, elem_kind: str | None) -> tuple[str, ...]:
    """Implicit error codes a functor application itself may raise."""
    codes: list[str] = []
    if name in ("get", "slice", "map_get"):
        codes.append("index-out-of-bounds")
    if name in ("max", "maxArg"):
        codes.append("empty-collection")
    if name in ("sum", "sumOf") and elem_kind in ("Nat", "Int", "Decimal"):
        codes.append("overflow")
    return tuple(codes)


__all__ = ["CATALOG", "LIST_OPS", "MAP_OPS", "run_functor", "functor_error_codes", "ListT"]
