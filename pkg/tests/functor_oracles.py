"""Plain-Python reference semantics for the functor fixture, in JSON shape."""

from __future__ import annotations


class Err(Exception):
    def __init__(self, code: str):
        self.code = code


def _get(xs, i):
    if not 0 <= i < len(xs):
        raise Err("index-out-of-bounds")
    return xs[i]


def _slice(xs, i, j):
    if not 0 <= i <= j <= len(xs):
        raise Err("index-out-of-bounds")
    return xs[i:j]


def _max(xs):
    if not xs:
        raise Err("empty-collection")
    return max(xs)


def _max_arg(xs, key):
    if not xs:
        raise Err("empty-collection")
    best = 0
    for i in range(1, len(xs)):
        if key(xs[i]) > key(xs[best]):
            best = i
    return xs[best]


def _reduce(xs):
    acc = 7
    for x in xs:
        acc = acc * 2 - x
    return acc


LIST_ORACLES = {
    "fSize": len,
    "fGet": lambda xs: _get(xs, 2),
    "fSlice": lambda xs: _slice(xs, 1, 3),
    "fConcat": lambda xs: xs + [9],
    "fPushBack": lambda xs: xs + [0],
    "fContains": lambda xs: 1 in xs,
    "fMap": lambda xs: [2 * x + 1 for x in xs],
    "fFilter": lambda xs: [x for x in xs if x != 0],
    "fHas": lambda xs: any(x < 0 for x in xs),
    "fFind": lambda xs: next((x for x in xs if x >= 0), None),
    "fCount": lambda xs: sum(1 for x in xs if x == 1),
    "fAllOf": lambda xs: all(x <= 0 for x in xs),
    "fSum": sum,
    "fMax": _max,
    "fReduce": _reduce,
    "fUnique": lambda xs: len(set(xs)) == len(xs),
    "fSumOf": lambda xs: sum(x * x for x in xs),
    "fMaxArg": lambda xs: _max_arg(xs, lambda x: -x),
    "fJoin": lambda xs: [[a, b] for a in xs for b in xs if a < b],
    "fZip": lambda xs: [[x, -x] for x in xs],
}


def _mget(m: dict, k):
    if k not in m:
        raise Err("index-out-of-bounds")
    return m[k]


MAP_ORACLES = {
    "mSize": len,
    "mGet": lambda m: _mget(m, 1),
    "mHas": lambda m: 2 in m,
    "mMap": lambda m: [[k, k + v] for k, v in sorted(m.items())],
    "mFilter": lambda m: [[k, v] for k, v in sorted(m.items()) if v >= k],
}


def expected(oracle, arg):
    try:
        return ("ok", oracle(arg))
    except Err as e:
        return ("error", e.code)
