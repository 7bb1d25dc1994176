"""Exact interval arithmetic on the unit circle.

Angles are measured in turns (one full revolution = 1) and stored as
``Fraction`` so that lengths, unions and preimages under ``w -> c*w**k`` are
computed without rounding.  An *arc list* is a sorted list of pairwise
disjoint, non-touching ``(a, b)`` pairs with ``0 <= a < b <= 1``.  Endpoints
are ignored here: open and closed arcs have the same measure.
"""
from __future__ import annotations

import math
from fractions import Fraction
from numbers import Real
from typing import Iterable, Sequence

ArcList = list[tuple[Fraction, Fraction]]

FULL: ArcList = [(Fraction(0), Fraction(1))]


def to_turn(x) -> Fraction:
    """Convert a number (or ``"p/q"`` string) to an exact Fraction of a turn."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, Real):
        if not math.isfinite(float(x)):
            raise ValueError(f"non-finite angle {x!r}")
        return Fraction(float(x))
    raise TypeError(f"cannot interpret {x!r} as an angle")


def radians_to_turn(theta: float) -> Fraction:
    return Fraction(float(theta) / (2.0 * math.pi))


def turn_to_radians(t) -> float:
    return float(t) * 2.0 * math.pi


def normalize(pieces: Iterable[tuple]) -> ArcList:
    """Sort, clip to [0, 1] and merge overlapping or touching pieces."""
    items = sorted((to_turn(a), to_turn(b)) for a, b in pieces)
    out: ArcList = []
    for a, b in items:
        a = max(a, Fraction(0))
        b = min(b, Fraction(1))
        if b <= a:
            continue
        if out and a <= out[-1][1]:
            if b > out[-1][1]:
                out[-1] = (out[-1][0], b)
        else:
            out.append((a, b))
    return out


def wrap(a, b) -> ArcList:
    """Arc from angle ``a`` counter-clockwise to ``b`` (any reals, ``a <= b``), reduced mod 1."""
    a, b = to_turn(a), to_turn(b)
    if b - a >= 1:
        return list(FULL)
    if b <= a:
        return []
    shift = Fraction(math.floor(a))
    a, b = a - shift, b - shift
    if b <= 1:
        return normalize([(a, b)])
    return normalize([(a, Fraction(1)), (Fraction(0), b - 1)])


def union(*lists: Sequence[tuple]) -> ArcList:
    return normalize(p for lst in lists for p in lst)


def complement(arcs: Sequence[tuple]) -> ArcList:
    arcs = normalize(arcs)
    out = []
    cur = Fraction(0)
    for a, b in arcs:
        if a > cur:
            out.append((cur, a))
        cur = b
    if cur < 1:
        out.append((cur, Fraction(1)))
    return out


def intersect(x: Sequence[tuple], y: Sequence[tuple]) -> ArcList:
    x, y = normalize(x), normalize(y)
    out = []
    i = j = 0
    while i < len(x) and j < len(y):
        a = max(x[i][0], y[j][0])
        b = min(x[i][1], y[j][1])
        if a < b:
            out.append((a, b))
        if x[i][1] < y[j][1]:
            i += 1
        else:
            j += 1
    return normalize(out)


def measure(arcs: Sequence[tuple]) -> Fraction:
    """Normalized arc-length of an arc list (exact)."""
    return sum((b - a for a, b in normalize(arcs)), Fraction(0))


def enlarge(arcs: Sequence[tuple], eps) -> ArcList:
    """Open ``eps``-neighbourhood (in turns) of a closed arc list."""
    eps = to_turn(eps)
    return union(*(wrap(a - eps, b + eps) for a, b in normalize(arcs)))


def point_neighbourhood(t, eps) -> ArcList:
    t = to_turn(t)
    return wrap(t - eps, t + eps)


def contains(arcs: Sequence[tuple], t, closed: bool = True) -> bool:
    t = to_turn(t) % 1
    for a, b in arcs:
        if (a <= t <= b) if closed else (a < t < b):
            return True
        if closed and b == 1 and t == 0 and a <= 1:
            return True
    return False


def preimage_power(arcs: Sequence[tuple], k: int, shift=0) -> ArcList:
    """Arcs of ``t`` with ``shift + k*t`` (mod 1) in ``arcs``; ``k >= 1``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    shift = to_turn(shift)
    pieces = []
    for a, b in normalize(arcs):
        for ell in range(k):
            pieces.extend(wrap((a - shift + ell) / k, (b - shift + ell) / k))
    return normalize(pieces)


def cantor_arcs(level: int, ratio=Fraction(1, 3)) -> ArcList:
    """Closed arcs of the ``level``-th Cantor iterate of the full circle.

    Each step keeps the two outer pieces, each of relative length ``ratio``.
    """
    ratio = to_turn(ratio)
    if not 0 < ratio < Fraction(1, 2):
        raise ValueError("ratio must lie in (0, 1/2)")
    arcs = [(Fraction(0), Fraction(1))]
    for _ in range(level):
        nxt = []
        for a, b in arcs:
            w = (b - a) * ratio
            nxt.append((a, a + w))
            nxt.append((b - w, b))
        arcs = nxt
    return arcs
