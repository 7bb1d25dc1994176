"""Domains in C^n, symbolic Borel sets and subsets of the torus.

Sets are immutable expression trees.  Membership is decided exactly from
the tree; the only tolerance is the optional ``pad`` used when a set is
rasterized onto a grid (closed primitives grow by ``pad``, open primitives
shrink by it under complementation).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union as TUnion

import numpy as np

from . import arcs as _arcs
from .errors import DimensionMismatch, NotBoundarySet, PluriError

MAX_CANTOR_LEVEL = 20
ON_CIRCLE_TOL = 1e-12


# --------------------------------------------------------------------------
# points

@dataclass(frozen=True)
class ComplexPoint:
    coords: tuple

    def __post_init__(self):
        cs = tuple(complex(c) for c in self.coords)
        if not 1 <= len(cs) <= 2:
            raise PluriError(f"points live in C^1 or C^2, got {len(cs)} coordinates")
        if not all(math.isfinite(c.real) and math.isfinite(c.imag) for c in cs):
            raise PluriError("point coordinates must be finite")
        object.__setattr__(self, "coords", cs)

    @property
    def dim(self) -> int:
        return len(self.coords)

    def __getitem__(self, i):
        return self.coords[i]

    def as_array(self) -> np.ndarray:
        return np.array(self.coords, dtype=complex)


def as_point(x) -> ComplexPoint:
    if isinstance(x, ComplexPoint):
        return x
    if isinstance(x, (int, float, complex, np.number)):
        return ComplexPoint((x,))
    return ComplexPoint(tuple(x))


def _as_coords(c) -> tuple:
    if isinstance(c, (int, float, complex, np.number)):
        return (complex(c),)
    return tuple(complex(v) for v in c)


# --------------------------------------------------------------------------
# domains

@dataclass(frozen=True)
class UnitDisc:
    dim = 1

    def gauge(self, pts: np.ndarray) -> np.ndarray:
        return np.abs(pts[..., 0])

    def bbox(self):
        return [(-1.0, 1.0), (-1.0, 1.0)]


@dataclass(frozen=True)
class Disc:
    center: complex = 0j
    radius: float = 1.0
    dim = 1

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        if not self.radius > 0:
            raise PluriError("disc radius must be positive")

    def gauge(self, pts):
        return np.abs(pts[..., 0] - self.center) / self.radius

    def bbox(self):
        c, r = self.center, self.radius
        return [(c.real - r, c.real + r), (c.imag - r, c.imag + r)]


@dataclass(frozen=True)
class Annulus:
    r_in: float
    r_out: float
    dim = 1

    def __post_init__(self):
        if not 0 < self.r_in < self.r_out:
            raise PluriError("annulus needs 0 < r_in < r_out")

    def gauge(self, pts):
        a = np.abs(pts[..., 0])
        with np.errstate(divide="ignore"):
            return np.maximum(a / self.r_out, self.r_in / a)

    def bbox(self):
        r = self.r_out
        return [(-r, r), (-r, r)]


@dataclass(frozen=True)
class Polydisc:
    radii: tuple = (1.0, 1.0)

    def __post_init__(self):
        radii = tuple(float(r) for r in self.radii)
        if not radii or any(r <= 0 for r in radii):
            raise PluriError("polydisc radii must be positive")
        object.__setattr__(self, "radii", radii)

    @property
    def dim(self):
        return len(self.radii)

    def gauge(self, pts):
        return np.max(np.abs(pts) / np.asarray(self.radii), axis=-1)

    def bbox(self):
        out = []
        for r in self.radii:
            out += [(-r, r), (-r, r)]
        return out


@dataclass(frozen=True)
class UnitBall:
    n: int = 2

    def __post_init__(self):
        if self.n not in (1, 2):
            raise PluriError("only n in {1, 2} is supported")

    @property
    def dim(self):
        return self.n

    def gauge(self, pts):
        return np.sqrt(np.sum(np.abs(pts) ** 2, axis=-1))

    def bbox(self):
        return [(-1.0, 1.0)] * (2 * self.n)


DomainSpec = TUnion[UnitDisc, Disc, Annulus, Polydisc, UnitBall]


def in_domain(domain, point) -> bool:
    p = as_point(point)
    if p.dim != domain.dim:
        raise DimensionMismatch(domain.dim, p.dim)
    return bool(domain.gauge(p.as_array()[None, :])[0] < 1.0)


# --------------------------------------------------------------------------
# set expressions

class SetExpr:
    """Base class of the set algebra; subclasses are frozen dataclasses."""

    dim: int
    boundary: bool = False

    def __or__(self, other):
        return Union((self, other))

    def __and__(self, other):
        return Intersection((self, other))

    def __invert__(self):
        return Complement(self)


@dataclass(frozen=True)
class Empty(SetExpr):
    dim: int = 1


@dataclass(frozen=True)
class ClosedDisc(SetExpr):
    """Closed Euclidean ball; a disc when ``center`` is a single complex number."""
    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _as_coords(self.center))
        if not self.radius >= 0:
            raise PluriError("radius must be non-negative")

    @property
    def dim(self):
        return len(self.center)


@dataclass(frozen=True)
class OpenDisc(SetExpr):
    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _as_coords(self.center))
        if not self.radius > 0:
            raise PluriError("radius must be positive")

    @property
    def dim(self):
        return len(self.center)


@dataclass(frozen=True)
class Box(SetExpr):
    """Closed coordinate box spanned by two corners in C^n."""
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo, hi = _as_coords(self.lo), _as_coords(self.hi)
        if len(lo) != len(hi):
            raise DimensionMismatch(len(lo), len(hi), "box corner")
        lo2 = tuple(complex(min(a.real, b.real), min(a.imag, b.imag)) for a, b in zip(lo, hi))
        hi2 = tuple(complex(max(a.real, b.real), max(a.imag, b.imag)) for a, b in zip(lo, hi))
        object.__setattr__(self, "lo", lo2)
        object.__setattr__(self, "hi", hi2)

    @property
    def dim(self):
        return len(self.lo)


@dataclass(frozen=True)
class Arc(SetExpr):
    """Arc of the unit circle between two angles given in turns (1 = full circle).

    Use :meth:`from_radians` for radian input.  ``closed`` only matters for
    pointwise membership, never for measure.
    """
    start: Fraction
    end: Fraction
    closed: bool = True
    dim = 1
    boundary = True

    def __post_init__(self):
        a, b = _arcs.to_turn(self.start), _arcs.to_turn(self.end)
        if not 0 <= a < b <= 1:
            raise PluriError(f"arc needs 0 <= start < end <= 1 (turns), got {a}, {b}")
        object.__setattr__(self, "start", a)
        object.__setattr__(self, "end", b)

    @classmethod
    def from_radians(cls, theta1, theta2, closed=True):
        return cls(_arcs.radians_to_turn(theta1), _arcs.radians_to_turn(theta2), closed)


@dataclass(frozen=True)
class CantorIterate(SetExpr):
    """``level``-th step of the Cantor construction on the unit circle."""
    level: int
    ratio: Fraction = Fraction(1, 3)
    arcs: tuple = field(default=(), compare=False, repr=False)
    dim = 1
    boundary = True

    def __post_init__(self):
        if not 0 <= self.level <= MAX_CANTOR_LEVEL:
            raise PluriError(f"Cantor level must be in [0, {MAX_CANTOR_LEVEL}]")
        ratio = _arcs.to_turn(self.ratio)
        object.__setattr__(self, "ratio", ratio)
        object.__setattr__(self, "arcs", tuple(_arcs.cantor_arcs(self.level, ratio)))


@dataclass(frozen=True)
class FinitePoints(SetExpr):
    points: tuple

    def __post_init__(self):
        pts = tuple(_as_coords(p) for p in self.points)
        if not pts:
            raise PluriError("FinitePoints needs at least one point; use Empty")
        if len({len(p) for p in pts}) != 1:
            raise PluriError("FinitePoints with mixed dimensions")
        object.__setattr__(self, "points", pts)

    @property
    def dim(self):
        return len(self.points[0])


@dataclass(frozen=True)
class Product(SetExpr):
    left: SetExpr
    right: SetExpr

    @property
    def dim(self):
        return self.left.dim + self.right.dim


def _check_same_dim(items):
    dims = {s.dim for s in items}
    if len(dims) > 1:
        raise DimensionMismatch(min(dims), max(dims), "set operand")


@dataclass(frozen=True)
class Union(SetExpr):
    items: tuple

    def __post_init__(self):
        items = tuple(self.items)
        if not items:
            raise PluriError("empty Union; use Empty")
        _check_same_dim(items)
        object.__setattr__(self, "items", items)

    @property
    def dim(self):
        return self.items[0].dim

    @property
    def boundary(self):
        return all(s.boundary for s in self.items)


@dataclass(frozen=True)
class Intersection(SetExpr):
    items: tuple

    def __post_init__(self):
        items = tuple(self.items)
        if not items:
            raise PluriError("empty Intersection")
        _check_same_dim(items)
        object.__setattr__(self, "items", items)

    @property
    def dim(self):
        return self.items[0].dim

    @property
    def boundary(self):
        return any(s.boundary for s in self.items)


@dataclass(frozen=True)
class Complement(SetExpr):
    item: SetExpr

    @property
    def dim(self):
        return self.item.dim


# --------------------------------------------------------------------------
# membership

def _turn_of(z: np.ndarray) -> np.ndarray:
    return np.mod(np.angle(z) / (2 * np.pi), 1.0)


def _in_arcs(t: np.ndarray, arc_list, closed: bool, pad_turns: float) -> np.ndarray:
    out = np.zeros(t.shape, dtype=bool)
    for a, b in arc_list:
        lo, hi = float(a) - pad_turns, float(b) + pad_turns
        if closed:
            hit = (t >= lo) & (t <= hi)
            if hi >= 1.0:
                hit |= t <= hi - 1.0
            if lo <= 0.0:
                hit |= t >= lo + 1.0
        else:
            hit = (t > lo) & (t < hi)
        out |= hit
    return out


def member_array(expr: SetExpr, pts, pad: float = 0.0) -> np.ndarray:
    """Vectorized membership for points ``pts`` of shape (N, n)."""
    pts = np.asarray(pts, dtype=complex)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[1] != expr.dim:
        raise DimensionMismatch(expr.dim, pts.shape[1])
    return _member(expr, pts, float(pad))


def _member(e, pts, pad):
    grow, shrink = max(pad, 0.0), min(pad, 0.0)
    if isinstance(e, Empty):
        return np.zeros(len(pts), dtype=bool)
    if isinstance(e, ClosedDisc):
        d = np.sqrt(np.sum(np.abs(pts - np.asarray(e.center)) ** 2, axis=1))
        return d <= e.radius + grow
    if isinstance(e, OpenDisc):
        d = np.sqrt(np.sum(np.abs(pts - np.asarray(e.center)) ** 2, axis=1))
        return d < e.radius + shrink
    if isinstance(e, Box):
        lo, hi = np.asarray(e.lo), np.asarray(e.hi)
        ok = (pts.real >= lo.real - grow) & (pts.real <= hi.real + grow)
        ok &= (pts.imag >= lo.imag - grow) & (pts.imag <= hi.imag + grow)
        return np.all(ok, axis=1)
    if isinstance(e, (Arc, CantorIterate)):
        z = pts[:, 0]
        on = np.abs(np.abs(z) - 1.0) <= max(grow, ON_CIRCLE_TOL)
        pad_t = grow / (2 * np.pi)
        if isinstance(e, Arc):
            inside = _in_arcs(_turn_of(z), [(e.start, e.end)], e.closed, pad_t)
        else:
            inside = _in_cantor(_turn_of(z), e, pad_t)
        return on & inside
    if isinstance(e, FinitePoints):
        out = np.zeros(len(pts), dtype=bool)
        for p in e.points:
            d = np.sqrt(np.sum(np.abs(pts - np.asarray(p)) ** 2, axis=1))
            out |= d <= grow
        return out
    if isinstance(e, Product):
        k = e.left.dim
        return _member(e.left, pts[:, :k], pad) & _member(e.right, pts[:, k:], pad)
    if isinstance(e, Union):
        out = np.zeros(len(pts), dtype=bool)
        for s in e.items:
            out |= _member(s, pts, pad)
        return out
    if isinstance(e, Intersection):
        out = np.ones(len(pts), dtype=bool)
        for s in e.items:
            out &= _member(s, pts, pad)
        return out
    if isinstance(e, Complement):
        return ~_member(e.item, pts, -pad)
    raise TypeError(f"unknown set primitive {type(e).__name__}")


def _in_cantor(t, e: CantorIterate, pad_t):
    starts = np.array([float(a) for a, _ in e.arcs])
    ends = np.array([float(b) for _, b in e.arcs])
    i = np.searchsorted(starts, t + pad_t, side="right") - 1
    ok = (i >= 0) & (t <= ends[np.clip(i, 0, None)] + pad_t)
    if pad_t > 0:
        j = np.clip(i + 1, 0, len(starts) - 1)
        ok |= t >= starts[j] - pad_t
        ok |= t >= 1.0 - pad_t  # first arc starts at 0
    return ok


def member(expr: SetExpr, point) -> bool:
    """Exact membership of a single point."""
    p = as_point(point)
    if p.dim != expr.dim:
        raise DimensionMismatch(expr.dim, p.dim)
    return bool(_member(expr, p.as_array()[None, :], 0.0)[0])


# --------------------------------------------------------------------------
# arc algebra

def boundary_arcs(expr: SetExpr) -> _arcs.ArcList:
    """Normalized arc list of a boundary set (measure-level, endpoints ignored)."""
    if isinstance(expr, Empty):
        return []
    if isinstance(expr, Arc):
        return _arcs.normalize([(expr.start, expr.end)])
    if isinstance(expr, CantorIterate):
        return list(expr.arcs)
    if isinstance(expr, FinitePoints):
        if expr.dim != 1:
            raise NotBoundarySet("points of C^2 are not on the unit circle")
        for p in expr.points:
            if abs(abs(p[0]) - 1.0) > ON_CIRCLE_TOL:
                raise NotBoundarySet(f"point {p[0]} is not on the unit circle")
        return []
    if isinstance(expr, Union):
        return _arcs.union(*(boundary_arcs(s) for s in expr.items))
    if isinstance(expr, Intersection):
        out = _arcs.FULL
        for s in expr.items:
            out = _arcs.intersect(out, boundary_arcs(s))
        return out
    if isinstance(expr, Complement):
        return _arcs.complement(boundary_arcs(expr.item))
    raise NotBoundarySet(f"{type(expr).__name__} is not a boundary primitive")


def boundary_points(expr: SetExpr) -> list:
    """Isolated points (as turns) appearing in FinitePoints leaves of a boundary set."""
    if isinstance(expr, FinitePoints):
        return [float(_turn_of(np.array([p[0]]))[0]) for p in expr.points]
    if isinstance(expr, (Union, Intersection)):
        return [t for s in expr.items for t in boundary_points(s)]
    return []


def arc_measure(expr: SetExpr) -> Fraction:
    """Normalized arc-length measure of a boundary set, exact."""
    return _arcs.measure(boundary_arcs(expr))


# --------------------------------------------------------------------------
# torus

@dataclass(frozen=True)
class TorusSet:
    """Finite union of rectangles I x J on the torus (first factor z, second w).

    Rectangles are given as pairs of arcs ``((a, b), (c, d))`` in turns; they
    are normalized into disjoint non-wrapping rectangles on construction.
    """
    rects: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "rects", tuple(_normalize_rects(self.rects)))

    def swap(self) -> "TorusSet":
        return TorusSet(tuple((j, i) for i, j in self.rects))


def _normalize_rects(rects):
    pieces = []
    for I, J in rects:
        for i in _arcs.wrap(*I) if I[1] > I[0] else []:
            for j in _arcs.wrap(*J) if J[1] > J[0] else []:
                pieces.append((i, j))
    if len(pieces) <= 1:
        return pieces
    zs = sorted({x for (i, _) in pieces for x in i})
    ws = sorted({x for (_, j) in pieces for x in j})
    covered = set()
    for (a, b), (c, d) in pieces:
        for p in range(len(zs) - 1):
            if a <= zs[p] and zs[p + 1] <= b:
                for q in range(len(ws) - 1):
                    if c <= ws[q] and ws[q + 1] <= d:
                        covered.add((p, q))
    out = []
    for p in range(len(zs) - 1):
        q = 0
        while q < len(ws) - 1:
            if (p, q) in covered:
                q0 = q
                while q < len(ws) - 1 and (p, q) in covered:
                    q += 1
                out.append(((zs[p], zs[p + 1]), (ws[q0], ws[q])))
            else:
                q += 1
    return out


def torus_measure(C: TorusSet) -> Fraction:
    """Exact product measure of a normalized torus set."""
    return sum(((i[1] - i[0]) * (j[1] - j[0]) for i, j in C.rects), Fraction(0))


# --------------------------------------------------------------------------
# serialization (tagged records)

def _cx(z):
    return [float(complex(z).real), float(complex(z).imag)]


def _from_cx(v):
    if isinstance(v, (int, float)):
        return complex(v)
    return complex(v[0], v[1])


def _frac(x):
    x = _arcs.to_turn(x)
    return str(x) if x.denominator != 1 else int(x)


def domain_to_dict(d) -> dict:
    if isinstance(d, UnitDisc):
        return {"type": "UnitDisc"}
    if isinstance(d, Disc):
        return {"type": "Disc", "center": _cx(d.center), "radius": d.radius}
    if isinstance(d, Annulus):
        return {"type": "Annulus", "r_in": d.r_in, "r_out": d.r_out}
    if isinstance(d, Polydisc):
        return {"type": "Polydisc", "radii": list(d.radii)}
    if isinstance(d, UnitBall):
        return {"type": "UnitBall", "n": d.n}
    raise TypeError(type(d))


def domain_from_dict(m: dict):
    t = m.get("type")
    if t == "UnitDisc":
        return UnitDisc()
    if t == "Disc":
        return Disc(_from_cx(m.get("center", 0)), float(m["radius"]))
    if t == "Annulus":
        return Annulus(float(m["r_in"]), float(m["r_out"]))
    if t == "Polydisc":
        return Polydisc(tuple(m["radii"]))
    if t == "UnitBall":
        return UnitBall(int(m.get("n", 2)))
    raise PluriError(f"unknown domain type {t!r}")


def set_to_dict(e: SetExpr) -> dict:
    if isinstance(e, Empty):
        return {"type": "Empty", "dim": e.dim}
    if isinstance(e, (ClosedDisc, OpenDisc)):
        return {"type": type(e).__name__, "center": [_cx(c) for c in e.center], "radius": e.radius}
    if isinstance(e, Box):
        return {"type": "Box", "lo": [_cx(c) for c in e.lo], "hi": [_cx(c) for c in e.hi]}
    if isinstance(e, Arc):
        return {"type": "Arc", "start": _frac(e.start), "end": _frac(e.end), "closed": e.closed}
    if isinstance(e, CantorIterate):
        return {"type": "CantorIterate", "level": e.level, "ratio": _frac(e.ratio)}
    if isinstance(e, FinitePoints):
        return {"type": "FinitePoints", "points": [[_cx(c) for c in p] for p in e.points]}
    if isinstance(e, Product):
        return {"type": "Product", "left": set_to_dict(e.left), "right": set_to_dict(e.right)}
    if isinstance(e, (Union, Intersection)):
        return {"type": type(e).__name__, "items": [set_to_dict(s) for s in e.items]}
    if isinstance(e, Complement):
        return {"type": "Complement", "item": set_to_dict(e.item)}
    raise TypeError(type(e))


def _coords_from(v):
    # accepts 0.5, [0.5, 0], [[0.5, 0]], [[0.5, 0], [0.1, 0]]
    if isinstance(v, (int, float)):
        return (complex(v),)
    if len(v) == 2 and all(isinstance(x, (int, float)) for x in v):
        return (complex(v[0], v[1]),)
    return tuple(_from_cx(c) for c in v)


def set_from_dict(m: dict) -> SetExpr:
    t = m.get("type")
    if t == "Empty":
        return Empty(int(m.get("dim", 1)))
    if t in ("ClosedDisc", "OpenDisc"):
        cls = ClosedDisc if t == "ClosedDisc" else OpenDisc
        return cls(_coords_from(m["center"]), float(m["radius"]))
    if t == "Box":
        return Box(_coords_from(m["lo"]), _coords_from(m["hi"]))
    if t == "Arc":
        if "theta1" in m:
            return Arc.from_radians(m["theta1"], m["theta2"], m.get("closed", True))
        return Arc(_arcs.to_turn(m["start"]), _arcs.to_turn(m["end"]), m.get("closed", True))
    if t == "CantorIterate":
        return CantorIterate(int(m["level"]), _arcs.to_turn(m.get("ratio", "1/3")))
    if t == "FinitePoints":
        return FinitePoints(tuple(_coords_from(p) for p in m["points"]))
    if t == "Product":
        return Product(set_from_dict(m["left"]), set_from_dict(m["right"]))
    if t == "Union":
        return Union(tuple(set_from_dict(s) for s in m["items"]))
    if t == "Intersection":
        return Intersection(tuple(set_from_dict(s) for s in m["items"]))
    if t == "Complement":
        return Complement(set_from_dict(m["item"]))
    raise PluriError(f"unknown set type {t!r}")


def whole(dim: int = 1) -> SetExpr:
    """The whole ambient space, as a set expression."""
    return Complement(Empty(dim))
