"""Harmonic measure, boundary extremal functions and Blaschke discs on the unit disc."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import brentq

from . import arcs as _arcs
from .errors import OutsideDomain, PluriError
from .geometry import SetExpr, boundary_arcs, boundary_points
from .rng import generator

TWO_PI = 2.0 * math.pi
EPS_FLOOR = 40          # enlargement schedule stops at 2**-40 turns


def _arc_list(U) -> _arcs.ArcList:
    if isinstance(U, SetExpr):
        return boundary_arcs(U)
    return _arcs.normalize(U)


def _antiderivative(s: np.ndarray, r: float) -> np.ndarray:
    """Continuous primitive of the Poisson kernel in ``s = t - arg z``; slope 1 on average."""
    n = np.round(s / TWO_PI)
    u = s - TWO_PI * n
    return 2.0 * np.arctan2((1 + r) * np.sin(u / 2), (1 - r) * np.cos(u / 2)) + TWO_PI * n


def harmonic_measure(z: complex, U) -> float:
    """Harmonic measure of the arc set ``U`` at ``z`` (closed-form per arc)."""
    z = complex(z)
    r = abs(z)
    if r >= 1:
        raise OutsideDomain(f"|z| = {r} is not < 1")
    lst = _arc_list(U)
    if not lst:
        return 0.0
    if r == 0:
        return float(_arcs.measure(lst))
    a = np.array([float(p[0]) for p in lst]) * TWO_PI - math.atan2(z.imag, z.real)
    b = np.array([float(p[1]) for p in lst]) * TWO_PI - math.atan2(z.imag, z.real)
    val = float(np.sum(_antiderivative(b, r) - _antiderivative(a, r))) / TWO_PI
    return min(max(val, 0.0), 1.0)


def poisson(z: complex, U) -> float:
    """Perron-Bremermann envelope of ``-chi_U`` on the unit disc: ``-harmonic_measure``."""
    return -harmonic_measure(z, U)


@dataclass
class BoundaryLimit:
    value: float
    gap: float
    trace: list          # (j, value) for eps = 2**-j

    def to_dict(self):
        return {"value": self.value, "gap": self.gap, "trace": self.trace}


def omega_boundary(A, z: complex, j_start: int = 1, j_stop: int = EPS_FLOOR,
                   points=()) -> BoundaryLimit:
    """``omega(z, A, D)`` for compact ``A`` on the circle, as the limit over
    ``2**-j``-neighbourhoods of ``A`` (arcs enlarged, isolated points padded).

    Isolated points come from FinitePoints leaves of ``A`` plus ``points``
    (turns)."""
    lst = _arc_list(A)
    pts = (boundary_points(A) if isinstance(A, SetExpr) else []) + [float(t) for t in points]
    trace = []
    for j in range(j_start, j_stop + 1):
        eps = Fraction(1, 2 ** j)
        nb = _arcs.union(_arcs.enlarge(lst, eps),
                         *(_arcs.point_neighbourhood(_arcs.to_turn(t), eps) for t in pts))
        trace.append((j, poisson(z, nb)))
    gap = abs(trace[-1][1] - trace[-2][1]) if len(trace) > 1 else 0.0
    return BoundaryLimit(trace[-1][1], gap, trace)


# --------------------------------------------------------------------------
# Blaschke discs

@dataclass(frozen=True)
class BlaschkeDisc:
    """``B(z) = e^{i phi} prod (z - a_j) / (1 - conj(a_j) z)``."""
    phi: float = 0.0
    zeros: tuple = ()

    def __post_init__(self):
        zs = tuple(complex(a) for a in self.zeros)
        if any(abs(a) >= 1 for a in zs):
            raise PluriError("Blaschke zeros must lie in the open unit disc")
        if not math.isfinite(self.phi):
            raise PluriError("phase must be finite")
        object.__setattr__(self, "zeros", zs)

    @property
    def degree(self) -> int:
        return len(self.zeros)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.full(z.shape, np.exp(1j * self.phi), dtype=complex)
        for a in self.zeros:
            out = out * (z - a) / (1 - np.conj(a) * z)
        return out

    def center(self) -> complex:
        return complex(np.exp(1j * self.phi) * np.prod([-a for a in self.zeros]))

    def argument(self, t) -> np.ndarray:
        """Continuous boundary argument at ``e^{2 pi i t}``, in turns; increases by ``degree``."""
        t = np.asarray(t, dtype=float)
        out = self.phi / TWO_PI + self.degree * t
        e = np.exp(-2j * np.pi * t)
        for a in self.zeros:
            out = out + np.angle(1 - a * e) / math.pi
        return out

    def to_dict(self):
        return {"phi": self.phi, "zeros": [[a.real, a.imag] for a in self.zeros]}

    @classmethod
    def from_dict(cls, m):
        return cls(m.get("phi", 0.0), tuple(complex(a, b) for a, b in m.get("zeros", [])))


def mobius(x: complex) -> BlaschkeDisc:
    """Automorphism ``z -> (z + x) / (1 + conj(x) z)`` sending 0 to ``x``."""
    x = complex(x)
    if abs(x) >= 1:
        raise OutsideDomain("Mobius center must lie in the open unit disc")
    return BlaschkeDisc(0.0, (-x,) if x != 0 else (0j,))


def blaschke_with_center(x: complex, inner: BlaschkeDisc) -> BlaschkeDisc:
    """``mobius(x)`` composed with ``z * inner(z)``: a Blaschke product with ``B(0) = x``."""
    x = complex(x)
    zs = np.array(inner.zeros, dtype=complex)
    rot = np.exp(1j * inner.phi)
    num = np.poly(zs) if len(zs) else np.array([1.0 + 0j])                # prod (z - b)
    den = np.poly(1 / np.conj(zs[zs != 0])) if np.any(zs != 0) else np.array([1.0 + 0j])
    den = den * np.prod(-np.conj(zs[zs != 0])) if np.any(zs != 0) else den  # prod (1 - conj(b) z)
    # zeros of  rot * z * num(z) + x * den(z)
    poly = np.polyadd(rot * np.polymul([1, 0], num), x * den)
    roots = np.roots(poly)
    roots = roots * np.minimum(1.0, (1 - 1e-15) / np.maximum(np.abs(roots), 1e-300))
    B = BlaschkeDisc(0.0, tuple(roots))
    w = np.exp(0.3j)
    cz = w * inner(w)
    target = (cz + x) / (1 + np.conj(x) * cz)
    phi = float(np.angle(target / B(w)))
    return BlaschkeDisc(phi, tuple(roots))


def blaschke_sigma(B: BlaschkeDisc, A) -> float:
    """``sigma{t : B(e^{2 pi i t}) in A}`` by inverting the monotone boundary argument."""
    lst = _arc_list(A)
    if not lst:
        return 0.0
    if B.degree == 0:
        return 1.0 if _arcs.contains(lst, Fraction(B.phi / TWO_PI) % 1, closed=False) else 0.0
    psi0 = float(B.argument(0.0))
    m = B.degree

    def inverse(y):
        if y <= psi0:
            return 0.0
        if y >= psi0 + m:
            return 1.0
        return brentq(lambda t: float(B.argument(t)) - y, 0.0, 1.0, xtol=1e-15, rtol=1e-15)

    total = 0.0
    for a, b in lst:
        a, b = float(a), float(b)
        for n in range(math.floor(psi0 - b), math.ceil(psi0 + m - a) + 1):
            lo, hi = max(a + n, psi0), min(b + n, psi0 + m)
            if hi > lo:
                total += inverse(hi) - inverse(lo)
    return min(max(total, 0.0), 1.0)


def random_blaschke(x: complex, degree: int, gen) -> BlaschkeDisc:
    zs = []
    for _ in range(degree - 1):
        r = math.sqrt(gen.random()) * 0.95
        zs.append(r * np.exp(2j * np.pi * gen.random()))
    inner = BlaschkeDisc(TWO_PI * gen.random(), tuple(zs))
    return blaschke_with_center(x, inner)


# --------------------------------------------------------------------------
# verification drivers

def verify_boundary_equality(x: complex, U, degree_cap: int = 6, samples: int = 50,
                seed: int = 0, tol: float = 1e-9) -> dict:
    """Automorphism attains ``-poisson(x, U)``; random Blaschke discs with ``B(0)=x`` do not beat it."""
    p = poisson(x, U)
    s_phi = blaschke_sigma(mobius(x), U)
    gen = generator(seed, 43)
    best = 0.0
    for i in range(samples):
        B = random_blaschke(x, 1 + i % degree_cap, gen)
        best = max(best, blaschke_sigma(B, U))
    return {
        "x": [complex(x).real, complex(x).imag], "poisson": p, "sigma_mobius": s_phi,
        "equality_gap": abs(p + s_phi), "best_searched": best,
        "excess": best - s_phi,
        "passed": bool(abs(p + s_phi) <= tol and best <= s_phi + tol and p <= -best + tol),
    }


def verify_monotone_union(x: complex, family, tol: float = 1e-6) -> dict:
    """Nested open arc sets ``U_1 c U_2 c ...``: values decrease to ``poisson(x, union)``."""
    lists = [_arc_list(U) for U in family]
    values = [poisson(x, U) for U in lists]
    nested = all(_arcs.intersect(u, v) == u for u, v in zip(lists, lists[1:]))
    limit = poisson(x, _arcs.union(*lists)) if lists else 0.0
    mono = all(b <= a + 1e-15 for a, b in zip(values, values[1:]))
    gap = abs(values[-1] - limit) if values else 0.0
    return {"values": values, "limit": limit, "gap": gap, "nested": nested,
            "monotone": mono, "passed": bool(nested and mono and gap <= tol)}


def growing_arc_family(count: int, end_turns=Fraction(1, 2)) -> list:
    """``U_j = (0, end - end/(j+1))``; increases to ``(0, end)``."""
    end = _arcs.to_turn(end_turns)
    return [[(Fraction(0), end - end / (j + 1))] for j in range(1, count + 1)]


def cantor_gap_family(level: int, ratio=Fraction(1, 3)) -> list:
    """Open gaps of the Cantor construction added one generation at a time."""
    out = []
    for m in range(1, level + 1):
        out.append(_arcs.complement(_arcs.cantor_arcs(m, ratio)))
    return out


def weak_regularity_probe(U, rays=8, j_max: int = 20, trace_path=None) -> dict:
    """Radial limits of ``poisson(., U)`` along rays ``r e^{2 pi i t}``, ``r = 1 - 2**-j``.

    ``rays`` is a count (rays spread over the interior of ``U``) or a list of
    angles in turns.  The check is ``max(value + 1) <= 1e-3`` at the last
    radius over rays whose angle lies in the open set ``U``.
    """
    lst = _arc_list(U)
    if isinstance(rays, int):
        angles = []
        for a, b in lst:
            k = max(1, round(rays * float(b - a) / max(float(_arcs.measure(lst)), 1e-300)))
            angles += [float(a + (b - a) * Fraction(2 * i + 1, 2 * k)) for i in range(k)]
    else:
        angles = [float(t) for t in rays]
    radii = [1.0 - 2.0 ** -j for j in range(1, j_max + 1)]
    rows, worst = [], 0.0
    for t in angles:
        inside = _arcs.contains(lst, Fraction(t), closed=False)
        vals = [poisson(r * np.exp(2j * np.pi * t), lst) for r in radii]
        rows += [(t, r, v) for r, v in zip(radii, vals)]
        if inside:
            worst = max(worst, vals[-1] + 1.0)
    if trace_path:
        with open(trace_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["angle_turns", "radius", "value"])
            w.writerows(rows)
    finals = {t: v for t, r, v in rows if r == radii[-1]}
    return {"angles": angles, "final_radius": radii[-1], "final_values": list(finals.values()),
            "worst_excess": worst, "passed": bool(worst <= 1e-3)}


# --------------------------------------------------------------------------
# polar sets on the circle

@dataclass
class PolarWitness:
    """``u = sum_n omega(., U_n, D)`` with ``U_n`` shrinking arcs around the points.

    Budgets ``b_n = scale / n**2`` sum to at most ``total``; the half-width
    of ``U_n`` is chosen so that ``omega(x0, U_n, D) = -b_n``.
    """
    points: list          # turns
    x0: complex
    widths: np.ndarray    # half-widths in turns per term

    def __call__(self, z: complex) -> float:
        z = complex(z)
        r, phi = abs(z), math.atan2(z.imag, z.real)
        if r >= 1:
            raise OutsideDomain("|z| must be < 1")
        total = 0.0
        for t in self.points:
            c = TWO_PI * t - phi
            a = _antiderivative(np.array(c - TWO_PI * self.widths), r)
            b = _antiderivative(np.array(c + TWO_PI * self.widths), r)
            total -= float(np.sum(b - a)) / TWO_PI
        return total


def polar_witness(points, x0: complex = 0j, terms: int = 2000, total: float = 0.5) -> PolarWitness:
    """Build a :class:`PolarWitness` for finitely many circle points (turns)."""
    pts = [float(p) for p in points]
    if not pts:
        raise PluriError("need at least one point")
    scale = total * 6 / math.pi ** 2
    widths = np.empty(terms)
    for n in range(1, terms + 1):
        b = scale / n ** 2

        def f(w):
            arcs = _arcs.union(*(_arcs.point_neighbourhood(Fraction(t), Fraction(w)) for t in pts))
            return harmonic_measure(x0, arcs) - b

        if x0 == 0:
            widths[n - 1] = b / (2 * len(pts))
        else:                                 # widths span many decades: solve in log-width
            widths[n - 1] = math.exp(brentq(lambda s: f(math.exp(s)), math.log(1e-18),
                                            math.log(0.25), xtol=1e-12))
    return PolarWitness(pts, complex(x0), widths)


def verify_polar_witness(points, x0: complex = 0j, terms: int = 2000, j_ray: int = 30,
                         bound: float = -1000.0) -> dict:
    u = polar_witness(points, x0, terms)
    r = 1.0 - 2.0 ** -j_ray
    ray = [u(r * np.exp(2j * np.pi * t)) for t in u.points]
    at_x0 = u(x0)
    return {"u_x0": at_x0, "radius": r, "ray_values": ray, "terms": terms,
            "passed": bool(at_x0 > -1.0 and max(ray) < bound)}


def log_pole(points, z: complex) -> float:
    """``sum log(|z - e| / 2)``: non-positive on the disc, ``-inf`` at each circle point."""
    z = complex(z)
    return float(sum(math.log(abs(z - np.exp(2j * np.pi * t)) / 2) for t in points))


def verify_sandwich(x: complex, arcs_part, points, tol: float = 1e-9) -> dict:
    """Arc union plus finite set: ``omega(x, A) <= -sigma_B(A) + tol <= omega*(x, A) + tol``.

    ``omega(x, A)`` uses neighbourhoods of the whole closure (points
    included), ``omega*`` ignores the finite part; ``B`` is the
    automorphism centred at ``x``.  The log-pole function is reported along
    rays into the points.
    """
    lst = _arc_list(arcs_part)
    pts = [float(t) for t in points]
    full = omega_boundary(lst, x, points=pts)
    sigma = blaschke_sigma(mobius(x), lst)
    star = poisson(x, lst)
    rays = {t: [log_pole(pts, (1 - 2.0 ** -j) * np.exp(2j * np.pi * t)) for j in (10, 20, 30)]
            for t in pts}
    ok = full.value <= -sigma + tol and -sigma <= star + tol
    return {"omega": full.value, "omega_gap": full.gap, "sigma": sigma, "omega_star": star,
            "pole_u_x": log_pole(pts, x) if pts else 0.0,
            "pole_rays": {str(k): v for k, v in rays.items()}, "passed": bool(ok)}
