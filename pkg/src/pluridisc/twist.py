"""Two-variable discs, the ``(z, w) -> (z w**k, w)`` twist and disc gluing.

A :class:`BivariateDisc` is a polynomial in ``z`` whose coefficients are
Laurent polynomials in ``w``.  Negative powers of ``w`` are allowed because
the glued circle maps are only trigonometric in ``w``; substituting
``z = e^{i theta} w**(k+1)`` with ``k`` large enough clears them and yields an
honest analytic disc.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import arcs as _arcs
from .discs import AnalyticDisc
from .errors import PluriError
from .geometry import TorusSet, torus_measure


@dataclass(eq=False)
class BivariateDisc:
    """``F_i(z, w) = sum_{a, b} coeffs[i, a, b] z**a w**(b + wmin)``."""
    coeffs: np.ndarray
    wmin: int = 0

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim == 2:
            c = c[None]
        if c.ndim != 3 or c.shape[0] not in (1, 2):
            raise PluriError("bivariate coefficients need shape (n, dz + 1, nw)")
        if not np.all(np.isfinite(c)):
            raise PluriError("coefficients must be finite")
        self.coeffs = c
        self.wmin = int(self.wmin)

    @classmethod
    def from_slice(cls, h: AnalyticDisc, *z_terms) -> "BivariateDisc":
        """``F(z, w) = h(w) + sum_a z**(a+1) * z_terms[a]`` with constant vectors."""
        n, dw = h.dim, h.degree + 1
        c = np.zeros((n, len(z_terms) + 1, dw), dtype=complex)
        c[:, 0, :] = h.coeffs
        for a, v in enumerate(z_terms, start=1):
            c[:, a, 0] = np.broadcast_to(np.asarray(v, dtype=complex), (n,))
        return cls(c)

    @property
    def dim(self) -> int:
        return self.coeffs.shape[0]

    @property
    def dz(self) -> int:
        return self.coeffs.shape[1] - 1

    @property
    def dw(self) -> int:
        return self.coeffs.shape[2] - 1 + self.wmin

    def __call__(self, z, w) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        w = np.asarray(w, dtype=complex)
        z, w = np.broadcast_arrays(z, w)
        wp = w[..., None] ** (np.arange(self.coeffs.shape[2]) + self.wmin)
        out = np.zeros(z.shape + (self.dim,), dtype=complex)
        for a in range(self.dz, -1, -1):
            out = out * z[..., None] + wp @ self.coeffs[:, a, :].T
        return out

    def z_coefficient(self, a: int, t) -> np.ndarray:
        """Coefficient of ``z**a`` on the circle ``w = e^{2 pi i t}``; shape (..., n)."""
        w = np.exp(2j * np.pi * np.asarray(t, dtype=float))
        wp = w[..., None] ** (np.arange(self.coeffs.shape[2]) + self.wmin)
        return wp @ self.coeffs[:, a, :].T

    def slice0(self) -> AnalyticDisc:
        """The disc ``w -> F(0, w)``; raises if it has negative powers."""
        c = self.coeffs[:, 0, :]
        if self.wmin < 0:
            if np.any(c[:, :-self.wmin]):
                raise PluriError("F(0, .) has negative powers of w")
            c = c[:, -self.wmin:]
        else:
            c = np.hstack([np.zeros((self.dim, self.wmin)), c])
        return AnalyticDisc(c if c.shape[1] else np.zeros((self.dim, 1)))

    def to_dict(self) -> dict:
        return {"wmin": self.wmin,
                "coeffs": [[[[float(v.real), float(v.imag)] for v in row] for row in blk]
                           for blk in self.coeffs]}

    @classmethod
    def from_dict(cls, m: dict):
        c = np.array([[[complex(a, b) for a, b in row] for row in blk] for blk in m["coeffs"]])
        return cls(c, m.get("wmin", 0))


def radial_twist(F: BivariateDisc, k: int, theta: float) -> AnalyticDisc:
    """``g(w) = F(e^{i theta} w**(k+1), w)``.

    ``g(0) = F(0, 0)`` and ``deg g <= dz*(k+1) + dw``.  Raises if ``k`` is too
    small to push every ``z``-term to ``w``-degree >= 1.
    """
    if k < 0:
        raise PluriError("k must be >= 0")
    n, A, B = F.coeffs.shape
    rot = np.exp(1j * float(theta))
    deg = (A - 1) * (k + 1) + B - 1 + F.wmin
    terms = {}
    for a in range(A):
        for b in range(B):
            v = F.coeffs[:, a, b]
            if not np.any(v):
                continue
            e = a * (k + 1) + b + F.wmin
            if e < (1 if a else 0):
                raise PluriError(f"twist with k={k} sends z**{a} w**{b + F.wmin} to w**{e}")
            terms[(a, e)] = v * rot ** a
    out = np.zeros((n, max(deg, 0) + 1), dtype=complex)
    for (a, e), v in terms.items():
        out[:, e] += v
    return AnalyticDisc(out)


def min_twist(F: BivariateDisc) -> int:
    """Smallest ``k`` for which :func:`radial_twist` returns a polynomial."""
    k = 0
    for a in range(1, F.dz + 1):
        for b in range(F.coeffs.shape[2]):
            if np.any(F.coeffs[:, a, b]):
                need = 1 - (b + F.wmin)
                if need > a:
                    k = max(k, math.ceil(need / a) - 1)
    if F.wmin < 0 and np.any(F.coeffs[:, 0, :-F.wmin]):
        raise PluriError("F(0, .) has negative powers; no twist removes them")
    return k


# --------------------------------------------------------------------------
# exact slice measures on the torus

def _wrapped_length(x: Fraction, a: Fraction, b: Fraction) -> Fraction:
    """Length of ``{u in [0, x] : u mod 1 in [a, b]}`` for ``x >= 0``."""
    q = math.floor(x)
    return q * (b - a) + min(max(x - q - a, Fraction(0)), b - a)


def slice_measure(C: TorusSet, shift, mult: int) -> Fraction:
    """``sigma{t : (shift + mult*t, t) in C}`` exactly (angles in turns).

    With ``u = shift + mult*t`` the slice of a rectangle ``I x J`` is the part
    of a straight segment of length ``mult*sigma(J)`` lying in ``I`` modulo 1.
    """
    shift = _arcs.to_turn(shift) % 1
    total = Fraction(0)
    for (a, b), (c, d) in C.rects:
        if mult == 0:
            total += (d - c) if a < shift < b else 0
        else:
            lo, hi = shift + mult * c, shift + mult * d
            total += (_wrapped_length(hi, a, b) - _wrapped_length(lo, a, b)) / mult
    return total


def _breakpoints(C: TorusSet, mult: int) -> list[Fraction]:
    pts = {Fraction(0)}
    for I, J in C.rects:
        for a in I:
            for c in J:
                pts.add((a - mult * c) % 1)
    return sorted(pts)


def slice_integral(C: TorusSet, mult: int) -> Fraction:
    """``int_0^1 slice_measure(C, s, mult) ds`` exactly.

    Between consecutive breakpoints the slice measure is affine in ``s``
    (constant when ``mult == 0``), so the midpoint rule is exact.
    """
    bp = _breakpoints(C, mult) + [Fraction(1)]
    return sum(((b - a) * slice_measure(C, (a + b) / 2, mult) for a, b in zip(bp, bp[1:])),
               Fraction(0))


def twist_preimage_measure(C: TorusSet, k: int) -> Fraction:
    """``sigma_2`` of ``{(z, w) : (z w**k, w) in C}``, computed slice by slice in ``z``."""
    return slice_integral(C, k)


@dataclass
class ThetaChoice:
    theta: float
    theta_turns: Fraction
    value: Fraction
    grid_mean: float
    exact_mean: Fraction
    target: Fraction
    T: int

    @property
    def slack(self) -> float:
        """Shortfall of the chosen slice below ``sigma_2(C)`` (<= 0 means none)."""
        return float(self.target - self.value)


def choose_theta(C: TorusSet, k: int, T: int = 1024) -> ThetaChoice:
    """Pick ``theta`` maximizing ``sigma{w : (e^{i theta} w**(k+1), w) in C}``.

    The slice measure is evaluated exactly on the grid ``m/T`` and at its
    breakpoints; since it is piecewise affine the maximum over breakpoints
    is a true maximum, hence at least the mean ``sigma_2(C)``.
    """
    if T < 256:
        raise PluriError("theta grid needs T >= 256")
    if k < 0:
        raise PluriError("k must be >= 0")
    target = torus_measure(C)
    if target == 0:
        return ThetaChoice(0.0, Fraction(0), Fraction(0), 0.0, Fraction(0), target, T)
    mult = k + 1
    grid = [slice_measure(C, Fraction(m, T), mult) for m in range(T)]
    cands = [(v, Fraction(m, T)) for m, v in enumerate(grid)]
    cands += [(slice_measure(C, b, mult), b) for b in _breakpoints(C, mult)]
    best_v, best_t = max(cands, key=lambda p: (p[0], -p[1]))
    return ThetaChoice(_arcs.turn_to_radians(best_t), best_t, best_v,
                       float(sum(grid)) / T, slice_integral(C, mult), target, T)


def theta_sweep(C: TorusSet, k: int, T: int) -> np.ndarray:
    """Slice measures on the grid ``m/T`` as floats (plot data)."""
    return np.array([float(slice_measure(C, Fraction(m, T), k + 1)) for m in range(T)])


# --------------------------------------------------------------------------
# gluing

def bump(t, arc, plateau: float = 0.5) -> np.ndarray:
    """Smooth profile: 1 on the middle ``plateau`` fraction of ``arc``, 0 off it.

    ``arc = (a, b)`` in turns with ``b - a <= 1``; the full circle gives 1.
    """
    a, b = float(arc[0]), float(arc[1])
    t = np.asarray(t, dtype=float)
    if b - a >= 1:
        return np.ones_like(t)
    L = b - a
    s = ((t - a) % 1.0) / L                  # position in the arc, >1 outside
    ramp = 0.5 * (1 - plateau)
    if ramp <= 0:
        return ((s > 0) & (s < 1)).astype(float)

    def step(u):                              # C-infinity 0 -> 1 on [0, 1]
        u = np.clip(u, 0.0, 1.0)
        with np.errstate(divide="ignore", over="ignore"):
            e0 = np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1)), 0.0)
            e1 = np.where(u < 1, np.exp(-1.0 / np.where(u < 1, 1 - u, 1)), 0.0)
        return e0 / (e0 + e1)

    return np.where(s < 1, np.minimum(step(s / ramp), step((1 - s) / ramp)), 0.0)


@dataclass
class GluingSpec:
    """Base disc ``h`` and local two-variable discs ``F_j`` attached on arcs ``J_j``.

    ``pieces`` is a list of ``((a, b), F_j)`` with arcs in turns; ``plateau``
    sets the sub-arc where the smoothing profile equals 1.
    """
    h: AnalyticDisc
    pieces: list = field(default_factory=list)
    plateau: float = 0.5
    truncation: int = 64
    tol: float = 0.05
    samples: int = 2048

    def profile(self, t) -> np.ndarray:
        rho = np.zeros_like(np.asarray(t, dtype=float))
        for arc, _ in self.pieces:
            rho = rho + bump(t, arc, self.plateau)
        return rho

    def check(self, atol: float = 1e-9) -> None:
        """Raise unless arcs are disjoint, ``rho`` in [0, 1] and each ``F_j(0, .) = h`` on ``J_j``."""
        lst = [(_arcs.to_turn(a), _arcs.to_turn(b)) for (a, b), _ in self.pieces]
        total = sum((_arcs.measure(_arcs.wrap(a, b)) for a, b in lst), Fraction(0))
        if _arcs.measure(_arcs.union(*(_arcs.wrap(a, b) for a, b in lst))) != total:
            raise PluriError("gluing arcs overlap")
        t = (np.arange(self.samples) + 0.5) / self.samples
        rho = self.profile(t)
        if rho.min() < 0 or rho.max() > 1 + 1e-15:
            raise PluriError("smoothing profile leaves [0, 1]")
        w = np.exp(2j * np.pi * t)
        for (a, b), F in self.pieces:
            if F.dim != self.h.dim:
                raise PluriError("piece dimension differs from the base disc")
            on = _arc_mask(t, a, b)
            err = np.abs(F(0, w[on]) - self.h(w[on]))
            if err.size and err.max() > atol:
                raise PluriError(f"F_j(0, .) differs from h on its arc by {err.max():.3g}")


def _arc_mask(t, a, b):
    a, b = float(a), float(b)
    if b - a >= 1:
        return np.ones_like(t, dtype=bool)
    return ((t - a) % 1.0) < (b - a)


@dataclass
class GlueResult:
    disc: BivariateDisc
    residual: float
    scale: float
    ok: bool

    @property
    def relative_residual(self) -> float:
        return self.residual / self.scale if self.scale > 0 else 0.0


def glue(spec: GluingSpec, truncation: int | None = None) -> GlueResult:
    """Glue ``h`` with the ``F_j(rho(w) z, w)`` and fit trigonometric polynomials in ``w``.

    Each ``z``-coefficient of the circle map is replaced by its Fourier
    truncation of the given degree; the ``z``-free slice is set to ``h``
    exactly.  ``residual`` is the sup over samples of the fit error, ``ok``
    compares it with ``spec.tol * scale``.
    """
    spec.check()
    N = spec.truncation if truncation is None else int(truncation)
    M = max(spec.samples, 4 * N + 4)
    t = np.arange(M) / M
    n = spec.h.dim
    dz = max((F.dz for _, F in spec.pieces), default=0)
    target = np.zeros((dz + 1, M, n), dtype=complex)
    target[0] = spec.h(np.exp(2j * np.pi * t))
    for (a, b), F in spec.pieces:
        on = _arc_mask(t, a, b)
        rho = bump(t, (a, b), spec.plateau)
        for p in range(1, F.dz + 1):
            target[p, on] += (rho[on] ** p)[:, None] * F.z_coefficient(p, t[on])
    width = 2 * N + 1
    coeffs = np.zeros((n, dz + 1, width), dtype=complex)
    hc = spec.h.coeffs
    if hc.shape[1] > N + 1:
        raise PluriError("truncation is below the degree of h")
    coeffs[:, 0, N:N + hc.shape[1]] = hc
    residual, scale = 0.0, 0.0
    for p in range(1, dz + 1):
        spec_p = np.fft.fft(target[p], axis=0) / M
        keep = np.concatenate([spec_p[M - N:], spec_p[:N + 1]])    # frequencies -N..N
        coeffs[:, p, :] = keep.T
        fit = np.exp(2j * np.pi * np.outer(t, np.arange(-N, N + 1))) @ keep
        residual = max(residual, float(np.max(np.abs(fit - target[p]))))
        scale = max(scale, float(np.max(np.abs(target[p]))))
    disc = BivariateDisc(coeffs, wmin=-N)
    ok = residual <= spec.tol * max(scale, 1e-300) or scale == 0
    return GlueResult(disc, residual, scale, bool(ok))
