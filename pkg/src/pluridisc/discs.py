"""Polynomial analytic discs, boundary push-forward measures and disc optimization."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InfeasibleDisc, OutsideDomain, PluriError
from .geometry import (
    Annulus, Box, ClosedDisc, Disc, Intersection, OpenDisc, SetExpr, Union, UnitDisc,
    as_point, member_array,
)
from .rng import restart_generators

log = logging.getLogger(__name__)

GAUGE_MARGIN = 1e-6
EXACT_ATOL = 1e-10


@dataclass(eq=False)
class AnalyticDisc:
    """``f(z) = sum_k c[i, k] z**k`` per coordinate ``i``; ``f(0)`` is the center."""
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.coeffs, dtype=complex))
        if c.shape[0] not in (1, 2):
            raise PluriError("discs map into C^1 or C^2")
        if not np.all(np.isfinite(c)):
            raise PluriError("disc coefficients must be finite")
        self.coeffs = c

    @classmethod
    def constant(cls, x, degree: int = 0):
        p = as_point(x)
        c = np.zeros((p.dim, degree + 1), dtype=complex)
        c[:, 0] = p.coords
        return cls(c)

    @property
    def dim(self) -> int:
        return self.coeffs.shape[0]

    @property
    def degree(self) -> int:
        return self.coeffs.shape[1] - 1

    @property
    def center(self) -> tuple:
        return tuple(complex(c) for c in self.coeffs[:, 0])

    def is_constant(self) -> bool:
        return not np.any(self.coeffs[:, 1:])

    def __call__(self, z) -> np.ndarray:
        """Horner evaluation; scalar ``z`` gives shape (n,), arrays give (..., n)."""
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape + (self.dim,), dtype=complex)
        for k in range(self.degree, -1, -1):
            out = out * z[..., None] + self.coeffs[:, k]
        return out

    def boundary_values(self, theta) -> np.ndarray:
        return self(np.exp(1j * np.asarray(theta, dtype=float)))

    def to_dict(self) -> dict:
        return {"coeffs": [[[float(c.real), float(c.imag)] for c in row] for row in self.coeffs]}

    @classmethod
    def from_dict(cls, m: dict):
        return cls(np.array([[complex(a, b) for a, b in row] for row in m["coeffs"]]))


def eval_disc(f: AnalyticDisc, z: complex):
    from .geometry import ComplexPoint
    if abs(z) > 1 + 1e-12:
        raise PluriError("discs are evaluated on the closed unit disc")
    return ComplexPoint(tuple(f(z)))


def midpoint_angles(M: int) -> np.ndarray:
    return 2 * np.pi * (np.arange(M) + 0.5) / M


def _winding_about_origin(w: np.ndarray) -> int:
    d = np.diff(np.unwrap(np.angle(np.append(w, w[0]))))
    return int(round(d.sum() / (2 * np.pi)))


def feasible(f: AnalyticDisc, X, M: int = 4096) -> tuple[bool, float]:
    """Boundary-sample feasibility certificate; returns ``(ok, 1 - max gauge)``.

    For annuli the image must also have winding number 0 about the hole,
    otherwise the disc passes through it in the interior.
    """
    if M < 64:
        raise PluriError("feasibility needs at least 64 boundary samples")
    if f.dim != X.dim:
        raise DimensionMismatch(X.dim, f.dim, "disc")
    vals = f.boundary_values(midpoint_angles(M))
    margin = float(1.0 - np.max(X.gauge(vals)))
    ok = margin >= 0.0
    if ok and isinstance(X, Annulus) and not f.is_constant():
        ok = _winding_about_origin(vals[:, 0]) == 0
    return bool(ok), margin


# --------------------------------------------------------------------------
# push-forward measure

def sigma_f(f: AnalyticDisc, A: SetExpr, M: int = 4096, exact: bool = False,
            domain=None) -> float:
    """Normalized arc length of ``f^{-1}(A)`` on the circle.

    Sampling mode counts ``M`` equispaced midpoints.  Exact mode bisects each
    membership change between neighbouring samples down to ``1e-10`` rad;
    changes that start and end inside one sample gap are not resolved.
    """
    if A.dim != f.dim:
        raise DimensionMismatch(f.dim, A.dim, "set")
    if domain is not None:
        ok, margin = feasible(f, domain, max(M, 64))
        if not ok:
            raise InfeasibleDisc(f"disc leaves the domain (margin {margin:.3g})")
    theta = midpoint_angles(M)
    inside = member_array(A, f.boundary_values(theta))
    if not exact:
        return float(np.count_nonzero(inside)) / M
    return _exact_measure(f, A, theta, inside)


def _exact_measure(f, A, theta, inside) -> float:
    M = len(theta)
    nxt = np.roll(inside, -1)
    j = np.flatnonzero(inside != nxt)
    if len(j) == 0:
        return 1.0 if inside[0] else 0.0
    lo = theta[j].copy()
    hi = lo + 2 * np.pi / M
    target = inside[j]               # membership at lo
    while np.max(hi - lo) > EXACT_ATOL:
        mid = 0.5 * (lo + hi)
        same = member_array(A, f.boundary_values(mid)) == target
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    tau = 0.5 * (lo + hi)
    entering = ~target               # outside -> inside
    seg = np.diff(np.append(tau, tau[0] + 2 * np.pi))
    return float(np.sum(seg[entering]) / (2 * np.pi))


# --------------------------------------------------------------------------
# optimization

@dataclass
class DiscOptResult:
    disc: AnalyticDisc
    sigma: float
    seed: int
    samples: int
    budget: int
    restart_log: list = field(default_factory=list)
    exact: bool = True

    @property
    def omega_upper(self) -> float:
        return -self.sigma

    def to_dict(self) -> dict:
        return {
            "disc": self.disc.to_dict(), "sigma": self.sigma,
            "omega_upper": self.omega_upper, "seed": self.seed,
            "samples": self.samples, "budget": self.budget, "exact": self.exact,
            "restart_log": self.restart_log,
        }

    @classmethod
    def from_dict(cls, m: dict):
        return cls(AnalyticDisc.from_dict(m["disc"]), m["sigma"], m["seed"],
                   m["samples"], m["budget"], m.get("restart_log", []), m.get("exact", True))


class _Problem:
    """Feasibility restoration and objective for discs pinned at ``x``."""

    def __init__(self, X, A, x, degree, M, exact):
        self.X, self.A, self.M, self.exact = X, A, M, exact
        self.x = np.array(as_point(x).coords)
        self.n, self.d = len(self.x), degree
        self.theta = midpoint_angles(M)
        self.powers = np.exp(1j * np.outer(self.theta, np.arange(1, degree + 1)))
        self.evals = 0

    def unpack(self, p: np.ndarray) -> np.ndarray:
        nd = self.n * self.d
        return (p[:nd] + 1j * p[nd:]).reshape(self.n, self.d)

    def disc(self, p) -> AnalyticDisc:
        return AnalyticDisc(np.hstack([self.x[:, None], self.unpack(p)]))

    def _gauge(self, tail):
        vals = self.x[None, :] + self.powers @ tail.T
        g = float(np.max(self.X.gauge(vals)))
        if isinstance(self.X, Annulus) and g < 1 and np.any(tail):
            if _winding_about_origin(vals[:, 0]) != 0:
                return np.inf
        return g

    def restore(self, p: np.ndarray) -> np.ndarray:
        """Scale the non-constant part until the boundary gauge is <= 1 - margin."""
        limit = 1.0 - GAUGE_MARGIN
        tail = self.unpack(p)
        if self._gauge(tail) <= limit:
            return p
        lo, hi = 0.0, 1.0
        for _ in range(50):
            mid = 0.5 * (lo + hi)
            if self._gauge(mid * tail) <= limit:
                lo = mid
            else:
                hi = mid
        return p * lo

    def value(self, p) -> float:
        self.evals += 1
        return sigma_f(self.disc(p), self.A, self.M, exact=self.exact)


def _pattern_search(prob: _Problem, p0, budget, step0=0.5, step_min=1e-4):
    p = prob.restore(np.asarray(p0, dtype=float))
    best = prob.value(p)
    used = 1
    step = step0
    dim = len(p)
    while step >= step_min and used < budget:
        improved = False
        for i in range(dim):
            for sgn in (1.0, -1.0):
                if used >= budget:
                    break
                cand = p.copy()
                cand[i] += sgn * step
                cand = prob.restore(cand)
                val = prob.value(cand)
                used += 1
                if val > best + 1e-12:
                    p, best, improved = cand, val, True
                    break
        if not improved:
            step *= 0.5
    return p, best, used


def _inscribed_radius(A: SetExpr, c: complex) -> float:
    """Radius of a disc about ``c`` certainly contained in ``A`` (0 if unknown)."""
    if isinstance(A, (ClosedDisc, OpenDisc)) and A.dim == 1:
        return max(0.0, A.radius - abs(A.center[0] - c))
    if isinstance(A, Box) and A.dim == 1:
        lo, hi = A.lo[0], A.hi[0]
        return max(0.0, min(c.real - lo.real, hi.real - c.real, c.imag - lo.imag, hi.imag - c.imag))
    if isinstance(A, Union):
        return max(_inscribed_radius(s, c) for s in A.items)
    if isinstance(A, Intersection):
        return min(_inscribed_radius(s, c) for s in A.items)
    return 0.0


def concentric_disc(X, A: SetExpr, x, degree: int, samples: int = 720,
                    safety: float = 1e-3) -> AnalyticDisc | None:
    """Best degree-``degree`` disc for a disc ``A0`` about the center of a disc domain.

    On the circle ``T = |f - c|**2`` is a non-negative trigonometric
    polynomial; for a fixed arc, ``T <= rho**2`` on the arc, ``T <= R**2``
    everywhere and geometric mean ``>= |x - c|**2`` is a convex feasibility
    problem.  The arc length is bisected and ``f`` recovered by spectral
    factorization (outer factor).  Returns None when not applicable.
    """
    if isinstance(X, UnitDisc):
        c, R = 0j, 1.0
    elif isinstance(X, Disc):
        c, R = X.center, X.radius
    else:
        return None
    x0 = complex(as_point(x).coords[0]) - c
    rho = _inscribed_radius(A, c)
    if rho <= 0 or abs(x0) <= rho or abs(x0) >= R:
        return None
    try:
        import cvxpy as cp
    except ImportError:  # pragma: no cover
        return None
    d = degree
    th = midpoint_angles(samples)
    C = np.cos(np.outer(th, np.arange(d + 1)))
    S = np.sin(np.outer(th, np.arange(1, d + 1)))
    log_gm = 2 * math.log(abs(x0))
    wrapped = np.abs(np.angle(np.exp(1j * th)))
    floor = 1e-6 * R * R

    def attempt(s):
        a, b = cp.Variable(d + 1), cp.Variable(d)
        T = C @ a + S @ b
        arc = wrapped <= np.pi * s
        cons = [T >= floor, T <= (R * (1 - safety)) ** 2,
                T[arc] <= (rho * (1 - safety)) ** 2,
                cp.sum(cp.log(T)) / samples >= log_gm]
        prob = cp.Problem(cp.Minimize(0), cons)
        try:
            prob.solve(solver=cp.CLARABEL)
        except cp.error.SolverError:
            return None
        return (a.value, b.value) if prob.status == "optimal" else None

    lo, hi, best = 0.0, 1.0, None
    for _ in range(16):
        mid = 0.5 * (lo + hi)
        r = attempt(mid)
        if r is not None:
            lo, best = mid, r
        else:
            hi = mid
    if best is None:
        return None
    a, b = best
    t = np.zeros(2 * d + 1, dtype=complex)
    t[d] = a[0]
    for k in range(1, d + 1):
        t[d + k] = (a[k] - 1j * b[k - 1]) / 2
        t[d - k] = np.conj(t[d + k])
    roots = np.roots(t[::-1])
    outer = roots[np.abs(roots) > 1]
    if len(outer) != d:
        return None
    q = np.poly(outer)[::-1]
    q = q * (x0 / q[0])  # |q(0)| <= |x0| up to solver tolerance; pin exactly
    tvals = C @ a + S @ b
    qvals = np.polyval(q[::-1], np.exp(1j * th))
    if np.max(np.abs(qvals) ** 2 - tvals) > 1e-3 * R * R:
        return None
    coeffs = q.copy()
    coeffs[0] = x0 + c
    return AnalyticDisc(coeffs[None, :])


def optimize_discs(X, A: SetExpr, x, degree: int = 12, restarts: int = 20,
                   budget: int = 3000, seed: int = 0, M: int = 4096,
                   exact: bool = True, init: list | None = None,
                   init_scale: float = 0.6, warm_start: bool = True,
                   search_samples: int = 1024, stream: int = 0) -> DiscOptResult:
    """Maximize ``sigma_f(A)`` over feasible polynomial discs with ``f(0) = x``.

    Restart ``r`` draws its start from child ``(stream, r)`` of ``seed``; extra
    starting discs may be passed in ``init``, and with ``warm_start`` the
    :func:`concentric_disc` construction is added when it applies.  The
    search evaluates ``sigma_f`` on ``search_samples`` points; the winner is
    re-evaluated with ``M``.  The constant disc is always evaluated, so the
    result is never worse than that baseline.
    """
    p_x = as_point(x)
    if p_x.dim != X.dim or A.dim != X.dim:
        raise DimensionMismatch(X.dim, p_x.dim)
    if degree < 1:
        raise PluriError("degree must be >= 1")
    if not X.gauge(p_x.as_array()[None, :])[0] < 1.0:
        raise OutsideDomain(f"{p_x.coords} is not interior to the domain")
    prob = _Problem(X, A, p_x, degree, min(M, search_samples), exact)
    final = _Problem(X, A, p_x, degree, M, exact)
    nparam = 2 * prob.n * degree
    base = np.zeros(nparam)
    best_p, best_val = base, final.value(base)
    logs = [{"restart": "constant", "sigma": best_val, "evals": 1}]
    if best_val >= 1.0:
        return DiscOptResult(prob.disc(base), best_val, seed, M, budget, logs, exact)

    extra = list(init or [])
    if warm_start and X.dim == 1:
        w = concentric_disc(X, A, p_x, degree)
        if w is not None:
            extra.append(w)
    starts = []
    for disc in extra:
        c = np.zeros((prob.n, degree), dtype=complex)
        k = min(degree, disc.degree)
        c[:, :k] = disc.coeffs[:, 1:k + 1]
        starts.append((f"init{len(starts)}", np.concatenate([c.real.ravel(), c.imag.ravel()])))
    for r, gen in enumerate(restart_generators(seed, restarts, stream)):
        scale = init_scale / np.sqrt(np.arange(1, degree + 1))
        c = (gen.standard_normal((prob.n, degree)) + 1j * gen.standard_normal((prob.n, degree)))
        c *= scale / np.sqrt(2)
        starts.append((r, np.concatenate([c.real.ravel(), c.imag.ravel()])))

    for tag, p0 in starts:
        p, val, used = _pattern_search(prob, p0, budget)
        cands = [final.restore(p), final.restore(np.asarray(p0, dtype=float))]
        vals = [final.value(c) for c in cands]
        i = int(np.argmax(vals))          # the start itself competes, so warm starts never lose
        p, val = cands[i], vals[i]
        logs.append({"restart": tag, "sigma": val, "evals": used})
        if val > best_val:
            best_p, best_val = p, val
    disc = final.disc(best_p)
    ok, _ = feasible(disc, X, M)
    if not ok:  # restore() guarantees feasibility; fall back to the constant disc
        disc, best_val = final.disc(base), logs[0]["sigma"]
    return DiscOptResult(disc, best_val, seed, M, budget, logs, exact)


def verify_closed_bound(X, A: SetExpr, points, params=None, tol: float = 0.08,
                lower_tol: float = 0.03, degree: int = 12, restarts: int = 20,
                budget: int = 3000, seed: int = 0, M: int = 4096) -> dict:
    """Compare the grid envelope with the disc bound at each probe point.

    Per point: ``upper_ok`` is ``Omega_upper <= omega_est + tol`` and
    ``lower_ok`` is ``Omega_upper >= omega_est - lower_tol`` (the
    inequality ``omega <= Omega`` up to grid error).  Probe ``i`` uses RNG
    stream ``i``.
    """
    from .envelope import SolverParams, omega_at
    params = params or SolverParams()
    rows = []
    for i, x in enumerate(points):
        est = omega_at(X, A, x, params)
        res = optimize_discs(X, A, x, degree=degree, restarts=restarts, budget=budget,
                             seed=seed, M=M, stream=i)
        up = res.omega_upper
        rows.append({
            "x": [[float(c.real), float(c.imag)] for c in as_point(x).coords],
            "omega_est": est, "omega_upper": up, "sigma": res.sigma,
            "upper_ok": bool(up <= est + tol), "lower_ok": bool(up >= est - lower_tol),
        })
    return {"tol": tol, "lower_tol": lower_tol, "degree": degree, "restarts": restarts,
            "budget": budget, "seed": seed, "rows": rows,
            "passed": all(r["upper_ok"] and r["lower_ok"] for r in rows)}
