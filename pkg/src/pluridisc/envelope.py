"""Relative extremal functions on grids.

The discrete envelope is the largest grid function ``v`` with ``v <= g``
(``g = -chi_A`` rasterized) that satisfies the sub-mean-value inequality on
an 8-point circle stencil inside each configured complex line, with
boundary nodes clamped to 0.  Two solvers compute the same fixed point of
``v = min(g, min_d avg_d v)``:

* ``relax``  - the plain monotone iteration started from ``v = 0``;
* ``howard`` - policy iteration on the same equation.  Each step solves the
  linear system of the current policy; the iterates are pointwise
  non-increasing and the first one is ``v = 0``.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DimensionMismatch, OutsideDomain, PluriError
from .geometry import (
    SetExpr,
    as_point,
    domain_to_dict,
    member_array,
    set_to_dict,
)

log = logging.getLogger(__name__)

EXTERIOR, BOUNDARY, INTERIOR = 0, 1, 2
DEFAULT_NODE_CAP = 2_000_000

# unit steps of the 8-point circle stencil, as Gaussian integers
_RING = (1, -1, 1j, -1j, 1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j)

DIRECTIONS = {
    1: {"z": (1,)},
    2: {"z1": (1, 0), "z2": (0, 1), "diag": (1, 1), "antidiag": (1, -1)},
}


def default_h(dim: int) -> float:
    return 1 / 256 if dim == 1 else 1 / 16


@dataclass(frozen=True)
class SolverParams:
    h: float | None = None
    tol: float = 1e-8
    max_iter: int = 200
    method: str = "howard"
    directions: tuple | None = None
    node_cap: int = DEFAULT_NODE_CAP
    usc_passes: int = 1

    def resolved_h(self, dim: int) -> float:
        return self.h if self.h is not None else default_h(dim)

    def to_dict(self) -> dict:
        return {
            "h": self.h, "tol": self.tol, "max_iter": self.max_iter,
            "method": self.method,
            "directions": list(self.directions) if self.directions else None,
            "node_cap": self.node_cap, "usc_passes": self.usc_passes,
        }


# --------------------------------------------------------------------------
# grids

@dataclass
class GridSpec:
    dim: int
    h: float
    lo: tuple           # integer lattice index of the first node, per real axis
    shape: tuple
    cls: np.ndarray     # EXTERIOR / BOUNDARY / INTERIOR per node

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def axes(self) -> list[np.ndarray]:
        return [(self.lo[k] + np.arange(self.shape[k])) * self.h for k in range(2 * self.dim)]

    def points(self) -> np.ndarray:
        """Complex coordinates of all nodes, shape (size, dim)."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        flat = [m.ravel() for m in mesh]
        return np.stack([flat[2 * j] + 1j * flat[2 * j + 1] for j in range(self.dim)], axis=1)

    def strides(self) -> np.ndarray:
        s = np.ones(len(self.shape), dtype=np.int64)
        for k in range(len(self.shape) - 2, -1, -1):
            s[k] = s[k + 1] * self.shape[k + 1]
        return s


def _direction_offsets(vec) -> np.ndarray:
    """Real lattice offsets (8, 2n) of the circle stencil in complex direction ``vec``."""
    rows = []
    for zeta in _RING:
        row = []
        for c in vec:
            w = complex(zeta) * complex(c)
            row += [int(round(w.real)), int(round(w.imag))]
        rows.append(row)
    return np.array(rows, dtype=np.int64)


def resolve_directions(dim: int, directions=None) -> list[tuple[str, tuple]]:
    table = DIRECTIONS[dim]
    if directions is None:
        return list(table.items())
    out = []
    for d in directions:
        if isinstance(d, str):
            if d not in table:
                raise PluriError(f"unknown direction {d!r} for n={dim}")
            out.append((d, table[d]))
        else:
            vec = tuple(d)
            if len(vec) != dim:
                raise DimensionMismatch(dim, len(vec), "direction")
            out.append((str(vec), vec))
    return out


def build_grid(domain, h: float, directions=None, node_cap: int = DEFAULT_NODE_CAP) -> GridSpec:
    if not h > 0:
        raise PluriError("grid spacing must be positive")
    n = domain.dim
    box = domain.bbox()
    lo = tuple(int(math.floor(a / h)) - 1 for a, _ in box)
    hi = tuple(int(math.ceil(b / h)) + 1 for _, b in box)
    shape = tuple(b - a + 1 for a, b in zip(lo, hi))
    size = int(np.prod(shape))
    if size > node_cap:
        raise PluriError(f"grid with {size} nodes exceeds the cap of {node_cap}")
    grid = GridSpec(n, float(h), lo, shape, np.zeros(shape, dtype=np.int8))
    pts = grid.points()
    interior = (domain.gauge(pts) < 1.0).reshape(shape)
    cls = np.where(interior, INTERIOR, EXTERIOR).astype(np.int8)
    flat = cls.ravel()
    ii = np.flatnonzero(interior.ravel())
    strides = grid.strides()
    for _, vec in resolve_directions(n, directions):
        for off in _direction_offsets(vec) @ strides:
            nb = ii + off
            flat[nb[flat[nb] == EXTERIOR]] = BOUNDARY
    grid.cls = cls
    return grid


# --------------------------------------------------------------------------
# fields

@dataclass
class GridField:
    grid: GridSpec
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def interior_values(self) -> np.ndarray:
        return self.values[self.grid.cls == INTERIOR]

    def to_csv(self, path) -> None:
        pts = self.grid.points()
        vals = self.values.ravel()
        keep = self.grid.cls.ravel() != EXTERIOR
        n = self.grid.dim
        header = [f"{p}{j + 1}" for j in range(n) for p in ("x", "y")] + ["cls", "value"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            cls = self.grid.cls.ravel()
            for k in np.flatnonzero(keep):
                row = []
                for j in range(n):
                    row += [repr(float(pts[k, j].real)), repr(float(pts[k, j].imag))]
                w.writerow(row + [int(cls[k]), repr(float(vals[k]))])


def build_obstacle(domain, A: SetExpr, grid: GridSpec) -> GridField:
    """Rasterize ``g = -chi_A``; closed primitives capture nodes within h/2."""
    if A.dim != domain.dim or grid.dim != domain.dim:
        raise DimensionMismatch(domain.dim, A.dim, "set")
    pts = grid.points()
    inside = member_array(A, pts, pad=grid.h / 2).reshape(grid.shape)
    vals = np.where(inside & (grid.cls == INTERIOR), -1.0, 0.0)
    vals[grid.cls == EXTERIOR] = np.nan
    return GridField(grid, vals, {"kind": "obstacle"})


def _neighbours(grid: GridSpec, ii: np.ndarray, directions) -> np.ndarray:
    strides = grid.strides()
    return np.stack([ii[:, None] + (_direction_offsets(vec) @ strides)[None, :]
                     for _, vec in directions])


def psh_envelope(obstacle: GridField, directions=None, tol: float = 1e-8,
                 max_iter: int = 200, method: str = "howard") -> GridField:
    """Largest discrete sub-mean-value minorant of ``obstacle``.

    ``max_iter`` counts policy steps for ``howard`` and sweeps for ``relax``.
    Non-convergence is reported in ``meta['converged']``, never raised.
    """
    if not tol > 0:
        raise PluriError("tol must be positive")
    grid = obstacle.grid
    dirs = resolve_directions(grid.dim, directions)
    cls = grid.cls.ravel()
    ii = np.flatnonzero(cls == INTERIOR)
    g = obstacle.values.ravel()[ii]
    if np.any((g != 0) & (g != -1)):
        raise PluriError("obstacle values must be 0 or -1")
    nb = _neighbours(grid, ii, dirs)           # (D, K, 8)
    v = np.zeros(grid.size)
    if method == "howard":
        v, info = _howard(v, ii, g, nb, cls, tol, max_iter)
    elif method == "relax":
        v, info = _relax(v, ii, g, nb, tol, max_iter)
    else:
        raise PluriError(f"unknown envelope method {method!r}")
    out = v.reshape(grid.shape).copy()
    out[grid.cls == EXTERIOR] = np.nan
    info.update(kind="envelope", method=method, tol=tol,
                directions=[name for name, _ in dirs])
    if not info["converged"]:
        log.warning("envelope did not converge: %s", info)
    return GridField(grid, out, info)


def _averages(v, nb):
    return v[nb].mean(axis=2)                  # (D, K)


def _relax(v, ii, g, nb, tol, max_iter):
    change = np.inf
    it = 0
    vi = v[ii]
    while it < max_iter:
        new = np.minimum(g, _averages(v, nb).min(axis=0))
        change = float(np.max(np.abs(new - vi))) if len(vi) else 0.0
        v[ii] = new
        vi = new
        it += 1
        if change < tol:
            break
    return v, {"converged": bool(change < tol), "iterations": it, "residual": change}


def _howard(v, ii, g, nb, cls, tol, max_iter):
    K = len(ii)
    D = nb.shape[0]
    if K == 0:
        return v, {"converged": True, "iterations": 0, "residual": 0.0}
    pos = np.full(len(cls), -1, dtype=np.int64)
    pos[ii] = np.arange(K)
    policy = np.zeros(K, dtype=np.int64)       # -1: obstacle, d >= 0: average along d
    rows = np.arange(K)
    residual = np.inf
    it = 0
    history = []
    while it < max_iter:
        cand = np.vstack([g[None, :], _averages(v, nb)])
        best = cand.min(axis=0)
        residual = float(np.max(np.abs(v[ii] - best)))
        history.append(residual)
        if residual <= tol:
            break
        cur = cand[policy + 1, rows]
        new = cand.argmin(axis=0) - 1
        keep = cur <= best + 1e-15
        new[keep] = policy[keep]
        if np.array_equal(new, policy):
            break
        policy = new
        v = _solve_policy(v, ii, g, nb, pos, policy)
        it += 1
    return v, {"converged": bool(residual <= tol), "iterations": it,
               "residual": residual, "residual_history": history}


def _solve_policy(v, ii, g, nb, pos, policy):
    K = len(ii)
    free = np.flatnonzero(policy >= 0)
    fixed = policy < 0
    v = v.copy()
    v[ii[fixed]] = g[fixed]
    if len(free) == 0:
        return v
    fpos = np.full(K, -1, dtype=np.int64)
    fpos[free] = np.arange(len(free))
    nbs = nb[policy[free], free]               # (F, 8) flat node indices
    npos = pos[nbs]                            # interior position or -1
    is_free = np.zeros_like(npos, dtype=bool)
    inside = npos >= 0
    is_free[inside] = policy[npos[inside]] >= 0
    rhs = np.zeros(len(free))
    fixed_nb = inside & ~is_free
    rhs += (np.where(fixed_nb, g[np.clip(npos, 0, None)], 0.0)).sum(axis=1) / 8.0
    r = np.repeat(np.arange(len(free)), 8).reshape(-1, 8)[is_free]
    c = fpos[npos[is_free]]
    m = len(free)
    A = sp.identity(m, format="csr") - sp.csr_matrix(
        (np.full(len(r), 1 / 8.0), (r, c)), shape=(m, m))
    x = _linear_solve(A, rhs, v[ii[free]], direct=nb.shape[-1] == 8 and len(nb) == 1)
    v[ii[free]] = x
    return v


def _linear_solve(A, b, x0, direct: bool):
    # planar stencils factor cheaply; 4-D fill-in makes LU impractical
    if direct:
        return spla.spsolve(A.tocsc(), b, permc_spec="COLAMD")
    x, info = spla.bicgstab(A, b, x0=x0, rtol=1e-13, atol=1e-15, maxiter=20_000)
    if info != 0:
        x, info = spla.gmres(A, b, x0=x, rtol=1e-13, atol=1e-15, restart=100, maxiter=200)
    if info != 0:
        log.warning("policy solve did not reach tolerance (info=%s)", info)
    return x


def usc_regularize(field_: GridField, directions=None) -> GridField:
    """Replace each node by the max over itself and its interior stencil neighbours.

    Boundary nodes lie outside the domain and are not part of the limsup.
    """
    grid = field_.grid
    dirs = resolve_directions(grid.dim, directions)
    cls = grid.cls.ravel()
    ii = np.flatnonzero(cls == INTERIOR)
    vals = np.nan_to_num(field_.values.ravel(), nan=0.0)
    nb = _neighbours(grid, ii, dirs)
    out = field_.values.ravel().copy()
    around = np.where(cls[nb] == INTERIOR, vals[nb], -np.inf)
    out[ii] = np.maximum(vals[ii], around.max(axis=(0, 2)))
    meta = dict(field_.meta)
    meta["usc_passes"] = meta.get("usc_passes", 0) + 1
    return GridField(grid, out.reshape(grid.shape), meta)


# --------------------------------------------------------------------------
# evaluation helpers

def interpolate(field_: GridField, x) -> float:
    """Multilinear interpolation; exterior nodes read as 0."""
    grid = field_.grid
    p = as_point(x)
    if p.dim != grid.dim:
        raise DimensionMismatch(grid.dim, p.dim)
    reals = []
    for c in p.coords:
        reals += [c.real, c.imag]
    t = np.array(reals) / grid.h - np.array(grid.lo)
    base = np.floor(t).astype(int)
    frac = t - base
    vals = np.nan_to_num(field_.values, nan=0.0)
    total = 0.0
    for corner in range(2 ** len(t)):
        bits = [(corner >> k) & 1 for k in range(len(t))]
        idx = tuple(int(b + s) for b, s in zip(base, bits))
        if any(i < 0 or i >= n for i, n in zip(idx, grid.shape)):
            continue
        w = float(np.prod([f if s else 1 - f for f, s in zip(frac, bits)]))
        total += w * vals[idx]
    return float(total)


_memo: dict = {}


def _cache_key(domain, A, params: SolverParams, h: float, usc: bool) -> str:
    blob = json.dumps({"domain": domain_to_dict(domain), "set": set_to_dict(A),
                       "h": h, "params": params.to_dict(), "usc": usc},
                      sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def solve_envelope(domain, A: SetExpr, params: SolverParams = SolverParams(),
                   usc: bool = False, cache_dir: str | None = None) -> GridField:
    """Grid, obstacle and envelope in one call; memoized on its inputs.

    With ``cache_dir`` the converged field is also stored as ``<hash>.npz``.
    """
    h = params.resolved_h(domain.dim)
    key = _cache_key(domain, A, params, h, usc)
    if key in _memo:
        return _memo[key]
    path = os.path.join(cache_dir, key + ".npz") if cache_dir else None
    grid = build_grid(domain, h, params.directions, params.node_cap)
    if path and os.path.exists(path):
        data = np.load(path, allow_pickle=False)
        result = GridField(grid, data["values"], json.loads(str(data["meta"])))
    else:
        obstacle = build_obstacle(domain, A, grid)
        result = psh_envelope(obstacle, params.directions, params.tol,
                              params.max_iter, params.method)
        if usc:
            for _ in range(params.usc_passes):
                result = usc_regularize(result, params.directions)
        result.meta["cache_key"] = key
        if path:
            os.makedirs(cache_dir, exist_ok=True)
            meta = {k: v for k, v in result.meta.items() if k != "residual_history"}
            np.savez_compressed(path, values=result.values, meta=json.dumps(meta))
    if len(_memo) > 64:
        _memo.clear()
    _memo[key] = result
    return result


def omega_at(domain, A: SetExpr, x, params: SolverParams = SolverParams(),
             usc: bool = False) -> float:
    """Grid estimate of the relative extremal function at ``x``."""
    p = as_point(x)
    if p.dim != domain.dim:
        raise DimensionMismatch(domain.dim, p.dim)
    if not domain.gauge(p.as_array()[None, :])[0] < 1.0:
        raise OutsideDomain(f"{p.coords} is not interior to the domain")
    f = solve_envelope(domain, A, params, usc=usc)
    return float(np.clip(interpolate(f, p), -1.0, 0.0))


def radial_closed_form(z, r: float, R: float = 1.0) -> np.ndarray:
    """Extremal function of the closed disc of radius ``r`` in the disc of radius ``R``."""
    a = np.abs(np.asarray(z, dtype=complex))
    with np.errstate(divide="ignore"):
        return np.maximum(-1.0, np.log(a / R) / np.log(R / r))
