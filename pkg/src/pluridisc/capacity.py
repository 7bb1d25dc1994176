"""Capacity ``c(A) = -integral of omega*(., A, X)`` against normalized Lebesgue measure."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .discs import AnalyticDisc, optimize_discs, sigma_f
from .envelope import INTERIOR, GridSpec, SolverParams, build_grid, solve_envelope
from .geometry import Box, ClosedDisc, Disc, FinitePoints, UnitDisc, set_to_dict
from .rng import generator


@dataclass
class ChartMeasure:
    """Uniform weights on the interior nodes of a grid (a single chart)."""
    grid: GridSpec
    weights: np.ndarray

    @classmethod
    def on(cls, domain, params: SolverParams = SolverParams()):
        grid = build_grid(domain, params.resolved_h(domain.dim), params.directions, params.node_cap)
        mask = grid.cls == INTERIOR
        w = np.where(mask, 1.0 / np.count_nonzero(mask), 0.0)
        return cls(grid, w)

    @property
    def total(self) -> float:
        return float(np.sum(self.weights))

    @property
    def max_weight(self) -> float:
        return float(np.max(self.weights))

    def integrate(self, values: np.ndarray) -> float:
        mask = self.weights > 0
        return float(np.sum(self.weights[mask] * values[mask]))


@dataclass
class CapacityReport:
    set: dict
    value: float
    meta: dict
    ledger: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"set": self.set, "value": self.value, "meta": self.meta, "ledger": self.ledger}


def capacity(A, domain=UnitDisc(), params: SolverParams = SolverParams()) -> CapacityReport:
    """``c(A)`` from the once-regularized grid envelope; non-convergence is carried in ``meta``."""
    mu = ChartMeasure.on(domain, params)
    env = solve_envelope(domain, A, params, usc=True)
    value = min(max(-mu.integrate(env.values), 0.0), 1.0)
    meta = {"h": mu.grid.h, "tol": params.tol, "nodes": int(np.count_nonzero(mu.weights)),
            "converged": env.meta.get("converged"), "iterations": env.meta.get("iterations"),
            "usc_passes": env.meta.get("usc_passes", 0), "method": env.meta.get("method")}
    return CapacityReport(set_to_dict(A), value, meta)


def disc_capacity_closed_form(r: float, R: float = 1.0) -> float:
    """Capacity of the closed disc of radius ``r`` in the concentric disc of radius ``R``."""
    L = np.log(R / r)
    return float((1 - (r / R) ** 2) / (2 * L))


def default_families(h: float) -> list[tuple[str, list]]:
    """Five nested families; limit families end below the grid spacing."""
    gaps = [2.0 ** -k for k in range(2, 12) if 2.0 ** -k >= h / 8]
    return [
        ("discs", [ClosedDisc(0, r) for r in (0.1, 0.2, 0.3, 0.4, 0.5)]),
        ("boxes", [Box(-s - 0.1j * s, s + 0.1j * s) for s in (0.1, 0.2, 0.3, 0.4)]),
        ("points", [FinitePoints([0.3 * np.exp(2j * np.pi * k / 5) for k in range(m)])
                    for m in range(1, 6)]),
        ("decreasing", [ClosedDisc(0, 0.25 + g) for g in gaps] + [ClosedDisc(0, 0.25)]),
        ("increasing", [ClosedDisc(0, 0.25 - g) for g in gaps] + [ClosedDisc(0, 0.25)]),
    ]


def axiom_suite(families=None, domain=UnitDisc(), params: SolverParams = SolverParams(),
                limit_tol: float = 0.02) -> dict:
    """Monotonicity on every family and limit continuity on the decreasing/increasing ones.

    A family is ``(name, sets)`` with sets nested in list order (increasing,
    except a family named ``decreasing``), its limit set last.  Limits are
    only asserted for members whose radius gap is below the grid spacing,
    measured as relative error ``|c_j - c| / c``.
    """
    h = params.resolved_h(domain.dim)
    families = families if families is not None else default_families(h)
    ledger = []
    for name, sets in families:
        vals = [capacity(A, domain, params).value for A in sets]
        if name == "decreasing":
            mono = all(a <= b for a, b in zip(vals[1:], vals[:-1]))
        else:
            mono = all(a <= b for a, b in zip(vals[:-1], vals[1:]))
        ledger.append({"family": name, "check": "monotone", "values": vals, "passed": mono})
        if name in ("decreasing", "increasing"):
            limit = vals[-1]
            radii = [A.radius for A in sets]
            close = [v for v, r in zip(vals[:-1], radii[:-1]) if abs(r - radii[-1]) < h]
            err = max((abs(v - limit) / limit for v in close), default=float("nan"))
            ledger.append({"family": name, "check": "limit", "limit": limit, "relerr": err,
                           "members_below_h": len(close),
                           "passed": bool(close) and err <= limit_tol})
    return {"h": h, "ledger": ledger, "passed": all(e["passed"] for e in ledger)}


def write_ledger_csv(ledger: list, path) -> None:
    cols = ["family", "check", "passed", "relerr", "limit", "values"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for e in ledger:
            w.writerow([e.get(c, "") if c != "values" else " ".join(repr(v) for v in e.get(c, []))
                        for c in cols])


def random_feasible_disc(x, degree: int, gen, X=UnitDisc()) -> AnalyticDisc:
    """Random polynomial disc centred at ``x``, scaled into ``X`` with a margin."""
    x = complex(x)
    c = (gen.standard_normal(degree) + 1j * gen.standard_normal(degree)) / np.arange(1, degree + 1)
    f = AnalyticDisc(np.concatenate([[x], c])[None, :])
    theta = 2 * np.pi * (np.arange(4096) + 0.5) / 4096
    tail = f.boundary_values(theta)[:, 0] - x
    room = (1 - abs(x)) if isinstance(X, UnitDisc) else X.radius - abs(x - X.center)
    scale = gen.uniform(0.2, 0.99) * room / max(np.max(np.abs(tail)), 1e-300)
    return AnalyticDisc(np.concatenate([[x], c * scale])[None, :])


def polar_disc_test(E=None, x=0.7, batch: int = 100, seed: int = 0,
                    params: SolverParams = SolverParams(), js=range(2, 9),
                    ratio_tol: float = 0.10, radii=(1.0, 2.0, 4.0),
                    A=ClosedDisc(0, 0.5), degree: int = 12, restarts: int = 2,
                    budget: int = 800) -> dict:
    """(a) finite sets are invisible to discs; (b) capacity of shrinking discs decays like 1/j;
    (c) the best disc value for ``A`` is non-decreasing along an exhaustion by discs."""
    E = E if E is not None else FinitePoints([0.3, -0.2 + 0.4j, 0.5j, 0.1 - 0.6j])
    gen = generator(seed, 35)
    sig = []
    for i in range(batch):
        centre = 0.8 * np.sqrt(gen.random()) * np.exp(2j * np.pi * gen.random())
        f = random_feasible_disc(centre, 1 + i % 12, gen)
        sig.append(sigma_f(f, E, exact=True, domain=UnitDisc()))
    part_a = {"batch": batch, "max_sigma": max(sig), "passed": max(sig) == 0.0}

    caps = [(j, capacity(ClosedDisc(0, 2.0 ** -j), UnitDisc(), params).value) for j in js]
    ratios = []
    for (j, c0), (_, c1) in zip(caps, caps[1:]):
        expect = j / (j + 1)
        ratios.append({"j": j, "ratio": c1 / c0, "expected": expect,
                       "relerr": abs(c1 / c0 - expect) / expect})
    part_b = {"capacities": caps, "ratios": ratios,
              "passed": all(r["relerr"] <= ratio_tol for r in ratios)}

    best, init, rows = [], [], []
    for n, R in enumerate(radii):
        X = UnitDisc() if R == 1.0 else Disc(0j, R)
        res = optimize_discs(X, A, x, degree=degree, restarts=restarts, budget=budget,
                             seed=seed, stream=100 + n, init=init)
        best.append(res.sigma)
        init = [res.disc]
        rows.append({"R": R, "sigma": res.sigma})
    part_c = {"rows": rows, "passed": all(a <= b for a, b in zip(best, best[1:]))}
    return {"finite": part_a, "shrinking": part_b, "exhaustion": part_c,
            "passed": part_a["passed"] and part_b["passed"] and part_c["passed"]}
