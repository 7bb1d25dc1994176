"""Verification suites run by ``verify``; each returns outputs and ledger entries."""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from . import arcs as _arcs
from . import boundary as bd
from .capacity import (axiom_suite, capacity, disc_capacity_closed_form, polar_disc_test,
                       random_feasible_disc)
from .discs import optimize_discs, sigma_f, verify_closed_bound
from .envelope import INTERIOR, SolverParams, omega_at, radial_closed_form, solve_envelope
from .geometry import (Box, CantorIterate, ClosedDisc, OpenDisc, TorusSet, UnitDisc, Union,
                       torus_measure)
from .rng import generator
from .twist import (BivariateDisc, GluingSpec, choose_theta, glue, min_twist, radial_twist,
                    twist_preimage_measure)

ROWS = ("poletsky-open", "closed-pluriregular", "borel-upper-bound", "choquet-axioms",
        "pluripolar-discs", "boundary-open-equality", "boundary-borel-sandwich")

PROBES = [0.25, 0.55, 0.6, 0.65, 0.7, [0, 0.75], 0.8, 0.9, [-0.6, 0.3], [-0.45, -0.55]]

DEFAULTS = {
    "suites": list(ROWS), "probes": PROBES, "probe_restarts": 2, "probe_budget": 800,
    "radial_tol": 0.02, "open_floor": 0.46, "open_x": 0.7, "lower_tol": 0.03,
    "closed_tol": 0.08, "borel_tol": 0.02, "random_discs": 20,
    "torus_sets": 20, "theta_grid": 1024, "glue_truncation": 64, "glue_tol": 0.05,
    "axiom_h": None, "capacity_tol": 0.02, "polar_batch": 100, "ratio_tol": 0.10,
    "pairs": 10, "equality_tol": 1e-9, "center_tol": 1e-12, "cantor_levels": 12,
    "cantor_tol": 1e-9, "ray_j": 20, "witness_terms": 2000,
}


def options(cfg) -> dict:
    out = dict(DEFAULTS)
    out.update(cfg.options)
    return out


def entry(row, check, value, threshold, passed, **extra) -> dict:
    e = {"row": row, "check": check, "value": value, "threshold": threshold,
         "passed": bool(passed)}
    e.update(extra)
    return e


def _pt(p) -> complex:
    return complex(p[0], p[1]) if isinstance(p, list) else complex(p)


# --------------------------------------------------------------------------

def poletsky_open(cfg, opts, sink):
    row = "poletsky-open"
    params = cfg.solver_params()
    X, r = UnitDisc(), 0.5
    env = solve_envelope(X, ClosedDisc(0, r), params)
    pts = env.grid.points()[:, 0]
    mask = (env.grid.cls.ravel() == INTERIOR) & (np.abs(pts) >= 0.55) & (np.abs(pts) <= 0.95)
    err = float(np.max(np.abs(env.values.ravel()[mask] - radial_closed_form(pts[mask], r))))
    sink.profile("radial_profile", env, r)
    o = cfg.optimizer
    A = OpenDisc(0, r)
    x = opts["open_x"]
    res = optimize_discs(X, A, x, degree=o["degree"], restarts=o["restarts"], budget=o["budget"],
                         seed=o["seed"], M=o["samples"], exact=o["exact"],
                         search_samples=o["search_samples"], stream=0)
    sink.disc("open_disc_x0.7", res)
    ledger = [
        entry(row, "radial-closed-form-sup-error", err, opts["radial_tol"], err <= opts["radial_tol"]),
        entry(row, "open-disc-sigma-floor", res.sigma, opts["open_floor"],
              res.sigma >= opts["open_floor"], degree=o["degree"], restarts=o["restarts"]),
    ]
    lower = []
    for i, p in enumerate(opts["probes"]):
        z = _pt(p)
        est = omega_at(X, A, z, params)
        r_i = optimize_discs(X, A, z, degree=o["degree"], restarts=opts["probe_restarts"],
                             budget=opts["probe_budget"], seed=o["seed"], M=o["samples"],
                             exact=o["exact"], search_samples=o["search_samples"], stream=1 + i)
        ok = r_i.omega_upper >= est - opts["lower_tol"]
        lower.append({"x": [z.real, z.imag], "omega_est": est, "omega_upper": r_i.omega_upper})
        ledger.append(entry(row, f"inequality-probe-{i}", r_i.omega_upper - est,
                            -opts["lower_tol"], ok))
    out = {"radial_sup_error": err, "open_sigma": res.sigma, "open_omega_upper": res.omega_upper,
           "omega_closed_form": float(radial_closed_form(x, r)), "probes": lower,
           "envelope_meta": {k: env.meta[k] for k in ("converged", "iterations", "residual")}}
    return out, ledger


def closed_pluriregular(cfg, opts, sink):
    row = "closed-pluriregular"
    o = cfg.optimizer
    rep = verify_closed_bound(UnitDisc(), ClosedDisc(0, 0.5), [_pt(p) for p in opts["probes"]],
                      cfg.solver_params(), tol=opts["closed_tol"], lower_tol=opts["lower_tol"],
                      degree=o["degree"], restarts=opts["probe_restarts"],
                      budget=opts["probe_budget"], seed=o["seed"], M=o["samples"])
    ledger = [entry(row, f"upper-probe-{i}", r["omega_upper"] - r["omega_est"],
                    opts["closed_tol"], r["upper_ok"]) for i, r in enumerate(rep["rows"])]
    return rep, ledger


def random_torus_set(gen, max_rects: int = 3) -> TorusSet:
    rects = []
    for _ in range(int(gen.integers(1, max_rects + 1))):
        a, b = sorted(Fraction(int(v), 1000) for v in gen.integers(0, 1001, 2))
        c, d = sorted(Fraction(int(v), 1000) for v in gen.integers(0, 1001, 2))
        if b > a and d > c:
            rects.append(((a, b), (c, d)))
    return TorusSet(tuple(rects))


def borel_upper_bound(cfg, opts, sink):
    row = "borel-upper-bound"
    params = cfg.solver_params()
    X = UnitDisc()
    B = Union((Box(0.1 - 0.2j, 0.4 + 0.2j), ClosedDisc(-0.3, 0.15)))
    gen = generator(cfg.optimizer["seed"], 31)
    worst = -np.inf
    for p in (0.7, 0.5j, -0.6 - 0.2j, 0.2 + 0.6j):
        est = omega_at(X, B, p, params)
        for i in range(opts["random_discs"]):
            f = random_feasible_disc(p, 1 + i % 8, gen)
            worst = max(worst, est + sigma_f(f, B, exact=True))
    ledger = [entry(row, "fundamental-inequality", float(worst), opts["borel_tol"],
                    worst <= opts["borel_tol"])]

    gen = generator(cfg.optimizer["seed"], 22)
    T = opts["theta_grid"]
    mean_err, max_short, preserve = 0.0, -np.inf, True
    for _ in range(opts["torus_sets"]):
        C = random_torus_set(gen)
        k = int(gen.integers(1, 9))
        ch = choose_theta(C, k, T)
        mean_err = max(mean_err, abs(ch.grid_mean - float(ch.target)))
        max_short = max(max_short, ch.slack)
        preserve &= twist_preimage_measure(C, k) == torus_measure(C)
    ledger += [
        entry(row, "theta-grid-mean", mean_err, 1 / T, mean_err <= 1 / T),
        entry(row, "theta-max-shortfall", float(max_short), 1e-6, max_short <= 1e-6),
        entry(row, "twist-measure-preserving", float(preserve), 1.0, preserve),
    ]

    h = random_feasible_disc(0.3, 4, generator(cfg.optimizer["seed"], 23))
    spec = GluingSpec(h, [((Fraction(0), Fraction(3, 10)), BivariateDisc.from_slice(h, 0.2)),
                          ((Fraction(1, 2), Fraction(4, 5)), BivariateDisc.from_slice(h, -0.15j))],
                      truncation=opts["glue_truncation"], tol=opts["glue_tol"])
    g = glue(spec)
    k = min_twist(g.disc)
    twisted = radial_twist(g.disc, k, 0.0)
    ledger += [
        entry(row, "glue-residual", g.relative_residual, opts["glue_tol"], g.ok),
        entry(row, "twist-center", abs(twisted.center[0] - h.center[0]), 0.0,
              twisted.center[0] == h.center[0]),
    ]
    out = {"fundamental_worst": float(worst), "theta_mean_error": mean_err,
           "theta_shortfall": float(max_short), "glue_residual": g.residual,
           "glue_scale": g.scale, "twist_k": k, "twist_degree": twisted.degree}
    return out, ledger


def choquet_axioms(cfg, opts, sink):
    row = "choquet-axioms"
    params = cfg.solver_params()
    if opts["axiom_h"]:
        params = SolverParams(h=opts["axiom_h"], tol=params.tol, max_iter=params.max_iter,
                              method=params.method, directions=params.directions)
    rep = axiom_suite(domain=UnitDisc(), params=params)
    sink.ledger_csv("axioms.csv", rep["ledger"])
    ledger = [entry(row, f"{e['family']}-{e['check']}", e.get("relerr"),
                    0.02 if e["check"] == "limit" else None, e["passed"]) for e in rep["ledger"]]
    c = capacity(ClosedDisc(0, 0.5), UnitDisc(), cfg.solver_params()).value
    ref = disc_capacity_closed_form(0.5)
    ledger.append(entry(row, "closed-disc-capacity", abs(c - ref), opts["capacity_tol"],
                        abs(c - ref) <= opts["capacity_tol"]))
    rep["closed_disc"] = {"value": c, "closed_form": ref}
    return rep, ledger


def pluripolar_discs(cfg, opts, sink):
    row = "pluripolar-discs"
    o = cfg.optimizer
    rep = polar_disc_test(seed=o["seed"], params=cfg.solver_params(), batch=opts["polar_batch"],
                          ratio_tol=opts["ratio_tol"], degree=o["degree"],
                          restarts=opts["probe_restarts"], budget=opts["probe_budget"])
    worst = max(r["relerr"] for r in rep["shrinking"]["ratios"])
    ledger = [
        entry(row, "finite-set-sigma", rep["finite"]["max_sigma"], 0.0, rep["finite"]["passed"]),
        entry(row, "shrinking-capacity-ratio", worst, opts["ratio_tol"], rep["shrinking"]["passed"]),
        entry(row, "exhaustion-monotone", rep["exhaustion"]["rows"][-1]["sigma"], None,
              rep["exhaustion"]["passed"]),
    ]
    return rep, ledger


def random_open_arcs(gen, count: int) -> list:
    pts = sorted(Fraction(int(v), 4096) for v in gen.choice(4096, 2 * count, replace=False))
    return [(pts[2 * i], pts[2 * i + 1]) for i in range(count)]


def boundary_open_equality(cfg, opts, sink):
    row = "boundary-open-equality"
    gen = generator(cfg.optimizer["seed"], 43)
    pairs, ledger = [], []
    for i in range(opts["pairs"]):
        U = random_open_arcs(gen, int(gen.integers(1, 4)))
        x = 0.9 * math.sqrt(gen.random()) * complex(np.exp(2j * np.pi * gen.random()))
        rep = bd.verify_boundary_equality(x, U, seed=cfg.optimizer["seed"] + i, tol=opts["equality_tol"])
        center = abs(bd.poisson(0, U) + float(_arcs.measure(U)))
        pairs.append({"U": [[str(a), str(b)] for a, b in U], **rep, "center_error": center})
        ledger.append(entry(row, f"mobius-equality-{i}", rep["equality_gap"], opts["equality_tol"],
                            rep["equality_gap"] <= opts["equality_tol"]))
        ledger.append(entry(row, f"blaschke-search-{i}", rep["excess"], opts["equality_tol"],
                            rep["excess"] <= opts["equality_tol"]))
        ledger.append(entry(row, f"center-identity-{i}", center, opts["center_tol"],
                            center <= opts["center_tol"]))
    mono = [bd.verify_monotone_union(0, bd.growing_arc_family(200)),
            bd.verify_monotone_union(0.3 + 0.2j, bd.cantor_gap_family(12))]
    for j, m in enumerate(mono):
        ledger.append(entry(row, f"monotone-union-{j}", m["gap"], 1e-6, m["passed"]))
    return {"pairs": pairs, "monotone": mono}, ledger


def boundary_borel_sandwich(cfg, opts, sink):
    row = "boundary-borel-sandwich"
    ledger, cantor = [], []
    for m in range(1, opts["cantor_levels"] + 1):
        v = bd.poisson(0, CantorIterate(m))
        err = abs(abs(v) - (2 / 3) ** m)
        cantor.append({"level": m, "value": v, "error": err})
        ledger.append(entry(row, f"cantor-level-{m}", err, opts["cantor_tol"],
                            err <= opts["cantor_tol"]))
    decay = all(abs(a["value"]) > abs(b["value"]) for a, b in zip(cantor, cantor[1:]))
    ledger.append(entry(row, "cantor-decay", abs(cantor[-1]["value"]), None, decay))

    U = [(Fraction(0), Fraction(1, 2))]
    probe = bd.weak_regularity_probe(U, rays=[0.25, 0.1, 0.4, 0.75, 0.0], j_max=opts["ray_j"],
                                     trace_path=sink.path("fields", "weak_regularity.csv"))
    ledger.append(entry(row, "weak-regularity", probe["worst_excess"], 1e-3, probe["passed"]))

    wit = bd.verify_polar_witness([0.0, Fraction(3, 8)], 0j, opts["witness_terms"])
    ledger.append(entry(row, "polar-witness", max(wit["ray_values"]), -1000.0, wit["passed"],
                        u_x0=wit["u_x0"]))
    sand = []
    for i, x in enumerate((0j, 0.4j, -0.5 + 0.1j)):
        s = bd.verify_sandwich(x, [(Fraction(0), Fraction(1, 4)), (Fraction(1, 2), Fraction(5, 8))],
                               [0.8, 0.9])
        sand.append(s)
        ledger.append(entry(row, f"sandwich-{i}", s["omega"] + s["sigma"], 1e-9, s["passed"]))
    return {"cantor": cantor, "weak_regularity": probe, "witness": wit, "sandwich": sand}, ledger


SUITES = {
    "poletsky-open": poletsky_open,
    "closed-pluriregular": closed_pluriregular,
    "borel-upper-bound": borel_upper_bound,
    "choquet-axioms": choquet_axioms,
    "pluripolar-discs": pluripolar_discs,
    "boundary-open-equality": boundary_open_equality,
    "boundary-borel-sandwich": boundary_borel_sandwich,
}
