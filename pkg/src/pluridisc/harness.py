"""Experiment runner, result records and the summary report."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction

import numpy as np

from . import boundary as bd
from . import suites
from .capacity import capacity
from .config import ExperimentConfig, point_to_json
from .discs import feasible, optimize_discs
from .envelope import INTERIOR, interpolate, solve_envelope
from .errors import ConfigError

log = logging.getLogger(__name__)

SUMMARY_COLUMNS = ["row", "checks", "failed", "status"]


def software_version() -> str:
    try:
        from importlib.metadata import version
        return version("artifact")
    except Exception:  # pragma: no cover - not installed
        return "0+unknown"


def plain(obj):
    """Convert numpy scalars, complex numbers and Fractions to JSON values."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    return obj


def canonical(obj) -> str:
    return json.dumps(plain(obj), sort_keys=True, separators=(",", ":"))


@dataclass
class ResultRecord:
    config_hash: str
    kind: str
    started: str
    finished: str
    outputs: dict
    ledger: list
    version: str = field(default_factory=software_version)

    @property
    def failures(self) -> list:
        return [e for e in self.ledger if not e.get("passed", False)]

    def payload(self) -> dict:
        """The deterministic part of the record (no timestamps or version)."""
        return {"config_hash": self.config_hash, "kind": self.kind,
                "outputs": plain(self.outputs), "ledger": plain(self.ledger)}

    def to_dict(self) -> dict:
        return {"config_hash": self.config_hash, "kind": self.kind, "started": self.started,
                "finished": self.finished, "version": self.version,
                "outputs": plain(self.outputs), "ledger": plain(self.ledger)}

    @classmethod
    def from_dict(cls, m: dict) -> "ResultRecord":
        return cls(m["config_hash"], m.get("kind", ""), m.get("started", ""),
                   m.get("finished", ""), m.get("outputs", {}), m.get("ledger", []),
                   m.get("version", ""))


class Sink:
    """Writes per-run artifacts below one directory (single writer)."""

    def __init__(self, root):
        self.root = root
        for sub in ("fields", "discs"):
            os.makedirs(os.path.join(root, sub), exist_ok=True)

    def path(self, sub, name):
        return os.path.join(self.root, sub, name)

    def field(self, name, fld):
        fld.to_csv(self.path("fields", name + ".csv"))

    def profile(self, name, fld, r):
        """Envelope along the positive real axis next to the radial closed form."""
        pts = fld.grid.points()[:, 0]
        keep = (fld.grid.cls.ravel() == INTERIOR) & (np.abs(pts.imag) < 1e-12) & (pts.real >= 0)
        xs = np.sort(pts[keep].real)
        with open(self.path("fields", name + ".csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "envelope", "closed_form"])
            for x in xs:
                cf = max(-1.0, math.log(x) / math.log(1 / r)) if x > 0 else -1.0
                w.writerow([repr(float(x)), repr(interpolate(fld, x)), repr(cf)])

    def disc(self, name, res):
        with open(self.path("discs", name + ".json"), "w") as fh:
            json.dump(plain(res.to_dict()), fh, indent=1, sort_keys=True)

    def ledger_csv(self, name, rows):
        from .capacity import write_ledger_csv
        write_ledger_csv(rows, self.path("fields", name))


# --------------------------------------------------------------------------
# experiment kinds

def _run_envelope(cfg, sink):
    X, params = cfg.domain_obj(), cfg.solver_params()
    out, ledger = {"sets": {}}, []
    for name in sorted(cfg.sets):
        A = cfg.set_obj(name)
        fld = solve_envelope(X, A, params)
        sink.field(f"envelope_{name}", fld)
        vals = fld.interior_values()
        pts = [{"x": point_to_json(p), "omega": interpolate(fld, p)} for p in cfg.point_objs()]
        meta = {k: fld.meta[k] for k in ("converged", "iterations", "residual", "directions")}
        out["sets"][name] = {"min": float(vals.min()) if vals.size else 0.0,
                             "max": float(vals.max()) if vals.size else 0.0,
                             "points": pts, "meta": meta, "h": fld.grid.h}
        ledger.append(suites.entry("envelope", f"{name}-sandwich", None, None,
                                   vals.size == 0 or (vals.min() >= -1 and vals.max() <= 0)))
        ledger.append(suites.entry("envelope", f"{name}-converged", meta["residual"], cfg.solver["tol"],
                                   meta["converged"]))
    return out, ledger


def _run_disc_opt(cfg, sink):
    X, o = cfg.domain_obj(), cfg.optimizer
    out, ledger = {"sets": {}}, []
    for name in sorted(cfg.sets):
        A = cfg.set_obj(name)
        rows = []
        for i, p in enumerate(cfg.point_objs()):
            res = optimize_discs(X, A, p, degree=o["degree"], restarts=o["restarts"],
                                 budget=o["budget"], seed=o["seed"], M=o["samples"],
                                 exact=o["exact"], search_samples=o["search_samples"], stream=i)
            sink.disc(f"{name}_{i}", res)
            ok, margin = feasible(res.disc, X, o["samples"])
            rows.append({"x": point_to_json(p), "sigma": res.sigma, "omega_upper": res.omega_upper,
                         "margin": margin})
            ledger.append(suites.entry("disc-opt", f"{name}-{i}-feasible", margin, 0.0, ok))
        out["sets"][name] = rows
    return out, ledger


def _run_boundary(cfg, sink):
    out, ledger = {"sets": {}}, []
    for name in sorted(cfg.sets):
        U = cfg.set_obj(name)
        rows = []
        for i, p in enumerate(cfg.point_objs()):
            z = p.coords[0]
            pv = bd.poisson(z, U)
            lim = bd.omega_boundary(U, z)
            sig = bd.blaschke_sigma(bd.mobius(z), U)
            rows.append({"x": point_to_json(p), "poisson": pv, "omega": lim.value,
                         "omega_gap": lim.gap, "sigma_mobius": sig})
            ledger.append(suites.entry("boundary", f"{name}-{i}-equality", abs(pv + sig), 1e-9,
                                       abs(pv + sig) <= 1e-9))
        probe = bd.weak_regularity_probe(U, rays=8, trace_path=sink.path("fields", f"rays_{name}.csv"))
        out["sets"][name] = {"points": rows, "weak_regularity": probe}
    return out, ledger


def _run_capacity(cfg, sink):
    X, params = cfg.domain_obj(), cfg.solver_params()
    out, ledger = {"sets": {}}, []
    for name in sorted(cfg.sets):
        rep = capacity(cfg.set_obj(name), X, params)
        out["sets"][name] = rep.to_dict()
        ledger.append(suites.entry("capacity", f"{name}-range", rep.value, None, 0 <= rep.value <= 1))
        ledger.append(suites.entry("capacity", f"{name}-converged", None, None,
                                   bool(rep.meta["converged"])))
    return out, ledger


def _run_verify(cfg, sink):
    opts = suites.options(cfg)
    out, ledger = {}, []
    for row in opts["suites"]:
        if row not in suites.SUITES:
            raise ConfigError("options.suites", f"unknown suite {row!r}")
        log.info("verify: %s", row)
        o, l = suites.SUITES[row](cfg, opts, sink)
        out[row] = o
        ledger += l
    return out, ledger


RUNNERS = {"envelope": _run_envelope, "disc-opt": _run_disc_opt, "boundary": _run_boundary,
           "capacity": _run_capacity, "verify": _run_verify}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def run(cfg: ExperimentConfig) -> ResultRecord:
    """Execute ``cfg`` and write config.json, results.json, payload.json and artifacts to ``cfg.out``."""
    cfg.validate()
    os.makedirs(cfg.out, exist_ok=True)
    with open(os.path.join(cfg.out, "config.json"), "w", encoding="utf-8") as fh:
        fh.write(cfg.dumps())
    sink = Sink(cfg.out)
    started = _now()
    outputs, ledger = RUNNERS[cfg.kind](cfg, sink)
    rec = ResultRecord(cfg.hash(), cfg.kind, started, _now(), plain(outputs), plain(ledger))
    with open(os.path.join(cfg.out, "results.json"), "w", encoding="utf-8") as fh:
        json.dump(rec.to_dict(), fh, indent=1, sort_keys=True)
    with open(os.path.join(cfg.out, "payload.json"), "w", encoding="utf-8") as fh:
        fh.write(canonical(rec.payload()))
    return rec


def payload_digest(run_dir) -> str:
    with open(os.path.join(run_dir, "payload.json"), "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


# --------------------------------------------------------------------------
# report

@dataclass
class Summary:
    rows: list
    flagged: bool
    missing: list
    records: int

    @property
    def failed(self) -> bool:
        return any(r["failed"] for r in self.rows)

    def text(self) -> str:
        lines = [f"{'row':<26} {'checks':>6} {'failed':>6}  status"]
        for r in self.rows:
            lines.append(f"{r['row']:<26} {r['checks']:>6} {r['failed']:>6}  {r['status']}")
        if self.flagged:
            what = ", ".join(self.missing) if self.missing else "no records"
            lines.append(f"PARTIAL: missing {what}")
        return "\n".join(lines)


def _records(result_dir):
    for dirpath, _, files in sorted(os.walk(result_dir)):
        if "results.json" in files:
            with open(os.path.join(dirpath, "results.json"), encoding="utf-8") as fh:
                yield ResultRecord.from_dict(json.load(fh))


def report(result_dir, write: bool = True) -> Summary:
    """Aggregate every ``results.json`` below ``result_dir`` into one row per ledger row id."""
    by_row: dict = {}
    n = 0
    for rec in _records(result_dir):
        n += 1
        for e in rec.ledger:
            by_row.setdefault(e.get("row", rec.kind), []).append(e)
    order = [r for r in suites.ROWS if r in by_row] + sorted(r for r in by_row if r not in suites.ROWS)
    rows = []
    for r in order:
        fails = sum(not e.get("passed", False) for e in by_row[r])
        rows.append({"row": r, "checks": len(by_row[r]), "failed": fails,
                     "status": "pass" if fails == 0 else "fail"})
    missing = [r for r in suites.ROWS if r not in by_row] if any(
        r in suites.ROWS for r in by_row) else []
    summary = Summary(rows, n == 0 or bool(missing), missing, n)
    if write and os.path.isdir(result_dir):
        with open(os.path.join(result_dir, "summary.csv"), "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=SUMMARY_COLUMNS)
            w.writeheader()
            w.writerows(rows)
        with open(os.path.join(result_dir, "summary.txt"), "w") as fh:
            fh.write(summary.text() + "\n")
    return summary
