"""Experiment configuration: a JSON document of nested tagged records.

Precedence, lowest first: built-in defaults, the ``--config`` file, CLI flags.
"""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field

from .envelope import SolverParams
from .errors import ConfigError, PluriError
from .geometry import ComplexPoint, domain_from_dict, set_from_dict

KINDS = ("envelope", "disc-opt", "boundary", "capacity", "verify")
STOCHASTIC = ("disc-opt", "verify", "boundary", "capacity")

SOLVER_DEFAULTS = {"h": None, "tol": 1e-8, "max_iter": 200, "method": "howard", "directions": None}
OPTIMIZER_DEFAULTS = {"degree": 12, "restarts": 20, "budget": 3000, "seed": 0,
                      "samples": 4096, "exact": True, "search_samples": 1024}

_TOP = {"kind", "domain", "sets", "points", "solver", "optimizer", "options", "out"}


@dataclass
class ExperimentConfig:
    kind: str
    domain: dict = field(default_factory=lambda: {"type": "UnitDisc"})
    sets: dict = field(default_factory=dict)
    points: list = field(default_factory=list)
    solver: dict = field(default_factory=lambda: dict(SOLVER_DEFAULTS))
    optimizer: dict = field(default_factory=lambda: dict(OPTIMIZER_DEFAULTS))
    options: dict = field(default_factory=dict)
    out: str = "runs/out"

    # -- parsing ----------------------------------------------------------
    @classmethod
    def from_dict(cls, m: dict) -> "ExperimentConfig":
        if not isinstance(m, dict):
            raise ConfigError("$", "config must be a JSON object")
        extra = set(m) - _TOP
        if extra:
            raise ConfigError(sorted(extra)[0], "unknown field")
        if "kind" not in m:
            raise ConfigError("kind", "missing")
        solver = dict(SOLVER_DEFAULTS)
        solver.update(_obj(m.get("solver", {}), "solver", SOLVER_DEFAULTS))
        opt = dict(OPTIMIZER_DEFAULTS)
        opt.update(_obj(m.get("optimizer", {}), "optimizer", OPTIMIZER_DEFAULTS))
        cfg = cls(kind=m["kind"], domain=copy.deepcopy(m.get("domain", {"type": "UnitDisc"})),
                  sets=copy.deepcopy(m.get("sets", {})), points=copy.deepcopy(m.get("points", [])),
                  solver=solver, optimizer=opt, options=copy.deepcopy(m.get("options", {})),
                  out=m.get("out", "runs/out"))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            try:
                m = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError("$", f"invalid JSON ({exc})") from None
        return cls.from_dict(m)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "domain": self.domain, "sets": self.sets,
                "points": self.points, "solver": self.solver, "optimizer": self.optimizer,
                "options": self.options, "out": self.out}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def hash(self) -> str:
        """sha256 of the canonical JSON form (independent of key order); ``out`` excluded."""
        m = self.to_dict()
        m.pop("out")
        blob = json.dumps(m, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    # -- validation ------------------------------------------------------
    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError("kind", f"must be one of {', '.join(KINDS)}")
        try:
            dom = domain_from_dict(self.domain)
        except (PluriError, KeyError, TypeError, ValueError) as exc:
            raise ConfigError("domain", _msg(exc)) from None
        if not isinstance(self.sets, dict):
            raise ConfigError("sets", "must be an object of named set expressions")
        for name, s in self.sets.items():
            try:
                set_from_dict(s)
            except (PluriError, KeyError, TypeError, ValueError, AttributeError) as exc:
                raise ConfigError(f"sets.{name}", _msg(exc)) from None
        if not isinstance(self.points, list):
            raise ConfigError("points", "must be a list")
        for i, p in enumerate(self.points):
            try:
                pt = parse_point(p)
            except (PluriError, TypeError, ValueError) as exc:
                raise ConfigError(f"points[{i}]", _msg(exc)) from None
            if pt.dim != dom.dim:
                raise ConfigError(f"points[{i}]", f"dimension {pt.dim} != domain dimension {dom.dim}")
        s = self.solver
        if s["h"] is not None and not _num(s["h"]) > 0:
            raise ConfigError("solver.h", "must be positive")
        if not _num(s["tol"]) > 0:
            raise ConfigError("solver.tol", "must be positive")
        if not isinstance(s["max_iter"], int) or s["max_iter"] < 1:
            raise ConfigError("solver.max_iter", "must be a positive integer")
        if s["method"] not in ("howard", "relax"):
            raise ConfigError("solver.method", "must be 'howard' or 'relax'")
        o = self.optimizer
        for key, lo in (("degree", 1), ("restarts", 0), ("budget", 1), ("samples", 64),
                        ("search_samples", 64)):
            if not isinstance(o[key], int) or o[key] < lo:
                raise ConfigError(f"optimizer.{key}", f"must be an integer >= {lo}")
        if self.kind in STOCHASTIC and not isinstance(o.get("seed"), int):
            raise ConfigError("optimizer.seed", "an integer seed is required")
        for key, v in self.options.items():
            if (key.endswith("tol") or key.endswith("_h")) and not _num(v) > 0:
                raise ConfigError(f"options.{key}", "must be positive")

    # -- derived objects ---------------------------------------------------
    def domain_obj(self):
        return domain_from_dict(self.domain)

    def set_obj(self, name: str):
        if name not in self.sets:
            raise ConfigError(f"sets.{name}", "missing")
        return set_from_dict(self.sets[name])

    def point_objs(self) -> list:
        return [parse_point(p) for p in self.points]

    def solver_params(self) -> SolverParams:
        s = self.solver
        dirs = tuple(s["directions"]) if s.get("directions") else None
        return SolverParams(h=s["h"], tol=float(s["tol"]), max_iter=int(s["max_iter"]),
                            method=s["method"], directions=dirs)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        """Apply CLI-style overrides (``None`` values are ignored) and re-validate."""
        m = copy.deepcopy(self.to_dict())
        table = {"seed": ("optimizer", "seed"), "grid_h": ("solver", "h"),
                 "degree": ("optimizer", "degree"), "restarts": ("optimizer", "restarts"),
                 "samples": ("optimizer", "samples"), "tol": ("solver", "tol")}
        for key, v in kw.items():
            if v is None:
                continue
            if key == "out":
                m["out"] = v
            elif key == "kind":
                m["kind"] = v
            else:
                sec, name = table[key]
                m[sec][name] = v
        return ExperimentConfig.from_dict(m)


def parse_point(p) -> ComplexPoint:
    """``0.7``, ``[re, im]`` or a list of ``[re, im]`` pairs."""
    if isinstance(p, bool):
        raise TypeError("booleans are not points")
    if isinstance(p, (int, float)):
        return ComplexPoint((complex(p),))
    if isinstance(p, list) and len(p) == 2 and all(isinstance(x, (int, float)) for x in p):
        return ComplexPoint((complex(p[0], p[1]),))
    if isinstance(p, list) and p:
        return ComplexPoint(tuple(complex(*c) if isinstance(c, list) else complex(c) for c in p))
    raise TypeError(f"cannot read point {p!r}")


def point_to_json(p: ComplexPoint) -> list:
    return [[c.real, c.imag] for c in p.coords]


def _obj(v, path, defaults):
    if not isinstance(v, dict):
        raise ConfigError(path, "must be an object")
    for k in v:
        if k not in defaults:
            raise ConfigError(f"{path}.{k}", "unknown field")
    return v


def _num(v) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        return float("nan")
    return float(v)


def _msg(exc) -> str:
    return str(exc) or type(exc).__name__
