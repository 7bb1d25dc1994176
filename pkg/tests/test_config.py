import json

import pytest

from pluridisc.config import ExperimentConfig, parse_point, point_to_json
from pluridisc.errors import ConfigError
from pluridisc.geometry import ClosedDisc, UnitDisc

BASE = {"kind": "envelope", "sets": {"A": {"type": "ClosedDisc", "center": [0, 0], "radius": 0.5}},
        "points": [0.7, [0, 0.5]], "solver": {"h": 0.03125}}


def test_roundtrip(tmp_path):
    cfg = ExperimentConfig.from_dict(BASE)
    path = tmp_path / "c.json"
    path.write_text(cfg.dumps())
    back = ExperimentConfig.load(path)
    assert back.to_dict() == cfg.to_dict()
    assert back.hash() == cfg.hash()


def test_hash_ignores_key_order_and_out():
    a = ExperimentConfig.from_dict(BASE)
    b = ExperimentConfig.from_dict(json.loads(json.dumps(dict(reversed(list(BASE.items()))))))
    c = ExperimentConfig.from_dict({**BASE, "out": "elsewhere"})
    assert a.hash() == b.hash() == c.hash()
    d = ExperimentConfig.from_dict({**BASE, "solver": {"h": 0.0625}})
    assert d.hash() != a.hash()


def test_defaults_filled():
    cfg = ExperimentConfig.from_dict({"kind": "verify"})
    assert cfg.solver["tol"] == 1e-8 and cfg.optimizer["restarts"] == 20
    assert cfg.domain_obj() == UnitDisc()


def test_derived_objects():
    cfg = ExperimentConfig.from_dict(BASE)
    assert cfg.set_obj("A") == ClosedDisc(0, 0.5)
    assert [p.coords for p in cfg.point_objs()] == [(0.7 + 0j,), (0.5j,)]
    assert cfg.solver_params().h == 0.03125
    with pytest.raises(ConfigError):
        cfg.set_obj("B")


@pytest.mark.parametrize("patch, path", [
    ({"kind": "bogus"}, "kind"),
    ({"extra": 1}, "extra"),
    ({"points": [0.7, "x"]}, "points[1]"),
    ({"points": [[[0.1, 0], [0.2, 0]]]}, "points[0]"),
    ({"solver": {"h": -1}}, "solver.h"),
    ({"solver": {"tol": 0}}, "solver.tol"),
    ({"solver": {"method": "newton"}}, "solver.method"),
    ({"solver": {"speed": 1}}, "solver.speed"),
    ({"optimizer": {"degree": 0}}, "optimizer.degree"),
    ({"optimizer": {"seed": None}, "kind": "disc-opt"}, "optimizer.seed"),
    ({"sets": {"A": {"type": "Nope"}}}, "sets.A"),
    ({"sets": {"A": {"type": "ClosedDisc", "center": [0, 0], "radius": -1}}}, "sets.A"),
    ({"domain": {"type": "Annulus", "inner": 0.5, "outer": 0.2}}, "domain"),
    ({"options": {"closed_tol": -1}}, "options.closed_tol"),
])
def test_errors_name_the_field(patch, path):
    with pytest.raises(ConfigError) as exc:
        ExperimentConfig.from_dict({**BASE, **patch})
    assert exc.value.path == path


def test_invalid_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{nope")
    with pytest.raises(ConfigError):
        ExperimentConfig.load(p)


def test_overrides_take_precedence():
    cfg = ExperimentConfig.from_dict({**BASE, "optimizer": {"seed": 3, "degree": 5}})
    over = cfg.with_overrides(seed=9, grid_h=0.0625, degree=None, out="x")
    assert over.optimizer["seed"] == 9 and over.optimizer["degree"] == 5
    assert over.solver["h"] == 0.0625 and over.out == "x"
    with pytest.raises(ConfigError):
        cfg.with_overrides(restarts=-1)


@pytest.mark.parametrize("p, coords", [(0.7, (0.7 + 0j,)), ([0.1, 0.2], (0.1 + 0.2j,)),
                                      ([[0.1, 0], [0, 0.3]], (0.1 + 0j, 0.3j))])
def test_points(p, coords):
    pt = parse_point(p)
    assert pt.coords == coords
    assert parse_point(point_to_json(pt) if len(coords) > 1 else point_to_json(pt)[0]).coords == coords
