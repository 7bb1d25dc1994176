import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import radial_envelope_hull
from pluridisc.envelope import (
    INTERIOR, SolverParams, build_grid, build_obstacle, interpolate, omega_at, psh_envelope,
    radial_closed_form, solve_envelope, usc_regularize,
)
from pluridisc.errors import DimensionMismatch, OutsideDomain, PluriError
from pluridisc.geometry import (
    Box, ClosedDisc, Disc, Empty, FinitePoints, OpenDisc, Polydisc, Product, UnitDisc, Union, whole,
)

H = 1 / 64
P = SolverParams(h=H)


def ring_nodes(fld, lo=0.55, hi=0.95):
    pts = fld.grid.points()[:, 0]
    keep = (fld.grid.cls.ravel() == INTERIOR) & (np.abs(pts) >= lo) & (np.abs(pts) <= hi)
    return pts[keep], fld.values.ravel()[keep]


@pytest.mark.parametrize("h, tol", [(1 / 32, 0.03), (1 / 64, 0.015), (1 / 128, 0.008)])
def test_radial_hull_oracle(h, tol):
    r, hull = radial_envelope_hull(0.5)
    z, v = ring_nodes(solve_envelope(UnitDisc(), ClosedDisc(0, 0.5), SolverParams(h=h)))
    assert np.max(np.abs(v - np.interp(np.abs(z), r, hull))) <= tol


def test_hull_oracle_matches_closed_form():
    r, hull = radial_envelope_hull(0.5)
    keep = r > 0.05
    assert np.max(np.abs(hull[keep] - radial_closed_form(r[keep], 0.5))) < 1e-3
    assert np.interp(0.7, r, hull) == pytest.approx(-0.5146, abs=1e-3)


def test_howard_and_relax_agree():
    a = solve_envelope(UnitDisc(), ClosedDisc(0.1, 0.4), SolverParams(h=1 / 32))
    b = solve_envelope(UnitDisc(), ClosedDisc(0.1, 0.4), SolverParams(h=1 / 32, method="relax",
                                                                          max_iter=100000, tol=1e-12))
    assert a.meta["converged"] and b.meta["converged"]
    assert np.nanmax(np.abs(a.values - b.values)) < 1e-6


def test_nonconvergence_is_reported():
    fld = solve_envelope(UnitDisc(), ClosedDisc(0, 0.5), SolverParams(h=1 / 32, method="relax", max_iter=3))
    assert fld.meta["converged"] is False
    assert fld.meta["iterations"] == 3


@pytest.mark.parametrize("A, x, expected", [
    (Empty(1), 0.3, 0.0),
    (whole(1), 0.3, -1.0),
    (ClosedDisc(0, 0.5), 0.2, -1.0),
])
def test_omega_examples(A, x, expected):
    assert omega_at(UnitDisc(), A, x, P) == pytest.approx(expected, abs=1e-9)


def test_omega_outside_domain():
    with pytest.raises(OutsideDomain):
        omega_at(UnitDisc(), ClosedDisc(0, 0.5), 1.2, P)
    with pytest.raises(DimensionMismatch):
        omega_at(UnitDisc(), ClosedDisc(0, 0.5), (0.1, 0.1), P)


def test_bad_parameters():
    grid = build_grid(UnitDisc(), 1 / 16)
    ob = build_obstacle(UnitDisc(), ClosedDisc(0, 0.5), grid)
    with pytest.raises(PluriError):
        psh_envelope(ob, tol=0)
    with pytest.raises(PluriError):
        psh_envelope(ob, method="newton")


def test_usc_examples():
    whole_fld = solve_envelope(UnitDisc(), whole(1), P, usc=True)
    assert np.all(whole_fld.interior_values() == -1.0)
    empty = solve_envelope(UnitDisc(), Empty(1), P, usc=True)
    assert np.all(empty.interior_values() == 0.0)


def test_usc_dominates():
    raw = solve_envelope(UnitDisc(), ClosedDisc(0.2, 0.3), P)
    reg = usc_regularize(raw)
    assert np.all(reg.interior_values() >= raw.interior_values())
    assert reg.meta["usc_passes"] == 1


def test_finite_points_are_invisible_far_away():
    # a single point is polar: its grid envelope is a narrow spike
    fld = solve_envelope(UnitDisc(), FinitePoints([0.0]), SolverParams(h=1 / 128))
    assert interpolate(fld, 0.0) == -1.0
    assert interpolate(fld, 0.5) > -0.2


def test_howard_iterates_are_non_increasing():
    X, A = UnitDisc(), Union((Box(-0.5 - 0.1j, -0.2 + 0.4j), ClosedDisc(0.4 - 0.3j, 0.15)))
    ob = build_obstacle(X, A, build_grid(X, 1 / 32))
    steps = [psh_envelope(ob, max_iter=k).values for k in range(1, 5)]
    for a, b in zip(steps, steps[1:]):
        assert np.all(np.nan_to_num(b) <= np.nan_to_num(a) + 1e-10)
    final = psh_envelope(ob)
    assert final.meta["converged"]
    assert final.meta["residual_history"][-1] <= 1e-8


def test_cache_on_disk(tmp_path):
    p = SolverParams(h=1 / 32, tol=1e-9)
    a = solve_envelope(UnitDisc(), ClosedDisc(0.3, 0.2), p, cache_dir=str(tmp_path))
    files = list(tmp_path.glob("*.npz"))
    assert len(files) == 1
    from pluridisc import envelope
    envelope._memo.clear()
    b = solve_envelope(UnitDisc(), ClosedDisc(0.3, 0.2), p, cache_dir=str(tmp_path))
    assert np.array_equal(a.values, b.values, equal_nan=True)


def test_csv_export(tmp_path):
    fld = solve_envelope(UnitDisc(), ClosedDisc(0, 0.5), SolverParams(h=1 / 16))
    fld.to_csv(tmp_path / "f.csv")
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert lines[0] == "x1,y1,cls,value"
    assert len(lines) > 100


centres = st.complex_numbers(max_magnitude=0.5)
radii = st.floats(0.05, 0.4)


@settings(max_examples=12, deadline=None)
@given(centres, radii)
def test_sandwich_and_zero_boundary(c, r):
    fld = solve_envelope(UnitDisc(), ClosedDisc(c, r), SolverParams(h=1 / 32))
    v = fld.interior_values()
    assert v.min() >= -1 - 1e-12 and v.max() <= 1e-12
    ob = build_obstacle(UnitDisc(), ClosedDisc(c, r), fld.grid)
    assert np.all(fld.values[fld.grid.cls == INTERIOR] <= ob.values[fld.grid.cls == INTERIOR] + 1e-12)


@settings(max_examples=10, deadline=None)
@given(centres, radii, st.floats(0.0, 0.2))
def test_monotone_in_set(c, r, extra):
    small = solve_envelope(UnitDisc(), ClosedDisc(c, r), SolverParams(h=1 / 32))
    big = solve_envelope(UnitDisc(), ClosedDisc(c, r + extra), SolverParams(h=1 / 32))
    assert np.all(big.interior_values() <= small.interior_values() + 1e-9)


@settings(max_examples=8, deadline=None)
@given(st.floats(0.1, 0.3), st.floats(1.0, 2.0))
def test_monotone_in_domain(r, R):
    # larger domains give larger (closer to 0) values at shared points
    inner = omega_at(UnitDisc(), ClosedDisc(0, r), 0.6, SolverParams(h=1 / 64))
    outer = omega_at(Disc(0, R), ClosedDisc(0, r), 0.6, SolverParams(h=1 / 64))
    assert outer <= inner + 0.02


@settings(max_examples=8, deadline=None)
@given(centres, radii)
def test_discrete_maximality(c, r):
    fld = solve_envelope(UnitDisc(), ClosedDisc(c, r), SolverParams(h=1 / 32, tol=1e-12))
    grid = fld.grid
    v = np.nan_to_num(fld.values.ravel())
    ii = np.flatnonzero(grid.cls.ravel() == INTERIOR)
    free = ii[v[ii] > -1 + 1e-9]
    s = grid.strides()
    offs = [int(np.dot(s, (a.real, a.imag))) for a in (1, -1, 1j, -1j, 1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j)]
    avg = np.mean([v[free + o] for o in offs], axis=0)
    # off the contact set the envelope is harmonic for the stencil
    assert np.max(np.abs(avg - v[free])) < 1e-8


@pytest.mark.parametrize("x", [0.55, 0.7, 0.9, -0.6 + 0.3j])
def test_pluriregular_closed_disc_matches_closed_form(x):
    est = omega_at(UnitDisc(), ClosedDisc(0, 0.5), x, SolverParams(h=1 / 128))
    assert est == pytest.approx(float(radial_closed_form(x, 0.5)), abs=0.01)


def test_shrinking_disc_ratio():
    vals = [omega_at(UnitDisc(), ClosedDisc(0, 2.0 ** -j), 0.7, SolverParams(h=1 / 128)) for j in (2, 3)]
    exact = [float(radial_closed_form(0.7, 2.0 ** -j)) for j in (2, 3)]
    assert vals[1] / vals[0] == pytest.approx(exact[1] / exact[0], rel=0.05)


def test_union_and_open_sets():
    a = omega_at(UnitDisc(), OpenDisc(0, 0.5), 0.7, P)
    b = omega_at(UnitDisc(), ClosedDisc(0, 0.5), 0.7, P)
    assert a == pytest.approx(b, abs=0.02)
    u = omega_at(UnitDisc(), Union((ClosedDisc(0.5, 0.1), ClosedDisc(-0.5, 0.1))), 0.0, P)
    assert -1 < u < 0


def test_polydisc_two_variables():
    X = Polydisc((1.0, 1.0))
    A = Product(ClosedDisc(0, 0.5), ClosedDisc(0, 0.5))
    fld = solve_envelope(X, A, SolverParams(h=1 / 16))
    assert fld.meta["converged"]
    v = fld.interior_values()
    assert v.min() == -1.0 and v.max() <= 0
    # product rule: omega(z, A1 x A2) = max of the factor envelopes
    x = (0.0, 0.7)
    est = interpolate(fld, x)
    assert est == pytest.approx(float(radial_closed_form(0.7, 0.5)), abs=0.08)
