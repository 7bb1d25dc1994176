import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import harmonic_measure_quadrature
from pluridisc import arcs
from pluridisc.boundary import (
    BlaschkeDisc, blaschke_sigma, blaschke_with_center, cantor_gap_family, growing_arc_family,
    harmonic_measure, log_pole, mobius, omega_boundary, poisson, polar_witness, random_blaschke,
    verify_monotone_union, verify_polar_witness, verify_sandwich, verify_boundary_equality,
    weak_regularity_probe,
)
from pluridisc.errors import OutsideDomain, PluriError
from pluridisc.geometry import Arc, CantorIterate, Empty, FinitePoints, Union
from pluridisc.rng import generator

U1 = [(F(0), F(1, 4))]
U2 = [(F(1, 10), F(1, 5)), (F(1, 2), F(3, 4))]


@pytest.mark.parametrize("z", [0, 0.3, -0.5 + 0.2j, 0.9j, 0.99, 0.999 * np.exp(0.4j)])
@pytest.mark.parametrize("U", [U1, U2])
def test_harmonic_measure_matches_quadrature(z, U):
    rad = [(2 * math.pi * float(a), 2 * math.pi * float(b)) for a, b in U]
    assert harmonic_measure(z, U) == pytest.approx(harmonic_measure_quadrature(z, rad), abs=1e-10)


@pytest.mark.parametrize("U", [U1, U2, arcs.cantor_arcs(5)])
def test_center_identity(U):
    assert poisson(0, U) == -float(arcs.measure(U))
    assert abs(poisson(0, U) + blaschke_sigma(mobius(0), U)) <= 1e-12


@pytest.mark.parametrize("m", range(1, 13))
def test_cantor_decay(m):
    assert abs(poisson(0, CantorIterate(m))) == pytest.approx((2 / 3) ** m, abs=1e-12)


def test_poisson_examples():
    assert poisson(0.5, Empty(1)) == 0.0
    assert poisson(0.5, [(F(0), F(1))]) == -1.0
    assert poisson(0.3, Arc(F(0), F(1, 2))) == pytest.approx(-harmonic_measure(0.3, U1 + [(F(1, 4), F(1, 2))]))
    with pytest.raises(OutsideDomain):
        poisson(1.0, U1)


def test_blaschke_basics():
    B = BlaschkeDisc(0.3, (0.5, -0.2j))
    assert B.degree == 2
    z = np.exp(1j * np.linspace(0, 6, 9))
    assert np.allclose(np.abs(B(z)), 1.0)
    assert B.center() == pytest.approx(complex(B(0.0)))
    t = np.linspace(0, 1, 1001)
    arg = B.argument(t)
    assert np.all(np.diff(arg) > 0) and arg[-1] - arg[0] == pytest.approx(2)
    assert np.allclose(np.exp(2j * np.pi * arg), B(np.exp(2j * np.pi * t)))
    assert BlaschkeDisc.from_dict(B.to_dict()) == B
    with pytest.raises(PluriError):
        BlaschkeDisc(0.0, (1.0,))


def test_mobius():
    phi = mobius(0.4 + 0.3j)
    assert complex(phi(0.0)) == pytest.approx(0.4 + 0.3j)
    with pytest.raises(OutsideDomain):
        mobius(1.0)


points = st.complex_numbers(max_magnitude=0.95)


@settings(max_examples=40, deadline=None)
@given(points, st.integers(0, 10_000), st.integers(1, 6))
def test_blaschke_push_forward_is_harmonic_measure(x, seed, degree):
    # any inner map with B(0) = x pushes arc length to harmonic measure at x
    B = random_blaschke(x, degree, generator(seed))
    assert complex(B(0.0)) == pytest.approx(x, abs=1e-9)
    assert blaschke_sigma(B, U2) == pytest.approx(harmonic_measure(x, U2), abs=1e-9)


def test_blaschke_with_center_matches_composition():
    inner = BlaschkeDisc(0.7, (0.3j, -0.5))
    B = blaschke_with_center(0.2 - 0.4j, inner)
    z = np.exp(1j * np.linspace(0, 6, 13))
    cz = z * inner(z)
    expect = (cz + (0.2 - 0.4j)) / (1 + np.conj(0.2 - 0.4j) * cz)
    assert np.allclose(B(z), expect, atol=1e-12)


@pytest.mark.parametrize("x", [0.3, -0.5 + 0.5j, 0.9])
def test_verify_boundary_equality(x):
    out = verify_boundary_equality(x, U2, samples=20)
    assert out["passed"] and out["equality_gap"] <= 1e-9


def test_omega_boundary_limit_on_closed_arc():
    lim = omega_boundary(Arc(F(0), F(1, 4)), 0.4)
    assert lim.value == pytest.approx(poisson(0.4, U1), abs=1e-9)
    assert lim.gap < 1e-9
    values = [v for _, v in lim.trace]
    assert all(b >= a - 1e-15 for a, b in zip(values, values[1:]))


def test_points_are_invisible_in_the_limit():
    A = Union((Arc(F(0), F(1, 4)), FinitePoints([np.exp(2j * np.pi * 0.6)])))
    lim = omega_boundary(A, 0.2j)
    assert lim.value == pytest.approx(poisson(0.2j, U1), abs=1e-9)


@pytest.mark.parametrize("family", [growing_arc_family(12), cantor_gap_family(8)])
def test_monotone_union(family):
    assert verify_monotone_union(0.3 + 0.1j, family)["passed"]


def test_weak_regularity_probe(tmp_path):
    out = weak_regularity_probe(U2, rays=8, trace_path=tmp_path / "rays.csv")
    assert out["passed"] and len(out["angles"]) >= 2
    lines = (tmp_path / "rays.csv").read_text().splitlines()
    assert lines[0] == "angle_turns,radius,value" and len(lines) == 1 + 20 * len(out["angles"])
    # a ray hitting an endpoint tends to -1/2, not -1
    edge = weak_regularity_probe(U1, rays=[0.25], j_max=30)
    assert edge["final_values"][0] == pytest.approx(-0.5, abs=1e-6)


def test_polar_witness():
    out = verify_polar_witness([0.1, 0.6], x0=0, terms=2000)
    assert out["passed"]
    assert -0.5 <= out["u_x0"] < -0.49
    w = polar_witness([0.25], x0=0.3, terms=50)
    assert w(0.3) > -0.5 - 1e-9


def test_log_pole():
    assert log_pole([0.0], 0.0) == pytest.approx(math.log(0.5))
    assert log_pole([0.0], 1 - 1e-12) < -25


def test_sandwich():
    out = verify_sandwich(0.2 + 0.3j, U2, [0.9, 0.95])
    assert out["passed"]
    assert out["omega"] <= out["omega_star"] + 1e-9
    assert out["omega_star"] == pytest.approx(-out["sigma"], abs=1e-9)
