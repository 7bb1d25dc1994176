"""Relative extremal functions on grids and via analytic discs."""
from .geometry import (Annulus, Arc, Box, CantorIterate, ClosedDisc, ComplexPoint, Disc,
                       Empty, FinitePoints, OpenDisc, Polydisc, TorusSet, UnitBall, UnitDisc,
                       arc_measure, member, torus_measure)
from .envelope import SolverParams, omega_at, psh_envelope, usc_regularize
from .discs import AnalyticDisc, optimize_discs, sigma_f

__all__ = [
    "Annulus", "Arc", "Box", "CantorIterate", "ClosedDisc", "ComplexPoint", "Disc", "Empty",
    "FinitePoints", "OpenDisc", "Polydisc", "TorusSet", "UnitBall", "UnitDisc", "arc_measure",
    "member", "torus_measure", "SolverParams", "omega_at", "psh_envelope", "usc_regularize",
    "AnalyticDisc", "optimize_discs", "sigma_f",
]
