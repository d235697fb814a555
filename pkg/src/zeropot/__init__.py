"""Composition of exactly solvable zero-energy radial potentials, with numerical verification."""

from .catalog import FamilyId, PotentialSpec, SolutionPair, make_chi_first, make_pair, potential
from .numerics import GridSpec, TailModel, Tolerance
from .transform import ComposedSystem, build_mapping, chi_from_phi, compose, iterate, phi_from_chi

__version__ = "0.1.0"

__all__ = [
    "ComposedSystem",
    "FamilyId",
    "GridSpec",
    "PotentialSpec",
    "SolutionPair",
    "TailModel",
    "Tolerance",
    "build_mapping",
    "chi_from_phi",
    "compose",
    "iterate",
    "make_chi_first",
    "make_pair",
    "phi_from_chi",
    "potential",
]
