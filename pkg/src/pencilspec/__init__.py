"""Quadratic Sturm-Liouville pencils: forward solver and inverse reconstruction."""

from __future__ import annotations

__version__ = "0.1.0"

from .coefficients import CoefficientPair, glue
from .errors import ConditionError, InputError, NumericalError, PencilError
from .forward import Chain, EndpointValues, Subspectrum, boundary_S, eigenvalues, integrate
from .halfinverse import HalfProblem, solve_half
from .inverse import HVector, WeylData, invert, locate_thetas, weyl_residues
from .kernels import BoundaryTriple, extract_triple
from .recovery import RecoveryConfig, recover_pq

__all__ = [
    "BoundaryTriple",
    "Chain",
    "CoefficientPair",
    "ConditionError",
    "EndpointValues",
    "HVector",
    "HalfProblem",
    "InputError",
    "NumericalError",
    "PencilError",
    "RecoveryConfig",
    "Subspectrum",
    "WeylData",
    "boundary_S",
    "eigenvalues",
    "extract_triple",
    "glue",
    "integrate",
    "invert",
    "locate_thetas",
    "recover_pq",
    "solve_half",
    "weyl_residues",
]
