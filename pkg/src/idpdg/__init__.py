"""Invariant-domain-preserving DG spectral element solver for hyperbolic conservation laws."""

from .discretization import Discretization
from .equations import Burgers, BuckleyLeverett, Euler, LinearAdvection, make_model
from .mesh import Mesh
from .scheme import InvariantViolation, LimiterConfig, Scheme
from .time_integration import integrate

__version__ = "0.1.0"

__all__ = [
    "BuckleyLeverett",
    "Burgers",
    "Discretization",
    "Euler",
    "InvariantViolation",
    "LimiterConfig",
    "LinearAdvection",
    "Mesh",
    "Scheme",
    "integrate",
    "make_model",
]
