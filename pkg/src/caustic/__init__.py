"""Perturbative analysis of near-circular convex billiards."""

from .errors import (CausticError, ConsistencyError, ConvergenceError, GeometryError,
                     ValidationError)
from .fourier_profile import FourierProfile, evaluate, derivative, q_average, tq_member
from .boundary_geometry import DeformedBoundary, circle

__version__ = "0.1.0"
