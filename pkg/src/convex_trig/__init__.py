"""Generalized trigonometric functions of planar convex bodies, the pendulum they
drive, and extremals of the associated sub-Finsler problems."""

__version__ = "0.1.0"

from .body import (BodySpecError, ConvexBody, InvalidBodyError, area, box, canonicalize,
                   cross_polytope, polar, regular_polygon, validate)
from .config import DEFAULT_TOL, Tolerances
from .trig import (correspondence, cos_omega, cos_sin, derivative, gauge, pi_omega,
                   pi_omega_inv, rotate, sin_omega, theta_of_point)

__all__ = [
    "BodySpecError", "ConvexBody", "InvalidBodyError", "area", "box", "canonicalize",
    "cross_polytope", "polar", "regular_polygon", "validate", "DEFAULT_TOL", "Tolerances",
    "correspondence", "cos_omega", "cos_sin", "derivative", "gauge", "pi_omega",
    "pi_omega_inv", "rotate", "sin_omega", "theta_of_point", "__version__",
]
