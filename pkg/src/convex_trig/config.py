"""Centralized numerical tolerances."""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    """All tolerance knobs used by the library.

    Attributes
    ----------
    geo : membership / convexity / equality checks on coordinates.
    corner : minimum width of a correspondence interval that counts as a corner.
    vertex : relative distance (in units of the period) at which an angle is
        snapped onto a polygon vertex angle.
    separatrix : energy distance to the upper critical level treated as equal.
    ode_rtol, ode_atol : adaptive integrator tolerances.
    event : time tolerance for event location.
    bisection : angle tolerance for monotone bisection.
    """

    geo: float = 1e-9
    corner: float = 1e-9
    vertex: float = 1e-12
    separatrix: float = 1e-12
    ode_rtol: float = 1e-9
    ode_atol: float = 1e-12
    event: float = 1e-12
    bisection: float = 1e-12

    def with_(self, **changes) -> "Tolerances":
        return replace(self, **changes)


DEFAULT_TOL = Tolerances()

#: default number of samples for radial bodies built from smooth shapes
DEFAULT_RADIAL_SAMPLES = 4096
