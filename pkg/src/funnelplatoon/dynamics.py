"""Longitudinal force model of a single vehicle.

Gravity, aerodynamic drag and an erf-smoothed rolling friction combine into
the resistive force ``f(t, x, v)``; Newton's law with the traction input
``u`` and a bounded disturbance gives the acceleration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from .profiles import Constant

G = 9.81  # m/s^2

# Shared vehicle constants of the two reference scenarios.
TABLE_DRAG = 0.32
TABLE_ROLLING = 0.01
TABLE_AREA = 2.4
TABLE_AIR_DENSITY = 1.3
DEFAULT_FRICTION_SMOOTHING = 100.0


@dataclass(frozen=True)
class VehicleParams:
    """Physical constants and environment profiles of one vehicle.

    ``slope`` is called as ``slope(x)`` (radians), ``air_density`` as
    ``air_density(t, x)`` (kg/m^3) and ``disturbance`` as ``disturbance(t)`` (N).
    The defaults are the reference-platoon constants apart from the mass.
    """

    mass: float
    drag_coeff: float = TABLE_DRAG
    rolling_coeff: float = TABLE_ROLLING
    frontal_area: float = TABLE_AREA
    slope: Callable = field(default_factory=lambda: Constant(0.0, arg=0))
    air_density: Callable = field(default_factory=lambda: Constant(TABLE_AIR_DENSITY, arg=0))
    friction_smoothing: float = DEFAULT_FRICTION_SMOOTHING
    disturbance: Callable = field(default_factory=lambda: Constant(0.0, arg=0))

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        for name in ("drag_coeff", "rolling_coeff", "frontal_area"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)}")
        if not self.friction_smoothing > 0:
            raise ValueError(f"friction_smoothing must be positive, got {self.friction_smoothing}")
        slope_sup = getattr(self.slope, "sup_abs", None)
        if slope_sup is not None and slope_sup() > math.pi / 2:
            raise ValueError("slope profile leaves [-pi/2, pi/2]")
        air = self.air_density
        if isinstance(air, Constant) and air.value < 0:
            raise ValueError("air density must be non-negative")


def table_one_vehicle(i: int, **overrides) -> VehicleParams:
    """Vehicle ``i`` (1-based) of the reference platoon: ``m_i = 1500 + (-1)^i 300`` kg."""
    mass = 1500.0 + (-1) ** i * 300.0
    return VehicleParams(mass=mass, **overrides)


@dataclass(frozen=True)
class ForceBreakdown:
    gravity: float
    aero: float
    rolling: float

    @property
    def total(self) -> float:
        return self.gravity + self.aero + self.rolling


def gravity_force(p: VehicleParams, x: float) -> float:
    return p.mass * G * math.sin(p.slope(x))


def aero_drag(p: VehicleParams, t: float, x: float, v: float) -> float:
    # sgn(v) v^2 == v |v|
    return 0.5 * p.air_density(t, x) * p.drag_coeff * p.frontal_area * v * abs(v)


def rolling_friction(p: VehicleParams, v: float) -> float:
    return p.mass * G * p.rolling_coeff * math.erf(p.friction_smoothing * v)


def total_force(p: VehicleParams, t: float, x: float, v: float) -> ForceBreakdown:
    return ForceBreakdown(
        gravity=gravity_force(p, x),
        aero=aero_drag(p, t, x, v),
        rolling=rolling_friction(p, v),
    )


def acceleration(p: VehicleParams, t: float, x: float, v: float, u: float) -> float:
    """Acceleration ``(u - f(t, x, v) + d(t)) / m``."""
    return (u - total_force(p, t, x, v).total + p.disturbance(t)) / p.mass
