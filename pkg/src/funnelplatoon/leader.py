"""Leader motions ``x0(t)`` with exact velocity and acceleration.

The leader has no dynamics of its own; each trajectory is a closed-form C^2
function of time and ``eval`` returns the consistent triple
``(x0, v0, a0)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar


class LeaderTrajectory:
    kind: str = ""

    def breakpoints(self) -> tuple[float, ...]:
        return ()

    def eval(self, t: float) -> tuple[float, float, float]:
        raise NotImplementedError

    def sup_norms(self, horizon: float) -> tuple[float, float]:
        """``(sup |v0|, sup |a0|)`` over ``[0, horizon]``."""
        return _sampled_sup(self, horizon)

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError


def _sampled_sup(traj: LeaderTrajectory, horizon: float, n: int = 40001) -> tuple[float, float]:
    if horizon <= 0:
        _, v, a = traj.eval(0.0)
        return abs(v), abs(a)
    ts = np.linspace(0.0, horizon, n)
    out = []
    for idx in (1, 2):
        vals = np.array([abs(traj.eval(t)[idx]) for t in ts])
        k = int(np.argmax(vals))
        best = vals[k]
        # polish the grid maximum with a bounded 1-D search in the neighbouring cells
        lo, hi = ts[max(k - 1, 0)], ts[min(k + 1, n - 1)]
        if hi > lo:
            res = minimize_scalar(
                lambda s: -abs(traj.eval(s)[idx]), bounds=(lo, hi), method="bounded",
                options={"xatol": 1e-12},
            )
            best = max(best, -res.fun)
        out.append(float(best))
    return out[0], out[1]


@dataclass(frozen=True)
class ConstantCruise(LeaderTrajectory):
    x_init: float = 0.0
    speed: float = 20.0
    kind = "constant-cruise"

    def eval(self, t):
        return self.x_init + self.speed * t, self.speed, 0.0

    def sup_norms(self, horizon):
        return abs(self.speed), 0.0

    def to_dict(self):
        return {"kind": self.kind, "x_init": self.x_init, "speed": self.speed}


def _smooth_step_integrals(s: float, h: float) -> tuple[float, float, float]:
    """Cosine smooth step ``S`` rising on ``[-h, h]`` and its first two integrals from ``-inf``."""
    if h == 0.0:
        if s <= 0.0:
            return 0.0, 0.0, 0.0
        return 1.0, s, 0.5 * s * s
    if s <= -h:
        return 0.0, 0.0, 0.0
    if s >= h:
        return 1.0, s, 0.5 * s * s + 0.5 * h * h - 4.0 * h * h / math.pi**2
    arg = math.pi * s / (2.0 * h)
    S = 0.5 * (1.0 + math.sin(arg))
    I1 = 0.5 * (s + h) - (h / math.pi) * math.cos(arg)
    I2 = 0.25 * (s + h) ** 2 - (2.0 * h * h / math.pi**2) * (math.sin(arg) + 1.0)
    return S, I1, I2


@dataclass(frozen=True)
class BrakeProfile(LeaderTrajectory):
    """Cruise at ``speed`` then brake at ``decel`` until standstill.

    Both acceleration switches are smoothed by a cosine ramp of width
    ``jerk_window`` centred on the nominal switching instants ``brake_start``
    and ``brake_start + speed / decel``.  The peak deceleration stays at
    ``decel`` and the leader stops at ``brake_start + speed/decel +
    jerk_window/2``, then holds its position.
    """

    x_init: float = 0.0
    speed: float = 20.0
    brake_start: float = 15.0
    decel: float = 5.0
    jerk_window: float = 0.5
    kind = "brake-profile"

    def __post_init__(self):
        if not self.decel > 0:
            raise ValueError("decel must be positive")
        if self.speed < 0:
            raise ValueError("cruise speed must be non-negative")
        if self.jerk_window < 0:
            raise ValueError("jerk_window must be non-negative")
        if self.jerk_window > self.speed / self.decel:
            raise ValueError("jerk_window longer than the braking phase")
        if self.brake_start < self.jerk_window / 2:
            raise ValueError("braking ramp would start before t = 0")

    @property
    def stop_time(self) -> float:
        return self.brake_start + self.speed / self.decel + self.jerk_window / 2

    def eval(self, t):
        h = self.jerk_window / 2
        T = self.speed / self.decel
        S_a, I1_a, I2_a = _smooth_step_integrals(t - self.brake_start, h)
        S_b, I1_b, I2_b = _smooth_step_integrals(t - self.brake_start - T, h)
        x = self.x_init + self.speed * t - self.decel * (I2_a - I2_b)
        v = self.speed - self.decel * (I1_a - I1_b)
        a = -self.decel * (S_a - S_b)
        if t >= self.stop_time:
            # exact cancellation, avoids a residual 1e-15 drift in v
            v = 0.0
            a = 0.0
        return x, v, a

    def breakpoints(self) -> tuple[float, ...]:
        """Instants where the acceleration ramps start or end."""
        h = self.jerk_window / 2
        t1 = self.brake_start + self.speed / self.decel
        return tuple(sorted({self.brake_start - h, self.brake_start + h, t1 - h, t1 + h}))

    def sup_norms(self, horizon):
        if self.speed == 0.0:
            return 0.0, 0.0
        if horizon <= self.brake_start - self.jerk_window / 2:
            return self.speed, 0.0
        if horizon >= self.brake_start + self.jerk_window / 2:
            return self.speed, self.decel
        return self.speed, abs(self.eval(horizon)[2])

    def to_dict(self):
        return {
            "kind": self.kind,
            "x_init": self.x_init,
            "speed": self.speed,
            "brake_start": self.brake_start,
            "decel": self.decel,
            "jerk_window": self.jerk_window,
        }


@dataclass(frozen=True)
class SinusoidalProfile(LeaderTrajectory):
    """``x0(t) = offset + speed*t + sum_k (cos_k cos(w_k t) + sin_k sin(w_k t))``.

    ``terms`` holds triples ``(w_k, cos_k, sin_k)``.
    """

    offset: float = 0.0
    speed: float = 20.0
    terms: tuple[tuple[float, float, float], ...] = ()
    kind = "sinusoidal-profile"

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(tuple(float(c) for c in term) for term in self.terms))

    def eval(self, t):
        x = self.offset + self.speed * t
        v = self.speed
        a = 0.0
        for w, c, s in self.terms:
            cw, sw = math.cos(w * t), math.sin(w * t)
            x += c * cw + s * sw
            v += w * (-c * sw + s * cw)
            a += -w * w * (c * cw + s * sw)
        return x, v, a

    def term_bounds(self) -> tuple[float, float]:
        """Triangle-inequality bounds on ``|v0|`` and ``|a0|``, valid for all t."""
        amp = [math.hypot(c, s) for _, c, s in self.terms]
        vb = abs(self.speed) + sum(abs(w) * r for (w, _, _), r in zip(self.terms, amp))
        ab = sum(w * w * r for (w, _, _), r in zip(self.terms, amp))
        return vb, ab

    def to_dict(self):
        return {"kind": self.kind, "offset": self.offset, "speed": self.speed, "terms": [list(t) for t in self.terms]}


def scenario2_leader() -> SinusoidalProfile:
    """``x0(t) = 10 + 19 t - 10 cos(t/5) + sin(2t)/2``."""
    return SinusoidalProfile(offset=10.0, speed=19.0, terms=((0.2, -10.0, 0.0), (2.0, 0.0, 0.5)))


@dataclass(frozen=True, eq=False)
class SplineLeader(LeaderTrajectory):
    """Cubic interpolating spline through ``(times, positions)``; C^2 by construction.

    Only defined on the knot range; evaluation beyond the last knot raises.
    """

    times: tuple[float, ...] = (0.0, 1.0)
    positions: tuple[float, ...] = (0.0, 1.0)
    bc_type: str = "not-a-knot"
    _spline: Any = field(init=False, repr=False, compare=False)
    kind = "user-spline"

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(self, "positions", tuple(float(x) for x in self.positions))
        if self.times[0] != 0.0:
            raise ValueError("spline knots must start at t = 0")
        object.__setattr__(self, "_spline", CubicSpline(self.times, self.positions, bc_type=self.bc_type))

    def __eq__(self, other):
        if not isinstance(other, SplineLeader):
            return NotImplemented
        return (self.times, self.positions, self.bc_type) == (other.times, other.positions, other.bc_type)

    def __hash__(self):
        return hash((self.times, self.positions, self.bc_type))

    def eval(self, t):
        if t < 0 or t > self.times[-1]:
            raise ValueError(f"t = {t} outside the spline knot range [0, {self.times[-1]}]")
        sp = self._spline
        return float(sp(t)), float(sp(t, 1)), float(sp(t, 2))

    def to_dict(self):
        return {"kind": self.kind, "times": list(self.times), "positions": list(self.positions), "bc_type": self.bc_type}


_KINDS = {
    "constant-cruise": ConstantCruise,
    "brake-profile": BrakeProfile,
    "sinusoidal-profile": SinusoidalProfile,
    "user-spline": SplineLeader,
}


def leader_from_dict(spec: dict[str, Any]) -> LeaderTrajectory:
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind not in _KINDS:
        raise ValueError(f"unknown leader kind {kind!r}; expected one of {sorted(_KINDS)}")
    if kind == "sinusoidal-profile" and "terms" in spec:
        spec["terms"] = tuple(tuple(t) for t in spec["terms"])
    return _KINDS[kind](**spec)


def eval_many(traj: LeaderTrajectory, ts: Sequence[float]) -> np.ndarray:
    """Stack ``eval`` over ``ts`` into an ``(len(ts), 3)`` array."""
    return np.array([traj.eval(float(t)) for t in ts], dtype=float).reshape(-1, 3)
