"""Serialisable scalar profiles for road slope, air density and disturbances.

Each profile is a small frozen dataclass that is callable.  ``arg`` selects
which positional argument the profile reads, so the same class can serve as
a function of position (slope), of ``(t, x)`` (air density) or of time
(disturbance).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np


@dataclass(frozen=True)
class Constant:
    value: float = 0.0
    arg: int = 0

    def __call__(self, *args: float) -> float:
        return self.value

    def sup_abs(self) -> float:
        return abs(self.value)

    @property
    def is_constant(self) -> bool:
        return True

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "constant", "value": self.value, "arg": self.arg}


@dataclass(frozen=True)
class Sine:
    """``offset + amplitude * sin(2*pi*s/period + phase)`` of the selected argument."""

    offset: float = 0.0
    amplitude: float = 0.0
    period: float = 1.0
    phase: float = 0.0
    arg: int = 0

    def __post_init__(self):
        if self.period <= 0:
            raise ValueError(f"period must be positive, got {self.period}")

    def __call__(self, *args: float) -> float:
        s = args[self.arg]
        return self.offset + self.amplitude * math.sin(2 * math.pi * s / self.period + self.phase)

    def sup_abs(self) -> float:
        return abs(self.offset) + abs(self.amplitude)

    @property
    def is_constant(self) -> bool:
        return self.amplitude == 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": "sine",
            "offset": self.offset,
            "amplitude": self.amplitude,
            "period": self.period,
            "phase": self.phase,
            "arg": self.arg,
        }


@dataclass(frozen=True)
class Piecewise:
    """Piecewise-constant signal: ``values[k]`` holds on ``[breaks[k-1], breaks[k])``.

    ``values`` has one more entry than ``breaks``; ``values[0]`` applies
    before the first breakpoint.
    """

    breaks: tuple[float, ...] = ()
    values: tuple[float, ...] = (0.0,)
    arg: int = 0

    def __post_init__(self):
        object.__setattr__(self, "breaks", tuple(float(b) for b in self.breaks))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.values) != len(self.breaks) + 1:
            raise ValueError("Piecewise needs len(values) == len(breaks) + 1")
        if any(b1 <= b0 for b0, b1 in zip(self.breaks, self.breaks[1:])):
            raise ValueError("Piecewise breakpoints must be strictly increasing")

    def __call__(self, *args: float) -> float:
        s = args[self.arg]
        k = int(np.searchsorted(self.breaks, s, side="right"))
        return self.values[k]

    def sup_abs(self) -> float:
        return max(abs(v) for v in self.values)

    @property
    def is_constant(self) -> bool:
        return len(set(self.values)) == 1

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "piecewise", "breaks": list(self.breaks), "values": list(self.values), "arg": self.arg}


_KINDS = {"constant": Constant, "sine": Sine, "piecewise": Piecewise}


def profile_from_dict(spec: Any, *, default_arg: int = 0):
    """Build a profile from a config entry; a bare number means a constant."""
    if isinstance(spec, (int, float)):
        return Constant(float(spec), arg=default_arg)
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValueError(f"profile must be a number or an object with 'kind', got {spec!r}")
    kwargs = {k: v for k, v in spec.items() if k != "kind"}
    kwargs.setdefault("arg", default_arg)
    try:
        cls = _KINDS[spec["kind"]]
    except KeyError:
        raise ValueError(f"unknown profile kind {spec['kind']!r}") from None
    return cls(**kwargs)


def sup_abs(profile, samples=None) -> float:
    """Supremum of ``|profile|``; falls back to sampling for plain callables."""
    if hasattr(profile, "sup_abs"):
        return profile.sup_abs()
    if samples is None:
        raise ValueError("cannot bound an opaque callable profile without samples")
    return float(max(abs(profile(*s)) for s in samples))
