"""Decentralized funnel cruise controller.

Each follower ``i`` measures its gap to the predecessor, its own velocity and
the relative velocity.  From these it forms

* the spacing error ``xi = x_i - x_{i-1} + d_min`` (safe iff ``-M < xi < 0``),
* the headway error ``e = xi + lambda * v_i``,
* the funnel variable ``w = (v_i - v_{i-1}) - 1/xi - 1/(M + xi)``,
* the funnel gain ``k3 = 1 / (psi(t) - |w|)``,

and applies ``u = -k1 (v_i - v_{i-1}) - k2 e - k3 w``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


class DomainError(ValueError):
    """A state left the safety corridor or the performance funnel.

    ``kind`` is one of ``"spacing-lower"`` (gap <= d_min), ``"spacing-upper"``
    (gap >= d_max) or ``"funnel"`` (|w| >= psi).  ``index`` is the 1-based
    follower index when known.
    """

    def __init__(self, kind: str, value: float, index: Optional[int] = None, t: Optional[float] = None):
        self.kind = kind
        self.value = value
        self.index = index
        self.t = t
        where = "" if index is None else f" at vehicle {index}"
        when = "" if t is None else f", t={t:.6g}"
        super().__init__(f"{kind} violation{where}{when}: {value!r}")


class FunnelViolation(DomainError):
    def __init__(self, margin: float, index: Optional[int] = None, t: Optional[float] = None):
        super().__init__("funnel", margin, index, t)
        self.margin = margin


# -- funnel boundaries -------------------------------------------------------


@dataclass(frozen=True)
class ExponentialFunnel:
    """``psi(t) = amp * exp(-decay * t) + floor``."""

    amp: float = 1.0
    decay: float = 2.0
    floor: float = 1.0

    def __post_init__(self):
        if self.amp < 0:
            raise ValueError(f"funnel amp must be >= 0, got {self.amp}")
        if not self.decay > 0:
            raise ValueError(f"funnel decay must be > 0, got {self.decay}")
        if not self.floor > 0:
            raise ValueError(f"funnel floor must be > 0, got {self.floor}")

    def __call__(self, t):
        return self.amp * np.exp(-self.decay * t) + self.floor

    def derivative(self, t):
        return -self.amp * self.decay * np.exp(-self.decay * t)

    @property
    def sup(self) -> float:
        return self.amp + self.floor

    @property
    def inf(self) -> float:
        return self.floor

    @property
    def derivative_sup(self) -> float:
        return self.amp * self.decay

    def to_dict(self) -> dict:
        return {"kind": "exponential", "amp": self.amp, "decay": self.decay, "floor": self.floor}


class CustomFunnel:
    """Funnel boundary from a user pair ``(psi, dpsi)``.

    Bounds that are not declared are estimated by sampling ``psi`` and
    ``dpsi`` on ``[0, horizon]``; the sampling grid is fine enough that the
    estimate is within ``rel_tol`` of the grid-refined value for smooth
    boundaries.  ``psi`` must accept numpy arrays.
    """

    def __init__(
        self,
        psi: Callable,
        dpsi: Callable,
        *,
        sup: Optional[float] = None,
        inf: Optional[float] = None,
        derivative_sup: Optional[float] = None,
        horizon: float = 40.0,
        rel_tol: float = 1e-3,
    ):
        self._psi = psi
        self._dpsi = dpsi
        n = 1001
        while True:
            ts = np.linspace(0.0, horizon, n)
            vals, dvals = np.asarray(psi(ts), float), np.abs(np.asarray(dpsi(ts), float))
            ts2 = np.linspace(0.0, horizon, 2 * n - 1)
            vals2, dvals2 = np.asarray(psi(ts2), float), np.abs(np.asarray(dpsi(ts2), float))
            stable = (
                abs(vals2.max() - vals.max()) <= rel_tol * abs(vals2.max())
                and abs(vals2.min() - vals.min()) <= rel_tol * abs(vals2.min())
                and abs(dvals2.max() - dvals.max()) <= rel_tol * max(dvals2.max(), 1e-300)
            )
            if stable or n > 1_000_000:
                break
            n = 2 * n - 1
        self.sup = float(vals2.max()) if sup is None else float(sup)
        self.inf = float(vals2.min()) if inf is None else float(inf)
        self.derivative_sup = float(dvals2.max()) if derivative_sup is None else float(derivative_sup)
        if not self.inf > 0:
            raise ValueError(f"funnel boundary must stay positive, inf = {self.inf}")

    def __call__(self, t):
        return self._psi(t)

    def derivative(self, t):
        return self._dpsi(t)


# -- controller parameters ---------------------------------------------------


@dataclass(frozen=True)
class ControllerParams:
    """Shared design constants.  Gains carry SI units so ``u`` is in newtons:
    ``gain1`` in N*s/m, ``gain2`` in N/m, ``headway`` in s."""

    d_min: float = 2.0
    d_max: float = 15.0
    headway: float = 0.5
    gain1: float = 3600.0
    gain2: float = 3600.0
    funnel: ExponentialFunnel = ExponentialFunnel()

    def __post_init__(self):
        if not self.d_min > 0:
            raise ValueError(f"d_min must be > 0, got {self.d_min}")
        if not self.d_max > self.d_min:
            raise ValueError(f"need d_max > d_min > 0, got d_min={self.d_min}, d_max={self.d_max}")
        for name in ("headway", "gain1", "gain2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")

    @property
    def gap_range(self) -> float:
        return self.d_max - self.d_min


@dataclass(frozen=True)
class PairDiagnostics:
    xi: float
    headway_err: float
    funnel_var: float
    funnel_gain: float
    control: float
    funnel_margin: float


# -- scalar control law ------------------------------------------------------


def spacing_error(x_self: float, x_pred: float, cp: ControllerParams) -> float:
    return x_self - x_pred + cp.d_min


def funnel_variable(dv: float, xi: float, cp: ControllerParams) -> float:
    M = cp.gap_range
    if not xi < 0:
        raise DomainError("spacing-lower", xi)
    if not xi > -M:
        raise DomainError("spacing-upper", xi)
    return dv - (1.0 / xi + 1.0 / (M + xi))


def funnel_gain(t: float, w: float, cp: ControllerParams) -> float:
    margin = float(cp.funnel(t)) - abs(w)
    if not margin > 0:
        raise FunnelViolation(margin, t=t)
    return 1.0 / margin


def control_input(
    t: float, x_self: float, v_self: float, x_pred: float, v_pred: float, cp: ControllerParams
) -> PairDiagnostics:
    xi = spacing_error(x_self, x_pred, cp)
    dv = v_self - v_pred
    w = funnel_variable(dv, xi, cp)
    k3 = funnel_gain(t, w, cp)
    e = xi + cp.headway * v_self
    u = -cp.gain1 * dv - cp.gain2 * e - k3 * w
    return PairDiagnostics(
        xi=xi,
        headway_err=e,
        funnel_var=w,
        funnel_gain=k3,
        control=u,
        funnel_margin=1.0 / k3,
    )


# -- vectorised law and domain membership ------------------------------------


@dataclass
class DomainReport:
    ok: bool
    index: Optional[int] = None  # 1-based follower index of the first violation
    kind: Optional[str] = None
    value: Optional[float] = None

    def __bool__(self) -> bool:
        return self.ok


def _first_violation(gaps: np.ndarray, w: Optional[np.ndarray], psi: float, cp: ControllerParams) -> DomainReport:
    for j, gap in enumerate(gaps):
        if not gap > cp.d_min:
            return DomainReport(False, j + 1, "spacing-lower", float(gap))
        if not gap < cp.d_max:
            return DomainReport(False, j + 1, "spacing-upper", float(gap))
        if w is not None and not abs(w[j]) < psi:
            return DomainReport(False, j + 1, "funnel", float(psi - abs(w[j])))
    return DomainReport(True)


def chain_gaps(x0: float, positions: np.ndarray) -> np.ndarray:
    """Gaps ``x_{i-1} - x_i`` for i = 1..N, the leader supplying ``x_0``."""
    positions = np.asarray(positions, float)
    pred = np.empty_like(positions)
    pred[0] = x0
    pred[1:] = positions[:-1]
    return pred - positions


def chain_relative_velocity(v0: float, velocities: np.ndarray) -> np.ndarray:
    velocities = np.asarray(velocities, float)
    pred = np.empty_like(velocities)
    pred[0] = v0
    pred[1:] = velocities[:-1]
    return velocities - pred


def chain_control(t: float, gaps: np.ndarray, dv: np.ndarray, v: np.ndarray, cp: ControllerParams):
    """Control law for a whole chain at once.

    Returns ``(u, xi, e, w, k3, psi)`` as arrays (``psi`` scalar) or raises
    :class:`DomainError` naming the first offending follower.
    """
    psi = float(cp.funnel(t))
    M = cp.gap_range
    if not (np.all(gaps > cp.d_min) and np.all(gaps < cp.d_max)):
        rep = _first_violation(gaps, None, psi, cp)
        raise DomainError(rep.kind, rep.value, rep.index, t)
    xi = cp.d_min - gaps
    w = dv - (1.0 / xi + 1.0 / (M + xi))
    margin = psi - np.abs(w)
    if not np.all(margin > 0):
        j = int(np.argmax(~(margin > 0)))
        raise FunnelViolation(float(margin[j]), j + 1, t)
    k3 = 1.0 / margin
    e = xi + cp.headway * v
    u = -cp.gain1 * dv - cp.gain2 * e - k3 * w
    return u, xi, e, w, k3, psi


def in_domain(t: float, leader: tuple[float, float], positions, velocities, cp: ControllerParams) -> DomainReport:
    """Membership of ``(t, x, v)`` in the intersection of all corridors and funnels."""
    x0, v0 = leader
    gaps = chain_gaps(x0, positions)
    dv = chain_relative_velocity(v0, velocities)
    psi = float(cp.funnel(t))
    # spacing is checked before the funnel at each index, so w at a broken gap is never read
    with np.errstate(divide="ignore", invalid="ignore"):
        xi = cp.d_min - gaps
        w = dv - (1.0 / xi + 1.0 / (cp.gap_range + xi))
    return _first_violation(gaps, w, psi, cp)


def exponential_funnel_admissible(amp: float, decay: float, floor: float) -> bool:
    return amp >= 0 and decay > 0 and floor > 0 and math.isfinite(amp + decay + floor)
