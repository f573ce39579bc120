"""Closed-loop platoon simulation.

The state holds follower positions and velocities only; the leader enters
as a forcing signal evaluated inside the vector field.  Stepping is done by
:mod:`funnelplatoon.integrators`: a step is rejected and halved whenever one
of its stages leaves the safety domain (a gap outside ``(d_min, d_max)`` or
``|w_i| >= psi(t)``).

The closed loop need not have unique solutions; what is computed is the
trajectory of this discretisation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.special import erf

from . import integrators
from .controller import ControllerParams, DomainError, chain_control, chain_gaps, chain_relative_velocity
from .dynamics import G, VehicleParams
from .leader import LeaderTrajectory
from .profiles import Constant

_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)


@dataclass(frozen=True)
class Checks:
    """Monitor settings carried in a scenario config.

    ``mass_chain`` is ``(p, q, N0)`` for the mass-ordering assumption; ``None``
    means the finite-platoon reading ``N0 = N + 1``.  ``d_bar`` overrides the
    analytic bound on gravity, rolling friction and disturbance.
    """

    enabled: bool = True
    mass_chain: Optional[tuple[float, float, int]] = None
    d_bar: Optional[float] = None


@dataclass(frozen=True)
class ScenarioConfig:
    vehicles: tuple[VehicleParams, ...]
    controller: ControllerParams
    leader: LeaderTrajectory
    initial_gaps: tuple[float, ...]
    initial_velocities: tuple[float, ...]
    horizon: float = 40.0
    sample_step: float = 0.01
    rtol: float = 1e-10
    atol: float = 1e-10
    method: str = "rodas4"
    max_step: float = 0.25
    min_step: float = 1e-12
    checks: Checks = Checks()

    def __post_init__(self):
        object.__setattr__(self, "vehicles", tuple(self.vehicles))
        object.__setattr__(self, "initial_gaps", tuple(float(g) for g in self.initial_gaps))
        object.__setattr__(self, "initial_velocities", tuple(float(v) for v in self.initial_velocities))
        n = len(self.vehicles)
        if n < 1:
            raise ValueError("a platoon needs at least one follower")
        if len(self.initial_gaps) != n or len(self.initial_velocities) != n:
            raise ValueError(
                f"expected {n} initial gaps and velocities, got "
                f"{len(self.initial_gaps)} and {len(self.initial_velocities)}"
            )
        if any(not g > 0 for g in self.initial_gaps):
            raise ValueError("initial positions must be strictly decreasing along the chain")
        if not self.horizon >= 0:
            raise ValueError("horizon must be non-negative")
        if not self.sample_step > 0:
            raise ValueError("sample_step must be positive")
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("integrator tolerances must be positive")
        if self.method not in integrators.METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {sorted(integrators.METHODS)}")
        if not self.max_step > self.min_step > 0:
            raise ValueError("need max_step > min_step > 0")

    @property
    def n(self) -> int:
        return len(self.vehicles)

    @property
    def masses(self) -> np.ndarray:
        return np.array([p.mass for p in self.vehicles])

    def initial_state(self) -> "PlatoonState":
        x0 = self.leader.eval(0.0)[0]
        positions = x0 - np.cumsum(self.initial_gaps)
        return PlatoonState(0.0, positions, np.array(self.initial_velocities, dtype=float))

    def replace(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)


@dataclass
class PlatoonState:
    time: float
    positions: np.ndarray
    velocities: np.ndarray

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        self.velocities = np.asarray(self.velocities, dtype=float)
        if self.positions.shape != self.velocities.shape or self.positions.ndim != 1 or self.positions.size < 1:
            raise ValueError("positions and velocities must be equal-length 1-D vectors")

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.positions, self.velocities])


@dataclass
class RunStats:
    method: str = ""
    n_steps: int = 0
    n_rejected: int = 0
    n_domain_rejected: int = 0
    n_rhs: int = 0
    n_jacobians: int = 0
    smallest_step: float = math.inf
    # minima over accepted integration points, not just output samples
    min_funnel_margin: float = math.inf
    min_spacing_margin: float = math.inf


@dataclass
class SimulationTrace:
    """Sampled closed-loop history; arrays are ``(samples,)`` or ``(samples, N)``.

    ``leader`` columns are ``x0, v0, a0``.  ``xi`` and ``e`` are absent on
    traces read back from CSV.
    """

    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    a: np.ndarray
    u: np.ndarray
    gap: np.ndarray
    w: np.ndarray
    k3: np.ndarray
    psi: np.ndarray
    leader: np.ndarray
    xi: Optional[np.ndarray] = None
    e: Optional[np.ndarray] = None
    stats: RunStats = field(default_factory=RunStats)

    @property
    def n(self) -> int:
        return self.x.shape[1]

    @property
    def margin(self) -> np.ndarray:
        """Funnel margin ``psi(t) - |w_i(t)|``."""
        return self.psi[:, None] - np.abs(self.w)

    def __len__(self) -> int:
        return len(self.t)


class DomainExit(RuntimeError):
    """No step could be completed inside the safety domain at the minimum step size.

    Under the theorem's hypotheses this cannot happen, so it signals invalid
    parameters (e.g. ``k2`` too small) or a step floor that is too coarse.
    """

    def __init__(self, t: float, cause: Optional[DomainError], history: list[tuple[float, float, float]]):
        self.t = t
        self.index = getattr(cause, "index", None)
        self.kind = getattr(cause, "kind", "step-size")
        self.value = getattr(cause, "value", None)
        self.history = history  # (t, min funnel margin, min spacing margin) of the last accepted steps
        super().__init__(f"could not stay in the safety domain at t={t:.9g}: {cause}")


class NonFiniteState(RuntimeError):
    def __init__(self, t: float, last_good: PlatoonState):
        self.t = t
        self.last_good = last_good
        super().__init__(f"state became non-finite after t={t:.9g}")


# -- vector field -------------------------------------------------------------


class _ChainModel:
    """Vectorised resistive forces for all followers; constant profiles are precomputed."""

    def __init__(self, vehicles):
        self.vehicles = vehicles
        self.m = np.array([p.mass for p in vehicles])
        self.alpha = np.array([p.friction_smoothing for p in vehicles])
        self.cda = np.array([0.5 * p.drag_coeff * p.frontal_area for p in vehicles])
        self.mgcr = self.m * G * np.array([p.rolling_coeff for p in vehicles])

        self.slope_const = all(isinstance(p.slope, Constant) for p in vehicles)
        if self.slope_const:
            self.gravity = self.m * G * np.sin([p.slope.value for p in vehicles])
        self.rho_const = all(isinstance(p.air_density, Constant) for p in vehicles)
        if self.rho_const:
            self.rho = np.array([p.air_density.value for p in vehicles])
        self.dist_const = all(isinstance(p.disturbance, Constant) for p in vehicles)
        if self.dist_const:
            self.dist = np.array([p.disturbance.value for p in vehicles])
        self.x_dependent = not (self.slope_const and self.rho_const)
        self.t_dependent = not (self.rho_const and self.dist_const)

    def _grav(self, x):
        if self.slope_const:
            return self.gravity
        return self.m * G * np.sin([p.slope(xi) for p, xi in zip(self.vehicles, x)])

    def _rho(self, t, x):
        if self.rho_const:
            return self.rho
        return np.array([p.air_density(t, xi) for p, xi in zip(self.vehicles, x)])

    def _dist(self, t):
        if self.dist_const:
            return self.dist
        return np.array([p.disturbance(t) for p in self.vehicles])

    def net_force(self, t: float, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        """``d(t) - f(t, x, v)`` per follower."""
        return self._dist(t) - self._grav(x) - self._rho(t, x) * self.cda * v * np.abs(v) - self.mgcr * erf(self.alpha * v)

    def d_net_force_dv(self, t, x, v) -> np.ndarray:
        av = self.alpha * v
        return -2.0 * self._rho(t, x) * self.cda * np.abs(v) - self.mgcr * self.alpha * _TWO_OVER_SQRT_PI * np.exp(-av * av)

    def d_net_force_dx(self, t, x, v) -> np.ndarray:
        if not self.x_dependent:
            return np.zeros_like(x)
        dx = 1e-6 * np.maximum(1.0, np.abs(x))
        return (self.net_force(t, x + dx, v) - self.net_force(t, x - dx, v)) / (2 * dx)

    def d_net_force_dt(self, t, x, v) -> np.ndarray:
        if not self.t_dependent:
            return np.zeros_like(x)
        dt = 1e-6 * max(1.0, abs(t))
        return (self.net_force(t + dt, x, v) - self.net_force(max(t - dt, 0.0), x, v)) / (t + dt - max(t - dt, 0.0))


class ClosedLoop:
    """Closed-loop vector field ``y' = f(t, y)`` with ``y = (x_1..x_N, v_1..v_N)``."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.cp: ControllerParams = cfg.controller
        self.leader = cfg.leader
        self.model = _ChainModel(cfg.vehicles)
        self.n = cfg.n
        self.calls = 0

    def evaluate(self, t: float, y: np.ndarray):
        """Vector field and controller internals; raises :class:`DomainError` outside the domain."""
        self.calls += 1
        n = self.n
        x, v = y[:n], y[n:]
        lead = self.leader.eval(t)
        gaps = chain_gaps(lead[0], x)
        dv = chain_relative_velocity(lead[1], v)
        u, xi, e, w, k3, psi = chain_control(t, gaps, dv, v, self.cp)
        acc = (u + self.model.net_force(t, x, v)) / self.model.m
        return np.concatenate([v, acc]), (lead, gaps, u, xi, e, w, k3, psi, acc)

    def __call__(self, t: float, y: np.ndarray) -> np.ndarray:
        return self.evaluate(t, y)[0]

    def linearize(self, t: float, y: np.ndarray, f=None, aux=None):
        """Exact Jacobian ``df/dy`` and explicit time derivative ``df/dt``."""
        if aux is None:
            f, aux = self.evaluate(t, y)
        n = self.n
        cp = self.cp
        x, v = y[:n], y[n:]
        lead, _, _, xi, _, w, k3, psi, _ = aux
        M = cp.gap_range
        m = self.model.m
        # d(k3 w)/dw = psi k3^2, dw/dxi = 1/xi^2 + 1/(M + xi)^2
        g = psi * k3 * k3
        b = 1.0 / xi**2 + 1.0 / (M + xi) ** 2
        du_dx_self = -cp.gain2 - g * b
        du_dv_self = -cp.gain1 - cp.gain2 * cp.headway - g
        du_dv_pred = cp.gain1 + g

        J = np.zeros((2 * n, 2 * n))
        idx = np.arange(n)
        J[idx, n + idx] = 1.0
        J[n + idx, idx] = (du_dx_self + self.model.d_net_force_dx(t, x, v)) / m
        J[n + idx, n + idx] = (du_dv_self + self.model.d_net_force_dv(t, x, v)) / m
        if n > 1:
            J[n + idx[1:], idx[:-1]] = -du_dx_self[1:] / m[1:]
            J[n + idx[1:], n + idx[:-1]] = du_dv_pred[1:] / m[1:]

        ft = np.zeros(2 * n)
        # psi enters every follower through k3: du/dpsi = w k3^2
        ft[n:] = w * k3 * k3 * float(self.cp.funnel.derivative(t)) + self.model.d_net_force_dt(t, x, v)
        # the leader enters follower 1 through x0(t) and v0(t)
        ft[n] += -du_dx_self[0] * lead[1] + du_dv_pred[0] * lead[2]
        ft[n:] /= m
        return J, ft


def rhs(t: float, state: PlatoonState, cfg: ScenarioConfig) -> tuple[np.ndarray, np.ndarray]:
    """Derivative ``(x', v')`` of the closed loop at ``(t, state)``."""
    f = ClosedLoop(cfg)(t, state.as_vector())
    n = cfg.n
    return f[:n], f[n:]


def sample_times(horizon: float, step: float) -> np.ndarray:
    """``0, step, 2 step, ...`` up to ``horizon``, with ``horizon`` appended if off-grid."""
    n = int(math.floor(horizon / step + 1e-9))
    ts = np.arange(n + 1) * step
    if horizon - ts[-1] > 1e-9 * max(1.0, horizon):
        ts = np.append(ts, horizon)
    else:
        ts[-1] = min(ts[-1], horizon)
    return ts


def integrate(
    cfg: ScenarioConfig,
    *,
    rtol: Optional[float] = None,
    atol: Optional[float] = None,
    sample_step: Optional[float] = None,
    method: Optional[str] = None,
) -> SimulationTrace:
    """Integrate the closed loop over ``[0, cfg.horizon]`` and sample it.

    Raises :class:`DomainExit` if no step can be completed inside the safety
    domain and :class:`NonFiniteState` on overflow.
    """
    loop = ClosedLoop(cfg)
    ts = sample_times(cfg.horizon, cfg.sample_step if sample_step is None else sample_step)
    stats = RunStats(method=method or cfg.method)
    history: list[tuple[float, float, float]] = []
    d_min, d_max = cfg.controller.d_min, cfg.controller.d_max

    def on_accept(t, y, aux):
        _, gaps, _, _, _, w, _, psi, _ = aux
        fm = float(np.min(psi - np.abs(w)))
        sm = float(np.min(np.minimum(gaps - d_min, d_max - gaps)))
        stats.min_funnel_margin = min(stats.min_funnel_margin, fm)
        stats.min_spacing_margin = min(stats.min_spacing_margin, sm)
        history.append((t, fm, sm))
        if len(history) > 64:
            del history[:32]

    y0 = cfg.initial_state().as_vector()
    try:
        ys, st = integrators.solve(
            loop,
            y0,
            ts,
            method=stats.method,
            rtol=cfg.rtol if rtol is None else rtol,
            atol=cfg.atol if atol is None else atol,
            max_step=cfg.max_step,
            min_step=cfg.min_step,
            breakpoints=cfg.leader.breakpoints(),
            on_accept=on_accept,
        )
    except DomainError as exc:
        # the initial state itself is outside the domain
        raise DomainExit(0.0, exc, []) from exc
    except integrators.StepSizeUnderflow as exc:
        raise DomainExit(exc.t, exc.cause, history[-20:]) from exc
    except integrators.NonFinite as exc:
        n = cfg.n
        raise NonFiniteState(exc.t, PlatoonState(exc.t, exc.y[:n], exc.y[n:])) from exc

    stats.n_steps = st.n_steps
    stats.n_rejected = st.n_rejected
    stats.n_domain_rejected = st.n_domain_rejected
    stats.n_jacobians = st.n_jacobians
    stats.smallest_step = st.smallest_step
    trace = _assemble(cfg, loop, ts, ys, stats)
    stats.n_rhs = loop.calls
    return trace


def _assemble(cfg, loop, ts, ys, stats) -> SimulationTrace:
    n = cfg.n
    S = len(ts)
    cols = {name: np.empty((S, n)) for name in ("a", "u", "gap", "xi", "e", "w", "k3")}
    psi = np.empty(S)
    lead = np.empty((S, 3))
    for k in range(S):
        try:
            _, (ld, g, uk, xik, ek, wk, k3k, psik, acc) = loop.evaluate(float(ts[k]), ys[k])
        except DomainError as exc:
            # interpolated sample outside the domain although both step ends were inside
            raise DomainExit(float(ts[k]), exc, []) from exc
        cols["a"][k], cols["u"][k], cols["gap"][k] = acc, uk, g
        cols["xi"][k], cols["e"][k], cols["w"][k], cols["k3"][k] = xik, ek, wk, k3k
        psi[k] = psik
        lead[k] = ld
    return SimulationTrace(
        t=ts, x=ys[:, :n].copy(), v=ys[:, n:].copy(), psi=psi, leader=lead, stats=stats, **cols
    )


def refine_check(cfg: ScenarioConfig) -> float:
    """Max-norm state deviation between runs at ``(rtol, atol)`` and ``(rtol/10, atol/10)``."""
    coarse = integrate(cfg)
    fine = integrate(cfg, rtol=cfg.rtol / 10, atol=cfg.atol / 10)
    return float(max(np.abs(coarse.x - fine.x).max(initial=0.0), np.abs(coarse.v - fine.v).max(initial=0.0)))
