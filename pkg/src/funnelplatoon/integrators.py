"""Adaptive one-step integrators that respect a state-space domain.

The system object passed to :func:`solve` provides

* ``evaluate(t, y) -> (f, aux)``, raising :class:`DomainError` when ``(t, y)``
  lies outside the domain where the vector field is defined, and
* ``linearize(t, y, f, aux) -> (J, f_t)`` (only needed by :class:`Rodas4`).

Every stage of a step is evaluated through ``evaluate``; a step with a stage
outside the domain is rejected and retried with half the step size.  Output
at requested sample times is produced by cubic Hermite interpolation on the
accepted steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .controller import DomainError


@dataclass
class StepStats:
    n_steps: int = 0
    n_rejected: int = 0
    n_domain_rejected: int = 0
    n_jacobians: int = 0
    smallest_step: float = math.inf


class StepSizeUnderflow(RuntimeError):
    """The step size fell below the floor; ``cause`` is the last domain error, if any."""

    def __init__(self, t: float, h: float, cause: Optional[DomainError]):
        self.t = t
        self.h = h
        self.cause = cause
        reason = f": {cause}" if cause is not None else ""
        super().__init__(f"step size {h:.3g} below floor at t={t:.9g}{reason}")


class NonFinite(RuntimeError):
    def __init__(self, t: float, y: np.ndarray):
        self.t = t
        self.y = y
        super().__init__(f"non-finite state produced after t={t:.9g}")


class DormandPrince:
    """Explicit Dormand-Prince 5(4) pair, FSAL, propagating the 5th-order solution."""

    name = "dopri5"
    error_order = 4
    c = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
    a = [
        np.array(row)
        for row in (
            [],
            [1 / 5],
            [3 / 40, 9 / 40],
            [44 / 45, -56 / 15, 32 / 9],
            [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
            [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
            [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
        )
    ]
    e = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])

    def step(self, system, t, y, f, aux, h, stats):
        K = np.empty((7, y.size))
        K[0] = f
        for s in range(1, 6):
            K[s] = system.evaluate(t + self.c[s] * h, y + h * (self.a[s] @ K[:s]))[0]
        y_new = y + h * (self.a[6] @ K[:6])
        f_new, aux_new = system.evaluate(t + h, y_new)
        K[6] = f_new
        return y_new, f_new, aux_new, h * (self.e @ K)


class Rodas4:
    """Stiffly accurate, L-stable Rosenbrock method of order 4(3).

    Needs the exact Jacobian ``J = df/dy`` and the explicit time derivative
    ``f_t``.  The Jacobian is computed once per step start and reused across
    rejected attempts from the same point.
    """

    name = "rodas4"
    error_order = 3
    gamma = 0.25
    c2, c3, c4 = 0.386, 0.21, 0.63
    d = (0.25, -0.1043, 0.1035, -0.0362)
    a21 = 1.544
    a31, a32 = 0.9466785280815826, 0.2557011698983284
    a41, a42, a43 = 3.314825187068521, 2.896124015972201, 0.9986419139977817
    a51, a52, a53, a54 = 1.221224509226641, 6.019134481288629, 12.53708332932087, -0.6878860361058950
    c21 = -5.6688
    c31, c32 = -2.430093356833875, -0.2063599157091915
    c41, c42, c43 = -0.1073529058151375, -9.594562251023355, -20.47028614809616
    c51, c52, c53, c54 = 7.496443313967647, -10.24680431464352, -33.99990352819905, 11.70890893206160
    c61, c62, c63, c64, c65 = (
        8.083246795921522, -7.981132988064893, -31.52159432874371, 16.31930543123136, -6.058818238834054,
    )

    def __init__(self):
        self._lin_at = None
        self._lin = None

    def step(self, system, t, y, f, aux, h, stats):
        if self._lin_at != t:
            self._lin = system.linearize(t, y, f, aux)
            self._lin_at = t
            stats.n_jacobians += 1
        J, ft = self._lin
        n = y.size
        lu = lu_factor(np.eye(n) / (h * self.gamma) - J)
        d1, d2, d3, d4 = self.d
        ev = system.evaluate

        k1 = lu_solve(lu, f + h * d1 * ft)
        k2 = lu_solve(lu, ev(t + self.c2 * h, y + self.a21 * k1)[0] + h * d2 * ft + (self.c21 / h) * k1)
        k3 = lu_solve(
            lu,
            ev(t + self.c3 * h, y + self.a31 * k1 + self.a32 * k2)[0]
            + h * d3 * ft
            + (self.c31 * k1 + self.c32 * k2) / h,
        )
        k4 = lu_solve(
            lu,
            ev(t + self.c4 * h, y + self.a41 * k1 + self.a42 * k2 + self.a43 * k3)[0]
            + h * d4 * ft
            + (self.c41 * k1 + self.c42 * k2 + self.c43 * k3) / h,
        )
        y5 = y + self.a51 * k1 + self.a52 * k2 + self.a53 * k3 + self.a54 * k4
        k5 = lu_solve(lu, ev(t + h, y5)[0] + (self.c51 * k1 + self.c52 * k2 + self.c53 * k3 + self.c54 * k4) / h)
        y6 = y5 + k5
        k6 = lu_solve(
            lu,
            ev(t + h, y6)[0]
            + (self.c61 * k1 + self.c62 * k2 + self.c63 * k3 + self.c64 * k4 + self.c65 * k5) / h,
        )
        y_new = y6 + k6
        f_new, aux_new = ev(t + h, y_new)
        return y_new, f_new, aux_new, k6


METHODS = {"dopri5": DormandPrince, "rodas4": Rodas4}


def hermite(t0, y0, f0, t1, y1, f1, ts):
    h = t1 - t0
    s = ((np.asarray(ts) - t0) / h)[:, None]
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1


def _initial_step(system, t0, y0, f0, rtol, atol, max_step, order):
    sc = atol + rtol * np.abs(y0)
    d0 = math.sqrt(float(np.mean((y0 / sc) ** 2)))
    d1 = math.sqrt(float(np.mean((f0 / sc) ** 2)))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, max_step)
    try:
        f1 = system.evaluate(t0 + h0, y0 + h0 * f0)[0]
    except DomainError:
        return h0
    d2 = math.sqrt(float(np.mean(((f1 - f0) / sc) ** 2))) / h0
    dm = max(d1, d2)
    h1 = max(1e-6, h0 * 1e-3) if dm <= 1e-15 else (0.01 / dm) ** (1.0 / (order + 1))
    return min(100 * h0, h1, max_step)


def solve(
    system,
    y0: np.ndarray,
    sample_ts: Sequence[float],
    *,
    method: str = "rodas4",
    rtol: float = 1e-10,
    atol: float = 1e-10,
    max_step: float = np.inf,
    min_step: float = 1e-12,
    breakpoints: Sequence[float] = (),
    on_accept: Optional[Callable] = None,
):
    """Integrate from ``sample_ts[0]`` to ``sample_ts[-1]``; returns ``(states, stats)``.

    ``states[k]`` is the solution at ``sample_ts[k]``.  Steps never straddle
    a breakpoint.  ``on_accept(t, y, aux)`` is called after each accepted
    step.
    """
    stepper = METHODS[method]()
    ts = np.asarray(sample_ts, dtype=float)
    t = float(ts[0])
    t_final = float(ts[-1])
    y = np.array(y0, dtype=float)
    out = np.empty((len(ts), y.size))
    out[0] = y
    stats = StepStats()
    f, aux = system.evaluate(t, y)
    if len(ts) == 1:
        return out, stats

    breaks = sorted(b for b in breakpoints if t < b < t_final)
    k_next = 1
    beta = 0.04
    alpha = 1.0 / (stepper.error_order + 1) - 0.75 * beta
    h = _initial_step(system, t, y, f, rtol, atol, max_step, stepper.error_order)
    err_old = 1e-4
    last_rejected = False
    last_domain: Optional[DomainError] = None

    while k_next < len(ts):
        h = h_try = min(h, max_step)
        t_end = next((b for b in breaks if b > t), t_final)
        hit = t + h >= t_end - 1e-14 * max(1.0, abs(t_end))
        if hit:
            h = t_end - t
        elif h < min_step:
            raise StepSizeUnderflow(t, h, last_domain)

        try:
            y_new, f_new, aux_new, err_vec = stepper.step(system, t, y, f, aux, h, stats)
        except DomainError as exc:
            stats.n_rejected += 1
            stats.n_domain_rejected += 1
            last_domain = exc
            last_rejected = True
            h *= 0.5
            if h < min_step:
                raise StepSizeUnderflow(t, h, exc) from exc
            continue

        if not (np.all(np.isfinite(y_new)) and np.all(np.isfinite(err_vec))):
            raise NonFinite(t, y.copy())

        sc = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = math.sqrt(float(np.mean((err_vec / sc) ** 2)))

        if err > 1.0:
            stats.n_rejected += 1
            last_rejected = True
            h *= max(0.2, 0.9 / err**alpha)
            continue

        t_new = t_end if hit else t + h
        k_stop = k_next
        while k_stop < len(ts) and ts[k_stop] <= t_new + 1e-12:
            k_stop += 1
        if k_stop > k_next:
            out[k_next:k_stop] = hermite(t, y, f, t_new, y_new, f_new, ts[k_next:k_stop])
            k_next = k_stop

        stats.n_steps += 1
        stats.smallest_step = min(stats.smallest_step, h)
        if on_accept is not None:
            on_accept(t_new, y_new, aux_new)

        fac = 0.9 * err_old**beta / max(err, 1e-10) ** alpha
        fac = min(10.0, max(0.2, fac))
        if last_rejected:
            fac = min(fac, 1.0)
        err_old = max(err, 1e-4)
        h_next = h * fac
        if hit:
            # a step shortened to land on a breakpoint says little about the natural size
            h_next = max(h_next, min(h_try, h * 10.0))
        t, y, f, aux = t_new, y_new, f_new, aux_new
        h = h_next
        last_rejected = False
        last_domain = None

    return out, stats
