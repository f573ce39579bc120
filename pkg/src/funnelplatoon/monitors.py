"""Assumption validators, theorem constants and trace checks.

The funnel margin ``eps2`` used in the velocity bound is the empirical one,
``min over i, t of psi(t) - |w_i(t)|`` read from a trace.  It is labelled
``eps2_emp`` everywhere to keep it apart from the existential constant of
the stability result.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .controller import ControllerParams, chain_gaps, chain_relative_velocity
from .dynamics import G
from .profiles import sup_abs
from .simulator import ScenarioConfig, SimulationTrace


class AssumptionViolation(ValueError):
    """A scenario violates a standing assumption; ``quantity`` names what failed."""

    def __init__(self, assumption: str, quantity: str, value: float, index: Optional[int] = None):
        self.assumption = assumption
        self.quantity = quantity
        self.value = value
        self.index = index
        where = "" if index is None else f" (vehicle {index})"
        super().__init__(f"{assumption}: {quantity} = {value!r}{where}")


# -- initial-data slack and corridor margin ----------------------------------


def initial_slacks(cfg: ScenarioConfig) -> np.ndarray:
    """Per-follower slacks ``(xi + M, -xi, psi(0) - |w|)`` at t = 0, shape ``(N, 3)``."""
    cp = cfg.controller
    st = cfg.initial_state()
    x0, v0, _ = cfg.leader.eval(0.0)
    xi = cp.d_min - chain_gaps(x0, st.positions)
    dv = chain_relative_velocity(v0, st.velocities)
    M = cp.gap_range
    with np.errstate(divide="ignore", invalid="ignore"):
        w = dv - (1.0 / xi + 1.0 / (M + xi))
    psi0 = float(cp.funnel(0.0))
    slack = np.column_stack([xi + M, -xi, psi0 - np.abs(w)])
    # outside the corridor the funnel slack is meaningless
    slack[:, 2] = np.where((slack[:, 0] > 0) & (slack[:, 1] > 0), slack[:, 2], -np.inf)
    return slack


def delta_of_initial(cfg: ScenarioConfig) -> float:
    """Smallest initial slack ``delta``; raises if it is not positive or a velocity is too large."""
    slack = initial_slacks(cfg)
    names = ("xi + M", "-xi", "psi(0) - |w|")
    flat = int(np.argmin(slack))
    i, j = divmod(flat, 3)
    delta = float(slack[i, j])
    if not delta > 0:
        raise AssumptionViolation("initial interiority", names[j], delta, i + 1)
    cap = cfg.controller.gap_range / cfg.controller.headway
    v = np.abs(np.asarray(cfg.initial_velocities))
    if np.any(v > cap):
        k = int(np.argmax(v > cap))
        raise AssumptionViolation("initial velocity cap M/lambda", "|v_i(0)|", float(v[k]), k + 1)
    return delta


def epsilon1(funnel, delta: float) -> float:
    """Uniform corridor margin ``1 / (sup psi + 1/delta)``."""
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if math.isinf(delta):
        return 1.0 / funnel.sup
    return 1.0 / (funnel.sup + 1.0 / delta)


# -- mass ordering -------------------------------------------------------------


@dataclass(frozen=True)
class MassChainStatus:
    status: str  # "holds", "vacuous" or "fails"
    p: float
    q: float
    n0: int
    index: Optional[int] = None  # first failing i (1-based) when status == "fails"
    reason: str = ""

    def __bool__(self) -> bool:
        return self.status != "fails"


def mass_chain_check(masses: Sequence[float], p: float, q: float, n0: int) -> MassChainStatus:
    """Check ``|m_i - m_{i-1}| <= p m_i`` and ``m_i <= q m_{i-1}`` for ``i = max(n0, 2) .. N``.

    ``masses[0]`` is vehicle 1.  The two inequalities together force
    ``(1 + p) q >= 1`` whenever the index range is non-empty, so with
    admissible ``(p, q)`` only the vacuous case can pass.
    """
    if not (0 < p < 1 and 0 < q < 1):
        raise ValueError(f"p and q must lie in (0, 1), got p={p}, q={q}")
    if not (1 + p) * q < 1:
        raise ValueError(f"(1 + p) q must be < 1, got {(1 + p) * q}")
    m = np.asarray(masses, dtype=float)
    n = len(m)
    if n0 > n:
        return MassChainStatus("vacuous", p, q, n0)
    for i in range(max(n0, 2), n + 1):
        prev, cur = m[i - 2], m[i - 1]
        if abs(cur - prev) > p * cur:
            return MassChainStatus("fails", p, q, n0, i, f"|m_{i} - m_{i - 1}| = {abs(cur - prev):g} > p m_{i}")
        if cur > q * prev:
            return MassChainStatus("fails", p, q, n0, i, f"m_{i} = {cur:g} > q m_{i - 1} = {q * prev:g}")
    return MassChainStatus("holds", p, q, n0)


# -- model bounds ----------------------------------------------------------------


def d_bar_estimate(cfg: ScenarioConfig, horizon: Optional[float] = None) -> float:
    """Bound on ``|gravity + rolling friction + disturbance|`` over all vehicles.

    Uses the profiles' analytic suprema; ``horizon`` is accepted for
    interface symmetry but the bound holds for all times and positions.
    """
    best = 0.0
    for p in cfg.vehicles:
        theta = min(sup_abs(p.slope), math.pi / 2)
        val = p.mass * G * (math.sin(theta) + p.rolling_coeff) + sup_abs(p.disturbance)
        best = max(best, val)
    return best


def rho_bar_estimate(cfg: ScenarioConfig) -> float:
    """Bound on ``rho C_d A / 2`` over all vehicles."""
    return max(0.5 * sup_abs(p.air_density) * p.drag_coeff * p.frontal_area for p in cfg.vehicles)


def gain_heuristic(masses: Sequence[float]) -> tuple[float, float]:
    """Rule-of-thumb gains ``k1 = k2 = 2 max(m)``."""
    if len(masses) == 0:
        raise ValueError("need at least one mass")
    k = 2.0 * float(max(masses))
    return k, k


def attenuation(cp: ControllerParams) -> float:
    return cp.gain1 / (cp.gain1 + cp.headway * cp.gain2)


# -- reports ---------------------------------------------------------------------


@dataclass
class AssumptionReport:
    d_bar: float
    m_bar: float
    rho_bar: float
    delta: float
    mass_chain: MassChainStatus
    velocity_cap_ok: bool
    interior_ok: bool
    problems: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.interior_ok and self.velocity_cap_ok and bool(self.mass_chain)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ok"] = self.ok
        return d


def assumption_report(cfg: ScenarioConfig) -> AssumptionReport:
    """Evaluate all standing assumptions without raising."""
    problems = []
    slack = initial_slacks(cfg)
    delta = float(slack.min())
    interior_ok = delta > 0
    if not interior_ok:
        i, j = divmod(int(np.argmin(slack)), 3)
        problems.append(f"initial state not interior at vehicle {i + 1} (slack {('xi + M', '-xi', 'psi(0) - |w|')[j]} = {delta:g})")
    cap = cfg.controller.gap_range / cfg.controller.headway
    vel_ok = bool(np.all(np.abs(cfg.initial_velocities) <= cap))
    if not vel_ok:
        problems.append(f"an initial velocity exceeds M/lambda = {cap:g}")
    chain = cfg.checks.mass_chain
    if chain is None:
        mc = MassChainStatus("vacuous", float("nan"), float("nan"), cfg.n + 1)
    else:
        p, q, n0 = chain
        mc = mass_chain_check(cfg.masses, p, q, int(n0))
        if not mc:
            problems.append(f"mass ordering fails at vehicle {mc.index}: {mc.reason}")
    d_bar = cfg.checks.d_bar if cfg.checks.d_bar is not None else d_bar_estimate(cfg)
    return AssumptionReport(
        d_bar=float(d_bar),
        m_bar=float(cfg.masses.max()),
        rho_bar=rho_bar_estimate(cfg),
        delta=delta,
        mass_chain=mc,
        velocity_cap_ok=vel_ok,
        interior_ok=interior_ok,
        problems=problems,
    )


@dataclass
class VehicleCheck:
    index: int
    v_sup: float
    v_bound: float
    u_sup: float
    a_sup: float
    gap_min: float
    gap_max: float
    margin_min: float
    velocity_ok: bool


@dataclass
class TheoremReport:
    eps1: float
    eps2_emp: float
    corridor_margin: float  # min over i, t of the distance of the gap to the corridor edges
    corridor_ok: bool  # every gap in [d_min + eps1, d_max - eps1]
    corridor_strict_ok: bool  # every gap in (d_min, d_max)
    funnel_ok: bool
    inputs_finite: bool
    velocity_ok: bool
    C1: float
    C2: float
    attenuation: float
    v0_sup: float
    d_bar: float
    vehicles: list[VehicleCheck]

    @property
    def input_sup(self) -> list[float]:
        return [c.u_sup for c in self.vehicles]

    @property
    def velocity_bounds(self) -> list[tuple[float, float]]:
        return [(c.v_sup, c.v_bound) for c in self.vehicles]

    @property
    def passed(self) -> bool:
        """Hard claims only; the velocity bound is a flag because it uses the empirical margin."""
        return self.corridor_ok and self.corridor_strict_ok and self.funnel_ok and self.inputs_finite

    @property
    def flags(self) -> list[str]:
        out = []
        if not self.velocity_ok:
            bad = [c.index for c in self.vehicles if not c.velocity_ok]
            out.append(f"velocity bound with empirical margin exceeded for vehicles {bad}")
        return out

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        d["flags"] = self.flags
        return d


def theorem_report(trace: SimulationTrace, cfg: ScenarioConfig) -> TheoremReport:
    cp = cfg.controller
    M = cp.gap_range
    eps1 = epsilon1(cp.funnel, float(initial_slacks(cfg).min()))
    margin = trace.margin
    eps2 = float(margin.min())
    gap = trace.gap
    corridor_margin = float(np.minimum(gap - cp.d_min, cp.d_max - gap).min())
    d_bar = cfg.checks.d_bar if cfg.checks.d_bar is not None else d_bar_estimate(cfg)
    v0_sup = cfg.leader.sup_norms(cfg.horizon)[0] if cfg.horizon > 0 else abs(cfg.leader.eval(0.0)[1])
    C2 = attenuation(cp)
    if eps2 > 0:
        C1 = M / cp.headway + (cp.funnel.sup / eps2 + d_bar) / (cp.headway * cp.gain2)
    else:
        C1 = math.inf
    finite = all(np.all(np.isfinite(a)) for a in (trace.x, trace.v, trace.a, trace.u, trace.w, trace.k3))

    vehicles = []
    for i in range(trace.n):
        v_sup = float(np.abs(trace.v[:, i]).max())
        bound = C1 + C2 ** (i + 1) * v0_sup
        vehicles.append(
            VehicleCheck(
                index=i + 1,
                v_sup=v_sup,
                v_bound=bound,
                u_sup=float(np.abs(trace.u[:, i]).max()),
                a_sup=float(np.abs(trace.a[:, i]).max()),
                gap_min=float(gap[:, i].min()),
                gap_max=float(gap[:, i].max()),
                margin_min=float(margin[:, i].min()),
                velocity_ok=v_sup <= bound,
            )
        )
    return TheoremReport(
        eps1=eps1,
        eps2_emp=eps2,
        corridor_margin=corridor_margin,
        corridor_ok=corridor_margin >= eps1,
        corridor_strict_ok=corridor_margin > 0,
        funnel_ok=eps2 > 0,
        inputs_finite=bool(finite),
        velocity_ok=all(c.velocity_ok for c in vehicles),
        C1=C1,
        C2=C2,
        attenuation=C2,
        v0_sup=v0_sup,
        d_bar=float(d_bar),
        vehicles=vehicles,
    )


def report_text(assumptions: AssumptionReport, theorem: Optional[TheoremReport]) -> str:
    lines = ["assumptions"]
    a = assumptions
    lines += [
        f"  delta          {a.delta:.6f}",
        f"  d_bar          {a.d_bar:.6g} N",
        f"  m_bar          {a.m_bar:.6g} kg",
        f"  rho_bar        {a.rho_bar:.6g} kg/m",
        f"  mass chain     {a.mass_chain.status} (N0 = {a.mass_chain.n0})",
        f"  velocity cap   {'ok' if a.velocity_cap_ok else 'VIOLATED'}",
    ]
    lines += [f"  problem: {p}" for p in a.problems]
    if theorem is not None:
        t = theorem
        lines += [
            "theorem checks",
            f"  eps1           {t.eps1:.6f} m",
            f"  corridor       min margin {t.corridor_margin:.6f} m -> {'ok' if t.corridor_ok else 'FAIL'}",
            f"  funnel         eps2_emp {t.eps2_emp:.6g} m/s -> {'ok' if t.funnel_ok else 'FAIL'}",
            f"  inputs finite  {'ok' if t.inputs_finite else 'FAIL'}",
            f"  C1 = {t.C1:.6g} m/s, C2 = {t.C2:.6g}, sup|v0| = {t.v0_sup:.6g} m/s",
            f"  velocity bound {'ok' if t.velocity_ok else 'FLAG'}",
            "  i   sup|v|     bound      sup|u|       sup|a|    gap range            funnel margin",
        ]
        for c in t.vehicles:
            lines.append(
                f"  {c.index:<3d} {c.v_sup:<10.5g} {c.v_bound:<10.5g} {c.u_sup:<12.6g} {c.a_sup:<9.5g} "
                f"[{c.gap_min:.4f}, {c.gap_max:.4f}]  {c.margin_min:.4g}"
            )
        lines += [f"  flag: {f}" for f in t.flags]
        lines.append(f"result: {'PASS' if t.passed and a.ok else 'FAIL'}")
    return "\n".join(lines) + "\n"


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return _jsonable(obj.item())
    return obj


def report_json(assumptions: AssumptionReport, theorem: Optional[TheoremReport], extra: Optional[dict] = None) -> str:
    doc = {"assumptions": assumptions.to_dict(), "theorem": None if theorem is None else theorem.to_dict()}
    if extra:
        doc.update(extra)
    return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"
