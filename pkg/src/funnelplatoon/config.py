"""JSON scenario configs and the two bundled presets.

A config document has five top-level keys::

    {
      "platoon":     {"n": 20, "vehicles": "table1", "initial_gaps": 11.0, "initial_velocities": 20.0},
      "controller":  {"d_min": 2.0, "d_max": 15.0, "headway": 0.5, "gain1": 3600.0, "gain2": 3600.0,
                      "funnel": {"kind": "exponential", "amp": 1.0, "decay": 2.0, "floor": 1.0}},
      "leader":      {"kind": "brake-profile", "speed": 20.0, "brake_start": 15.0, ...},
      "integration": {"horizon": 40.0, "sample_step": 0.01, "rtol": 1e-10, "atol": 1e-10,
                      "method": "rodas4", "max_step": 0.25, "min_step": 1e-12},
      "checks":      {"enabled": true, "mass_chain": null, "d_bar": null}
    }

``vehicles`` is either ``"table1"`` (alternating 1200/1800 kg, optionally
with a ``vehicle_overrides`` object applied to every vehicle) or an explicit
list of vehicle objects.  Scalar gaps and velocities are broadcast to all
followers.  Profiles (``slope``, ``air_density``, ``disturbance``) are
numbers or ``{"kind": "constant" | "sine" | "piecewise", ...}`` objects.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Optional, Union

from .controller import ControllerParams, CustomFunnel, ExponentialFunnel
from .dynamics import VehicleParams, table_one_vehicle
from .leader import BrakeProfile, leader_from_dict, scenario2_leader
from .monitors import AssumptionViolation, delta_of_initial
from .profiles import profile_from_dict
from .simulator import Checks, ScenarioConfig

TOP_KEYS = ("platoon", "controller", "leader", "integration", "checks")
_VEHICLE_KEYS = {
    "mass", "drag_coeff", "rolling_coeff", "frontal_area", "slope", "air_density", "friction_smoothing", "disturbance",
}
_PROFILE_KEYS = ("slope", "air_density", "disturbance")


class ConfigError(ValueError):
    """Unreadable or invalid config.  ``where`` is a key path or ``line N`` for parse errors."""

    def __init__(self, where: str, message: str):
        self.where = where
        super().__init__(f"{where}: {message}")


# -- presets -----------------------------------------------------------------------


def preset(name: str, *, brake_start: Optional[float] = None) -> ScenarioConfig:
    """``"scenario1"`` (braking leader) or ``"scenario2"`` (oscillating leader), 20 reference vehicles."""
    n = 20
    if name == "scenario1":
        leader = BrakeProfile(brake_start=15.0 if brake_start is None else brake_start)
    elif name == "scenario2":
        if brake_start is not None:
            raise ConfigError("leader", "brake_start only applies to scenario1")
        leader = scenario2_leader()
    else:
        raise ConfigError("preset", f"unknown preset {name!r}; choose scenario1 or scenario2")
    return ScenarioConfig(
        vehicles=tuple(table_one_vehicle(i) for i in range(1, n + 1)),
        controller=ControllerParams(),
        leader=leader,
        initial_gaps=(11.0,) * n,
        initial_velocities=(20.0,) * n,
    )


PRESETS = ("scenario1", "scenario2")


# -- dict <-> config -----------------------------------------------------------------


def _section(doc: dict, key: str) -> dict:
    sec = doc.get(key, {})
    if not isinstance(sec, dict):
        raise ConfigError(key, "must be an object")
    return sec


def _unknown(sec: dict, allowed, where: str):
    extra = sorted(set(sec) - set(allowed))
    if extra:
        raise ConfigError(where, f"unknown keys {extra}")


def _vector(value: Any, n: int, where: str) -> tuple[float, ...]:
    if isinstance(value, (int, float)):
        return (float(value),) * n
    if not isinstance(value, list) or len(value) != n:
        raise ConfigError(where, f"expected a number or a list of {n} numbers")
    return tuple(float(v) for v in value)


def _vehicle(spec: dict, where: str) -> VehicleParams:
    if not isinstance(spec, dict):
        raise ConfigError(where, "vehicle must be an object")
    _unknown(spec, _VEHICLE_KEYS, where)
    kw = dict(spec)
    try:
        for key in _PROFILE_KEYS:
            if key in kw:
                kw[key] = profile_from_dict(kw[key])
        return VehicleParams(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(where, f"vehicle parameters: {exc}") from None


def _funnel(spec: Any) -> ExponentialFunnel:
    if spec is None:
        return ExponentialFunnel()
    if not isinstance(spec, dict) or spec.get("kind", "exponential") != "exponential":
        raise ConfigError("controller.funnel", "only the exponential family can be given in a config file")
    kw = {k: float(v) for k, v in spec.items() if k != "kind"}
    _unknown(kw, ("amp", "decay", "floor"), "controller.funnel")
    try:
        return ExponentialFunnel(**kw)
    except ValueError as exc:
        raise ConfigError("controller.funnel", f"funnel boundary not admissible: {exc}") from None


def config_from_dict(doc: dict, *, validate: bool = True) -> ScenarioConfig:
    """Build and validate a :class:`ScenarioConfig` from a parsed document."""
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    _unknown(doc, TOP_KEYS, "<root>")
    for key in ("platoon", "controller", "leader"):
        if key not in doc:
            raise ConfigError(key, "missing section")

    plat = _section(doc, "platoon")
    _unknown(plat, ("n", "vehicles", "vehicle_overrides", "initial_gaps", "initial_velocities"), "platoon")
    vehicles_spec = plat.get("vehicles", "table1")
    if vehicles_spec == "table1":
        if "n" not in plat:
            raise ConfigError("platoon.n", "required with the table1 vehicle generator")
        n = int(plat["n"])
        if n < 1:
            raise ConfigError("platoon.n", "need at least one follower")
        overrides = dict(plat.get("vehicle_overrides", {}))
        _unknown(overrides, _VEHICLE_KEYS - {"mass"}, "platoon.vehicle_overrides")
        try:
            for key in _PROFILE_KEYS:
                if key in overrides:
                    overrides[key] = profile_from_dict(overrides[key])
            vehicles = tuple(table_one_vehicle(i, **overrides) for i in range(1, n + 1))
        except (TypeError, ValueError) as exc:
            raise ConfigError("platoon.vehicle_overrides", f"vehicle parameters: {exc}") from None
    elif isinstance(vehicles_spec, list):
        vehicles = tuple(_vehicle(v, f"platoon.vehicles[{k}]") for k, v in enumerate(vehicles_spec))
        n = len(vehicles)
        if "n" in plat and int(plat["n"]) != n:
            raise ConfigError("platoon.n", f"{plat['n']} does not match {n} listed vehicles")
        if n < 1:
            raise ConfigError("platoon.vehicles", "need at least one follower")
    else:
        raise ConfigError("platoon.vehicles", "expected \"table1\" or a list of vehicles")
    gaps = _vector(plat.get("initial_gaps"), n, "platoon.initial_gaps")
    vels = _vector(plat.get("initial_velocities"), n, "platoon.initial_velocities")

    ctl = dict(_section(doc, "controller"))
    _unknown(ctl, ("d_min", "d_max", "headway", "gain1", "gain2", "funnel"), "controller")
    funnel = _funnel(ctl.pop("funnel", None))
    try:
        cp = ControllerParams(**{k: float(v) for k, v in ctl.items()}, funnel=funnel)
    except ValueError as exc:
        raise ConfigError("controller", f"design-parameter constraint (d_max > d_min > 0; lambda, k1, k2 > 0): {exc}") from None

    try:
        leader = leader_from_dict(_section(doc, "leader"))
    except (TypeError, ValueError) as exc:
        raise ConfigError("leader", str(exc)) from None

    integ = _section(doc, "integration")
    _unknown(integ, ("horizon", "sample_step", "rtol", "atol", "method", "max_step", "min_step"), "integration")
    chk = _section(doc, "checks")
    _unknown(chk, ("enabled", "mass_chain", "d_bar"), "checks")
    mc = chk.get("mass_chain")
    if mc is not None:
        try:
            mc = (float(mc["p"]), float(mc["q"]), int(mc["n0"]))
        except (KeyError, TypeError) as exc:
            raise ConfigError("checks.mass_chain", f"expected {{p, q, n0}}: {exc}") from None
    checks = Checks(
        enabled=bool(chk.get("enabled", True)),
        mass_chain=mc,
        d_bar=None if chk.get("d_bar") is None else float(chk["d_bar"]),
    )

    try:
        cfg = ScenarioConfig(
            vehicles=vehicles,
            controller=cp,
            leader=leader,
            initial_gaps=gaps,
            initial_velocities=vels,
            checks=checks,
            **{k: (v if k == "method" else float(v)) for k, v in integ.items()},
        )
    except ValueError as exc:
        raise ConfigError("integration", str(exc)) from None
    if validate:
        validate_config(cfg)
    return cfg


def validate_config(cfg: ScenarioConfig) -> float:
    """Check initial interiority and the velocity cap; returns ``delta``."""
    if cfg.horizon > 0:
        try:
            cfg.leader.eval(cfg.horizon)
        except ValueError as exc:
            raise ConfigError("leader", f"leader not defined over the horizon: {exc}") from None
    try:
        return delta_of_initial(cfg)
    except AssumptionViolation as exc:
        raise ConfigError("platoon", f"initial data violates {exc}") from None


def _profile_dict(p) -> Any:
    if not hasattr(p, "to_dict"):
        raise ConfigError("platoon.vehicles", f"profile {p!r} cannot be serialised")
    return p.to_dict()


def config_to_dict(cfg: ScenarioConfig) -> dict:
    """Explicit document for ``cfg``; vehicles are always listed individually."""
    if isinstance(cfg.controller.funnel, CustomFunnel):
        raise ConfigError("controller.funnel", "user funnel callables cannot be serialised")
    vehicles = [
        {
            "mass": v.mass,
            "drag_coeff": v.drag_coeff,
            "rolling_coeff": v.rolling_coeff,
            "frontal_area": v.frontal_area,
            "slope": _profile_dict(v.slope),
            "air_density": _profile_dict(v.air_density),
            "friction_smoothing": v.friction_smoothing,
            "disturbance": _profile_dict(v.disturbance),
        }
        for v in cfg.vehicles
    ]
    cp = cfg.controller
    ch = cfg.checks
    return {
        "platoon": {
            "n": cfg.n,
            "vehicles": vehicles,
            "initial_gaps": list(cfg.initial_gaps),
            "initial_velocities": list(cfg.initial_velocities),
        },
        "controller": {
            "d_min": cp.d_min,
            "d_max": cp.d_max,
            "headway": cp.headway,
            "gain1": cp.gain1,
            "gain2": cp.gain2,
            "funnel": cp.funnel.to_dict(),
        },
        "leader": cfg.leader.to_dict(),
        "integration": {
            "horizon": cfg.horizon,
            "sample_step": cfg.sample_step,
            "rtol": cfg.rtol,
            "atol": cfg.atol,
            "method": cfg.method,
            "max_step": cfg.max_step,
            "min_step": cfg.min_step,
        },
        "checks": {
            "enabled": ch.enabled,
            "mass_chain": None if ch.mass_chain is None else dict(zip(("p", "q", "n0"), ch.mass_chain)),
            "d_bar": ch.d_bar,
        },
    }


def write_config(cfg: ScenarioConfig, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_text(json.dumps(config_to_dict(cfg), indent=2) + "\n")
    return path


def load_config(path: Union[str, Path], *, validate: bool = True) -> ScenarioConfig:
    """Read a JSON config, or a preset when ``path`` names one."""
    if str(path) in PRESETS:
        cfg = preset(str(path))
        if validate:
            validate_config(cfg)
        return cfg
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}, column {exc.colno}", exc.msg) from None
    return config_from_dict(doc, validate=validate)

