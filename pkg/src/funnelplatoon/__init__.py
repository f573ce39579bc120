"""Simulation and verification of decentralized funnel cruise control for vehicle platoons."""

from .config import ConfigError, load_config, preset, write_config
from .controller import (
    ControllerParams,
    CustomFunnel,
    DomainError,
    ExponentialFunnel,
    FunnelViolation,
    PairDiagnostics,
    control_input,
    funnel_gain,
    funnel_variable,
    in_domain,
    spacing_error,
)
from .dynamics import VehicleParams, acceleration, aero_drag, gravity_force, rolling_friction, table_one_vehicle, total_force
from .leader import BrakeProfile, ConstantCruise, SinusoidalProfile, SplineLeader, scenario2_leader
from .monitors import (
    assumption_report,
    d_bar_estimate,
    delta_of_initial,
    epsilon1,
    gain_heuristic,
    mass_chain_check,
    theorem_report,
)
from .simulator import PlatoonState, ScenarioConfig, SimulationTrace, integrate, refine_check, rhs
from .traceio import read_trace_csv, write_trace_csv

__version__ = "0.1.0"
