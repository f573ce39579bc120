import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from funnelplatoon.dynamics import (
    G,
    VehicleParams,
    acceleration,
    aero_drag,
    gravity_force,
    rolling_friction,
    table_one_vehicle,
    total_force,
)
from funnelplatoon.profiles import Constant, Sine

speeds = st.floats(-60, 60, allow_nan=False)


def veh(**kw):
    kw.setdefault("mass", 1200.0)
    return VehicleParams(**kw)


def test_table_one_masses_alternate():
    assert [table_one_vehicle(i).mass for i in range(1, 5)] == [1200.0, 1800.0, 1200.0, 1800.0]


@pytest.mark.parametrize("x", [-100.0, 0.0, 3.5, 1e4])
def test_gravity_flat_road_is_zero(x):
    assert gravity_force(table_one_vehicle(1), x) == 0.0


def test_gravity_vertical_wall():
    assert gravity_force(veh(slope=Constant(math.pi / 2)), 0.0) == pytest.approx(1200 * 9.81, abs=1e-9)
    assert gravity_force(veh(slope=Constant(math.pi / 2)), 0.0) == pytest.approx(11772.0, abs=1e-9)


@given(st.floats(-500, 500))
def test_gravity_odd_for_odd_slope(x):
    p = veh(slope=Sine(amplitude=0.2, period=50.0))
    assert gravity_force(p, x) == pytest.approx(-gravity_force(p, -x), abs=1e-9)


def test_aero_drag_hand_values():
    p = table_one_vehicle(1)
    assert aero_drag(p, 0.0, 0.0, 0.0) == 0.0
    # 0.5 * 1.3 * 0.32 * 2.4 * 400
    assert aero_drag(p, 0.0, 0.0, 20.0) == pytest.approx(199.68, abs=1e-9)
    assert aero_drag(p, 0.0, 0.0, -20.0) == pytest.approx(-199.68, abs=1e-9)


@given(st.floats(1e-3, 80))
def test_aero_drag_quadratic(v):
    p = table_one_vehicle(2)
    assert aero_drag(p, 0, 0, 2 * v) == pytest.approx(4 * aero_drag(p, 0, 0, v), rel=1e-12)


def test_rolling_friction_hand_values():
    p = table_one_vehicle(1)
    assert rolling_friction(p, 0.0) == 0.0
    assert abs(rolling_friction(p, 20.0) - 1200 * G * 0.01) < 1e-9
    assert rolling_friction(p, 20.0) == pytest.approx(117.72, abs=1e-9)


@given(speeds)
def test_rolling_friction_odd_and_bounded(v):
    p = table_one_vehicle(2)
    assert rolling_friction(p, -v) == -rolling_friction(p, v)
    assert abs(rolling_friction(p, v)) <= p.mass * G * p.rolling_coeff


def test_rolling_friction_strictly_below_limit_where_resolved():
    # erf saturates to 1.0 in double precision beyond |alpha v| ~ 6
    p = table_one_vehicle(1)
    for v in (1e-4, 1e-3, 0.01, 0.03):
        assert abs(rolling_friction(p, v)) < p.mass * G * p.rolling_coeff


@given(st.floats(-0.035, 0.035), st.floats(1e-6, 0.01))
def test_rolling_friction_increasing(v, dv):
    p = table_one_vehicle(1)
    assert rolling_friction(p, v + dv) > rolling_friction(p, v)


def test_total_force_breakdown():
    assert total_force(table_one_vehicle(1), 0, 0, 0).total == 0.0
    f1 = total_force(table_one_vehicle(1), 0.0, 0.0, 20.0)
    assert f1.total == pytest.approx(317.40, abs=1e-9)
    assert f1.total == f1.gravity + f1.aero + f1.rolling
    assert total_force(table_one_vehicle(2), 0.0, 0.0, 20.0).total == pytest.approx(376.26, abs=1e-9)


def test_acceleration_hand_value():
    p = table_one_vehicle(1)
    a = acceleration(p, 0.0, 0.0, 20.0, -3599.93)
    assert a == pytest.approx((-3599.93 - 317.40) / 1200, abs=1e-12)
    assert a == pytest.approx(-3.2644, abs=5e-5)


@given(st.floats(0, 100), st.floats(-100, 100), speeds, st.floats(-1e4, 1e4), st.floats(-1e4, 1e4))
@settings(max_examples=60)
def test_acceleration_affine_in_u(t, x, v, u1, u2):
    p = veh(disturbance=Sine(amplitude=50.0, period=7.0), slope=Sine(amplitude=0.1, period=30.0))
    a1, a2 = acceleration(p, t, x, v, u1), acceleration(p, t, x, v, u2)
    assert a2 - a1 == pytest.approx((u2 - u1) / p.mass, abs=1e-9)


def test_acceleration_zero_at_force_balance():
    p = veh(disturbance=Constant(40.0))
    f = total_force(p, 1.0, 2.0, 13.0).total
    assert acceleration(p, 1.0, 2.0, 13.0, f - 40.0) == pytest.approx(0.0, abs=1e-12)


def test_acceleration_doubles_with_net_force():
    p = table_one_vehicle(1)
    f = total_force(p, 0, 0, 10.0).total
    a1 = acceleration(p, 0, 0, 10.0, f + 600.0)
    a2 = acceleration(p, 0, 0, 10.0, f + 1200.0)
    assert a2 == pytest.approx(2 * a1, rel=1e-12)


def test_forces_continuous_on_grid():
    p = veh(slope=Sine(amplitude=0.1, period=40.0), air_density=Sine(offset=1.2, amplitude=0.05, period=9.0))
    # neighbouring grid values may differ by at most the analytic Lipschitz constant times the spacing
    vs = np.linspace(-30, 30, 60001)
    dv = vs[1] - vs[0]
    rho_max = 1.25
    aero = np.array([aero_drag(p, 1.0, 3.0, v) for v in vs])
    assert np.max(np.abs(np.diff(aero))) <= rho_max * p.drag_coeff * p.frontal_area * 30 * dv * (1 + 1e-9)
    roll = np.array([rolling_friction(p, v) for v in vs])
    lip_roll = p.mass * G * p.rolling_coeff * p.friction_smoothing * 2 / math.sqrt(math.pi)
    assert np.max(np.abs(np.diff(roll))) <= lip_roll * dv * (1 + 1e-9)
    ts = np.linspace(0, 20, 20001)
    aero_t = np.array([aero_drag(p, t, 3.0, 25.0) for t in ts])
    lip_t = 0.5 * 0.05 * 2 * math.pi / 9.0 * p.drag_coeff * p.frontal_area * 625
    assert np.max(np.abs(np.diff(aero_t))) <= lip_t * (ts[1] - ts[0]) * (1 + 1e-9)
    xs = np.linspace(-100, 100, 20001)
    grav = np.array([gravity_force(p, x) for x in xs])
    lip_x = p.mass * G * 0.1 * 2 * math.pi / 40.0
    assert np.max(np.abs(np.diff(grav))) <= lip_x * (xs[1] - xs[0]) * (1 + 1e-9)


@pytest.mark.parametrize(
    "kw",
    [
        {"mass": 0.0},
        {"mass": 1000.0, "drag_coeff": -0.1},
        {"mass": 1000.0, "rolling_coeff": -0.1},
        {"mass": 1000.0, "frontal_area": -1.0},
        {"mass": 1000.0, "friction_smoothing": 0.0},
        {"mass": 1000.0, "slope": Constant(2.0)},
        {"mass": 1000.0, "air_density": Constant(-1.0)},
    ],
)
def test_vehicle_params_invariants(kw):
    with pytest.raises(ValueError):
        VehicleParams(**kw)
