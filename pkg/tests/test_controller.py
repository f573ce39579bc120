import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from funnelplatoon.controller import (
    ControllerParams,
    CustomFunnel,
    DomainError,
    ExponentialFunnel,
    FunnelViolation,
    chain_control,
    control_input,
    exponential_funnel_admissible,
    funnel_gain,
    funnel_variable,
    in_domain,
    spacing_error,
)

CP = ControllerParams()
M = CP.gap_range


def test_reference_parameters():
    assert (CP.d_min, CP.d_max, M, CP.headway, CP.gain1, CP.gain2) == (2.0, 15.0, 13.0, 0.5, 3600.0, 3600.0)
    assert CP.funnel(0.0) == 2.0


def test_spacing_error_examples():
    assert spacing_error(100.0 - 2.0, 100.0, CP) == 0.0
    assert spacing_error(0.0, 11.0, CP) == -9.0
    assert spacing_error(0.0, 15.0, CP) == -M


@given(st.floats(-1e3, 1e3))
def test_funnel_variable_midpoint_cancels(dv):
    assert funnel_variable(dv, -M / 2, CP) == dv


def test_funnel_variable_initial_state():
    assert funnel_variable(0.0, -9.0, CP) == pytest.approx(1 / 9 - 1 / 4, abs=1e-15)
    assert funnel_variable(0.0, -9.0, CP) == pytest.approx(-0.138888889, abs=1e-9)


def test_funnel_variable_diverges_at_both_barriers():
    up = [funnel_variable(0.3, -10.0 ** (-k), CP) for k in range(1, 9)]
    assert all(b > a for a, b in zip(up, up[1:])) and up[-1] > 1e7
    down = [funnel_variable(0.3, -M + 10.0 ** (-k), CP) for k in range(1, 9)]
    assert all(b < a for a, b in zip(down, down[1:])) and down[-1] < -1e7


@pytest.mark.parametrize("xi", [0.0, 1.0, -M, -M - 1.0])
def test_funnel_variable_domain_error(xi):
    with pytest.raises(DomainError) as err:
        funnel_variable(0.0, xi, CP)
    assert err.value.kind == ("spacing-lower" if xi >= 0 else "spacing-upper")


@given(st.floats(-50, 50), st.floats(0.001, 0.999), st.floats(0.001, 0.999))
def test_funnel_variable_increasing_in_xi(dv, s1, s2):
    assume(abs(s1 - s2) > 1e-6)
    a, b = sorted((s1, s2))
    assert funnel_variable(dv, -M + a * M, CP) < funnel_variable(dv, -M + b * M, CP)


def test_funnel_gain_examples():
    assert funnel_gain(0.0, 0.0, CP) == 0.5
    assert funnel_gain(0.0, -0.138889, CP) == pytest.approx(1 / 1.861111, abs=1e-9)
    assert funnel_gain(0.0, -0.138889, CP) == pytest.approx(0.537313, abs=1e-6)


def test_funnel_gain_blows_up():
    psi = float(CP.funnel(0.7))
    gains = [funnel_gain(0.7, psi - 10.0 ** (-k), CP) for k in range(1, 10)]
    assert all(b > a for a, b in zip(gains, gains[1:])) and gains[-1] > 1e8


@pytest.mark.parametrize("w", [2.0, -2.0, 5.0])
def test_funnel_gain_violation(w):
    with pytest.raises(FunnelViolation) as err:
        funnel_gain(0.0, w, CP)
    assert err.value.margin == pytest.approx(2.0 - abs(w))


@given(st.floats(0, 40), st.floats(-0.999, 0.999))
def test_funnel_gain_lower_bound(t, s):
    psi = float(CP.funnel(t))
    w = s * psi
    k = funnel_gain(t, w, CP)
    assert k >= 1 / psi
    if w == 0:
        assert k == 1 / psi


def test_control_input_initial_vehicle_one():
    d = control_input(0.0, -11.0, 20.0, 0.0, 20.0, CP)
    assert d.xi == -9.0
    assert d.headway_err == 1.0
    assert d.funnel_var == pytest.approx(-0.138889, abs=1e-6)
    assert d.funnel_gain == pytest.approx(0.537313, abs=1e-6)
    # independent recomputation: -k2 * e - k3 * w with e = 1
    w = 1 / 9 - 1 / 4
    assert d.control == pytest.approx(-3600.0 - w / (2.0 - abs(w)), abs=1e-9)
    assert d.control == pytest.approx(-3599.9254, abs=1e-4)
    assert d.funnel_margin == pytest.approx(2.0 - abs(w))


def test_control_input_equilibrium_probe():
    v = M / (2 * CP.headway)
    d = control_input(0.3, -(CP.d_min + M / 2), v, 0.0, v, CP)
    assert d.headway_err == 0.0 and d.funnel_var == 0.0 and d.control == 0.0


in_domain_states = st.tuples(
    st.floats(0, 40), st.floats(2.05, 14.95), st.floats(0, 30), st.floats(-0.5, 0.5)
)


@given(in_domain_states, st.floats(1.1, 5.0))
@settings(max_examples=80)
def test_control_input_linear_in_gain2(state, factor):
    t, gap, v, dv = state
    try:
        d1 = control_input(t, -gap, v + dv, 0.0, v, CP)
    except DomainError:
        assume(False)
    cp2 = ControllerParams(gain2=CP.gain2 * factor)
    d2 = control_input(t, -gap, v + dv, 0.0, v, cp2)
    assert d2.control - d1.control == pytest.approx(-(factor - 1) * CP.gain2 * d1.headway_err, abs=1e-6)


@given(in_domain_states)
@settings(max_examples=80)
def test_control_input_pure_and_locally_lipschitz(state):
    t, gap, v, dv = state
    try:
        d = control_input(t, -gap, v + dv, 0.0, v, CP)
        d_eps = control_input(t, -gap + 1e-7, v + dv, 0.0, v, CP)
    except DomainError:
        assume(False)
    assert control_input(t, -gap, v + dv, 0.0, v, CP) == d
    # derivative bound k2 + k3^2 psi (1/xi^2 + 1/(M+xi)^2) from the explicit formula
    xi = d.xi
    bound = CP.gain2 + d.funnel_gain**2 * float(CP.funnel(t)) * (1 / xi**2 + 1 / (M + xi) ** 2)
    assert abs(d_eps.control - d.control) <= 2 * bound * 1e-7 + 1e-9


def test_in_domain_examples():
    n = 5
    x = -11.0 * np.arange(1, n + 1)
    v = np.full(n, 20.0)
    assert in_domain(0.0, (0.0, 20.0), x, v, CP).ok
    x_bad = x.copy()
    x_bad[2:] += 9.0  # gap 3 becomes 2 = d_min
    rep = in_domain(0.0, (0.0, 20.0), x_bad, v, CP)
    assert not rep and rep.index == 3 and rep.kind == "spacing-lower"
    mid = (CP.d_min + CP.d_max) / 2
    x_mid = -mid * np.arange(1, n + 1)
    v_fun = v.copy()
    v_fun[3:] += float(CP.funnel(1.0)) + 1.0
    rep = in_domain(1.0, (0.0, 20.0), x_mid, v_fun, CP)
    assert not rep and rep.index == 4 and rep.kind == "funnel"


def test_chain_control_matches_scalar_law():
    rng = np.random.default_rng(3)
    gaps = rng.uniform(8, 12, 6)
    v = 20.0 + rng.uniform(-0.2, 0.2, 6)
    v0 = 20.0
    dv = v - np.concatenate([[v0], v[:-1]])
    u, xi, e, w, k3, psi = chain_control(0.4, gaps, dv, v, CP)
    x = -np.cumsum(gaps)
    pred_x = np.concatenate([[0.0], x[:-1]])
    pred_v = np.concatenate([[v0], v[:-1]])
    for i in range(6):
        d = control_input(0.4, x[i], v[i], pred_x[i], pred_v[i], CP)
        assert u[i] == pytest.approx(d.control, rel=1e-12)
        assert w[i] == pytest.approx(d.funnel_var, rel=1e-12)


def test_exponential_funnel_bounds():
    f = ExponentialFunnel(amp=1.0, decay=2.0, floor=1.0)
    assert f.sup == 2.0 and f.inf == 1.0 and f.derivative_sup == 2.0
    assert exponential_funnel_admissible(1.0, 2.0, 1.0)
    for bad in ((1.0, 0.0, 1.0), (1.0, 2.0, 0.0), (1.0, -1.0, 1.0), (1.0, 2.0, -1.0)):
        assert not exponential_funnel_admissible(*bad)
        with pytest.raises(ValueError):
            ExponentialFunnel(*bad)


def test_custom_funnel_sampled_bounds():
    f = CustomFunnel(lambda t: 1.5 + 0.5 * np.cos(t), lambda t: -0.5 * np.sin(t), horizon=40.0)
    assert f.sup == pytest.approx(2.0, rel=1e-3)
    assert f.inf == pytest.approx(1.0, rel=1e-3)
    assert f.derivative_sup == pytest.approx(0.5, rel=1e-3)
    declared = CustomFunnel(lambda t: 3.0 + 0 * t, lambda t: 0 * t, sup=3.0, inf=3.0)
    assert declared.sup == 3.0
    with pytest.raises(ValueError):
        CustomFunnel(lambda t: np.cos(t), lambda t: -np.sin(t))


@pytest.mark.parametrize(
    "kw", [{"d_min": 0.0}, {"d_max": 2.0}, {"headway": 0.0}, {"gain1": -1.0}, {"gain2": 0.0}]
)
def test_controller_params_validation(kw):
    with pytest.raises(ValueError):
        ControllerParams(**kw)
