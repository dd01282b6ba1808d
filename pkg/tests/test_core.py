"""Closed-form model quantities: examples, identities, serialization."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stirling.core import (
    TWO_PI,
    EngineParams,
    crank_gain,
    energy,
    mean_effective_temperature,
    piston_position,
    potential,
    pressure,
    torque,
    torque_prime,
    volume_augmentation,
    volumes,
)

P = EngineParams()

angles = st.floats(min_value=-10.0, max_value=10.0,
                   allow_nan=False, allow_infinity=False)


# -- piston kinematics -------------------------------------------------------

def test_piston_position_bottom_dead_center():
    assert piston_position(0.0, P) == pytest.approx(0.2, abs=1e-15)


def test_piston_position_top_dead_center():
    assert piston_position(math.pi, P) == pytest.approx(0.4, rel=1e-12)


def test_piston_position_quarter_turn():
    assert piston_position(math.pi / 2, P) == pytest.approx(
        0.28284271247461901, rel=1e-12)


@given(angles)
def test_piston_position_range(q):
    x = piston_position(q, P)
    assert P.rod_l - P.crank_r - 1e-12 <= x <= P.rod_l + P.crank_r + 1e-12


def test_crank_gain_zeros():
    assert crank_gain(0.0, P) == 0.0
    assert abs(crank_gain(math.pi, P)) < 1e-16


def test_crank_gain_quarter_turn():
    assert crank_gain(math.pi / 2, P) == pytest.approx(0.1, rel=1e-12)


@given(angles)
@settings(max_examples=200)
def test_crank_gain_is_position_derivative(q):
    h = 1e-5
    fd = (piston_position(q + h, P) - piston_position(q - h, P)) / (2 * h)
    assert crank_gain(q, P) == pytest.approx(fd, abs=1e-8)


# -- volumes -----------------------------------------------------------------

def test_volumes_at_max():
    assert volumes(0.0, P) == pytest.approx((4.6e-4, 4.6e-4), rel=1e-12)


def test_volumes_at_min():
    v1, v2 = volumes(math.pi, P)
    assert v1 == pytest.approx(6e-5, rel=1e-10)
    assert v2 == pytest.approx(6e-5, rel=1e-10)


def test_volumes_quarter_phase():
    v1, v2 = volumes(0.0, P.with_(alpha=math.pi / 2))
    assert v1 == pytest.approx(2.9431457505076195e-4, rel=1e-12)
    assert v2 == pytest.approx(4.6e-4, rel=1e-12)


@given(angles)
def test_volumes_positive(q):
    v1, v2 = volumes(q, P.with_(alpha=1.3))
    assert v1 > 0.0 and v2 > 0.0


# -- temperatures and regenerator -------------------------------------------

def test_log_mean_equal_temperatures():
    assert mean_effective_temperature(298.15, 298.15) == 298.15


def test_log_mean_value():
    assert mean_effective_temperature(400.0, 298.15) == pytest.approx(
        346.58437933417, rel=1e-10)


@given(st.floats(min_value=1.0, max_value=1000.0),
       st.floats(min_value=1.0, max_value=1000.0))
def test_log_mean_between(t_h, t_c):
    t_r = mean_effective_temperature(t_h, t_c)
    assert min(t_h, t_c) - 1e-9 <= t_r <= max(t_h, t_c) + 1e-9


def test_log_mean_rejects_nonpositive():
    with pytest.raises(ValueError):
        mean_effective_temperature(-1.0, 300.0)


def test_volume_augmentation_zero_regenerator():
    assert volume_augmentation(P) == 0.0


def test_volume_augmentation_equal_temperatures():
    p = P.with_(t_h=P.t_c, v_regen=1e-5)
    assert volume_augmentation(p) == pytest.approx(0.5e-5, rel=1e-12)


def test_volume_augmentation_value():
    # T_h T_c V_r / ((T_h + T_c) T_r) with the log-mean T_r = 346.5844
    p = P.with_(t_h=400.0, v_regen=1e-5)
    assert volume_augmentation(p) == pytest.approx(4.928753263272e-6, rel=1e-9)


# -- pressure ----------------------------------------------------------------

def test_pressure_isothermal_full_volume():
    # n R T / (V1 + V2) at q=0, both cylinders at V_max
    p = P.with_(t_h=298.15)
    expected = 0.03 * 8.314 * 298.15 / 9.2e-4
    assert pressure(0.0, p) == pytest.approx(expected, rel=1e-12)
    assert pressure(0.0, p) == pytest.approx(80831.0576086956, rel=1e-10)


def test_pressure_two_temperature_value():
    p = P.with_(alpha=math.pi / 2, t_h=373.15)
    assert pressure(0.0, p) == pytest.approx(106974.784495, rel=1e-9)


@given(angles)
def test_pressure_periodic(q):
    p = P.with_(alpha=2.2, t_h=380.0)
    assert pressure(q + TWO_PI, p) == pytest.approx(pressure(q, p), rel=5e-14)


@given(angles)
def test_pressure_bounds(q):
    p = P.with_(alpha=1.1, t_h=420.0)
    v_hi = p.v_max_1 + p.v_max_2
    v_lo = (p.v_max_1 - p.a_1 * 2 * p.crank_r) + (p.v_max_2 - p.a_2 * 2 * p.crank_r)
    lo = p.n_mol * p.r_gas * min(p.t_h, p.t_c) / v_hi
    hi = p.n_mol * p.r_gas * max(p.t_h, p.t_c) / v_lo
    assert lo <= pressure(q, p) <= hi


# -- torque ------------------------------------------------------------------

def test_torque_zeros_at_zero_phase():
    p = P.with_(t_h=350.0)
    assert abs(torque(0.0, p)) < 1e-12
    assert abs(torque(math.pi, p)) < 1e-12


@given(angles)
@settings(max_examples=200)
def test_torque_volume_identity(q):
    # tau = (p - p_a) (V1' + V2'), V_i' = -A_i phi(q - alpha_i)
    p = P.with_(alpha=2.2, t_h=376.2)
    dv = -(p.a_1 * crank_gain(q - p.alpha, p) + p.a_2 * crank_gain(q, p))
    expected = (pressure(q, p) - p.p_ambient) * dv
    assert torque(q, p) == pytest.approx(expected, rel=1e-10, abs=1e-13)


@given(angles)
@settings(max_examples=200)
def test_torque_flip_antisymmetry(q):
    p = P.with_(alpha=2.2, t_h=390.0)
    pf = P.with_(alpha=TWO_PI - 2.2, t_h=390.0)
    t1 = torque(q, p)
    t2 = torque(TWO_PI - q, pf)
    assert t2 == pytest.approx(-t1, rel=1e-10, abs=1e-12)


@given(angles)
@settings(max_examples=100)
def test_torque_prime_matches_finite_difference(q):
    p = P.with_(alpha=2.6, t_h=420.0)
    h = 1e-6
    fd = (torque(q + h, p) - torque(q - h, p)) / (2 * h)
    assert torque_prime(q, p) == pytest.approx(fd, rel=1e-6, abs=1e-7)


# -- potential and energy ----------------------------------------------------

def test_potential_zero_at_origin():
    assert potential(0.0, P.with_(alpha=2.2, t_h=360.0)) == 0.0


def test_potential_positive_gain_for_alpha_below_pi():
    assert potential(TWO_PI, P.with_(alpha=2.2, t_h=360.0)) > 0.0


def test_potential_quasi_periodic_increment():
    p = P.with_(alpha=2.2, t_h=360.0)
    u2pi = potential(TWO_PI, p)
    for q in (0.7, 2.9, 5.0):
        inc = potential(q + TWO_PI, p) - potential(q, p)
        assert inc == pytest.approx(u2pi, abs=1e-8)


def test_potential_frozen_values():
    assert potential(TWO_PI, P.with_(alpha=2.2, t_h=360.0)) == pytest.approx(
        5.349047398, rel=1e-8)
    assert potential(TWO_PI, P.with_(alpha=1.2, t_h=420.0)) == pytest.approx(
        18.010288404, rel=1e-8)
    assert potential(TWO_PI, P.with_(alpha=2.8, t_h=480.0)) == pytest.approx(
        5.601592242, rel=1e-8)


def test_energy_zero_state():
    assert energy((0.0, 0.0), P) == 0.0


def test_energy_kinetic_only():
    assert energy((0.0, 2.0), P) == pytest.approx(1.0, rel=1e-12)


def test_energy_composition():
    p = P.with_(alpha=2.2, t_h=360.0)
    q, w = 3.7, -1.4
    assert energy((q, w), p) == pytest.approx(
        0.5 * p.inertia * w * w + potential(q, p), rel=1e-12)


# -- EngineParams ------------------------------------------------------------

def test_params_json_round_trip():
    p = P.with_(alpha=2.2, t_h=376.2, v_regen=1e-5)
    q = EngineParams.from_json(p.to_json())
    assert q == p


def test_params_json_keys():
    keys = set(json.loads(P.to_json()))
    assert keys == {"t_c", "t_h", "n_mol", "p_ambient", "r_gas", "v_max_1",
                    "v_max_2", "a_1", "a_2", "crank_r", "rod_l", "alpha",
                    "inertia", "k_f", "v_regen"}


def test_params_json_missing_keys_default():
    p = EngineParams.from_json('{"alpha": 1.0}')
    assert p.alpha == 1.0 and p.t_c == 298.15


def test_params_json_unknown_key_rejected():
    with pytest.raises(ValueError):
        EngineParams.from_json('{"alpa": 1.0}')


@pytest.mark.parametrize("bad", [
    {"rod_l": 0.05},            # rod shorter than crank
    {"alpha": 7.0},             # outside [0, 2 pi)
    {"t_h": -300.0},
    {"v_max_1": 1e-5},          # stroke empties the cylinder
    {"v_regen": -1e-6},
])
def test_params_validation(bad):
    with pytest.raises(ValueError):
        EngineParams(**bad)
