"""Rope force law, admittance stepping, base velocity law, core routing."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tpo.config import read_data_text
from tpo.control import (
    AdmittanceParams,
    CartesianGains,
    ControlCore,
    ControlProfile,
    OperatorArmState,
    ReferenceState,
    VirtualForce,
    admittance_step,
    base_velocity_reference,
    compute_virtual_force,
    load_profile,
    set_anchor_on_activation,
)
from tpo.defs import ControlPoint, Side
from tpo.robot import load_robot_description


def arm_at(wrist, anchor=(0.0, 0.0, 0.0), gain=50.0, deadzone=0.02):
    return OperatorArmState(
        wrist=np.asarray(wrist, dtype=float),
        anchor=np.asarray(anchor, dtype=float),
        active=True,
        gain=gain,
        deadzone=deadzone,
    )


def test_force_zero_inside_deadzone():
    arm = arm_at((0.015, 0.0, 0.0))
    f = compute_virtual_force(arm, Side.RIGHT, ControlPoint.RIGHT_EE)
    assert f.magnitude == 0.0


def test_force_radial_spring_past_deadzone():
    # 0.1 m along x with K_f=50, r=0.02: |f| = 50 * 0.08 = 4
    arm = arm_at((0.1, 0.0, 0.0))
    f = compute_virtual_force(arm, Side.RIGHT, ControlPoint.RIGHT_EE)
    assert f.magnitude == pytest.approx(4.0)
    assert np.allclose(f.f, [4.0, 0.0, 0.0])


def test_force_direction_follows_displacement():
    arm = arm_at((0.0, -0.1, 0.0))
    f = compute_virtual_force(arm, Side.LEFT, ControlPoint.LEFT_EE)
    assert np.allclose(f.f, [0.0, -4.0, 0.0])


def test_force_saturates_at_f_max():
    arm = arm_at((1.0, 0.0, 0.0))
    f = compute_virtual_force(arm, Side.RIGHT, ControlPoint.RIGHT_EE, f_max=20.0)
    assert f.magnitude == pytest.approx(20.0)


def test_inactive_arm_exerts_nothing():
    arm = OperatorArmState(wrist=np.array([1.0, 0.0, 0.0]))
    f = compute_virtual_force(arm, Side.RIGHT, ControlPoint.RIGHT_EE)
    assert f.magnitude == 0.0


@given(
    st.tuples(*[st.floats(-0.5, 0.5) for _ in range(3)]),
    st.tuples(*[st.floats(-0.5, 0.5) for _ in range(3)]),
)
def test_force_magnitude_law(wrist, anchor):
    arm = arm_at(wrist, anchor)
    f = compute_virtual_force(arm, Side.RIGHT, ControlPoint.RIGHT_EE, f_max=20.0)
    dist = float(np.linalg.norm(np.subtract(wrist, anchor)))
    if dist <= 0.02:
        assert f.magnitude == 0.0
    else:
        assert f.magnitude == pytest.approx(min(50.0 * (dist - 0.02), 20.0))


def test_anchor_set_on_activation_makes_force_zero():
    arm = OperatorArmState(wrist=np.array([0.3, 0.2, -0.1]))
    armed = set_anchor_on_activation(arm)
    assert armed.active
    f = compute_virtual_force(armed, Side.RIGHT, ControlPoint.RIGHT_EE)
    assert f.magnitude == 0.0


def test_right_rope_cannot_target_base():
    with pytest.raises(ValueError):
        VirtualForce(np.zeros(3), Side.RIGHT, ControlPoint.BASE)
    with pytest.raises(ValueError):
        VirtualForce(np.zeros(3), Side.LEFT, ControlPoint.RIGHT_EE)


def one_dof_params(m=1.0, k=0.0, d=2.0, q_eq=0.0):
    return AdmittanceParams(
        m=np.array([m]), k=np.array([k]), d=np.array([d]), q_eq=np.array([q_eq])
    )


def unit_jacobian():
    return np.array([[1.0], [0.0], [0.0]])


def force_x(mag):
    return VirtualForce(np.array([mag, 0.0, 0.0]), Side.RIGHT, ControlPoint.RIGHT_EE)


def test_admittance_step_first_acceleration():
    params = one_dof_params()
    ref = ReferenceState.at_rest(np.zeros(1))
    out = admittance_step(params, np.zeros(1), ref, unit_jacobian(), force_x(4.0), 0.01)
    assert out.q_ddot_ref[0] == 4.0


def test_admittance_step_damping_lags_one_step():
    params = one_dof_params()
    ref = ReferenceState(np.zeros(1), np.array([0.5]), np.zeros(1))
    out = admittance_step(params, np.zeros(1), ref, unit_jacobian(), force_x(4.0), 0.01)
    assert out.q_ddot_ref[0] == 3.0  # (4 - 2*0.5) / 1


def test_admittance_velocity_converges_to_force_over_damping():
    params = one_dof_params()
    ref = ReferenceState.at_rest(np.zeros(1))
    q = np.zeros(1)
    for _ in range(500):
        ref = admittance_step(params, q, ref, unit_jacobian(), force_x(4.0), 0.01)
        q = ref.q_ref.copy()
    assert abs(ref.q_dot_ref[0] - 2.0) < 1e-3


def test_admittance_spring_returns_to_equilibrium():
    params = one_dof_params(m=0.5, k=8.0, d=2.0, q_eq=1.0)
    ref = ReferenceState.at_rest(np.array([2.0]))
    q = np.array([2.0])
    horizon = int(20 * (0.5 / 2.0) / 0.01)
    for _ in range(horizon):
        ref = admittance_step(params, q, ref, unit_jacobian(), force_x(0.0), 0.01)
        q = ref.q_ref.copy()
    assert abs(ref.q_ref[0] - 1.0) <= 1e-3


def test_base_velocity_is_diagonal_gain_times_force():
    gains = CartesianGains(np.array([0.1, 0.1, 0.0]))
    f = VirtualForce(np.array([4.0, -2.0, 8.0]), Side.LEFT, ControlPoint.BASE)
    v = base_velocity_reference(gains, f)
    assert np.allclose(v, [0.4, -0.2, 0.0])


def test_base_velocity_z_zeroed_by_default_profile_gain():
    gains = CartesianGains(np.array([0.1, 0.1, 0.0]))
    f = VirtualForce(np.array([0.0, 0.0, 20.0]), Side.LEFT, ControlPoint.BASE)
    assert base_velocity_reference(gains, f)[2] == 0.0


def test_base_velocity_saturates_componentwise():
    gains = CartesianGains(np.array([0.5, 0.5, 0.5]))
    f = VirtualForce(np.array([10.0, -10.0, 1.0]), Side.LEFT, ControlPoint.BASE)
    v = base_velocity_reference(gains, f, v_max=1.0)
    assert np.allclose(v, [1.0, -1.0, 0.5])


def test_base_velocity_rejects_non_base_force():
    gains = CartesianGains(np.array([0.1, 0.1, 0.0]))
    with pytest.raises(ValueError):
        base_velocity_reference(gains, force_x(1.0))


def test_profile_loader_roundtrip():
    profile = load_profile(read_data_text("profiles/centauro_paper.json"))
    assert profile.dt == 0.01
    assert profile.gain == 50.0
    assert profile.deadzone == 0.02
    assert np.allclose(profile.cart_gains.k_cart, [0.1, 0.1, 0.0])
    assert np.all(profile.admittance.k == 0.0)
    doc = profile.to_dict()
    again = load_profile(json.dumps(doc))
    assert again.to_dict() == doc


def default_core():
    model = load_robot_description(read_data_text("robots/centauro_surrogate.json"))
    profile = load_profile(read_data_text("profiles/centauro_paper.json"))
    return ControlCore(model, profile)


def test_core_inactive_arms_hold_pose():
    core = default_core()
    q0 = core.q[Side.RIGHT].copy()
    for _ in range(10):
        core.tick(0.01)
    assert np.array_equal(core.q[Side.RIGHT], q0)
    assert np.all(core.refs[Side.RIGHT].q_dot_ref == 0.0)


def test_core_activation_anchors_and_pulls():
    core = default_core()
    core.set_wrist(Side.RIGHT, (0.5, 0.0, 0.0))
    core.set_active(Side.RIGHT, True)
    res = core.tick(0.01)
    assert res.force_right.magnitude == 0.0  # anchored at activation
    core.set_wrist(Side.RIGHT, (0.6, 0.0, 0.0))
    res = core.tick(0.01)
    assert res.force_right.magnitude == pytest.approx(4.0)
    assert not np.array_equal(core.q[Side.RIGHT], core.model.home_q("right"))


def test_core_deactivation_freezes_reference():
    core = default_core()
    core.set_active(Side.RIGHT, True)
    core.set_wrist(Side.RIGHT, (0.2, 0.0, 0.0))
    for _ in range(50):
        core.tick(0.01)
    q_mid = core.q[Side.RIGHT].copy()
    core.set_active(Side.RIGHT, False)
    for _ in range(50):
        core.tick(0.01)
    assert np.array_equal(core.q[Side.RIGHT], q_mid)
    assert np.all(core.refs[Side.RIGHT].q_dot_ref == 0.0)


def test_core_left_rope_drives_base_exclusively():
    core = default_core()
    core.set_active(Side.LEFT, True)
    core.set_left_control_point(ControlPoint.BASE)
    core.set_wrist(Side.LEFT, (0.1, 0.0, 0.0))
    q_left = core.q[Side.LEFT].copy()
    res = core.tick(0.01)
    assert res.base_velocity[0] == pytest.approx(0.1 * 50.0 * 0.08)
    assert np.array_equal(core.q[Side.LEFT], q_left)  # arm untouched
    assert core.base.position[0] > 0.0


def test_core_control_point_switch_reanchors():
    core = default_core()
    core.set_active(Side.LEFT, True)
    core.set_left_control_point(ControlPoint.BASE)
    core.set_wrist(Side.LEFT, (0.3, 0.0, 0.0))
    core.tick(0.01)
    core.set_left_control_point(ControlPoint.LEFT_EE)
    res = core.tick(0.01)
    # the displacement that was driving the base must not jerk the arm
    assert res.force_left.magnitude == 0.0
    assert res.base_velocity[0] == 0.0


def test_core_rejects_mismatched_dt():
    core = default_core()
    with pytest.raises(ValueError):
        core.tick(0.02)


def test_core_base_velocity_integrates_in_world_frame():
    # the velocity command is a world-frame quantity; heading never changes
    core = default_core()
    core.base = type(core.base)(np.zeros(3), heading=math.pi / 2)
    core.set_active(Side.LEFT, True)
    core.set_left_control_point(ControlPoint.BASE)
    core.set_wrist(Side.LEFT, (0.1, 0.0, 0.0))
    core.tick(0.01)
    assert core.base.position[0] > 0.0
    assert core.base.position[1] == 0.0
    assert core.base.heading == math.pi / 2
