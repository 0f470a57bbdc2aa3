import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from quadgeo.closed_loop import simulate, state_on_reference
from quadgeo.control import (
    ControlGains,
    DegenerateReference,
    StateReference,
    check_initial_conditions,
    check_trajectory_bound,
    control_step,
    desired_force_vector,
    desired_rotation,
    force_is_degenerate,
    position_errors,
    thrust_command,
    torque_command,
)
from quadgeo.model import VehicleParams
from quadgeo.sim import RigidBodyState, SimConfig
from quadgeo.so3 import attitude_error_value, expm_so3, is_rotation, rot_x, rot_z
from quadgeo.trajectory import Hover

G = 9.81
MG = 0.605 * G
GAINS = ControlGains()


def state(r=(0, 0, 0), v=(0, 0, 0), R=None, w=(0, 0, 0)):
    return RigidBodyState(np.array(r, float), np.array(v, float), np.eye(3) if R is None else R, np.array(w, float))


def test_gains_must_be_positive():
    with pytest.raises(ValueError):
        ControlGains(k_r=0.0)


def test_position_errors():
    ref = StateReference.hover()
    e_r, e_v = position_errors(state(), ref)
    assert np.all(e_r == 0) and np.all(e_v == 0)
    e_r, _ = position_errors(state(r=(1, 0, 0)), ref)
    np.testing.assert_array_equal(e_r, [1, 0, 0])
    ref = StateReference(np.zeros(3), np.array([0, 0, 2.0]), np.zeros(3), 0, 0, np.eye(3), np.zeros(3), np.zeros(3))
    _, e_v = position_errors(state(v=(0, 0, 1)), ref)
    np.testing.assert_array_equal(e_v, [0, 0, -1])


def test_desired_force_vector(params):
    z = np.zeros(3)
    np.testing.assert_allclose(desired_force_vector(z, z, z, params, GAINS), [0, 0, 5.93505], rtol=1e-12)
    np.testing.assert_allclose(desired_force_vector([0, 0, 0.1], z, z, params, GAINS), [0, 0, MG - 1], rtol=1e-12)
    A = desired_force_vector(z, z, [0, 0, -G], params, GAINS)
    assert force_is_degenerate(A)
    with pytest.raises(DegenerateReference):
        desired_rotation(A, 0.0)


def test_thrust_command():
    A = np.array([0, 0, MG])
    assert thrust_command(A, np.eye(3)) == pytest.approx(5.93505, rel=1e-12)
    assert thrust_command(A, rot_x(np.pi / 2)) == pytest.approx(0.0, abs=1e-12)
    assert thrust_command(A, rot_x(np.pi)) == pytest.approx(-MG, rel=1e-12)


def test_desired_rotation_examples():
    np.testing.assert_allclose(desired_rotation([0, 0, 1], 0.0), np.eye(3), atol=1e-15)
    R = desired_rotation([0, 0, 1], np.pi / 2)
    np.testing.assert_allclose(R[:, 0], [0, 1, 0], atol=1e-15)
    np.testing.assert_allclose(R[:, 1], [-1, 0, 0], atol=1e-15)
    np.testing.assert_allclose(R[:, 2], [0, 0, 1], atol=1e-15)
    with pytest.raises(DegenerateReference):
        desired_rotation([1, 0, 0], 0.0)


comp = st.floats(-50, 50, allow_nan=False)


@given(st.tuples(comp, comp, st.floats(0.5, 50)), st.floats(-np.pi, np.pi))
def test_desired_rotation_in_so3(A, psi):
    A = np.array(A)
    R = desired_rotation(A, psi)
    assert is_rotation(R, tol=1e-12)
    np.testing.assert_allclose(R[:, 2], A / np.linalg.norm(A), atol=1e-12)


def test_torque_command_examples(params):
    ref = StateReference.hover()
    np.testing.assert_allclose(torque_command(state(), ref, params, GAINS), 0.0, atol=1e-15)
    w = np.array([0, 0, 1.0])
    ref = StateReference(np.zeros(3), np.zeros(3), np.zeros(3), 0, 0, np.eye(3), w, np.zeros(3))
    np.testing.assert_allclose(torque_command(state(w=w), ref, params, GAINS), 0.0, atol=1e-15)
    tau = torque_command(state(R=rot_z(np.pi / 2)), StateReference.hover(), params, GAINS)
    np.testing.assert_allclose(tau, [0, 0, -0.6], atol=1e-15)


def test_torque_command_matches_term_by_term_oracle(params):
    rng = np.random.default_rng(0)
    J = params.inertia
    for _ in range(50):
        R = expm_so3(rng.normal(size=3))
        R_d = expm_so3(rng.normal(size=3))
        w, wd, wdd = rng.normal(size=(3, 3))
        ref = StateReference(np.zeros(3), np.zeros(3), np.zeros(3), 0, 0, R_d, wd, wdd)
        E = R_d.T @ R - R.T @ R_d
        e_R = 0.5 * np.array([E[2, 1], E[0, 2], E[1, 0]])
        e_w = w - R.T @ R_d @ wd
        expected = (-0.6 * e_R - 0.15 * e_w + np.cross(w, J @ w)
                    - J @ (np.cross(w, R.T @ R_d @ wd) - R.T @ R_d @ wdd))
        np.testing.assert_allclose(torque_command(state(R=R, w=w), ref, params, GAINS), expected, atol=1e-14)


def test_control_step_hover(params):
    out = control_step(state(r=(0, 0, 1)), StateReference.hover((0, 0, 1)), params, GAINS)
    assert out.wrench.F == pytest.approx(MG, abs=1e-9)
    np.testing.assert_allclose(out.wrench.tau, 0.0, atol=1e-15)
    assert not out.degenerate


def test_control_step_altitude_error(params):
    out = control_step(state(r=(0, 0, 0.5)), StateReference.hover((0, 0, 1)), params, GAINS)
    assert out.wrench.F == pytest.approx(MG + 5.0, rel=1e-12)
    assert out.wrench.F == pytest.approx(10.93505, rel=1e-12)


def test_control_step_degenerate_uses_fallback(params):
    ref = StateReference(np.zeros(3), np.zeros(3), np.array([0, 0, -G]), 0, 0, np.eye(3), np.zeros(3), np.zeros(3))
    prev = rot_z(0.3)
    out = control_step(state(), ref, params, GAINS, fallback_R_d=prev)
    assert out.degenerate
    np.testing.assert_array_equal(out.R_d, prev)


@given(st.floats(-np.pi, np.pi), st.integers(0, 2**31))
def test_control_step_yaw_invariance(beta, seed):
    """Rotating the whole scene about inertial z leaves body-frame outputs unchanged."""
    rng = np.random.default_rng(seed)
    p = VehicleParams()
    Q = rot_z(beta)
    r, v, a, w = rng.normal(size=(4, 3)) * 0.5
    R = expm_so3(0.3 * rng.normal(size=3))
    psi = rng.uniform(-1, 1)
    wd, wdd = rng.normal(size=(2, 3))
    ref = StateReference(np.zeros(3), np.zeros(3), a, psi, 0.0, np.eye(3), wd, wdd)
    ref_rot = StateReference(np.zeros(3), np.zeros(3), Q @ a, psi + beta, 0.0, np.eye(3), wd, wdd)
    out = control_step(state(r, v, R, w), ref, p, GAINS)
    out_rot = control_step(state(Q @ r, Q @ v, Q @ R, w), ref_rot, p, GAINS)
    assert out_rot.wrench.F == pytest.approx(out.wrench.F, rel=1e-12, abs=1e-12)
    np.testing.assert_allclose(out_rot.wrench.tau, out.wrench.tau, atol=1e-10)


def test_trajectory_bound(params):
    ok, peak = check_trajectory_bound(np.zeros((10, 3)), params, 10.0)
    assert ok and peak == pytest.approx(5.93505)
    ok, peak = check_trajectory_bound([[0, 0, G]], params, 100.0)
    assert peak == pytest.approx(2 * MG)
    ok, _ = check_trajectory_bound([[0, 0, G]], params, MG)
    assert not ok
    _, peak = check_trajectory_bound([[0, 0, -G]], params, 1.0)
    assert peak == 0.0
    with pytest.raises(ValueError):
        check_trajectory_bound([[0, 0, 0]], params, 0.0)


def test_initial_conditions(params):
    ref = StateReference.hover()
    for psi1 in (0.01, 0.5, 0.99):
        assert check_initial_conditions(state(), ref, params, GAINS, psi1)
    # 151 degrees: Psi = 1 - cos(a) > 1
    R = rot_x(np.radians(151))
    assert attitude_error_value(R, np.eye(3)) > 1
    assert not check_initial_conditions(state(R=R), ref, params, GAINS, 0.99)
    with pytest.raises(ValueError):
        check_initial_conditions(state(), ref, params, GAINS, 1.0)


def test_initial_conditions_strict_boundary():
    # lambda_min = 2, k_R = 4: the bound is |e_w|^2 < 4, hit exactly by |e_w| = 2
    p = VehicleParams(inertia=np.diag([2.0, 3.0, 4.0]))
    g = ControlGains(k_R=4.0)
    ref = StateReference.hover()
    assert not check_initial_conditions(state(w=(2, 0, 0)), ref, p, g, 0.5)
    assert check_initial_conditions(state(w=(1.999, 0, 0)), ref, p, g, 0.5)


def test_closed_loop_hover_is_stationary(params):
    flat = Hover((0, 0, 1))
    log = simulate(flat, params, GAINS, SimConfig(duration=2.0))
    assert np.abs(log.e_r).max() < 1e-9
    assert log.saturated_ticks == 0


def test_closed_loop_yaw_equivariance(params):
    beta = 0.7
    Q = rot_z(beta)
    logs = []
    for angle in (0.0, beta):
        flat = Hover((0, 0, 1), angle)
        s0 = state_on_reference(flat, params, rot_z(angle) @ np.array([0.2, -0.1, 0.1]), (0.1, -0.2, 0.0), GAINS)
        logs.append(simulate(flat, params, GAINS, SimConfig(duration=1.0, initial_state=s0)))
    a, b = logs
    r_a = a.columns("r_x", "r_y", "r_z")
    r_b = b.columns("r_x", "r_y", "r_z")
    np.testing.assert_allclose(r_b, r_a @ Q.T, atol=1e-6)
    np.testing.assert_allclose(b.e_R, a.e_R, atol=1e-6)
