import numpy as np
import pytest

from quadgeo.model import BodyWrench, VehicleParams
from quadgeo.sim import (
    LOG_COLUMNS,
    ControlOutput,
    RigidBodyState,
    SimConfig,
    SimLog,
    SimulationDiverged,
    derivatives,
    rk4_step,
    run,
    step,
)
from quadgeo.so3 import euler_to_rotation

G = 9.81


def test_hover_derivatives(params):
    s = RigidBodyState(np.zeros(3), np.array([0.1, 0, 0]), np.eye(3), np.zeros(3))
    d = derivatives(s, BodyWrench(params.mass * G, np.zeros(3)), params)
    np.testing.assert_array_equal(d.r_dot, [0.1, 0, 0])
    np.testing.assert_allclose(d.v_dot, 0.0, atol=1e-15)
    assert np.all(d.R_dot == 0) and np.all(d.omega_dot == 0)


def test_free_fall_derivatives(params):
    d = derivatives(RigidBodyState.at_rest(), BodyWrench.zero(), params)
    np.testing.assert_array_equal(d.v_dot, [0, 0, -G])


def test_gyroscopic_term():
    p = VehicleParams(inertia=np.diag([1.0, 2.0, 3.0]))
    s = RigidBodyState(np.zeros(3), np.zeros(3), np.eye(3), np.array([1.0, 1.0, 0.0]))
    d = derivatives(s, BodyWrench.zero(), p)
    np.testing.assert_allclose(d.omega_dot, [0, 0, -1 / 3], atol=1e-15)


def test_rotation_kinematics(params):
    R = euler_to_rotation(0.3, -0.2, 1.0)
    w = np.array([0.5, -1.0, 2.0])
    d = derivatives(RigidBodyState(np.zeros(3), np.zeros(3), R, w), BodyWrench.zero(), params)
    w_hat = np.column_stack([np.cross(w, e) for e in np.eye(3)])
    np.testing.assert_allclose(d.R_dot, R @ w_hat, atol=1e-15)


def test_hover_step_is_stationary(params):
    s = RigidBodyState.at_rest((1.0, 2.0, 3.0))
    out = step(s, BodyWrench(params.mass * G, np.zeros(3)), params, 1e-3)
    for a, b in [(out.r, s.r), (out.v, s.v), (out.R, s.R), (out.omega, s.omega)]:
        np.testing.assert_allclose(a, b, atol=1e-12)


def test_free_fall_matches_ballistic_solution(params):
    s = RigidBodyState.at_rest()
    for _ in range(1000):
        s = step(s, BodyWrench.zero(), params, 1e-3)
    assert s.r[2] == pytest.approx(-0.5 * G, abs=1e-6)


def test_principal_axis_spin_is_constant(params):
    w0 = np.array([0.0, 0.0, 3.0])
    y = RigidBodyState(np.zeros(3), np.zeros(3), np.eye(3), w0).to_vector()
    for _ in range(10_000):
        y = rk4_step(y, 0.0, np.zeros(3), params, 1e-3, attitude_only=True)
    np.testing.assert_allclose(y[15:18], w0, atol=1e-9)


def test_so3_drift_bounded(params):
    R0 = euler_to_rotation(0.2, 0.1, -0.4)
    y = RigidBodyState(np.zeros(3), np.zeros(3), R0, np.array([0.4, -1.1, 0.7])).to_vector()
    for _ in range(100_000):
        y = rk4_step(y, 0.0, np.zeros(3), params, 1e-3, attitude_only=True)
    R = y[6:15].reshape(3, 3)
    assert np.linalg.norm(R @ R.T - np.eye(3)) < 1e-9


def test_angular_momentum_conserved(params):
    s = RigidBodyState(np.zeros(3), np.zeros(3), np.eye(3), np.array([1.0, -2.0, 0.5]))
    L0 = s.R @ params.inertia @ s.omega
    y = s.to_vector()
    for _ in range(10_000):
        y = rk4_step(y, 0.0, np.zeros(3), params, 1e-3)
    L = y[6:15].reshape(3, 3) @ params.inertia @ y[15:18]
    assert np.linalg.norm(L - L0) / np.linalg.norm(L0) < 1e-6


def _free_rotation(params, dt, horizon):
    y = RigidBodyState(np.zeros(3), np.zeros(3), np.eye(3), np.array([20.0, 5.0, -10.0])).to_vector()
    for _ in range(int(round(horizon / dt))):
        y = rk4_step(y, 0.0, np.zeros(3), params, dt, attitude_only=True)
    return y


def rk4_order(params):
    horizon = 0.05
    ref = _free_rotation(params, 1e-6, horizon)
    e1 = np.linalg.norm(_free_rotation(params, 2.5e-3, horizon) - ref)
    e2 = np.linalg.norm(_free_rotation(params, 1.25e-3, horizon) - ref)
    return np.log2(e1 / e2)


def test_rk4_convergence_order(params):
    assert rk4_order(params) >= 3.5


def test_attitude_only_leaves_translation_untouched(params):
    s = RigidBodyState(np.array([0.1, 0.2, 0.3]), np.array([1.0, -1.0, 0.5]), np.eye(3), np.array([0.3, 0.2, 0.1]))
    out = s
    for _ in range(100):
        out = step(out, BodyWrench(3.0, np.array([0.01, 0.0, -0.02])), params, 1e-3, mode="attitude_only")
    assert out.r is s.r and out.v is s.v
    assert not np.allclose(out.R, s.R)


def test_divergence_guard(params):
    s = RigidBodyState.at_rest()
    with pytest.raises(SimulationDiverged):
        for _ in range(100):
            s = step(s, BodyWrench(0.0, np.array([1e6, 0.0, 0.0])), params, 1e-2)


@pytest.mark.parametrize("kw", [{"dt": 0.02}, {"dt": 0.0}, {"duration": 0.0},
                                {"control_period": 2.5e-3}, {"mode": "sideways"}])
def test_sim_config_validation(kw):
    with pytest.raises(ValueError):
        SimConfig(**kw)


def test_step_rejects_large_dt(params):
    with pytest.raises(ValueError):
        step(RigidBodyState.at_rest(), BodyWrench.zero(), params, 0.05)


class FeedforwardHover:
    """Open-loop controller holding the hover PWM."""

    def __init__(self, params):
        from quadgeo.model import allocate

        self.pwm = allocate(BodyWrench(params.mass * G, np.zeros(3)), params).pwm

    def __call__(self, t, state):
        return ControlOutput(pwm=self.pwm, wrench_cmd=BodyWrench.zero())


def test_run_feedforward_hover_is_stationary(params):
    log = run(SimConfig(duration=2.0, initial_state=RigidBodyState.at_rest((0, 0, 1))), FeedforwardHover(params), params)
    assert len(log) == 1001
    np.testing.assert_allclose(np.diff(log.t), 2e-3, rtol=1e-9)
    np.testing.assert_allclose(log.columns("r_x", "r_y", "r_z"), np.tile([0, 0, 1], (1001, 1)), atol=1e-9)


def test_run_is_deterministic(params):
    cfg = SimConfig(duration=0.5, noise_pos=1e-3, noise_att=1e-3, seed=3)
    a = run(cfg, FeedforwardHover(params), params)
    b = run(cfg, FeedforwardHover(params), params)
    assert np.array_equal(a.data, b.data)


def test_log_csv_roundtrip(tmp_path, params):
    log = run(SimConfig(duration=0.1), FeedforwardHover(params), params)
    path = tmp_path / "log.csv"
    log.to_csv(path)
    header = path.read_text().splitlines()[0].split(",")
    assert header == LOG_COLUMNS
    back = SimLog.from_csv(path)
    np.testing.assert_allclose(back.data, log.data, rtol=1e-8, atol=1e-12)
    s = back.state(3)
    np.testing.assert_allclose(s.R, log.state(3).R, atol=1e-8)
