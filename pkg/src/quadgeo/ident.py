"""Actuator and propeller parameter identification.

Least-squares fits for the thrust and drag coefficients, the actuator line
from the motor KV rating, and synthetic generators that emulate the hover,
scale and yaw-acceleration experiments in simulation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from quadgeo import GRAVITY
from quadgeo.closed_loop import simulate
from quadgeo.control import ControlGains, check_initial_conditions
from quadgeo.model import VehicleParams, pwm_to_angvel, pwm_to_thrust
from quadgeo.sim import RigidBodyState, SimConfig, format_float, read_table
from quadgeo.trajectory import Hover, YawBangBang, expand

TRANSIENT_WINDOW = 0.2
DEFAULT_GYRO_NOISE = 0.01

THRUST_HEADER = ("omega_mean", "thrust")
TORQUE_HEADER = ("sq_diff", "tau_z")


class IdentificationError(ValueError):
    """Ill-posed fit or infeasible experiment."""


@dataclass(frozen=True)
class ThrustSample:
    omega_mean: float
    thrust: float


@dataclass(frozen=True)
class TorqueSample:
    sq_diff: float
    tau_z: float


@dataclass(frozen=True)
class ActuatorLine:
    theta1: float
    theta2: float


def actuator_line_from_kv(kv: float, u_max: float, pwm0: float) -> ActuatorLine:
    """Slope from KV (rpm/V) times supply voltage; intercept from the start-up threshold."""
    if not (kv > 0 and u_max > 0):
        raise ValueError("kv and u_max must be positive")
    if not 0.0 <= pwm0 < 1.0:
        raise ValueError("pwm0 must lie in [0, 1)")
    theta2 = kv * (2.0 * math.pi / 60.0) * u_max
    return ActuatorLine(theta1=-pwm0 * theta2, theta2=theta2)


def fit_thrust_coeff(samples) -> float:
    """Least squares through the origin for f = c * omega^2."""
    w = np.array([s.omega_mean for s in samples], dtype=float)
    f = np.array([s.thrust for s in samples], dtype=float)
    w2 = w * w
    den = float(w2 @ w2)
    if w.size == 0 or den == 0.0:
        raise IdentificationError("thrust fit needs at least one sample with non-zero omega")
    return float(w2 @ f) / den


def thrust_fit_residuals(samples, c: float) -> np.ndarray:
    return np.array([s.thrust - c * s.omega_mean**2 for s in samples])


def fit_drag_coeff(samples) -> tuple[float, float]:
    """Ordinary least-squares line tau_z = b1 * sq_diff + b2; returns (b1, b2)."""
    x = np.array([s.sq_diff for s in samples], dtype=float)
    y = np.array([s.tau_z for s in samples], dtype=float)
    if x.size < 2:
        raise IdentificationError("drag fit needs at least two samples")
    # centred normal equations; x is O(1e6) so centring keeps them well scaled
    xm, ym = x.mean(), y.mean()
    dx = x - xm
    sxx = float(dx @ dx)
    if sxx <= 1e-12 * max(1.0, float(x @ x)):
        raise IdentificationError("drag fit is degenerate: all sq_diff values are equal")
    b1 = float(dx @ (y - ym)) / sxx
    return b1, float(ym - b1 * xm)


def drag_fit_residuals(samples, b1: float, b2: float) -> np.ndarray:
    return np.array([s.tau_z - (b1 * s.sq_diff + b2) for s in samples])


def hover_thrust_sample(log, params: VehicleParams, total_mass: float, window: float) -> ThrustSample:
    t = log.t
    mask = t >= t[-1] - window
    pwm_mean = float(np.mean(log.pwm[mask]))
    return ThrustSample(pwm_to_angvel(pwm_mean, params), total_mass * GRAVITY / 4.0)


def gen_hover_experiment(
    payloads,
    params: VehicleParams,
    gains: ControlGains | None = None,
    duration: float = 4.0,
    window: float = 0.5,
    plant_params: VehicleParams | None = None,
) -> list[ThrustSample]:
    """Hover with extra payloads; thrust per motor is the total weight over four.

    The controller keeps the nominal mass, so the vehicle settles below the
    reference, but the steady-state PWM still balances the true weight.
    """
    gains = gains or ControlGains()
    plant_base = plant_params or params
    samples = []
    for payload in payloads:
        if payload < 0:
            raise ValueError("payload must be non-negative")
        total = plant_base.mass + payload
        if total * GRAVITY / 4.0 >= pwm_to_thrust(1.0, plant_base):
            raise IdentificationError(f"payload {payload} kg cannot be lifted")
        plant = plant_base.replace(mass=total)
        log = simulate(Hover((0.0, 0.0, 1.0)), params, gains, SimConfig(duration=duration), plant_params=plant)
        if log.saturated_ticks:
            raise IdentificationError(f"motors saturated while hovering with payload {payload} kg")
        samples.append(hover_thrust_sample(log, params, total, window))
    return samples


def scale_mass(pwm: float, params: VehicleParams) -> float:
    """Scale reading with all four motors at ``pwm``."""
    return params.mass - 4.0 * pwm_to_thrust(pwm, params) / GRAVITY


def gen_scale_experiment(pwm_levels, params: VehicleParams) -> list[ThrustSample]:
    """Vehicle on a scale with uniform PWM below lift-off; no closed loop involved."""
    samples = []
    for pwm in pwm_levels:
        f = pwm_to_thrust(pwm, params)
        if 4.0 * f >= params.weight:
            raise IdentificationError(f"pwm {pwm} lifts the vehicle off the scale")
        m_s = scale_mass(pwm, params)
        samples.append(ThrustSample(pwm_to_angvel(pwm, params), (params.mass - m_s) * GRAVITY / 4.0))
    return samples


def gen_yaw_experiment(
    spec: YawBangBang,
    params: VehicleParams,
    gains: ControlGains | None = None,
    plant_bias: bool = False,
    gyro_noise: float = DEFAULT_GYRO_NOISE,
    seed: int = 0,
    plant_params: VehicleParams | None = None,
    control_period: float = 2e-3,
) -> list[TorqueSample]:
    """Yaw acceleration experiment on the spherical-joint rig.

    Tracks the bang-bang yaw reference in attitude-only mode, converts the
    logged PWM to rotor speeds via the actuator line and differentiates the
    (noisy) gyro yaw rate. Samples within ``TRANSIENT_WINDOW`` of an
    acceleration switch are dropped.
    """
    gains = gains or ControlGains()
    state0 = RigidBodyState.at_rest(spec.r0)
    ref0 = expand(spec, 0.0, params, gains)
    if not check_initial_conditions(state0, ref0, params, gains, psi1=0.99):
        raise IdentificationError("initial condition violates the stability precondition")
    config = SimConfig(
        duration=spec.T,
        control_period=control_period,
        mode="attitude_only",
        plant_bias=plant_bias,
        initial_state=state0,
    )
    log = simulate(spec, params, gains, config, plant_params=plant_params)
    rng = np.random.default_rng(seed)
    wz = log.column("omega_z")
    if gyro_noise > 0:
        wz = wz + rng.normal(0.0, gyro_noise, wz.shape)
    wz_dot = np.gradient(wz, control_period)
    w = np.asarray(pwm_to_angvel(log.pwm, params))
    w2 = w * w
    sq_diff = w2[:, 0] + w2[:, 2] - w2[:, 1] - w2[:, 3]
    t = log.t
    keep = np.ones(t.shape, dtype=bool)
    for switch in (0.0, 0.5 * spec.T):
        keep &= ~((t >= switch) & (t < switch + TRANSIENT_WINDOW))
    Jzz = params.inertia[2, 2]
    return [TorqueSample(float(x), float(Jzz * a)) for x, a in zip(sq_diff[keep], wz_dot[keep])]


def full_attitude_residual(omega, params: VehicleParams) -> float:
    """Gyroscopic term dropped from the yaw torque balance, including products of inertia."""
    J = params.inertia
    wx, wy, wz = (float(c) for c in omega)
    return (
        J[1, 0] * wx**2
        + J[1, 1] * wx * wy
        + J[1, 2] * wx * wz
        - J[0, 0] * wx * wy
        - J[0, 1] * wy**2
        - J[0, 2] * wy * wz
    )


def write_samples(path, samples) -> None:
    if not samples:
        raise ValueError("no samples to write")
    if isinstance(samples[0], ThrustSample):
        header, rows = THRUST_HEADER, [(s.omega_mean, s.thrust) for s in samples]
    else:
        header, rows = TORQUE_HEADER, [(s.sq_diff, s.tau_z) for s in samples]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_float(x) for x in row])


def read_samples(path) -> list:
    """Read thrust or torque samples; the header decides which."""
    header, data = read_table(path)
    if tuple(header) == THRUST_HEADER:
        return [ThrustSample(float(a), float(b)) for a, b in data]
    if tuple(header) == TORQUE_HEADER:
        return [TorqueSample(float(a), float(b)) for a, b in data]
    raise ValueError(f"{path}: unrecognised sample header {header!r}")
