"""Vehicle parameters and the PWM -> rotor speed -> thrust/torque -> wrench chain."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from quadgeo import GRAVITY

# 250 mm motor-to-motor diagonal on an X frame: 0.125 m / sqrt(2)
DEFAULT_ARM = 0.0884
MAX_ALLOCATION_COND = 1e8


def _default_inertia() -> np.ndarray:
    return np.diag([1590.5e-6, 1481.3e-6, 2768.4e-6])


@dataclass(frozen=True, eq=False)
class VehicleParams:
    """Physical parameters of the quadrotor, SI units throughout.

    Defaults are identified values for a 250 mm frame. The arm
    lengths are not measured; they follow from the frame size.
    """

    mass: float = 0.605
    inertia: np.ndarray = field(default_factory=_default_inertia)
    arm_x: float = DEFAULT_ARM
    arm_y: float = DEFAULT_ARM
    thrust_coeff: float = 9.3945e-7
    drag_coeff: float = 5.5939e-7
    drag_offset: float = -0.4785
    theta1: float = -131.538
    theta2: float = 4310.17
    pwm0: float = 0.0305
    u_max: float = 16.8

    def __post_init__(self):
        J = np.array(self.inertia, dtype=float)
        J.setflags(write=False)
        object.__setattr__(self, "inertia", J)
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        if J.shape != (3, 3) or not np.allclose(J, J.T, rtol=0, atol=1e-15):
            raise ValueError("inertia must be a symmetric 3x3 matrix")
        if np.min(np.linalg.eigvalsh(J)) <= 0:
            raise ValueError("inertia must be positive definite")
        for name in ("arm_x", "arm_y", "thrust_coeff", "drag_coeff", "theta2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.pwm0 < 1.0:
            raise ValueError("pwm0 must lie in [0, 1)")
        cond = np.linalg.cond(allocation_matrix(self))
        if not cond < MAX_ALLOCATION_COND:
            raise ValueError(f"allocation matrix is ill-conditioned (cond = {cond:.3g})")
        object.__setattr__(self, "_inertia_inv", np.linalg.inv(J))

    @property
    def inertia_inv(self) -> np.ndarray:
        return self._inertia_inv

    @property
    def weight(self) -> float:
        return self.mass * GRAVITY

    def replace(self, **changes) -> "VehicleParams":
        values = {k: getattr(self, k) for k in self.__dataclass_fields__}
        values.update(changes)
        return VehicleParams(**values)


@dataclass(frozen=True)
class BodyWrench:
    """Collective thrust along body z and body-frame torque."""

    F: float
    tau: np.ndarray

    @classmethod
    def zero(cls) -> "BodyWrench":
        return cls(0.0, np.zeros(3))


@dataclass(frozen=True)
class Allocation:
    pwm: np.ndarray
    thrusts: np.ndarray
    saturated: bool


def _check_pwm(pwm):
    p = np.asarray(pwm, dtype=float)
    if np.any(~np.isfinite(p)) or np.any(p < 0.0) or np.any(p > 1.0):
        raise ValueError(f"pwm must lie in [0, 1], got {pwm!r}")
    return p


def pwm_to_angvel(pwm, params: VehicleParams):
    """Static actuator line omega = theta1 + theta2 * pwm, zero below threshold."""
    p = _check_pwm(pwm)
    w = np.maximum(0.0, params.theta1 + params.theta2 * p)
    return float(w) if w.ndim == 0 else w


def angvel_to_thrust(omega, params: VehicleParams):
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0.0):
        raise ValueError("rotor angular velocity must be non-negative")
    f = params.thrust_coeff * w * w
    return float(f) if f.ndim == 0 else f


def pwm_to_thrust(pwm, params: VehicleParams):
    return angvel_to_thrust(pwm_to_angvel(pwm, params), params)


def thrust_polynomial(params: VehicleParams) -> tuple[float, float, float]:
    """Coefficients (a0, a1, a2) of f = a0 + a1*pwm + a2*pwm^2 above threshold."""
    c, t1, t2 = params.thrust_coeff, params.theta1, params.theta2
    return c * t1 * t1, 2.0 * c * t1 * t2, c * t2 * t2


def thrust_to_pwm(f, params: VehicleParams):
    """Inverse of :func:`pwm_to_thrust` on the physical branch; f = 0 maps to 0."""
    f = np.asarray(f, dtype=float)
    if np.any(f < 0.0):
        raise ValueError("thrust must be non-negative")
    w = np.sqrt(f / params.thrust_coeff)
    pwm = np.where(f > 0.0, (w - params.theta1) / params.theta2, 0.0)
    return float(pwm) if pwm.ndim == 0 else pwm


def allocation_matrix(params: VehicleParams) -> np.ndarray:
    """Maps per-motor thrusts [f1..f4] to (F, tau_x, tau_y, tau_z)."""
    lx, ly = params.arm_x, params.arm_y
    k = params.drag_coeff / params.thrust_coeff
    return np.array(
        [
            [1.0, 1.0, 1.0, 1.0],
            [-lx, -lx, lx, lx],
            [-ly, ly, ly, -ly],
            [k, -k, k, -k],
        ]
    )


def motors_to_wrench(pwm, params: VehicleParams, plant_bias: bool = False) -> BodyWrench:
    """Collective thrust and body torques produced by four PWM commands.

    With ``plant_bias`` the fitted yaw-torque offset ``drag_offset`` is added.
    """
    p = _check_pwm(pwm)
    if p.shape != (4,):
        raise ValueError("expected four motor commands")
    w = np.maximum(0.0, params.theta1 + params.theta2 * p)
    w2 = w * w
    f = params.thrust_coeff * w2
    F = f[0] + f[1] + f[2] + f[3]
    tau_x = params.arm_x * (f[2] + f[3] - f[0] - f[1])
    tau_y = params.arm_y * (f[1] + f[2] - f[0] - f[3])
    tau_z = params.drag_coeff * (w2[0] + w2[2] - w2[1] - w2[3])
    if plant_bias:
        tau_z += params.drag_offset
    return BodyWrench(float(F), np.array([tau_x, tau_y, tau_z]))


def allocate(wrench: BodyWrench, params: VehicleParams) -> Allocation:
    """Per-motor PWM realising ``wrench``.

    Thrusts are clamped at zero first, then PWM at [0, 1]; the excess is not
    redistributed. ``saturated`` reports whether any clamp engaged.
    """
    tau = np.asarray(wrench.tau, dtype=float)
    F = float(wrench.F)
    if not (np.isfinite(F) and np.all(np.isfinite(tau))):
        raise ValueError("wrench must be finite")
    lx, ly = params.arm_x, params.arm_y
    kz = params.thrust_coeff / params.drag_coeff
    a = F / 4.0
    bx = tau[0] / (4.0 * lx)
    by = tau[1] / (4.0 * ly)
    bz = kz * tau[2] / 4.0
    f = np.array([a - bx - by + bz, a - bx + by - bz, a + bx + by + bz, a + bx - by - bz])
    saturated = bool(np.any(f < 0.0))
    f = np.maximum(f, 0.0)
    pwm = thrust_to_pwm(f, params)
    if np.any(pwm > 1.0) or np.any(pwm < 0.0):
        saturated = True
        pwm = np.clip(pwm, 0.0, 1.0)
        f = np.asarray(pwm_to_thrust(pwm, params))
    return Allocation(pwm=np.asarray(pwm, dtype=float), thrusts=f, saturated=saturated)
