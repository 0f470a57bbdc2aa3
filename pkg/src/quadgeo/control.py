"""Geometric tracking controller on SE(3).

The outer loop turns position/velocity errors into a desired force vector
``A``; its magnitude along the current body z-axis is the thrust and its
direction fixes the desired body z-axis. The inner loop tracks the resulting
desired rotation with the torque law.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from quadgeo import GRAVITY
from quadgeo.model import BodyWrench, VehicleParams
from quadgeo.so3 import angvel_error, attitude_error, attitude_error_value, hat

DEGENERACY_TOL = 1e-6
E3 = np.array([0.0, 0.0, 1.0])


class DegenerateReference(ValueError):
    """Desired thrust direction or heading is undefined."""


@dataclass(frozen=True)
class ControlGains:
    k_r: float = 10.0
    k_v: float = 5.0
    k_R: float = 0.6
    k_omega: float = 0.15

    def __post_init__(self):
        for name in ("k_r", "k_v", "k_R", "k_omega"):
            if not getattr(self, name) > 0:
                raise ValueError(f"gain {name} must be positive")


@dataclass(frozen=True)
class StateReference:
    r_d: np.ndarray
    v_d: np.ndarray
    a_d: np.ndarray
    psi_d: float
    psi_d_dot: float
    R_d: np.ndarray
    omega_d: np.ndarray
    omega_d_dot: np.ndarray

    @classmethod
    def hover(cls, r_d=(0.0, 0.0, 0.0), psi_d: float = 0.0) -> "StateReference":
        c, s = np.cos(psi_d), np.sin(psi_d)
        R_d = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        z = np.zeros(3)
        return cls(np.array(r_d, dtype=float), z, z, float(psi_d), 0.0, R_d, z, z)


@dataclass(frozen=True)
class ControlResult:
    wrench: BodyWrench
    A: np.ndarray
    R_d: np.ndarray
    e_r: np.ndarray
    e_v: np.ndarray
    e_R: np.ndarray
    e_omega: np.ndarray
    degenerate: bool = False


def position_errors(state, ref: StateReference) -> tuple[np.ndarray, np.ndarray]:
    return np.asarray(state.r) - ref.r_d, np.asarray(state.v) - ref.v_d


def desired_force_vector(e_r, e_v, a_d, params: VehicleParams, gains: ControlGains) -> np.ndarray:
    """A = -k_r e_r - k_v e_v + m g e3 + m a_d."""
    A = -gains.k_r * np.asarray(e_r, dtype=float) - gains.k_v * np.asarray(e_v, dtype=float)
    A = A + params.mass * np.asarray(a_d, dtype=float)
    A[2] += params.mass * GRAVITY
    return A


def force_is_degenerate(A) -> bool:
    return bool(np.linalg.norm(A) < DEGENERACY_TOL)


def thrust_command(A, R) -> float:
    """Projection of the desired force on the current body z-axis; may be negative."""
    R = np.asarray(R, dtype=float)
    return float(np.dot(A, R[:, 2]))


def desired_rotation(A, psi_d: float) -> np.ndarray:
    """Rotation whose third column is A/|A| and whose heading follows psi_d."""
    A = np.asarray(A, dtype=float)
    nA = np.linalg.norm(A)
    if nA < DEGENERACY_TOL:
        raise DegenerateReference(f"desired force vector too small (|A| = {nA:.3e})")
    r3 = A / nA
    heading = np.array([np.cos(psi_d), np.sin(psi_d), 0.0])
    r2 = np.cross(r3, heading)
    n2 = np.linalg.norm(r2)
    if n2 < DEGENERACY_TOL:
        raise DegenerateReference("desired thrust direction is parallel to the heading vector")
    r2 = r2 / n2
    r1 = np.cross(r2, r3)
    return np.column_stack([r1, r2, r3])


def torque_command(state, ref: StateReference, params: VehicleParams, gains: ControlGains) -> np.ndarray:
    R = np.asarray(state.R, dtype=float)
    w = np.asarray(state.omega, dtype=float)
    J = params.inertia
    e_R = attitude_error(R, ref.R_d)
    e_w = angvel_error(w, R, ref.R_d, ref.omega_d)
    RtRd = R.T @ ref.R_d
    ff = hat(w) @ (RtRd @ ref.omega_d) - RtRd @ ref.omega_d_dot
    return -gains.k_R * e_R - gains.k_omega * e_w + np.cross(w, J @ w) - J @ ff


def control_step(
    state,
    ref: StateReference,
    params: VehicleParams,
    gains: ControlGains,
    fallback_R_d: np.ndarray | None = None,
) -> ControlResult:
    """Outer loop (A, F, R_d) followed by the inner torque loop.

    If the desired rotation is undefined this tick, ``fallback_R_d`` (the
    previous tick's value) is used when given, else ``ref.R_d``.
    """
    e_r, e_v = position_errors(state, ref)
    A = desired_force_vector(e_r, e_v, ref.a_d, params, gains)
    F = thrust_command(A, state.R)
    degenerate = False
    try:
        R_d = desired_rotation(A, ref.psi_d)
    except DegenerateReference:
        degenerate = True
        R_d = ref.R_d if fallback_R_d is None else fallback_R_d
    ref = replace(ref, R_d=R_d)
    tau = torque_command(state, ref, params, gains)
    return ControlResult(
        wrench=BodyWrench(F, tau),
        A=A,
        R_d=R_d,
        e_r=e_r,
        e_v=e_v,
        e_R=attitude_error(state.R, R_d),
        e_omega=angvel_error(state.omega, state.R, R_d, ref.omega_d),
        degenerate=degenerate,
    )


def check_trajectory_bound(accelerations, params: VehicleParams, B: float) -> tuple[bool, float]:
    """Peak feedforward force |m g e3 + m a_d| over the samples, and whether it stays below B.

    The gravity sign follows the z-up convention of :func:`desired_force_vector`.
    """
    if not B > 0:
        raise ValueError("B must be positive")
    a = np.atleast_2d(np.asarray(accelerations, dtype=float))
    v = params.mass * a
    v[:, 2] += params.mass * GRAVITY
    peak = float(np.max(np.linalg.norm(v, axis=1)))
    return peak < B, peak


def check_initial_conditions(
    state0, ref0: StateReference, params: VehicleParams, gains: ControlGains, psi1: float
) -> bool:
    """Attitude-error and angular-velocity-error conditions for exponential stability."""
    if not 0.0 < psi1 < 1.0:
        raise ValueError("psi1 must lie in (0, 1)")
    psi0 = attitude_error_value(state0.R, ref0.R_d)
    if psi0 > psi1:
        return False
    e_w = angvel_error(state0.omega, state0.R, ref0.R_d, ref0.omega_d)
    lam_min = float(np.min(np.linalg.eigvalsh(params.inertia)))
    return bool(float(e_w @ e_w) < 2.0 / lam_min * gains.k_R * (1.0 - psi0))
