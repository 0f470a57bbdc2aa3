"""Flat-output reference trajectories and their expansion to full state references."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from quadgeo import GRAVITY
from quadgeo.control import ControlGains, StateReference, desired_force_vector, desired_rotation
from quadgeo.model import VehicleParams
from quadgeo.so3 import vee_antisym

FD_STEP = 1e-4


@dataclass(frozen=True)
class FlatSample:
    r: np.ndarray
    v: np.ndarray
    a: np.ndarray
    psi: float
    psi_dot: float


class FlatTrajectory:
    """Position and yaw as functions of time, with analytic derivatives."""

    horizon: float = math.inf
    #: times where the second derivative may jump
    breakpoints: tuple[float, ...] = ()

    def __call__(self, t: float) -> FlatSample:
        raise NotImplementedError


@dataclass(frozen=True)
class Hover(FlatTrajectory):
    r0: tuple[float, float, float] = (0.0, 0.0, 0.0)
    psi0: float = 0.0
    horizon: float = math.inf

    def __call__(self, t: float) -> FlatSample:
        z = np.zeros(3)
        return FlatSample(np.array(self.r0, dtype=float), z, z.copy(), float(self.psi0), 0.0)


def smoothstep(u: float) -> tuple[float, float, float]:
    """3u^2 - 2u^3 clamped to [0, 1], with first and second derivatives in u.

    Right-continuous at both ends, matching the forward stencil used there.
    """
    if u < 0.0:
        return 0.0, 0.0, 0.0
    if u >= 1.0:
        return 1.0, 0.0, 0.0
    return u * u * (3.0 - 2.0 * u), 6.0 * u * (1.0 - u), 6.0 - 12.0 * u


@dataclass(frozen=True)
class Helix(FlatTrajectory):
    """Circle of growing radius that climbs at constant speed.

    The radius ramps in with a smoothstep over ``ramp`` seconds, then stays at
    ``radius``; yaw is held at zero.
    """

    radius: float = 0.5
    period: float = 4.0
    v_z: float = 0.1
    z0: float = 1.0
    ramp: float = 2.0
    horizon: float = 10.0

    def __post_init__(self):
        if not (self.radius > 0 and self.period > 0 and self.ramp > 0):
            raise ValueError("radius, period and ramp must be positive")

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return (0.0, self.ramp)

    def __call__(self, t: float) -> FlatSample:
        w = 2.0 * math.pi / self.period
        s, ds, dds = smoothstep(t / self.ramp)
        ds /= self.ramp
        dds /= self.ramp**2
        c, sn = math.cos(w * t), math.sin(w * t)
        Rr = self.radius
        r = np.array([Rr * s * c, Rr * s * sn, self.z0 + self.v_z * t])
        v = np.array([Rr * (ds * c - s * w * sn), Rr * (ds * sn + s * w * c), self.v_z])
        a = np.array(
            [
                Rr * (dds * c - 2.0 * ds * w * sn - s * w * w * c),
                Rr * (dds * sn + 2.0 * ds * w * c - s * w * w * sn),
                0.0,
            ]
        )
        return FlatSample(r, v, a, 0.0, 0.0)


@dataclass(frozen=True)
class YawBangBang(FlatTrajectory):
    """Constant position; yaw accelerates at +alpha for T/2 then at -alpha.

    The second half is offset by alpha*T^2/4 so yaw and yaw rate stay
    continuous; the yaw angle comes to rest at alpha*T^2/4.
    """

    alpha: float = 1.0
    T: float = 2.0
    r0: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.alpha < 0 or not self.T > 0:
            raise ValueError("need alpha >= 0 and T > 0")

    @property
    def horizon(self) -> float:
        return self.T

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return (0.0, 0.5 * self.T, self.T)

    def yaw(self, t: float) -> tuple[float, float, float]:
        a, T = self.alpha, self.T
        if t <= 0.0:
            return 0.0, 0.0, 0.0
        if t < 0.5 * T:
            return 0.5 * a * t * t, a * t, a
        if t <= T:
            return a * T * T / 4.0 - 0.5 * a * (t - T) ** 2, -a * (t - T), -a
        return a * T * T / 4.0, 0.0, 0.0

    def __call__(self, t: float) -> FlatSample:
        psi, psi_dot, _ = self.yaw(t)
        z = np.zeros(3)
        return FlatSample(np.array(self.r0, dtype=float), z, z.copy(), psi, psi_dot)


def _stencil(flat: FlatTrajectory, t: float, h: float) -> str:
    """Finite-difference stencil that does not straddle a breakpoint."""
    for bp in flat.breakpoints:
        if t < bp < t + h:
            return "backward"
        if t - h < bp <= t:
            return "forward"
    return "central"


def expand(
    flat: FlatTrajectory,
    t: float,
    params: VehicleParams,
    gains: ControlGains | None = None,
    state=None,
    h: float = FD_STEP,
) -> StateReference:
    """Full state reference at time t.

    R_d follows from the desired force vector and the yaw reference. When
    ``state`` is given the force vector includes the feedback terms and the
    vehicle is extrapolated over the finite-difference stencil; otherwise
    the feedforward-only R_d is used. omega_d and its derivative come from
    finite differences of R_d with step ``h``.
    """
    if state is not None and gains is None:
        raise ValueError("feedback expansion needs gains")
    s = flat(t)
    kind = _stencil(flat, t, h)
    if kind == "central":
        ts = (t - h, t, t + h)
    elif kind == "forward":
        ts = (t, t + h, t + 2 * h)
    else:
        ts = (t - 2 * h, t - h, t)
    if state is None:
        gains = gains or ControlGains()
        zero = np.zeros(3)

        def rotation(tk):
            sk = flat(tk)
            return desired_rotation(desired_force_vector(zero, zero, sk.a, params, gains), sk.psi)

    else:
        r = np.asarray(state.r, dtype=float)
        v = np.asarray(state.v, dtype=float)
        b3 = np.asarray(state.R, dtype=float)[:, 2]
        A = desired_force_vector(r - s.r, v - s.v, s.a, params, gains)
        acc = float(A @ b3) / params.mass * b3
        acc[2] -= GRAVITY

        def rotation(tk):
            # vehicle extrapolated from t at its current acceleration
            d = tk - t
            sk = flat(tk)
            ek = r + v * d + 0.5 * acc * d * d - sk.r
            evk = v + acc * d - sk.v
            return desired_rotation(desired_force_vector(ek, evk, sk.a, params, gains), sk.psi)

    R0, R1, R2 = (rotation(tk) for tk in ts)
    if kind == "central":
        R_d = R1
        R_dot = (R2 - R0) / (2 * h)
    elif kind == "forward":
        R_d = R0
        R_dot = (-3 * R0 + 4 * R1 - R2) / (2 * h)
    else:
        R_d = R2
        R_dot = (R0 - 4 * R1 + 3 * R2) / (2 * h)
    R_ddot = (R0 - 2 * R1 + R2) / (h * h)
    omega_d = vee_antisym(R_d.T @ R_dot)
    W = np.array([[0, -omega_d[2], omega_d[1]], [omega_d[2], 0, -omega_d[0]], [-omega_d[1], omega_d[0], 0]])
    # R'' = R (W^2 + hat(omega_dot))
    omega_d_dot = vee_antisym(R_d.T @ R_ddot - W @ W)
    return StateReference(
        r_d=s.r, v_d=s.v, a_d=s.a, psi_d=s.psi, psi_d_dot=s.psi_dot,
        R_d=R_d, omega_d=omega_d, omega_d_dot=omega_d_dot,
    )


def sample_accelerations(flat: FlatTrajectory, duration: float, dt: float) -> np.ndarray:
    n = int(round(duration / dt))
    return np.array([flat(k * dt).a for k in range(n + 1)])
