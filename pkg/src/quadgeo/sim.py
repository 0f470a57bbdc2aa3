"""Fixed-step RK4 integration of the rigid-body plant and the closed-loop driver."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from quadgeo import GRAVITY
from quadgeo.model import BodyWrench, VehicleParams, motors_to_wrench
from quadgeo.so3 import expm_so3, reorthonormalize

DIVERGENCE_LIMIT = 1e6
MAX_DT = 0.01


class SimulationDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class RigidBodyState:
    r: np.ndarray
    v: np.ndarray
    R: np.ndarray
    omega: np.ndarray

    @classmethod
    def at_rest(cls, r=(0.0, 0.0, 0.0), R=None) -> "RigidBodyState":
        return cls(
            np.array(r, dtype=float),
            np.zeros(3),
            np.eye(3) if R is None else np.array(R, dtype=float),
            np.zeros(3),
        )

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.r, self.v, np.asarray(self.R).reshape(9), self.omega])

    @classmethod
    def from_vector(cls, y) -> "RigidBodyState":
        y = np.asarray(y, dtype=float)
        return cls(y[0:3].copy(), y[3:6].copy(), y[6:15].reshape(3, 3).copy(), y[15:18].copy())


@dataclass(frozen=True)
class StateDerivative:
    r_dot: np.ndarray
    v_dot: np.ndarray
    R_dot: np.ndarray
    omega_dot: np.ndarray


def _rhs(y, F, tau, m, J, Jinv, attitude_only):
    R = y[6:15].reshape(3, 3)
    wx, wy, wz = y[15], y[16], y[17]
    w = y[15:18]
    Jw = J @ w
    gyro = np.array([wy * Jw[2] - wz * Jw[1], wz * Jw[0] - wx * Jw[2], wx * Jw[1] - wy * Jw[0]])
    dy = np.empty(18)
    if attitude_only:
        dy[0:6] = 0.0
    else:
        dy[0:3] = y[3:6]
        dy[3:6] = (F / m) * R[:, 2]
        dy[5] -= GRAVITY
    # R @ hat(w), column by column
    Rd = np.empty((3, 3))
    Rd[:, 0] = wz * R[:, 1] - wy * R[:, 2]
    Rd[:, 1] = wx * R[:, 2] - wz * R[:, 0]
    Rd[:, 2] = wy * R[:, 0] - wx * R[:, 1]
    dy[6:15] = Rd.reshape(9)
    dy[15:18] = Jinv @ (tau - gyro)
    return dy


def derivatives(state: RigidBodyState, wrench: BodyWrench, params: VehicleParams) -> StateDerivative:
    """Newton-Euler right-hand side for the 6-DoF rigid body."""
    dy = _rhs(
        state.to_vector(), float(wrench.F), np.asarray(wrench.tau, dtype=float),
        params.mass, params.inertia, params.inertia_inv, False,
    )
    return StateDerivative(dy[0:3], dy[3:6], dy[6:15].reshape(3, 3), dy[15:18])


def rk4_step(y, F, tau, params: VehicleParams, dt: float, attitude_only: bool = False) -> np.ndarray:
    """One classical RK4 step on the flat state vector, R projected back to SO(3)."""
    m, J, Jinv = params.mass, params.inertia, params.inertia_inv
    k1 = _rhs(y, F, tau, m, J, Jinv, attitude_only)
    k2 = _rhs(y + 0.5 * dt * k1, F, tau, m, J, Jinv, attitude_only)
    k3 = _rhs(y + 0.5 * dt * k2, F, tau, m, J, Jinv, attitude_only)
    k4 = _rhs(y + dt * k3, F, tau, m, J, Jinv, attitude_only)
    out = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if attitude_only:
        out[0:6] = y[0:6]
    out[6:15] = reorthonormalize(out[6:15].reshape(3, 3)).reshape(9)
    if not np.all(np.abs(out) < DIVERGENCE_LIMIT):
        bad = int(np.argmax(~(np.abs(out) < DIVERGENCE_LIMIT)))
        raise SimulationDiverged(f"state component {bad} reached {out[bad]!r}")
    return out


def step(
    state: RigidBodyState,
    wrench: BodyWrench,
    params: VehicleParams,
    dt: float,
    mode: str = "full",
) -> RigidBodyState:
    if not 0.0 < dt <= MAX_DT:
        raise ValueError(f"dt must lie in (0, {MAX_DT}]")
    if mode not in ("full", "attitude_only"):
        raise ValueError(f"unknown mode {mode!r}")
    y = rk4_step(
        state.to_vector(), float(wrench.F), np.asarray(wrench.tau, dtype=float),
        params, dt, mode == "attitude_only",
    )
    if mode == "attitude_only":
        return RigidBodyState(state.r, state.v, y[6:15].reshape(3, 3), y[15:18])
    return RigidBodyState.from_vector(y)


@dataclass
class SimConfig:
    dt: float = 1e-3
    duration: float = 10.0
    control_period: float = 2e-3
    mode: str = "full"
    plant_bias: bool = False
    initial_state: RigidBodyState | None = None
    noise_pos: float = 0.0
    noise_att: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.dt <= MAX_DT:
            raise ValueError(f"dt must lie in (0, {MAX_DT}]")
        if not self.duration > 0.0:
            raise ValueError("duration must be positive")
        if self.mode not in ("full", "attitude_only"):
            raise ValueError(f"unknown mode {self.mode!r}")
        ratio = self.control_period / self.dt
        if ratio < 1.0 - 1e-9 or abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("control_period must be an integer multiple of dt")

    @property
    def substeps(self) -> int:
        return int(round(self.control_period / self.dt))

    @property
    def n_ticks(self) -> int:
        return int(round(self.duration / self.control_period))


@dataclass
class ControlOutput:
    """What a controller hands back to the simulation loop at one tick."""

    pwm: np.ndarray
    wrench_cmd: BodyWrench
    r_d: np.ndarray = field(default_factory=lambda: np.zeros(3))
    v_d: np.ndarray = field(default_factory=lambda: np.zeros(3))
    psi_d: float = 0.0
    e_r: np.ndarray = field(default_factory=lambda: np.zeros(3))
    e_v: np.ndarray = field(default_factory=lambda: np.zeros(3))
    e_R: np.ndarray = field(default_factory=lambda: np.zeros(3))
    e_omega: np.ndarray = field(default_factory=lambda: np.zeros(3))
    saturated: bool = False
    degenerate: bool = False


class Controller(Protocol):
    def __call__(self, t: float, state: RigidBodyState) -> ControlOutput: ...


LOG_COLUMNS = (
    ["t", "r_x", "r_y", "r_z", "v_x", "v_y", "v_z"]
    + [f"R_{i}{j}" for i in range(1, 4) for j in range(1, 4)]
    + ["omega_x", "omega_y", "omega_z", "pwm1", "pwm2", "pwm3", "pwm4", "F", "tau_x", "tau_y", "tau_z"]
    + ["r_d_x", "r_d_y", "r_d_z", "v_d_x", "v_d_y", "v_d_z", "psi_d"]
    + ["e_r_x", "e_r_y", "e_r_z", "e_v_x", "e_v_y", "e_v_z"]
    + ["e_R_x", "e_R_y", "e_R_z", "e_omega_x", "e_omega_y", "e_omega_z"]
)

# column slices into the log table
_COL = {name: i for i, name in enumerate(LOG_COLUMNS)}


class SimLog:
    """One row per control tick; see ``LOG_COLUMNS`` for the layout."""

    def __init__(self, data: np.ndarray, saturated_ticks: int = 0, degenerate_ticks: int = 0):
        self.data = np.asarray(data, dtype=float)
        self.saturated_ticks = saturated_ticks
        self.degenerate_ticks = degenerate_ticks

    def __len__(self) -> int:
        return self.data.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.data[:, _COL[name]]

    def columns(self, *names: str) -> np.ndarray:
        return self.data[:, [_COL[n] for n in names]]

    @property
    def t(self) -> np.ndarray:
        return self.column("t")

    @property
    def e_r(self) -> np.ndarray:
        return self.columns("e_r_x", "e_r_y", "e_r_z")

    @property
    def e_R(self) -> np.ndarray:
        return self.columns("e_R_x", "e_R_y", "e_R_z")

    @property
    def pwm(self) -> np.ndarray:
        return self.columns("pwm1", "pwm2", "pwm3", "pwm4")

    def state(self, i: int) -> RigidBodyState:
        return RigidBodyState.from_vector(self.data[i, 1:19])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            write_table(fh, LOG_COLUMNS, self.data)

    @classmethod
    def from_csv(cls, path) -> "SimLog":
        header, data = read_table(path)
        if list(header) != LOG_COLUMNS:
            raise ValueError(f"{path}: header does not match the simulation log layout")
        return cls(data)


def format_float(x: float) -> str:
    return f"{x:.9g}"


def write_table(fh, header, rows) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_float(float(x)) for x in row])


def read_table(path) -> tuple[list[str], np.ndarray]:
    """Read a numeric CSV with a header row; errors name the offending row."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}: row {lineno} has {len(row)} fields, expected {len(header)}")
            try:
                rows.append([float(x) for x in row])
            except ValueError:
                raise ValueError(f"{path}: row {lineno} contains a non-numeric field") from None
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return header, np.array(rows)


def run(
    config: SimConfig,
    controller: Controller,
    params: VehicleParams,
    plant_params: VehicleParams | None = None,
) -> SimLog:
    """Closed-loop simulation: the controller runs every ``control_period``,
    the plant is integrated at ``dt`` with the PWM held in between.

    ``plant_params`` lets the simulated vehicle differ from the controller's
    model (payload, parameter error); it defaults to ``params``.
    """
    plant = params if plant_params is None else plant_params
    attitude_only = config.mode == "attitude_only"
    state = config.initial_state or RigidBodyState.at_rest()
    y = state.to_vector()
    rng = np.random.default_rng(config.seed)
    noisy = config.noise_pos > 0.0 or config.noise_att > 0.0
    n = config.n_ticks
    rows = np.empty((n + 1, len(LOG_COLUMNS)))
    sat = degen = 0
    for k in range(n + 1):
        t = k * config.control_period
        state = RigidBodyState(y[0:3], y[3:6], y[6:15].reshape(3, 3), y[15:18])
        seen = _measure(state, rng, config) if noisy else state
        out = controller(t, seen)
        sat += out.saturated
        degen += out.degenerate
        applied = motors_to_wrench(out.pwm, plant, plant_bias=config.plant_bias)
        rows[k, 0] = t
        rows[k, 1:19] = y
        rows[k, 19:23] = out.pwm
        rows[k, 23] = applied.F
        rows[k, 24:27] = applied.tau
        rows[k, 27:30] = out.r_d
        rows[k, 30:33] = out.v_d
        rows[k, 33] = out.psi_d
        rows[k, 34:37] = out.e_r
        rows[k, 37:40] = out.e_v
        rows[k, 40:43] = out.e_R
        rows[k, 43:46] = out.e_omega
        if k == n:
            break
        for _ in range(config.substeps):
            y = rk4_step(y, applied.F, applied.tau, plant, config.dt, attitude_only)
    return SimLog(rows, saturated_ticks=sat, degenerate_ticks=degen)


def _measure(state: RigidBodyState, rng: np.random.Generator, config: SimConfig) -> RigidBodyState:
    r = state.r + rng.normal(0.0, config.noise_pos, 3) if config.noise_pos > 0 else state.r
    R = state.R @ expm_so3(rng.normal(0.0, config.noise_att, 3)) if config.noise_att > 0 else state.R
    return RigidBodyState(r, state.v, R, state.omega)

